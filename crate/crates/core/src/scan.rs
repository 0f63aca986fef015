//! Scan drivers producing figure-like data sets with synthesized counts.

use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};

use crate::apparatus::Apparatus;
use crate::engine::coincidence_rate;
use crate::error::{domain, Result};
use crate::optics::dip_envelope;
use crate::pump::{sample_field, PumpModel};
use crate::rng::{parallel_moments, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub x: f64,
    /// Normalized rate, before the delivered-power factor.
    pub rate: f64,
    pub counts: u64,
    /// Monte Carlo standard error of `rate`.
    pub stderr: f64,
    /// Interferometer phase at this point, for phase scans.
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanMeta {
    pub seed: u64,
    pub trials: usize,
    /// Pump power reaching the crystal relative to the bare laser.
    pub delivered_power: f64,
    /// Expected counts per unit rate at unit delivered power
    /// (`rate_scale × dwell`).
    pub exposure: f64,
    /// Accepted over all coincidences across the scan, for gated runs.
    pub acceptance_fraction: Option<f64>,
    pub summary: String,
}

/// Ordered samples of a scan together with run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub scenario: String,
    pub x_label: String,
    pub points: Vec<ScanPoint>,
    pub meta: ScanMeta,
}

impl ScanResult {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.counts as f64).collect()
    }

    /// Scan holding only observed counts, e.g. measured data to be fitted.
    pub fn from_counts(scenario: &str, x_label: &str, xs: &[f64], counts: &[u64]) -> Result<Self> {
        if xs.len() != counts.len() {
            return domain("x and count vectors differ in length");
        }
        let points = xs.iter().zip(counts).map(|(&x, &c)| ScanPoint { x, rate: c as f64, counts: c, stderr: 0.0, phase: None }).collect();
        Ok(ScanResult {
            scenario: scenario.into(),
            x_label: x_label.into(),
            points,
            meta: ScanMeta { seed: 0, trials: 0, delivered_power: 1.0, exposure: 1.0, acceptance_fraction: None, summary: String::new() },
        })
    }

    pub fn mean_rate(&self) -> f64 {
        self.points.iter().map(|p| p.rate).sum::<f64>() / self.points.len() as f64
    }
}

/// Poisson count synthesis: `counts ~ Poisson(rate × power × rate_scale × dwell)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSynthesis {
    /// Coincidences per second at unit normalized rate and full pump power.
    pub rate_scale: f64,
    /// Collection time per point, seconds.
    pub dwell: f64,
    pub stream: RngStream,
}

/// Collection time per point used by the experiment.
pub const DEFAULT_DWELL: f64 = 5.0;

impl CountSynthesis {
    pub fn new(rate_scale: f64, dwell: f64, stream: RngStream) -> Result<Self> {
        if !(rate_scale >= 0.0 && rate_scale.is_finite()) || !(dwell > 0.0 && dwell.is_finite()) {
            return domain("count synthesis needs rate_scale >= 0 and dwell > 0");
        }
        Ok(Self { rate_scale, dwell, stream })
    }

    pub fn exposure(&self) -> f64 {
        self.rate_scale * self.dwell
    }

    /// Draws the counts of point `index` with the given expected value.
    pub fn draw(&self, index: usize, expected: f64) -> u64 {
        if !(expected > 0.0) {
            return 0;
        }
        let mut rng = self.stream.substream(index as u64).rng();
        Poisson::new(expected).expect("positive mean").sample(&mut rng) as u64
    }
}

/// Phase trajectory of a passively drifting interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftModel {
    /// `φ(t) = φ₀ + ω·t`.
    Linear { initial: f64, rate: f64 },
    /// Exponential relaxation, as for a heated fiber cooling down:
    /// `φ(t) = φ₀ + φ_total·(1 − exp(−t/τ_relax))`.
    Relaxing { initial: f64, total: f64, relax_time: f64 },
}

impl DriftModel {
    /// Linear drift covering `periods` fringes in `duration`.
    pub fn linear(periods: f64, duration: f64) -> Self {
        DriftModel::Linear { initial: 0.0, rate: std::f64::consts::TAU * periods / duration }
    }

    /// Relaxing drift reaching `periods` fringes at `duration`.
    pub fn relaxing(periods: f64, duration: f64, relax_time: f64) -> Self {
        let total = std::f64::consts::TAU * periods / (1.0 - (-duration / relax_time).exp());
        DriftModel::Relaxing { initial: 0.0, total, relax_time }
    }

    /// Default passive-cooling drift: three fringes, relaxation time twice
    /// the scan duration.
    pub fn cooling(duration: f64) -> Self {
        Self::relaxing(3.0, duration, 2.0 * duration)
    }

    pub fn phase(&self, t: f64) -> f64 {
        match *self {
            DriftModel::Linear { initial, rate } => initial + rate * t,
            DriftModel::Relaxing { initial, total, relax_time } => initial + total * (1.0 - (-t / relax_time).exp()),
        }
    }

    pub fn with_initial(self, phase: f64) -> Self {
        match self {
            DriftModel::Linear { rate, .. } => DriftModel::Linear { initial: phase, rate },
            DriftModel::Relaxing { total, relax_time, .. } => DriftModel::Relaxing { initial: phase, total, relax_time },
        }
    }
}

/// Settings shared by the time-resolved phase scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseScanSettings {
    pub drift: DriftModel,
    pub duration: f64,
    pub points: usize,
    pub trials: usize,
}

impl PhaseScanSettings {
    fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return domain("scan duration must be positive");
        }
        if self.points < 10 {
            return domain(format!("phase scans need at least 10 points, got {}", self.points));
        }
        if self.trials == 0 {
            return domain("phase scans need at least one trial per point");
        }
        Ok(())
    }

    /// Start time of point `i`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.duration / self.points as f64
    }
}

/// Hong-Ou-Mandel delay scan: `rate(δ) = 1 − V·g(δ)` with `g` the filter
/// envelope.
pub fn hom_scan(app: &Apparatus, delay_grid: &[f64], injected_visibility: f64, synth: &CountSynthesis) -> Result<ScanResult> {
    if !(0.0..=1.0).contains(&injected_visibility) {
        return domain(format!("injected visibility {injected_visibility} outside [0, 1]"));
    }
    if delay_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("HOM delay grid must be strictly increasing");
    }
    app.validate()?;
    let points = delay_grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let rate = 1.0 - injected_visibility * dip_envelope(d, &app.filter) + app.background_rate;
            ScanPoint { x: d, rate, counts: synth.draw(i, rate * synth.exposure()), stderr: 0.0, phase: None }
        })
        .collect();
    Ok(ScanResult {
        scenario: "hom".into(),
        x_label: "delay_s".into(),
        points,
        meta: ScanMeta {
            seed: synth.stream.seed,
            trials: 0,
            delivered_power: 1.0,
            exposure: synth.exposure(),
            acceptance_fraction: None,
            summary: format!("filter={:?} V={injected_visibility}", app.filter.shape()),
        },
    })
}

/// Two-photon phase scan: the PDC phase `φ` follows `drift` over time while
/// every point is a Monte Carlo coincidence rate. Points are evaluated on
/// substreams of `stream`; counts include the delivered pump power.
pub fn phase_scan(
    app: &Apparatus,
    pump: &PumpModel,
    settings: &PhaseScanSettings,
    synth: &CountSynthesis,
    stream: RngStream,
) -> Result<ScanResult> {
    settings.validate()?;
    app.validate_with(pump)?;
    let power = app.delivered_power();
    let mut points = Vec::with_capacity(settings.points);
    let (mut gated, mut all) = (0.0, 0.0);
    for i in 0..settings.points {
        let t = settings.time(i);
        let mut at = app.clone();
        at.pdc_mz.phase = app.pdc_mz.phase + settings.drift.phase(t);
        let est = coincidence_rate(&at, pump, settings.trials, stream.substream(i as u64))?;
        if let Some(total) = est.ungated_rate {
            gated += est.rate;
            all += total;
        }
        points.push(ScanPoint {
            x: t,
            rate: est.rate,
            counts: synth.draw(i, est.rate * power * synth.exposure()),
            stderr: est.stderr,
            phase: Some(at.pdc_mz.phase),
        });
    }
    Ok(ScanResult {
        scenario: "phase".into(),
        x_label: "time_s".into(),
        points,
        meta: ScanMeta {
            seed: stream.seed,
            trials: settings.trials,
            delivered_power: power,
            exposure: synth.exposure(),
            acceptance_fraction: app.gate.enabled.then(|| gated / all),
            summary: format!("pump={} {}", pump.name(), app.summary()),
        },
    })
}

/// Classical intensity at the through port of the pump interferometer while
/// `φ_p` drifts. Normalized to 1 for incoherent arms.
pub fn first_order_scan(
    app: &Apparatus,
    pump: &PumpModel,
    settings: &PhaseScanSettings,
    synth: &CountSynthesis,
    stream: RngStream,
) -> Result<ScanResult> {
    settings.validate()?;
    app.validate()?;
    pump.validate()?;
    let (a, b) = app.pump_mz.split.amplitudes();
    let tau_p = app.tau_p();
    let mut points = Vec::with_capacity(settings.points);
    for i in 0..settings.points {
        let t = settings.time(i);
        let phi_p = app.pump_mz.phase + settings.drift.phase(t);
        let long = Complex64::from_polar(b, phi_p);
        let m = parallel_moments(settings.trials, 1, stream.substream(i as u64), |rng, out| {
            let f = sample_field(pump, tau_p, rng).expect("non-negative delay");
            out[0] = (f.e0 * a - f.e1 * long).norm_sqr();
        });
        points.push(ScanPoint {
            x: t,
            rate: m.mean(0),
            counts: synth.draw(i, m.mean(0) * synth.exposure()),
            stderr: m.stderr(0),
            phase: Some(phi_p),
        });
    }
    Ok(ScanResult {
        scenario: "pump-stability".into(),
        x_label: "time_s".into(),
        points,
        meta: ScanMeta {
            seed: stream.seed,
            trials: settings.trials,
            delivered_power: 1.0,
            exposure: synth.exposure(),
            acceptance_fraction: None,
            summary: format!("pump={} cτp={} f={}", pump.name(), app.pump_mz.imbalance_path, app.pump_mz.split.short_power_fraction()),
        },
    })
}

/// Ratio of the mean coincidence rates of two scans including the pump
/// power each one delivers to the crystal.
pub fn mean_rate_ratio(with_pump_mz: &ScanResult, without: &ScanResult) -> Result<f64> {
    if with_pump_mz.points.is_empty() || without.points.is_empty() {
        return domain("mean_rate_ratio needs non-empty scans");
    }
    let num = with_pump_mz.mean_rate() * with_pump_mz.meta.delivered_power;
    let den = without.mean_rate() * without.meta.delivered_power;
    if !(den > 0.0) {
        return domain("reference scan has zero mean rate");
    }
    Ok(num / den)
}
