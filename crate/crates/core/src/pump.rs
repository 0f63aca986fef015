//! Statistical models of the pump field.
//!
//! All models produce the complex pump envelope relative to its carrier.
//! Delays are expressed either in seconds (`tau`) or as optical path
//! (`delay_path`, meters); the two are related by the speed of light.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{config, domain, Result};
use crate::optics::{coherence_length, Amplitude, SplitRatio, SPEED_OF_LIGHT};
use crate::rng::{parallel_moments, RngStream};
use crate::scan::{ScanMeta, ScanPoint, ScanResult};

/// Measured spacing of the recurring coherence peaks of the 407 nm diode.
pub const DIODE_PEAK_SPACING: f64 = 4705.5e-6;
/// Spectral width of the diode pump.
pub const DIODE_LINEWIDTH: f64 = 0.1e-9;
pub const DIODE_WAVELENGTH: f64 = 407e-9;
/// Longitudinal modes inside the 0.1 nm envelope at the measured spacing.
pub const DIODE_MODE_COUNT: usize = 3;
/// Per-mode coherence length. Calibrated so that a 60 cm, 60/40 pump
/// interferometer shows about 8% first-order visibility; see
/// [`calibrate_mode_linewidth`]. Not a first-principles value.
pub const DIODE_MODE_LINEWIDTH_PATH: f64 = 0.807;

#[derive(Debug, Clone, PartialEq)]
pub enum PumpModel {
    /// Ideal CW laser with infinite coherence length.
    Coherent,
    /// CW laser whose phase performs a Wiener process.
    PhaseDiffusion { coherence_length: f64 },
    /// Multimode diode: a comb of randomly phased longitudinal modes under a
    /// Gaussian envelope, each mode with its own phase diffusion.
    MultimodeComb {
        peak_spacing_path: f64,
        mode_count: usize,
        envelope_fwhm_wavelength: f64,
        mode_linewidth_path: f64,
        center_wavelength: f64,
    },
    /// Pulse train with Gaussian pulses; every pulse carries an independent
    /// random phase. Field values are normalized to unit peak intensity.
    Pulsed { pulse_fwhm: f64, period: f64 },
}

impl PumpModel {
    /// Short-coherence CW diode with 0.1 nm linewidth at 407 nm.
    pub fn diode_phase_diffusion() -> Self {
        PumpModel::PhaseDiffusion { coherence_length: coherence_length(DIODE_LINEWIDTH, DIODE_WAVELENGTH).expect("valid constants") }
    }

    /// Picosecond mode-locked source at 100 MHz.
    pub fn mode_locked() -> Self {
        PumpModel::Pulsed { pulse_fwhm: 1e-12, period: 1e-8 }
    }

    /// Multimode comb with the calibrated diode defaults.
    pub fn diode_comb() -> Self {
        PumpModel::MultimodeComb {
            peak_spacing_path: DIODE_PEAK_SPACING,
            mode_count: DIODE_MODE_COUNT,
            envelope_fwhm_wavelength: DIODE_LINEWIDTH,
            mode_linewidth_path: DIODE_MODE_LINEWIDTH_PATH,
            center_wavelength: DIODE_WAVELENGTH,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PumpModel::Coherent => "coherent",
            PumpModel::PhaseDiffusion { .. } => "phase-diffusion",
            PumpModel::MultimodeComb { .. } => "multimode-comb",
            PumpModel::Pulsed { .. } => "pulsed",
        }
    }

    pub fn is_pulsed(&self) -> bool {
        matches!(self, PumpModel::Pulsed { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                config(format!("{name} must be positive, got {v}"))
            }
        };
        match *self {
            PumpModel::Coherent => Ok(()),
            PumpModel::PhaseDiffusion { coherence_length } => positive("coherence_length", coherence_length),
            PumpModel::MultimodeComb {
                peak_spacing_path,
                mode_count,
                envelope_fwhm_wavelength,
                mode_linewidth_path,
                center_wavelength,
            } => {
                positive("peak_spacing_path", peak_spacing_path)?;
                positive("envelope_fwhm_wavelength", envelope_fwhm_wavelength)?;
                positive("mode_linewidth_path", mode_linewidth_path)?;
                positive("center_wavelength", center_wavelength)?;
                if mode_count == 0 {
                    return config("mode_count must be at least 1");
                }
                Ok(())
            }
            PumpModel::Pulsed { pulse_fwhm, period } => {
                positive("pulse_fwhm", pulse_fwhm)?;
                positive("period", period)?;
                if pulse_fwhm >= period {
                    return config("pulse_fwhm must be shorter than the period");
                }
                Ok(())
            }
        }
    }
}

/// Relative powers and frequency offsets (in units of the mode spacing) of
/// the comb modes, powers normalized to sum to one.
fn comb_modes(peak_spacing_path: f64, mode_count: usize, envelope_fwhm_wavelength: f64, center_wavelength: f64) -> Vec<(f64, f64)> {
    // envelope FWHM in units of the free spectral range c/D
    let fwhm_modes = peak_spacing_path * envelope_fwhm_wavelength / (center_wavelength * center_wavelength);
    let mid = (mode_count as f64 - 1.0) / 2.0;
    let raw: Vec<(f64, f64)> = (0..mode_count)
        .map(|j| {
            let m = j as f64 - mid;
            ((-4.0 * LN_2 * (m / fwhm_modes).powi(2)).exp(), m)
        })
        .collect();
    let total: f64 = raw.iter().map(|(p, _)| p).sum();
    raw.into_iter().map(|(p, m)| (p / total, m)).collect()
}

/// Pump envelope at the retarded times `t′`, `t′−τ` and `t′−2τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSamples {
    pub e0: Amplitude,
    pub e1: Amplitude,
    pub e2: Amplitude,
}

impl FieldSamples {
    pub const UNIT: FieldSamples =
        FieldSamples { e0: Complex64::new(1.0, 0.0), e1: Complex64::new(1.0, 0.0), e2: Complex64::new(1.0, 0.0) };

    pub fn get(&self, index: usize) -> Amplitude {
        match index {
            0 => self.e0,
            1 => self.e1,
            2 => self.e2,
            _ => panic!("retarded-time index {index} out of range"),
        }
    }
}

fn unit_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, TAU * rng.random::<f64>())
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws one realization of the pump field at `t′`, `t′−τ`, `t′−2τ` with
/// `t′ = 0`.
pub fn sample_field(model: &PumpModel, tau: f64, rng: &mut ChaCha8Rng) -> Result<FieldSamples> {
    sample_field_at(model, 0.0, tau, rng)
}

/// As [`sample_field`] with an explicit reference time `t′`. Only the
/// pulsed model depends on `t′`; its pulses sit at integer multiples of the
/// period.
pub fn sample_field_at(model: &PumpModel, t_ref: f64, tau: f64, rng: &mut ChaCha8Rng) -> Result<FieldSamples> {
    if !(tau >= 0.0) {
        return domain(format!("tau must be non-negative, got {tau}"));
    }
    Ok(match *model {
        PumpModel::Coherent => FieldSamples::UNIT,
        PumpModel::PhaseDiffusion { coherence_length } => {
            // Var[φ(t+Δ) − φ(t)] = 2cΔ/L_c
            let step = (2.0 * SPEED_OF_LIGHT * tau / coherence_length).sqrt();
            let e2 = unit_phase(rng);
            let e1 = e2 * Complex64::from_polar(1.0, step * gaussian(rng));
            let e0 = e1 * Complex64::from_polar(1.0, step * gaussian(rng));
            FieldSamples { e0, e1, e2 }
        }
        PumpModel::MultimodeComb { peak_spacing_path, mode_count, envelope_fwhm_wavelength, mode_linewidth_path, center_wavelength } => {
            let modes = comb_modes(peak_spacing_path, mode_count, envelope_fwhm_wavelength, center_wavelength);
            let d = SPEED_OF_LIGHT * tau;
            let step = (2.0 * d / mode_linewidth_path).sqrt();
            let mut out = [Complex64::new(0.0, 0.0); 3];
            for &(power, m) in &modes {
                let amp = power.sqrt();
                let p2 = TAU * rng.random::<f64>();
                let p1 = p2 + step * gaussian(rng);
                let p0 = p1 + step * gaussian(rng);
                for (k, psi) in [p0, p1, p2].into_iter().enumerate() {
                    let s = -(k as f64) * d;
                    out[k] += Complex64::from_polar(amp, psi + TAU * m * s / peak_spacing_path);
                }
            }
            FieldSamples { e0: out[0], e1: out[1], e2: out[2] }
        }
        PumpModel::Pulsed { pulse_fwhm, period } => {
            let times = [t_ref, t_ref - tau, t_ref - 2.0 * tau];
            let reach = 8.0 * pulse_fwhm;
            // Random phases for each pulse touching any sample time, drawn in
            // ascending pulse order.
            let mut phases = BTreeMap::new();
            for &t in &times {
                let first = ((t - reach) / period).ceil() as i64;
                let last = ((t + reach) / period).floor() as i64;
                for n in first..=last {
                    phases.entry(n).or_insert(0.0);
                }
            }
            for phase in phases.values_mut() {
                *phase = TAU * rng.random::<f64>();
            }
            let field = |t: f64| {
                phases
                    .iter()
                    .map(|(&n, &ph)| Complex64::from_polar(pulse_amplitude(t - n as f64 * period, pulse_fwhm), ph))
                    .sum::<Complex64>()
            };
            FieldSamples { e0: field(times[0]), e1: field(times[1]), e2: field(times[2]) }
        }
    })
}

/// Field amplitude of a single Gaussian pulse with intensity FWHM `fwhm`,
/// unit peak.
fn pulse_amplitude(t: f64, fwhm: f64) -> f64 {
    (-2.0 * LN_2 * (t / fwhm).powi(2)).exp()
}

/// Normalized first-order correlation `g¹(d) = ⟨E(t+d/c)·E*(t)⟩ / ⟨|E|²⟩`.
/// Negative delays are evaluated by conjugate symmetry.
pub fn g1_analytic(model: &PumpModel, delay_path: f64) -> Amplitude {
    if delay_path < 0.0 {
        return g1_analytic(model, -delay_path).conj();
    }
    match *model {
        PumpModel::Coherent => Complex64::new(1.0, 0.0),
        PumpModel::PhaseDiffusion { coherence_length } => Complex64::new((-delay_path / coherence_length).exp(), 0.0),
        PumpModel::MultimodeComb { peak_spacing_path, mode_count, envelope_fwhm_wavelength, mode_linewidth_path, center_wavelength } => {
            let modes = comb_modes(peak_spacing_path, mode_count, envelope_fwhm_wavelength, center_wavelength);
            let comb: Complex64 = modes.iter().map(|&(p, m)| Complex64::from_polar(p, TAU * m * delay_path / peak_spacing_path)).sum();
            comb * (-delay_path / mode_linewidth_path).exp()
        }
        PumpModel::Pulsed { pulse_fwhm, .. } => {
            // pulses carry independent phases, so only a pulse's overlap
            // with itself survives the ensemble average
            let t = delay_path / SPEED_OF_LIGHT;
            Complex64::new((-LN_2 * (t / pulse_fwhm).powi(2)).exp(), 0.0)
        }
    }
}

/// Monte Carlo estimate of a complex quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub value: Amplitude,
    /// Standard error of the complex mean, `√((Var re + Var im)/N)`.
    pub stderr: f64,
    pub trials: usize,
}

/// Ensemble estimate of `g¹` from sampled fields.
pub fn g1_estimate(model: &PumpModel, delay_path: f64, trials: usize, stream: RngStream) -> Result<ComplexEstimate> {
    if trials < 100 {
        return domain(format!("g1_estimate needs at least 100 trials, got {trials}"));
    }
    model.validate()?;
    let conj = delay_path < 0.0;
    let tau = delay_path.abs() / SPEED_OF_LIGHT;
    let m = match *model {
        // time-averaged correlation: t′ drawn uniformly over a window
        // holding the pulse at zero and its delayed copy
        PumpModel::Pulsed { pulse_fwhm, .. } => {
            let w = 6.0 * pulse_fwhm;
            parallel_moments(trials, 3, stream, |rng, out| {
                let t_ref = -w + (tau + 2.0 * w) * rng.random::<f64>();
                let f = sample_field_at(model, t_ref, tau, rng).expect("non-negative delay");
                let prod = f.e0 * f.e1.conj();
                out[0] = prod.re;
                out[1] = prod.im;
                out[2] = 0.5 * (f.e0.norm_sqr() + f.e1.norm_sqr());
            })
        }
        _ => parallel_moments(trials, 3, stream, |rng, out| {
            let f = sample_field(model, tau, rng).expect("non-negative delay");
            // e0 is the later time t′, e1 the earlier t′−τ
            let prod = f.e0 * f.e1.conj();
            out[0] = prod.re;
            out[1] = prod.im;
            out[2] = 1.0;
        }),
    };
    let norm = m.mean(2).max(f64::MIN_POSITIVE);
    let mut value = Complex64::new(m.mean(0), m.mean(1)) / norm;
    if conj {
        value = value.conj();
    }
    let stderr = (m.stderr(0).powi(2) + m.stderr(1).powi(2)).sqrt() / norm;
    Ok(ComplexEstimate { value, stderr, trials })
}

/// Classical fringe visibility at the output of an unbalanced Mach-Zehnder
/// with arm imbalance `imbalance_path`: `2ab·|g¹|`.
pub fn first_order_mz_visibility(model: &PumpModel, imbalance_path: f64, split: SplitRatio) -> f64 {
    let (a, b) = split.amplitudes();
    let v = (2.0 * a * b * g1_analytic(model, imbalance_path).norm()).clamp(0.0, 1.0);
    if v < 1e-100 {
        0.0
    } else {
        v
    }
}

/// Per-mode coherence length that gives first-order visibility `target` at
/// `imbalance_path` for an otherwise specified comb.
pub fn calibrate_mode_linewidth(
    target: f64,
    imbalance_path: f64,
    split: SplitRatio,
    peak_spacing_path: f64,
    mode_count: usize,
    envelope_fwhm_wavelength: f64,
    center_wavelength: f64,
) -> Result<f64> {
    let undamped = PumpModel::MultimodeComb {
        peak_spacing_path,
        mode_count,
        envelope_fwhm_wavelength,
        mode_linewidth_path: f64::INFINITY,
        center_wavelength,
    };
    let ceiling = first_order_mz_visibility(&undamped, imbalance_path, split);
    if !(target > 0.0 && target < ceiling) {
        return domain(format!("target visibility {target} unreachable; comb structure alone allows at most {ceiling:.4}"));
    }
    Ok(-imbalance_path / (target / ceiling).ln())
}

/// Outcome of a Michelson delay scan of the pump.
#[derive(Debug, Clone)]
pub struct MichelsonScan {
    pub scan: ScanResult,
    /// Refined positions of recurring coherence maxima, including zero delay
    /// when it is on the grid.
    pub peaks: Vec<f64>,
    /// Least-squares spacing of the recurring maxima; `None` when fewer than
    /// two maxima are found.
    pub spacing: Option<f64>,
}

/// Minimum drop of `|g¹|` between two maxima for both to count as peaks.
const PEAK_PROMINENCE: f64 = 0.05;

/// Samples `|g¹|` on `delay_grid` (path, meters) and locates recurring
/// coherence maxima.
pub fn michelson_scan(model: &PumpModel, delay_grid: &[f64]) -> Result<MichelsonScan> {
    if delay_grid.len() < 2 {
        return domain("Michelson scan needs at least two delays");
    }
    if delay_grid.iter().any(|&d| !(d >= 0.0)) || delay_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("Michelson delay grid must be non-negative and strictly increasing");
    }
    model.validate()?;
    let values: Vec<f64> = delay_grid.iter().map(|&d| g1_analytic(model, d).norm()).collect();

    let mut candidates = Vec::new();
    if delay_grid[0] == 0.0 && values[0] >= values[1] {
        candidates.push(0);
    }
    for i in 1..values.len() - 1 {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            candidates.push(i);
        }
    }
    // discard maxima not separated from the previous accepted one by a dip
    let mut accepted: Vec<usize> = Vec::new();
    for &i in &candidates {
        match accepted.last() {
            Some(&j) => {
                let valley = values[j..=i].iter().cloned().fold(f64::INFINITY, f64::min);
                if values[i] - valley >= PEAK_PROMINENCE && values[j] - valley >= PEAK_PROMINENCE {
                    accepted.push(i);
                } else if values[i] > values[j] {
                    *accepted.last_mut().unwrap() = i;
                }
            }
            None => accepted.push(i),
        }
    }
    // a comb with few modes has weak secondary maxima between the main
    // peaks; drop maxima flanked by ones more than twice as high
    loop {
        let n = accepted.len();
        let weak = (0..n).find(|&k| {
            let v = values[accepted[k]];
            let left = (k > 0).then(|| values[accepted[k - 1]]);
            let right = (k + 1 < n).then(|| values[accepted[k + 1]]);
            match (left, right) {
                (Some(l), Some(r)) => l > 2.0 * v && r > 2.0 * v,
                (Some(x), None) | (None, Some(x)) => x > 2.0 * v,
                (None, None) => false,
            }
        });
        match weak {
            Some(k) => {
                accepted.remove(k);
            }
            None => break,
        }
    }
    let peaks: Vec<f64> = accepted.iter().map(|&i| refine_peak(delay_grid, &values, i)).collect();
    let spacing = if peaks.len() >= 2 {
        let n = peaks.len() as f64;
        let mean_i = (n - 1.0) / 2.0;
        let mean_x = peaks.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, &x) in peaks.iter().enumerate() {
            let di = i as f64 - mean_i;
            sxy += di * (x - mean_x);
            sxx += di * di;
        }
        Some(sxy / sxx)
    } else {
        None
    };

    let points = delay_grid.iter().zip(&values).map(|(&x, &v)| ScanPoint { x, rate: v, counts: 0, stderr: 0.0, phase: None }).collect();
    let scan = ScanResult {
        scenario: "michelson".into(),
        x_label: "delay_path_m".into(),
        points,
        meta: ScanMeta {
            seed: 0,
            trials: 0,
            delivered_power: 1.0,
            exposure: 0.0,
            acceptance_fraction: None,
            summary: format!("pump={}", model.name()),
        },
    };
    Ok(MichelsonScan { scan, peaks, spacing })
}

/// Vertex of the parabola through the three samples around index `i`.
fn refine_peak(x: &[f64], y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= x.len() {
        return x[i];
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a >= 0.0 {
        return x1;
    }
    (-b / (2.0 * a)).clamp(x0, x2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn comb(mode_count: usize, linewidth: f64) -> PumpModel {
        PumpModel::MultimodeComb {
            peak_spacing_path: DIODE_PEAK_SPACING,
            mode_count,
            envelope_fwhm_wavelength: DIODE_LINEWIDTH,
            mode_linewidth_path: linewidth,
            center_wavelength: DIODE_WAVELENGTH,
        }
    }

    fn all_models() -> Vec<PumpModel> {
        vec![
            PumpModel::Coherent,
            PumpModel::diode_phase_diffusion(),
            PumpModel::diode_comb(),
            comb(6, 0.3),
            PumpModel::Pulsed { pulse_fwhm: 1e-12, period: 1e-8 },
        ]
    }

    #[test]
    fn coherent_fields_are_unit() {
        let mut rng = RngStream::new(1, 0).rng();
        for tau in [0.0, 1e-9, 1.0] {
            assert_eq!(sample_field(&PumpModel::Coherent, tau, &mut rng).unwrap(), FieldSamples::UNIT);
        }
    }

    #[test]
    fn negative_tau_rejected() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(sample_field(&PumpModel::Coherent, -1e-9, &mut rng).is_err());
    }

    #[test]
    fn phase_diffusion_decays_by_e_at_coherence_length() {
        let model = PumpModel::diode_phase_diffusion();
        let PumpModel::PhaseDiffusion { coherence_length } = model else { unreachable!() };
        let est = g1_estimate(&model, coherence_length, 100_000, RngStream::new(11, 0)).unwrap();
        let target = (-1.0f64).exp();
        assert!((est.value.re - target).abs() < 3.0 * est.stderr, "{:?}", est);
        assert!(est.value.im.abs() < 3.0 * est.stderr);
    }

    #[test]
    fn successive_pulses_have_equal_modulus() {
        let model = PumpModel::Pulsed { pulse_fwhm: 1e-12, period: 1e-8 };
        let mut rng = RngStream::new(2, 0).rng();
        let f = sample_field(&model, 1e-8, &mut rng).unwrap();
        assert!((f.e0.norm() - 1.0).abs() < 1e-12);
        assert!((f.e1.norm() - f.e0.norm()).abs() < 1e-12);
        assert!((f.e2.norm() - 1.0).abs() < 1e-12);
        // between pulses the field vanishes
        let f = sample_field(&model, 3e-9, &mut rng).unwrap();
        assert!(f.e1.norm() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        for model in all_models() {
            let a = sample_field(&model, 2e-9, &mut RngStream::new(5, 9).rng()).unwrap();
            let b = sample_field(&model, 2e-9, &mut RngStream::new(5, 9).rng()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn g1_normalized_at_zero() {
        for model in all_models() {
            assert!((g1_analytic(&model, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{model:?}");
        }
    }

    #[test]
    fn comb_recurs_at_peak_spacing() {
        let model = PumpModel::diode_comb();
        let at = |d: f64| g1_analytic(&model, d).norm();
        let p = DIODE_PEAK_SPACING;
        assert!(at(p) > at(p - 5e-6) && at(p) > at(p + 5e-6));
        assert!(at(p) > 0.99);
    }

    #[test]
    fn comb_is_weak_at_sixty_centimeters() {
        let g = g1_analytic(&PumpModel::diode_comb(), 0.60).norm();
        assert!(g <= 0.1, "{g}");
    }

    #[test]
    fn calibration_reproduces_default_linewidth() {
        let split = SplitRatio::new(0.6).unwrap();
        let l =
            calibrate_mode_linewidth(0.08, 0.60, split, DIODE_PEAK_SPACING, DIODE_MODE_COUNT, DIODE_LINEWIDTH, DIODE_WAVELENGTH).unwrap();
        assert!((l - DIODE_MODE_LINEWIDTH_PATH).abs() < 0.005, "{l}");
        let v = first_order_mz_visibility(&PumpModel::diode_comb(), 0.60, split);
        assert!((v - 0.08).abs() < 0.001, "{v}");
        assert!(calibrate_mode_linewidth(0.5, 0.60, split, DIODE_PEAK_SPACING, 3, DIODE_LINEWIDTH, DIODE_WAVELENGTH).is_err());
    }

    #[test]
    fn single_mode_comb_is_phase_diffusion() {
        let one = comb(1, 2e-3);
        let pd = PumpModel::PhaseDiffusion { coherence_length: 2e-3 };
        for k in 0..50 {
            let d = k as f64 * 1e-4;
            assert!((g1_analytic(&one, d) - g1_analytic(&pd, d)).norm() < 1e-12);
        }
        let a = g1_estimate(&one, 2e-3, 20_000, RngStream::new(4, 0)).unwrap();
        assert!((a.value - g1_analytic(&pd, 2e-3)).norm() < 5.0 * a.stderr);
    }

    #[test]
    fn g1_estimate_examples() {
        let c = g1_estimate(&PumpModel::Coherent, 0.3, 100, RngStream::new(1, 0)).unwrap();
        assert_eq!(c.value, Complex64::new(1.0, 0.0));
        assert!(g1_estimate(&PumpModel::Coherent, 0.3, 99, RngStream::new(1, 0)).is_err());

        // even mode count: the comb sum cancels exactly halfway between peaks
        let even = comb(4, 0.8);
        assert!(g1_analytic(&even, DIODE_PEAK_SPACING / 2.0).norm() < 1e-12);
        let est = g1_estimate(&even, DIODE_PEAK_SPACING / 2.0, 50_000, RngStream::new(3, 0)).unwrap();
        assert!(est.value.norm() < 5.0 * est.stderr, "{est:?}");

        let model = PumpModel::diode_comb();
        let d = DIODE_PEAK_SPACING / 2.0;
        let est = g1_estimate(&model, d, 50_000, RngStream::new(3, 1)).unwrap();
        assert!((est.value - g1_analytic(&model, d)).norm() < 5.0 * est.stderr);
    }

    #[test]
    fn g1_estimate_matches_analytic_for_every_model() {
        for (i, model) in all_models().into_iter().enumerate() {
            let d = match model {
                PumpModel::Pulsed { .. } => 2e-4,
                _ => 1.3e-3,
            };
            for delay in [d, -d] {
                let est = g1_estimate(&model, delay, 40_000, RngStream::new(8, i as u64)).unwrap();
                let exact = g1_analytic(&model, delay);
                assert!((est.value - exact).norm() < 5.0 * est.stderr.max(1e-12), "{model:?} {delay} {est:?} {exact}");
            }
        }
    }

    #[test]
    fn estimate_error_shrinks_as_inverse_root_trials() {
        let model = PumpModel::diode_phase_diffusion();
        let small = g1_estimate(&model, 1e-3, 1_000, RngStream::new(21, 0)).unwrap();
        let large = g1_estimate(&model, 1e-3, 100_000, RngStream::new(21, 1)).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((ratio - 10.0).abs() < 1.5, "{ratio}");
        let exact = g1_analytic(&model, 1e-3);
        assert!((large.value - exact).norm() < 5.0 * large.stderr);
    }

    #[test]
    fn first_order_visibility_examples() {
        let v = first_order_mz_visibility(&PumpModel::Coherent, 0.6, SplitRatio::new(0.6).unwrap());
        assert!((v - 2.0 * 0.24f64.sqrt()).abs() < 1e-12);
        assert!((v - 0.9798).abs() < 1e-4);
        assert_eq!(first_order_mz_visibility(&PumpModel::Coherent, 0.6, SplitRatio::BALANCED), 1.0);
        let pd = PumpModel::PhaseDiffusion { coherence_length: 1.656e-3 };
        assert_eq!(first_order_mz_visibility(&pd, 0.6, SplitRatio::BALANCED), 0.0);
    }

    #[test]
    fn michelson_recovers_peak_spacing() {
        let grid: Vec<f64> = (0..=4000).map(|i| i as f64 * 5e-6).collect();
        let scan = michelson_scan(&PumpModel::diode_comb(), &grid).unwrap();
        let spacing = scan.spacing.expect("recurring peaks");
        assert!((spacing - DIODE_PEAK_SPACING).abs() <= 5e-6, "{spacing}");
        assert_eq!(scan.peaks.len(), 5);
        assert_eq!(scan.scan.points.len(), grid.len());
    }

    #[test]
    fn michelson_without_recurrence() {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 5e-5).collect();
        assert_eq!(michelson_scan(&PumpModel::diode_phase_diffusion(), &grid).unwrap().spacing, None);
        let coherent = michelson_scan(&PumpModel::Coherent, &grid).unwrap();
        assert_eq!(coherent.spacing, None);
        assert!(coherent.scan.points.iter().all(|p| p.rate == 1.0));
        assert!(michelson_scan(&PumpModel::Coherent, &[0.0]).is_err());
        assert!(michelson_scan(&PumpModel::Coherent, &[0.0, -1.0]).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(PumpModel::Pulsed { pulse_fwhm: 2.0, period: 1.0 }.validate().is_err());
        assert!(PumpModel::PhaseDiffusion { coherence_length: 0.0 }.validate().is_err());
        assert!(comb(0, 1.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn g1_bounded_and_hermitian(d in 0.0f64..1.0, which in 0usize..5) {
            let model = &all_models()[which];
            let g = g1_analytic(model, d);
            prop_assert!(g.norm() <= 1.0 + 1e-12);
            prop_assert!((g1_analytic(model, -d) - g.conj()).norm() < 1e-15);
        }
    }
}
