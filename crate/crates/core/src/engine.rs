//! Four-term two-photon amplitude engine and Monte Carlo coincidence rates.
//!
//! A coincidence at time `t` can arise from four path combinations: the pump
//! photon took the short (`Sp`) or long (`Lp`) arm of the pump
//! interferometer, and the photon pair took both short (`SS`) or both long
//! (`LL`) arms of the PDC interferometer. Each combination picks up the pump
//! field at a different retarded time:
//!
//! | term    | pump field | phase      | slot |
//! |---------|------------|------------|------|
//! | `Sp_SS` | `e(t′)`    | `0`        | 0    |
//! | `Sp_LL` | `e(t′−τ)`  | `φ`        | 1    |
//! | `Lp_SS` | `e(t′−τ)`  | `φ_p`      | 1    |
//! | `Lp_LL` | `e(t′−2τ)` | `φ_p + φ`  | 2    |
//!
//! Static weights come from beamsplitter algebra. The pump interferometer is
//! read out at its through port, which gives the long arm a relative sign of
//! −1 and puts the coincidence minimum at `φ_p = φ`.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::apparatus::Apparatus;
use crate::error::{domain, Result};
use crate::optics::{beamsplitter, dip_envelope, Amplitude, SPEED_OF_LIGHT};
use crate::pump::{g1_analytic, sample_field, sample_field_at, FieldSamples, PumpModel};
use crate::rng::{parallel_moments, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermLabel {
    SpLL,
    LpSS,
    SpSS,
    LpLL,
}

impl TermLabel {
    fn pump_long(self) -> bool {
        matches!(self, TermLabel::LpSS | TermLabel::LpLL)
    }
}

/// One path combination contributing to a coincidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermAmplitude {
    pub label: TermLabel,
    /// Static amplitude including interferometer phases, without the pump
    /// field.
    pub weight: Amplitude,
    /// Retarded time of the pump field feeding this term: 0, 1 or 2.
    pub pump_sample_index: usize,
    /// Interferometer phase carried by the term.
    pub extra_phase: f64,
    /// Detection slot relative to the earliest amplitude.
    pub time_slot: i64,
    /// `weight` times the pump field at `pump_sample_index`.
    pub amplitude: Amplitude,
}

/// Pump amplitudes of the short and long arm reaching the through port of
/// the pump interferometer, normalized to unit delivered power.
fn pump_arm_weights(app: &Apparatus) -> Result<(Amplitude, Amplitude)> {
    let f = app.pump_mz.split.short_power_fraction();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    // first splitter transmits the short-arm share
    let (short, long) = beamsplitter(one, zero, 1.0 - f)?;
    // recombiner: through port collects transmitted short and reflected long
    let (from_short, _) = beamsplitter(short, zero, 0.5)?;
    let (from_long, _) = beamsplitter(zero, long, 0.5)?;
    let delivered = (from_short.norm_sqr() + from_long.norm_sqr()).sqrt();
    Ok((from_short / delivered, from_long / delivered))
}

/// Coincidence amplitudes of the both-short and both-long two-photon
/// components at the output of the PDC interferometer, normalized.
fn noon_weights() -> Result<(Amplitude, Amplitude)> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    // two photons in one input mode: the one-photon-per-port amplitude is
    // √2 · u_c · u_d for the single-photon output amplitudes (u_c, u_d)
    let (sc, sd) = beamsplitter(one, zero, 0.5)?;
    let (lc, ld) = beamsplitter(zero, one, 0.5)?;
    let ss = sc * sd * 2f64.sqrt();
    let ll = lc * ld * 2f64.sqrt();
    let norm = (ss.norm_sqr() + ll.norm_sqr()).sqrt();
    // remove the common global phase
    let global = ss / ss.norm();
    Ok((ss / norm / global, ll / norm / global))
}

/// Static terms of the apparatus. Two terms without the pump
/// interferometer, one or two without the PDC interferometer.
pub fn static_terms(app: &Apparatus) -> Result<Vec<TermAmplitude>> {
    let (w_s, w_l) = if app.pump_mz.enabled { pump_arm_weights(app)? } else { (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)) };
    let (w_ss, w_ll) = if app.pdc_mz.enabled { noon_weights()? } else { (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)) };
    let phi = app.pdc_mz.phase;
    let phi_p = app.pump_mz.phase;
    let mut terms = Vec::with_capacity(4);
    let mut push = |label, pump_w: Amplitude, pdc_w: Amplitude, phase: f64, index: usize| {
        terms.push(TermAmplitude {
            label,
            weight: pump_w * pdc_w * Complex64::from_polar(1.0, phase),
            pump_sample_index: index,
            extra_phase: phase,
            time_slot: index as i64,
            amplitude: Complex64::new(0.0, 0.0),
        });
    };
    if app.pdc_mz.enabled {
        push(TermLabel::SpLL, w_s, w_ll, phi, 1);
    }
    if app.pump_mz.enabled {
        push(TermLabel::LpSS, w_l, w_ss, phi_p, 1);
    }
    push(TermLabel::SpSS, w_s, w_ss, 0.0, 0);
    if app.pump_mz.enabled && app.pdc_mz.enabled {
        push(TermLabel::LpLL, w_l, w_ll, phi_p + phi, 2);
    }
    Ok(terms)
}

/// Contributing amplitudes for one pump-field realization.
pub fn four_term_amplitudes(app: &Apparatus, fields: &FieldSamples) -> Result<Vec<TermAmplitude>> {
    let mut terms = static_terms(app)?;
    for t in &mut terms {
        t.amplitude = t.weight * fields.get(t.pump_sample_index);
    }
    Ok(terms)
}

/// Interference weight of the cross term between two terms: `V₀`, reduced
/// by the wavepacket overlap when a pump-short and a pump-long amplitude
/// meet with mismatched delays.
fn cross_factor(app: &Apparatus, a: &TermAmplitude, b: &TermAmplitude) -> f64 {
    let mut f = app.baseline_visibility;
    if a.label.pump_long() != b.label.pump_long() {
        f *= dip_envelope(app.tau_p() - app.tau(), &app.filter);
    }
    f
}

/// Fraction of pairs that leave the HOM beamsplitter in separate arms.
fn split_pair_fraction(app: &Apparatus) -> f64 {
    let hom = 0.5 * (1.0 - dip_envelope(app.hom_delay, &app.filter));
    app.contamination + (1.0 - app.contamination) * hom
}

/// `|Σ amplitudes|²` over the terms selected by `keep`, with each cross
/// term scaled by its [`cross_factor`].
fn interfere(amps: &[Amplitude], cross: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    let n = amps.len();
    let mut total = 0.0;
    for i in (0..n).filter(|&i| keep(i)) {
        total += amps[i].norm_sqr();
        for j in ((i + 1)..n).filter(|&j| keep(j)) {
            total += 2.0 * cross[i * n + j] * (amps[i] * amps[j].conj()).re;
        }
    }
    total
}

/// Monte Carlo coincidence rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Normalized rate: 1 for a fully incoherent sum, plus background.
    pub rate: f64,
    pub stderr: f64,
    pub trials: usize,
    /// Gated over ungated events, when a gate is active.
    pub acceptance_fraction: Option<f64>,
    /// Rate of all coincidences regardless of slot, when a gate is active.
    pub ungated_rate: Option<f64>,
}

struct Prepared {
    terms: Vec<TermAmplitude>,
    cross: Vec<f64>,
    incoherent: f64,
    floor: f64,
}

fn prepare(app: &Apparatus) -> Result<Prepared> {
    let terms = static_terms(app)?;
    let n = terms.len();
    let mut cross = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cross[i * n + j] = cross_factor(app, &terms[i], &terms[j]);
        }
    }
    let incoherent = terms.iter().map(|t| t.weight.norm_sqr()).sum();
    Ok(Prepared { terms, cross, incoherent, floor: split_pair_fraction(app) })
}

impl Prepared {
    fn finish(&self, raw: f64, app: &Apparatus) -> f64 {
        (1.0 - self.floor) * raw / self.incoherent + self.floor + app.background_rate
    }

    fn amplitudes(&self, fields: &FieldSamples) -> [Amplitude; 4] {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        for (a, t) in amps.iter_mut().zip(&self.terms) {
            *a = t.weight * fields.get(t.pump_sample_index);
        }
        amps
    }

    fn cw_sample(&self, app: &Apparatus, pump: &PumpModel, rng: &mut ChaCha8Rng) -> f64 {
        let fields = sample_field(pump, app.tau(), rng).expect("validated delay");
        let amps = self.amplitudes(&fields);
        self.finish(interfere(&amps[..self.terms.len()], &self.cross, |_| true), app)
    }

    /// Per-slot rates for a pulsed pump; slot `s` is evaluated with the
    /// detection reference at `t′ = s·τ` after the emitting pulse.
    fn slot_samples(&self, app: &Apparatus, pump: &PumpModel, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let tau = app.tau();
        let mut out = [0.0; 3];
        for (slot, value) in out.iter_mut().enumerate() {
            let fields = sample_field_at(pump, slot as f64 * tau, tau, rng).expect("validated delay");
            let amps = self.amplitudes(&fields);
            let raw = interfere(&amps[..self.terms.len()], &self.cross, |i| self.terms[i].time_slot == slot as i64);
            *value = (1.0 - self.floor) * raw / self.incoherent;
        }
        out
    }
}

/// Monte Carlo mean of the normalized coincidence rate over `trials` pump
/// realizations. Dispatches to [`gated_coincidence_rate`] when the gate is
/// enabled.
pub fn coincidence_rate(app: &Apparatus, pump: &PumpModel, trials: usize, stream: RngStream) -> Result<RateEstimate> {
    app.validate_with(pump)?;
    if trials == 0 {
        return domain("coincidence_rate needs at least one trial");
    }
    if app.gate.enabled {
        return gated_coincidence_rate(app, pump, trials, stream);
    }
    let prep = prepare(app)?;
    let m = if pump.is_pulsed() {
        parallel_moments(trials, 1, stream, |rng, out| {
            let s = prep.slot_samples(app, pump, rng);
            out[0] = s.iter().sum::<f64>() + prep.floor + app.background_rate;
        })
    } else {
        parallel_moments(trials, 1, stream, |rng, out| out[0] = prep.cw_sample(app, pump, rng))
    };
    Ok(RateEstimate { rate: m.mean(0), stderr: m.stderr(0), trials, acceptance_fraction: None, ungated_rate: None })
}

/// Rate of coincidences falling in the accepted detection slot, normalized
/// to the ungated incoherent sum, together with the accepted fraction of
/// all coincidences.
pub fn gated_coincidence_rate(app: &Apparatus, pump: &PumpModel, trials: usize, stream: RngStream) -> Result<RateEstimate> {
    app.validate_with(pump)?;
    if !app.gate.enabled {
        return domain("gated_coincidence_rate called with the gate disabled");
    }
    if trials == 0 {
        return domain("gated_coincidence_rate needs at least one trial");
    }
    let prep = prepare(app)?;
    let slot = app.gate.accepted_slot as usize;
    let m = parallel_moments(trials, 2, stream, |rng, out| {
        let s = prep.slot_samples(app, pump, rng);
        // the incoherent floor is spread over the three slots like the
        // amplitudes themselves
        out[0] = s[slot] + prep.floor * slot_share(&prep, slot) + app.background_rate;
        out[1] = s.iter().sum::<f64>() + prep.floor + app.background_rate;
    });
    let fraction = m.mean(0) / m.mean(1);
    Ok(RateEstimate { rate: m.mean(0), stderr: m.stderr(0), trials, acceptance_fraction: Some(fraction), ungated_rate: Some(m.mean(1)) })
}

fn slot_share(prep: &Prepared, slot: usize) -> f64 {
    prep.terms.iter().filter(|t| t.time_slot == slot as i64).map(|t| t.weight.norm_sqr()).sum::<f64>() / prep.incoherent
}

/// Ensemble-averaged rate in closed form, from `g¹` of the pump.
///
/// For CW models the cross term between amplitudes fed by retarded times
/// `t′−aτ` and `t′−bτ` averages to `g¹(c(b−a)τ)`. For a pulsed pump the
/// slots are taken as resolved: amplitudes interfere only within a slot,
/// where they share one pulse. With a gate, only the accepted slot counts.
pub fn expected_rate(app: &Apparatus, pump: &PumpModel) -> Result<f64> {
    app.validate_with(pump)?;
    let prep = prepare(app)?;
    let terms = &prep.terms;
    let n = terms.len();
    let delay_path = app.tau() * SPEED_OF_LIGHT;
    let pulsed = pump.is_pulsed();
    let accepted = |t: &TermAmplitude| !app.gate.enabled || t.time_slot == app.gate.accepted_slot;
    let mut raw = 0.0;
    for i in 0..n {
        for j in 0..n {
            if !(accepted(&terms[i]) && accepted(&terms[j])) {
                continue;
            }
            let (a, b) = (terms[i].pump_sample_index as f64, terms[j].pump_sample_index as f64);
            let coherence = if pulsed {
                if terms[i].time_slot == terms[j].time_slot {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            } else {
                g1_analytic(pump, (b - a) * delay_path)
            };
            let factor = if i == j { 1.0 } else { prep.cross[i * n + j] };
            raw += factor * (terms[i].weight * terms[j].weight.conj() * coherence).re;
        }
    }
    let floor = if app.gate.enabled { prep.floor * slot_share(&prep, app.gate.accepted_slot as usize) } else { prep.floor };
    Ok((1.0 - prep.floor) * raw / prep.incoherent + floor + app.background_rate)
}
