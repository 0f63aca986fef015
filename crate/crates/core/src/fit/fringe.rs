//! Sinusoidal fringe fits with linear or quadratic (stretched) phase drift.
//!
//! Counts are modeled as `B + C·cos θ(t) + S·sin θ(t)` with
//! `θ(t) = k₁u + k₂u²` and `u = (t − t₀)/span` running over `[0, 1]`.
//! This is the same curve as `B·(1 + V·cos(θ(t) + θ₀))` with
//! `V = √(C² + S²)/B` but has no sign or phase-wrap ambiguities.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::lm::{minimize, LeastSquares, LmConfig};
use crate::error::{domain, Error, Result};
use crate::scan::ScanResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseModel {
    Linear,
    Stretched,
}

/// How the phase trajectory `θ(t)` is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseInit {
    /// Coarse periodogram over the scan.
    Periodogram,
    /// Start from a known trajectory `θ(t) ≈ linear·(t−t₀) + quadratic·(t−t₀)²`.
    Seed { linear: f64, quadratic: f64 },
    /// Keep a calibrated trajectory fixed and fit only offset and amplitude.
    Fixed { linear: f64, quadratic: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeOptions {
    pub model: PhaseModel,
    pub init: PhaseInit,
    pub lm: LmConfig,
}

impl FringeOptions {
    pub fn new(model: PhaseModel) -> Self {
        Self { model, init: PhaseInit::Periodogram, lm: LmConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeFit {
    pub visibility: f64,
    /// Fitted mean counts `B`.
    pub mean_rate: f64,
    /// `θ₀` in `B·(1 + V·cos(θ(t) + θ₀))`.
    pub phase_offset: f64,
    /// `(linear, quadratic)` coefficients of `θ` in `t − t₀`, rad/s and rad/s².
    pub phase_model_coeffs: (f64, f64),
    /// Time origin `t₀` of the phase model (first scan point).
    pub time_origin: f64,
    /// `√(χ²/N)` of the Poisson-weighted residuals.
    pub residual_rms: f64,
    /// Standard error of `V` from the fit covariance.
    pub visibility_stderr: f64,
    /// Mean fringe period over the scan, in units of the scan coordinate.
    pub period: f64,
    pub iterations: usize,
    /// Objective after each accepted optimizer step.
    pub objective_history: Vec<f64>,
    /// The unconstrained optimum lay above `V = 1` within its uncertainty
    /// and the reported fit is the optimum on the `V = 1` boundary.
    pub at_bound: bool,
}

impl FringeFit {
    /// Phase `θ(t)` of the fitted model, excluding `θ₀`.
    pub fn phase_at(&self, t: f64) -> f64 {
        let dt = t - self.time_origin;
        self.phase_model_coeffs.0 * dt + self.phase_model_coeffs.1 * dt * dt
    }

    /// Options that restart a fit of the same kind of data from this
    /// fit's phase trajectory, skipping the periodogram.
    pub fn reseeded(&self, model: PhaseModel) -> FringeOptions {
        let (linear, quadratic) = self.phase_model_coeffs;
        FringeOptions { model, init: PhaseInit::Seed { linear, quadratic }, lm: LmConfig::default() }
    }

    /// Fitted counts at `t`.
    pub fn model_at(&self, t: f64) -> f64 {
        self.mean_rate * (1.0 + self.visibility * (self.phase_at(t) + self.phase_offset).cos())
    }
}

struct Problem<'a> {
    u: &'a [f64],
    y: &'a [f64],
    inv_sigma: &'a [f64],
    /// number of free phase coefficients: 0, 1 or 2
    free_phase: usize,
    fixed: (f64, f64),
}

impl Problem<'_> {
    fn theta(&self, p: &[f64], u: f64) -> f64 {
        match self.free_phase {
            0 => self.fixed.0 * u + self.fixed.1 * u * u,
            1 => p[3] * u,
            _ => p[3] * u + p[4] * u * u,
        }
    }
}

impl LeastSquares for Problem<'_> {
    fn num_params(&self) -> usize {
        3 + self.free_phase
    }

    fn num_residuals(&self) -> usize {
        self.u.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for i in 0..self.u.len() {
            let th = self.theta(p, self.u[i]);
            let model = p[0] + p[1] * th.cos() + p[2] * th.sin();
            out[i] = (model - self.y[i]) * self.inv_sigma[i];
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        for i in 0..self.u.len() {
            let u = self.u[i];
            let w = self.inv_sigma[i];
            let (s, c) = self.theta(p, u).sin_cos();
            jac[(i, 0)] = w;
            jac[(i, 1)] = c * w;
            jac[(i, 2)] = s * w;
            let dtheta = (-p[1] * s + p[2] * c) * w;
            if self.free_phase >= 1 {
                jac[(i, 3)] = dtheta * u;
            }
            if self.free_phase >= 2 {
                jac[(i, 4)] = dtheta * u * u;
            }
        }
    }
}

/// Full-visibility model `B·(1 + cos(θ(u) + θ₀))`, parameters
/// `[B, θ₀, k₁, k₂]` with the phase coefficients optional.
struct BoundProblem<'a> {
    inner: Problem<'a>,
}

impl BoundProblem<'_> {
    fn theta(&self, p: &[f64], u: f64) -> f64 {
        match self.inner.free_phase {
            0 => self.inner.fixed.0 * u + self.inner.fixed.1 * u * u,
            1 => p[2] * u,
            _ => p[2] * u + p[3] * u * u,
        }
    }
}

impl LeastSquares for BoundProblem<'_> {
    fn num_params(&self) -> usize {
        2 + self.inner.free_phase
    }

    fn num_residuals(&self) -> usize {
        self.inner.u.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for i in 0..self.inner.u.len() {
            let model = p[0] * (1.0 + (self.theta(p, self.inner.u[i]) + p[1]).cos());
            out[i] = (model - self.inner.y[i]) * self.inner.inv_sigma[i];
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        for i in 0..self.inner.u.len() {
            let u = self.inner.u[i];
            let w = self.inner.inv_sigma[i];
            let (s, c) = (self.theta(p, u) + p[1]).sin_cos();
            jac[(i, 0)] = (1.0 + c) * w;
            jac[(i, 1)] = -p[0] * s * w;
            if self.inner.free_phase >= 1 {
                jac[(i, 2)] = -p[0] * s * u * w;
            }
            if self.inner.free_phase >= 2 {
                jac[(i, 3)] = -p[0] * s * u * u * w;
            }
        }
    }
}

/// Weighted linear fit of `B + C cos θ + S sin θ` for fixed `θ`; returns the
/// coefficients and the weighted residual sum of squares.
fn linear_fit(theta: &[f64], y: &[f64], w2: &[f64]) -> Option<([f64; 3], f64)> {
    let mut a = Matrix3::<f64>::zeros();
    let mut b = Vector3::<f64>::zeros();
    let mut yy = 0.0;
    for i in 0..theta.len() {
        let (s, c) = theta[i].sin_cos();
        let w = w2[i];
        a[(0, 0)] += w;
        a[(0, 1)] += w * c;
        a[(0, 2)] += w * s;
        a[(1, 1)] += w * c * c;
        a[(1, 2)] += w * c * s;
        a[(2, 2)] += w * s * s;
        b[0] += w * y[i];
        b[1] += w * y[i] * c;
        b[2] += w * y[i] * s;
        yy += w * y[i] * y[i];
    }
    a[(1, 0)] = a[(0, 1)];
    a[(2, 0)] = a[(0, 2)];
    a[(2, 1)] = a[(1, 2)];
    let coef = a.cholesky()?.solve(&b);
    // weighted SSR = yᵀWy − coefᵀ·AᵀWy at the normal-equation solution
    let ssr = (yy - coef.dot(&b)).max(0.0_f64);
    Some(([coef[0], coef[1], coef[2]], ssr))
}

/// Coarse periodogram seed `(k₁, k₂)` in units of the normalized time `u`.
fn periodogram_seed(u: &[f64], y: &[f64], w2: &[f64], model: PhaseModel) -> (f64, f64) {
    let max_cycles = (u.len() as f64 / 2.0).max(1.0);
    let chirps: &[f64] = match model {
        PhaseModel::Linear => &[0.0],
        PhaseModel::Stretched => &[-0.6, -0.45, -0.3, -0.15, 0.0, 0.15, 0.3, 0.45, 0.6],
    };
    let mut theta = vec![0.0; u.len()];
    // chirp is the fractional change of the instantaneous frequency across
    // the scan at fixed mean frequency
    let mut score = |cycles: f64, chirp: f64| {
        let k1 = TAU * cycles;
        let k2 = -0.5 * chirp * k1;
        let k1c = k1 - k2;
        for (t, &x) in theta.iter_mut().zip(u) {
            *t = k1c * x + k2 * x * x;
        }
        let ssr = linear_fit(&theta, y, w2).map_or(f64::INFINITY, |(_, ssr)| ssr);
        (ssr, k1c, k2)
    };
    let mut best = (f64::INFINITY, TAU, 0.0, 1.0, 0.0);
    let mut cycles = 0.5;
    while cycles <= max_cycles {
        for &chirp in chirps {
            let (ssr, k1, k2) = score(cycles, chirp);
            if ssr < best.0 {
                best = (ssr, k1, k2, cycles, chirp);
            }
        }
        cycles += 0.05;
    }
    let (c0, ch0) = (best.3, best.4);
    for i in -10..=10 {
        for j in -3..=3 {
            let chirp = if model == PhaseModel::Linear { 0.0 } else { ch0 + 0.05 * j as f64 };
            let (ssr, k1, k2) = score(c0 + 0.005 * i as f64, chirp);
            if ssr < best.0 {
                best = (ssr, k1, k2, c0, ch0);
            }
        }
    }
    (best.1, best.2)
}

/// Least-squares fringe fit of the synthesized counts of `scan`.
pub fn fit_fringe(scan: &ScanResult, model: PhaseModel) -> Result<FringeFit> {
    fit_fringe_with(scan, &FringeOptions::new(model))
}

pub fn fit_fringe_with(scan: &ScanResult, options: &FringeOptions) -> Result<FringeFit> {
    let t: Vec<f64> = scan.xs();
    let y: Vec<f64> = scan.counts();
    fit_fringe_data(&t, &y, options)
}

/// Fringe fit on raw `(t, counts)` data with Poisson weights.
pub fn fit_fringe_data(t: &[f64], y: &[f64], options: &FringeOptions) -> Result<FringeFit> {
    if t.len() != y.len() {
        return domain("time and count vectors differ in length");
    }
    if t.len() < 10 {
        return domain(format!("fringe fit needs at least 10 points, got {}", t.len()));
    }
    let t0 = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - t0;
    if !(span > 0.0) {
        return domain("fringe scan has zero extent");
    }
    let u: Vec<f64> = t.iter().map(|&x| (x - t0) / span).collect();
    let w2: Vec<f64> = y.iter().map(|&c| 1.0 / c.max(1.0)).collect();
    let inv_sigma: Vec<f64> = w2.iter().map(|w| w.sqrt()).collect();

    let to_u = |linear: f64, quadratic: f64| (linear * span, quadratic * span * span);
    let (k1, k2, fixed) = match options.init {
        PhaseInit::Periodogram => {
            let (k1, k2) = periodogram_seed(&u, y, &w2, options.model);
            (k1, k2, false)
        }
        PhaseInit::Seed { linear, quadratic } => {
            let (k1, k2) = to_u(linear, quadratic);
            (k1, if options.model == PhaseModel::Stretched { k2 } else { 0.0 }, false)
        }
        PhaseInit::Fixed { linear, quadratic } => {
            let (k1, k2) = to_u(linear, quadratic);
            (k1, k2, true)
        }
    };
    let free_phase = match (fixed, options.model) {
        (true, _) => 0,
        (false, PhaseModel::Linear) => 1,
        (false, PhaseModel::Stretched) => 2,
    };
    let theta0: Vec<f64> = u.iter().map(|&x| k1 * x + k2 * x * x).collect();
    let ([b0, c0, s0], _) =
        linear_fit(&theta0, y, &w2).ok_or_else(|| Error::Fit { reason: "degenerate design at the initial phase".into(), iterations: 0 })?;
    let mut p0 = vec![b0, c0, s0];
    if free_phase >= 1 {
        p0.push(k1);
    }
    if free_phase >= 2 {
        p0.push(k2);
    }
    let problem = Problem { u: &u, y, inv_sigma: &inv_sigma, free_phase, fixed: (k1, k2) };
    let report = minimize(&problem, &p0, options.lm)?;
    let p = &report.params;
    let (k1, k2) = match free_phase {
        0 => (k1, k2),
        1 => (p[3], 0.0),
        _ => (p[3], p[4]),
    };
    let (b, c, s) = (p[0], p[1], p[2]);
    if !(b > 0.0) {
        return Err(Error::Fit { reason: format!("non-positive mean level {b}"), iterations: report.iterations });
    }
    let amp = c.hypot(s);
    let visibility = amp / b;
    let advance = (k1 + k2).abs();
    if advance < 1.5 * TAU {
        return Err(Error::Fit {
            reason: format!("scan spans only {:.2} fringe periods (need 1.5)", advance / TAU),
            iterations: report.iterations,
        });
    }
    // dV = (−V/B) dB + (C/(B·A)) dC + (S/(B·A)) dS
    let grad = [-visibility / b, if amp > 0.0 { c / (b * amp) } else { 0.0 }, if amp > 0.0 { s / (b * amp) } else { 0.0 }];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * grad[j] * report.covariance[(i, j)];
        }
    }
    let visibility_stderr = var.max(0.0).sqrt();
    if visibility > 1.0 {
        if visibility - 1.0 > 3.0 * visibility_stderr {
            return Err(Error::Fit {
                reason: format!("fitted visibility {visibility:.4} exceeds 1 by more than 3 standard errors ({visibility_stderr:.2e})"),
                iterations: report.iterations,
            });
        }
        let bound = BoundProblem { inner: problem };
        let mut p0 = vec![b, (-s).atan2(c)];
        if free_phase >= 1 {
            p0.push(k1);
        }
        if free_phase >= 2 {
            p0.push(k2);
        }
        let r = minimize(&bound, &p0, options.lm)?;
        let (k1, k2) = match free_phase {
            0 => (k1, k2),
            1 => (r.params[2], 0.0),
            _ => (r.params[2], r.params[3]),
        };
        return Ok(FringeFit {
            visibility: 1.0,
            mean_rate: r.params[0],
            phase_offset: r.params[1],
            phase_model_coeffs: (k1 / span, k2 / (span * span)),
            time_origin: t0,
            residual_rms: (r.chi2 / t.len() as f64).sqrt(),
            visibility_stderr,
            period: TAU * span / (k1 + k2).abs(),
            iterations: report.iterations + r.iterations,
            objective_history: report.history,
            at_bound: true,
        });
    }
    Ok(FringeFit {
        visibility,
        mean_rate: b,
        phase_offset: (-s).atan2(c),
        phase_model_coeffs: (k1 / span, k2 / (span * span)),
        time_origin: t0,
        residual_rms: (report.chi2 / t.len() as f64).sqrt(),
        visibility_stderr,
        period: TAU * span / advance,
        iterations: report.iterations,
        objective_history: report.history,
        at_bound: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(v: f64, n: usize, k1: f64, k2: f64, level: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 5.0).collect();
        let span = t[n - 1];
        let y = t
            .iter()
            .map(|&x| {
                let u = x / span;
                level * (1.0 + v * (k1 * u + k2 * u * u + 0.7).cos())
            })
            .collect();
        (t, y)
    }

    #[test]
    fn noiseless_identity() {
        let (t, y) = synth(0.5, 60, TAU * 3.0, 0.0, 1000.0);
        let fit = fit_fringe_data(&t, &y, &FringeOptions::new(PhaseModel::Linear)).unwrap();
        assert!((fit.visibility - 0.5).abs() < 1e-6, "{}", fit.visibility);
        assert!((fit.mean_rate - 1000.0).abs() < 1e-6);
        assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stretched_model_recovers_chirp() {
        let (t, y) = synth(0.8, 120, TAU * 4.0, -TAU * 1.0, 500.0);
        let fit = fit_fringe_data(&t, &y, &FringeOptions::new(PhaseModel::Stretched)).unwrap();
        assert!((fit.visibility - 0.8).abs() < 1e-6);
        let span = t[119];
        assert!((fit.phase_model_coeffs.1 * span * span + TAU).abs() < 1e-5);
    }

    #[test]
    fn rescaling_counts_leaves_visibility() {
        let (t, y) = synth(0.37, 80, TAU * 2.5, 0.0, 300.0);
        let y2: Vec<f64> = y.iter().map(|v| v * 7.0).collect();
        let o = FringeOptions::new(PhaseModel::Linear);
        let a = fit_fringe_data(&t, &y, &o).unwrap();
        let b = fit_fringe_data(&t, &y2, &o).unwrap();
        assert!((a.visibility - b.visibility).abs() < 1e-9);
    }

    #[test]
    fn short_span_rejected() {
        let (t, y) = synth(0.5, 40, TAU * 0.8, 0.0, 1000.0);
        let o = FringeOptions {
            model: PhaseModel::Linear,
            init: PhaseInit::Seed { linear: TAU * 0.8 / t[39], quadratic: 0.0 },
            lm: LmConfig::default(),
        };
        assert!(matches!(fit_fringe_data(&t, &y, &o), Err(Error::Fit { .. })));
    }

    #[test]
    fn visibility_above_one_rejected() {
        // clipped "V = 1.4" data cannot come from a physical fringe
        let (t, y) = synth(1.4, 60, TAU * 3.0, 0.0, 1000.0);
        let y: Vec<f64> = y.into_iter().map(|v| v.max(0.0)).collect();
        let err = fit_fringe_data(&t, &y, &FringeOptions::new(PhaseModel::Linear));
        assert!(matches!(err, Err(Error::Fit { .. })), "{err:?}");
    }

    #[test]
    fn full_visibility_poisson_never_rejected() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Poisson};
        let (t, y) = synth(1.0, 60, TAU * 3.0, 0.0, 5000.0);
        let mut bounded = 0;
        for seed in 0..40 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let noisy: Vec<f64> = y.iter().map(|&m| if m > 0.0 { Poisson::new(m).unwrap().sample(&mut rng) } else { 0.0 }).collect();
            let fit = fit_fringe_data(&t, &noisy, &FringeOptions::new(PhaseModel::Linear)).unwrap();
            assert!(fit.visibility <= 1.0 && fit.visibility > 0.99, "{}", fit.visibility);
            bounded += fit.at_bound as usize;
        }
        assert!(bounded > 0);
    }

    #[test]
    fn too_few_points_rejected() {
        let (t, y) = synth(0.5, 8, TAU * 3.0, 0.0, 1000.0);
        assert!(fit_fringe_data(&t, &y, &FringeOptions::new(PhaseModel::Linear)).is_err());
    }

    #[test]
    fn fixed_phase_fits_amplitude_only() {
        let (t, y) = synth(0.25, 60, TAU * 3.0, 0.0, 1000.0);
        let o = FringeOptions {
            model: PhaseModel::Linear,
            init: PhaseInit::Fixed { linear: TAU * 3.0 / t[59], quadratic: 0.0 },
            lm: LmConfig::default(),
        };
        let fit = fit_fringe_data(&t, &y, &o).unwrap();
        assert!((fit.visibility - 0.25).abs() < 1e-9);
    }
}
