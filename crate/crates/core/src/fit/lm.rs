//! Damped Gauss-Newton (Levenberg-Marquardt) least squares.
//!
//! Minimizes `½·Σ rᵢ(p)²` for weighted residuals `rᵢ` with an analytic
//! Jacobian. Only steps that lower the objective are accepted, so the
//! recorded objective history is non-increasing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait LeastSquares {
    fn num_params(&self) -> usize;
    fn num_residuals(&self) -> usize;
    /// Weighted residuals at `p`.
    fn residuals(&self, p: &[f64], out: &mut [f64]);
    /// Jacobian of the weighted residuals, `num_residuals × num_params`.
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step changes the objective by less than this
    /// fraction.
    pub relative_tolerance: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_iterations: 200, relative_tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Final `Σ rᵢ²` (the χ² for Poisson-weighted residuals).
    pub chi2: f64,
    pub iterations: usize,
    /// `Σ rᵢ²` after every accepted step, starting with the initial guess.
    pub history: Vec<f64>,
    /// Parameter covariance `(JᵀJ)⁺ · χ²/(m − n)`.
    pub covariance: DMatrix<f64>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

pub fn minimize<P: LeastSquares>(problem: &P, initial: &[f64], config: LmConfig) -> Result<LmReport> {
    let n = problem.num_params();
    let m = problem.num_residuals();
    if m < n {
        return Err(Error::Fit { reason: format!("{m} residuals cannot determine {n} parameters"), iterations: 0 });
    }
    let mut p = initial.to_vec();
    let mut r = vec![0.0; m];
    problem.residuals(&p, &mut r);
    let mut chi2 = sum_sq(&r);
    if !chi2.is_finite() {
        return Err(Error::Fit { reason: "objective not finite at the initial guess".into(), iterations: 0 });
    }
    let mut history = vec![chi2];
    let mut jac = DMatrix::zeros(m, n);
    let mut lambda = -1.0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;
        problem.jacobian(&p, &mut jac);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        if lambda < 0.0 {
            lambda = 1e-3 * (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-12);
        }
        let mut accepted = false;
        while lambda < 1e30 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 4.0;
                continue;
            };
            for i in 0..n {
                trial[i] = p[i] + step[i];
            }
            problem.residuals(&trial, &mut r_trial);
            let chi2_trial = sum_sq(&r_trial);
            if chi2_trial.is_finite() && chi2_trial <= chi2 {
                let change = chi2 - chi2_trial;
                p.copy_from_slice(&trial);
                r.copy_from_slice(&r_trial);
                chi2 = chi2_trial;
                history.push(chi2);
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                let step_small = step.iter().zip(&p).all(|(s, x)| s.abs() <= 1e-14 * (x.abs() + 1e-300));
                if change <= config.relative_tolerance * chi2.max(f64::MIN_POSITIVE) || chi2 < 1e-28 || step_small {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // no descent direction at any damping: stationary point
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Fit {
            reason: format!("no convergence within {} iterations (chi2 = {chi2:.6e})", config.max_iterations),
            iterations,
        });
    }

    problem.jacobian(&p, &mut jac);
    let jtj = jac.transpose() * &jac;
    let dof = (m - n).max(1) as f64;
    let inv = jtj
        .clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|x| x.is_finite()))
        .unwrap_or_else(|| jtj.pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(n, n)));
    let covariance = inv * (chi2 / dof);
    Ok(LmReport { params: p, chi2, iterations, history, covariance })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = a·exp(−b·x)
    struct Decay {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for Decay {
        fn num_params(&self) -> usize {
            2
        }
        fn num_residuals(&self) -> usize {
            self.x.len()
        }
        fn residuals(&self, p: &[f64], out: &mut [f64]) {
            for i in 0..self.x.len() {
                out[i] = p[0] * (-p[1] * self.x[i]).exp() - self.y[i];
            }
        }
        fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
            for i in 0..self.x.len() {
                let e = (-p[1] * self.x[i]).exp();
                jac[(i, 0)] = e;
                jac[(i, 1)] = -p[0] * self.x[i] * e;
            }
        }
    }

    #[test]
    fn recovers_exponential() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|&x| 2.5 * (-1.3 * x).exp()).collect();
        let report = minimize(&Decay { x, y }, &[1.0, 0.2], LmConfig::default()).unwrap();
        assert!((report.params[0] - 2.5).abs() < 1e-8);
        assert!((report.params[1] - 1.3).abs() < 1e-8);
        assert!(report.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn underdetermined_is_an_error() {
        let p = Decay { x: vec![1.0], y: vec![1.0] };
        assert!(minimize(&p, &[1.0, 1.0], LmConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|&x| 2.5 * (-1.3 * x).exp()).collect();
        let err = minimize(&Decay { x, y }, &[1.0, 0.2], LmConfig { max_iterations: 1, relative_tolerance: 1e-10 });
        assert!(matches!(err, Err(Error::Fit { iterations: 1, .. })));
    }
}
