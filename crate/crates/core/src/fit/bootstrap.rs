//! Parametric (per-point Poisson) bootstrap of fitted parameters.

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::rng::RngStream;
use crate::scan::ScanResult;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// Standard deviation of each refitted parameter.
    pub stderr: Vec<f64>,
    pub mean: Vec<f64>,
    pub resamples: usize,
    /// Resamples whose refit failed; excluded from the statistics.
    pub failures: usize,
}

/// Resamples every point's counts as `Poisson(observed)`, refits with `fit`
/// and reports the spread of the returned parameter vectors. Resample `r`
/// draws from `stream.substream(r)`.
pub fn bootstrap<F>(scan: &ScanResult, resamples: usize, stream: RngStream, fit: F) -> Result<BootstrapResult>
where
    F: Fn(&ScanResult) -> Result<Vec<f64>> + Sync,
{
    if resamples < 200 {
        return domain(format!("bootstrap needs at least 200 resamples, got {resamples}"));
    }
    let outcomes: Vec<Option<Vec<f64>>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.substream(r as u64).rng();
            let mut copy = scan.clone();
            for p in &mut copy.points {
                p.counts = if p.counts == 0 { 0 } else { Poisson::new(p.counts as f64).expect("positive mean").sample(&mut rng) as u64 };
            }
            fit(&copy).ok()
        })
        .collect();
    let ok: Vec<&Vec<f64>> = outcomes.iter().flatten().collect();
    let failures = resamples - ok.len();
    if failures * 10 > resamples {
        return domain(format!("{failures} of {resamples} bootstrap refits failed"));
    }
    let width = ok.first().map_or(0, |v| v.len());
    let n = ok.len() as f64;
    let mut mean = vec![0.0; width];
    for v in &ok {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x / n;
        }
    }
    let mut stderr = vec![0.0; width];
    for v in &ok {
        for (i, x) in v.iter().enumerate() {
            stderr[i] += (x - mean[i]).powi(2) / (n - 1.0);
        }
    }
    stderr.iter_mut().for_each(|s| *s = s.sqrt());
    Ok(BootstrapResult { stderr, mean, resamples, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{fit_fringe, fit_fringe_with, PhaseModel};
    use std::f64::consts::TAU;

    fn fringe_scan(level: f64, v: f64, seed: u64) -> ScanResult {
        let n = 60;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 5.0).collect();
        let mut rng = RngStream::new(seed, 7).rng();
        let counts: Vec<u64> = xs
            .iter()
            .map(|&t| {
                let m = level * (1.0 + v * (TAU * 3.0 * t / 300.0 + 0.4).cos());
                Poisson::new(m).unwrap().sample(&mut rng) as u64
            })
            .collect();
        ScanResult::from_counts("synthetic", "time_s", &xs, &counts).unwrap()
    }

    fn visibility_spread(scan: &ScanResult, resamples: usize, seed: u64) -> BootstrapResult {
        let first = fit_fringe(scan, PhaseModel::Linear).unwrap();
        let opts = first.reseeded(PhaseModel::Linear);
        bootstrap(scan, resamples, RngStream::new(seed, 0), |s| Ok(vec![fit_fringe_with(s, &opts)?.visibility])).unwrap()
    }

    #[test]
    fn rejects_few_resamples() {
        let scan = fringe_scan(1000.0, 0.5, 1);
        assert!(bootstrap(&scan, 199, RngStream::new(1, 0), |_| Ok(vec![0.0])).is_err());
    }

    #[test]
    fn high_counts_give_small_errors() {
        let scan = fringe_scan(1e6, 0.5, 2);
        let b = visibility_spread(&scan, 200, 3);
        assert!(b.stderr[0] < 0.002, "{:?}", b);
        assert_eq!(b.failures, 0);
    }

    #[test]
    fn error_scales_as_inverse_root_counts() {
        let hi = visibility_spread(&fringe_scan(1e5, 0.5, 4), 400, 5).stderr[0];
        let lo = visibility_spread(&fringe_scan(1e3, 0.5, 4), 400, 5).stderr[0];
        let ratio = lo / hi;
        assert!((8.0..12.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn resample_count_is_stable() {
        let scan = fringe_scan(2000.0, 0.5, 6);
        let a = visibility_spread(&scan, 200, 7).stderr[0];
        let b = visibility_spread(&scan, 2000, 8).stderr[0];
        assert!((a / b - 1.0).abs() < 0.2, "{a} {b}");
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let scan = fringe_scan(2000.0, 0.5, 9);
        assert_eq!(visibility_spread(&scan, 200, 1), visibility_spread(&scan, 200, 1));
    }

    #[test]
    fn too_many_failures_is_an_error() {
        let scan = fringe_scan(2000.0, 0.5, 9);
        let err = bootstrap(&scan, 200, RngStream::new(1, 0), |s| {
            if s.points[0].counts % 4 == 0 {
                Err(crate::Error::Fit { reason: "synthetic".into(), iterations: 0 })
            } else {
                Ok(vec![1.0])
            }
        });
        assert!(err.is_err());
    }
}
