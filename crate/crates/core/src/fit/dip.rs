//! HOM dip fits: `baseline·(1 − V·g((δ − δ₀)/w))`.

use nalgebra::DMatrix;

use super::lm::{minimize, LeastSquares, LmConfig};
use crate::error::{domain, Error, Result};
use crate::scan::ScanResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeShape {
    /// `g(x) = exp(−x²)`
    Gaussian,
    /// `g(x) = sin x / x`, the transform of a rectangular spectrum
    FourierOfRectangular,
}

impl EnvelopeShape {
    fn value(self, x: f64) -> f64 {
        match self {
            EnvelopeShape::Gaussian => (-x * x).exp(),
            EnvelopeShape::FourierOfRectangular => {
                if x.abs() < 1e-6 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                }
            }
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            EnvelopeShape::Gaussian => -2.0 * x * (-x * x).exp(),
            EnvelopeShape::FourierOfRectangular => {
                if x.abs() < 1e-4 {
                    -x / 3.0
                } else {
                    (x * x.cos() - x.sin()) / (x * x)
                }
            }
        }
    }

    /// `x` at which `g(x) = ½`.
    fn half_point(self) -> f64 {
        match self {
            EnvelopeShape::Gaussian => std::f64::consts::LN_2.sqrt(),
            EnvelopeShape::FourierOfRectangular => 1.895_494_267_033_981,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipFit {
    pub visibility: f64,
    pub center_delay: f64,
    pub width: f64,
    pub baseline: f64,
    pub residual_rms: f64,
    pub visibility_stderr: f64,
    pub shape: EnvelopeShape,
}

impl DipFit {
    pub fn model_at(&self, delay: f64) -> f64 {
        self.baseline * (1.0 - self.visibility * self.shape.value((delay - self.center_delay) / self.width))
    }
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    inv_sigma: &'a [f64],
    shape: EnvelopeShape,
}

impl LeastSquares for Problem<'_> {
    fn num_params(&self) -> usize {
        4
    }

    fn num_residuals(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for i in 0..self.x.len() {
            let g = self.shape.value((self.x[i] - p[2]) / p[3]);
            out[i] = (p[0] * (1.0 - p[1] * g) - self.y[i]) * self.inv_sigma[i];
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let (b, v, c, w) = (p[0], p[1], p[2], p[3]);
        for i in 0..self.x.len() {
            let s = self.inv_sigma[i];
            let z = (self.x[i] - c) / w;
            let g = self.shape.value(z);
            let dg = self.shape.derivative(z);
            jac[(i, 0)] = (1.0 - v * g) * s;
            jac[(i, 1)] = -b * g * s;
            jac[(i, 2)] = b * v * dg / w * s;
            jac[(i, 3)] = b * v * dg * z / w * s;
        }
    }
}

/// Fits the synthesized counts of a delay scan.
pub fn fit_dip(scan: &ScanResult, shape: EnvelopeShape) -> Result<DipFit> {
    fit_dip_data(&scan.xs(), &scan.counts(), shape)
}

pub fn fit_dip_data(delays: &[f64], counts: &[f64], shape: EnvelopeShape) -> Result<DipFit> {
    if delays.len() != counts.len() {
        return domain("delay and count vectors differ in length");
    }
    if delays.len() < 8 {
        return domain(format!("dip fit needs at least 8 points, got {}", delays.len()));
    }
    let lo = delays.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);
    if !(scale > 0.0) {
        return domain("dip scan has zero extent");
    }
    // work in delays scaled to [−1, 1]
    let x: Vec<f64> = delays.iter().map(|&d| (d - mid) / scale).collect();
    let inv_sigma: Vec<f64> = counts.iter().map(|&c| 1.0 / c.max(1.0).sqrt()).collect();

    let imin = (0..x.len()).min_by(|&a, &b| counts[a].total_cmp(&counts[b])).unwrap();
    let center = x[imin];
    let mut far: Vec<f64> = x.iter().zip(counts).filter(|(xi, _)| (**xi - center).abs() > 0.5).map(|(_, &c)| c).collect();
    if far.is_empty() {
        far = counts.to_vec();
    }
    far.sort_by(f64::total_cmp);
    let baseline = far[far.len() / 2].max(1.0);
    let depth = (1.0 - counts[imin] / baseline).clamp(0.0, 1.0);
    let half_level = baseline * (1.0 - 0.5 * depth);
    let mut half_dist = f64::INFINITY;
    for i in 0..x.len() {
        if counts[i] >= half_level {
            half_dist = half_dist.min((x[i] - center).abs());
        }
    }
    if !half_dist.is_finite() || half_dist == 0.0 {
        half_dist = 0.1;
    }
    let width = half_dist / shape.half_point();

    let problem = Problem { x: &x, y: counts, inv_sigma: &inv_sigma, shape };
    let report = minimize(&problem, &[baseline, depth, center, width], LmConfig::default())?;
    let p = &report.params;
    let (baseline, visibility, center, width) = (p[0], p[1], p[2], p[3].abs());
    if !(baseline > 0.0) || !(width > 0.0) {
        return Err(Error::Fit {
            reason: format!("unphysical dip parameters: baseline {baseline}, width {width}"),
            iterations: report.iterations,
        });
    }
    let visibility_stderr = report.covariance[(1, 1)].max(0.0).sqrt();
    if visibility.abs() > 3.0 * visibility_stderr && (center - 4.0 * width < -1.0 || center + 4.0 * width > 1.0) {
        return Err(Error::Fit {
            reason: "delay grid does not extend four envelope widths on both sides of the dip".into(),
            iterations: report.iterations,
        });
    }
    Ok(DipFit {
        visibility,
        center_delay: mid + center * scale,
        width: width * scale,
        baseline,
        residual_rms: (report.chi2 / x.len() as f64).sqrt(),
        visibility_stderr,
        shape,
    })
}
