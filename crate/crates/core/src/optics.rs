//! Elementary linear optics: complex amplitudes, the lossless beamsplitter,
//! filter spectra and their delay-domain envelopes.

use num_complex::Complex64;

use crate::error::{domain, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A complex probability amplitude.
pub type Amplitude = Complex64;

/// Lossless beamsplitter with the symmetric convention (factor `i` on
/// reflection):
///
/// ```text
/// out1 = √t·in1 + i√r·in2
/// out2 = i√r·in1 + √t·in2,   t = 1 − r
/// ```
pub fn beamsplitter(in1: Amplitude, in2: Amplitude, reflectance: f64) -> Result<(Amplitude, Amplitude)> {
    if !(0.0..=1.0).contains(&reflectance) {
        return domain(format!("beamsplitter reflectance {reflectance} outside [0, 1]"));
    }
    if !(in1.is_finite() && in2.is_finite()) {
        return domain("beamsplitter inputs must be finite");
    }
    let t = (1.0 - reflectance).sqrt();
    let ir = Complex64::new(0.0, reflectance.sqrt());
    Ok((in1 * t + in2 * ir, in1 * ir + in2 * t))
}

/// Power fraction routed through the short arm of an interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatio(f64);

impl SplitRatio {
    pub const BALANCED: SplitRatio = SplitRatio(0.5);

    pub fn new(short_power_fraction: f64) -> Result<Self> {
        if short_power_fraction > 0.0 && short_power_fraction < 1.0 {
            Ok(Self(short_power_fraction))
        } else {
            domain(format!("split fraction {short_power_fraction} outside (0, 1)"))
        }
    }

    pub fn short_power_fraction(&self) -> f64 {
        self.0
    }

    /// Amplitude weights `(a, b) = (√f, √(1−f))` of the short and long arm.
    pub fn amplitudes(&self) -> (f64, f64) {
        (self.0.sqrt(), (1.0 - self.0).sqrt())
    }
}

impl Default for SplitRatio {
    fn default() -> Self {
        Self::BALANCED
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralShape {
    Gaussian,
    Rectangular,
}

/// Intensity transmission profile of a bandpass filter.
///
/// The shape is applied in optical frequency with a FWHM of
/// `c·Δλ/λ²`; for the narrow filters of interest the wavelength and
/// frequency pictures differ by less than `(Δλ/λ)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProfile {
    shape: SpectralShape,
    center_wavelength: f64,
    fwhm_wavelength: f64,
}

impl SpectralProfile {
    pub fn new(shape: SpectralShape, center_wavelength: f64, fwhm_wavelength: f64) -> Result<Self> {
        if !(center_wavelength > 0.0 && center_wavelength.is_finite()) {
            return domain(format!("center wavelength {center_wavelength} must be positive"));
        }
        if !(fwhm_wavelength > 0.0 && fwhm_wavelength < center_wavelength) {
            return domain(format!("filter FWHM {fwhm_wavelength} must be positive and below the center wavelength"));
        }
        Ok(Self { shape, center_wavelength, fwhm_wavelength })
    }

    pub fn gaussian(center_wavelength: f64, fwhm_wavelength: f64) -> Result<Self> {
        Self::new(SpectralShape::Gaussian, center_wavelength, fwhm_wavelength)
    }

    pub fn rectangular(center_wavelength: f64, fwhm_wavelength: f64) -> Result<Self> {
        Self::new(SpectralShape::Rectangular, center_wavelength, fwhm_wavelength)
    }

    pub fn shape(&self) -> SpectralShape {
        self.shape
    }

    pub fn center_wavelength(&self) -> f64 {
        self.center_wavelength
    }

    pub fn fwhm_wavelength(&self) -> f64 {
        self.fwhm_wavelength
    }

    /// Full width at half maximum in optical frequency, Hz.
    pub fn fwhm_frequency(&self) -> f64 {
        SPEED_OF_LIGHT * self.fwhm_wavelength / (self.center_wavelength * self.center_wavelength)
    }

    /// Delay-domain width `σ` such that a Gaussian envelope reads
    /// `exp(−(δ/σ)²)`; for rectangular spectra the first zero of the sinc
    /// lies at `1/Δν` instead.
    ///
    /// `σ = 2√(ln 2) / (π·Δν)`. This is the only place the constant appears.
    pub fn envelope_width(&self) -> f64 {
        2.0 * std::f64::consts::LN_2.sqrt() / (std::f64::consts::PI * self.fwhm_frequency())
    }

    /// Relative spectral intensity at frequency offset `dnu` from the center.
    pub fn intensity(&self, dnu: f64) -> f64 {
        let w = self.fwhm_frequency();
        match self.shape {
            SpectralShape::Gaussian => (-4.0 * std::f64::consts::LN_2 * (dnu / w).powi(2)).exp(),
            SpectralShape::Rectangular => {
                if dnu.abs() <= 0.5 * w {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Normalized Fourier transform of the filter intensity spectrum at delay
/// `delta` (seconds). Equals 1 at zero delay and is even in `delta`.
pub fn dip_envelope(delta: f64, profile: &SpectralProfile) -> f64 {
    match profile.shape {
        SpectralShape::Gaussian => (-(delta / profile.envelope_width()).powi(2)).exp(),
        SpectralShape::Rectangular => {
            let x = std::f64::consts::PI * profile.fwhm_frequency() * delta;
            if x.abs() < 1e-8 {
                1.0 - x * x / 6.0
            } else {
                x.sin() / x
            }
        }
    }
}

/// Coherence length `λ²/Δλ`.
pub fn coherence_length(linewidth_wavelength: f64, center_wavelength: f64) -> Result<f64> {
    if !(linewidth_wavelength > 0.0 && center_wavelength > 0.0) {
        return domain("coherence length needs positive linewidth and wavelength");
    }
    if linewidth_wavelength >= center_wavelength {
        return domain("linewidth must be smaller than the center wavelength");
    }
    Ok(center_wavelength * center_wavelength / linewidth_wavelength)
}

/// Converts a path length to a delay.
pub fn path_to_delay(path: f64) -> f64 {
    path / SPEED_OF_LIGHT
}

/// Converts a delay to a path length.
pub fn delay_to_path(delay: f64) -> f64 {
    delay * SPEED_OF_LIGHT
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Amplitude {
        Complex64::new(re, im)
    }

    /// Trapezoidal Fourier transform of the filter intensity spectrum.
    fn numeric_envelope(delta: f64, p: &SpectralProfile) -> f64 {
        let w = p.fwhm_frequency();
        let (lo, hi, n) = match p.shape() {
            SpectralShape::Gaussian => (-4.0 * w, 4.0 * w, 40_000),
            SpectralShape::Rectangular => (-0.5 * w, 0.5 * w, 40_000),
        };
        let h = (hi - lo) / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=n {
            let nu = lo + i as f64 * h;
            let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
            let s = p.intensity(nu) * wgt;
            num += s * (2.0 * std::f64::consts::PI * nu * delta).cos();
            den += s;
        }
        num / den
    }

    #[test]
    fn beamsplitter_examples() {
        let (o1, o2) = beamsplitter(c(1.0, 0.0), c(0.0, 0.0), 0.5).unwrap();
        assert_relative_eq!(o1.re, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(o2.im, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(o1.im, 0.0);
        assert_eq!(o2.re, 0.0);

        let (o1, o2) = beamsplitter(c(1.0, 0.0), c(0.0, 0.0), 0.0).unwrap();
        assert_eq!((o1, o2), (c(1.0, 0.0), c(0.0, 0.0)));

        let (o1, o2) = beamsplitter(c(1.0, 0.0), c(0.0, 0.0), 0.4).unwrap();
        assert_relative_eq!(o1.norm_sqr(), 0.6, epsilon = 1e-15);
        assert_relative_eq!(o2.norm_sqr(), 0.4, epsilon = 1e-15);
        assert_relative_eq!(o2.im, 0.4f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn beamsplitter_rejects_bad_reflectance() {
        assert!(beamsplitter(c(1.0, 0.0), c(0.0, 0.0), 1.2).is_err());
        assert!(beamsplitter(c(1.0, 0.0), c(0.0, 0.0), -0.1).is_err());
        assert!(beamsplitter(c(f64::NAN, 0.0), c(0.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn two_beamsplitters_form_mach_zehnder() {
        let (a, b) = beamsplitter(c(1.0, 0.0), c(0.0, 0.0), 0.5).unwrap();
        let (o1, o2) = beamsplitter(a, b, 0.5).unwrap();
        assert!(o1.norm() < 1e-15);
        assert_relative_eq!(o2.im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn split_ratio_amplitudes() {
        let (a, b) = SplitRatio::new(0.6).unwrap().amplitudes();
        assert_relative_eq!(a * a + b * b, 1.0, epsilon = 1e-15);
        assert!(SplitRatio::new(0.0).is_err());
        assert!(SplitRatio::new(1.0).is_err());
    }

    #[test]
    fn coherence_length_examples() {
        let pump = coherence_length(0.1e-9, 407e-9).unwrap();
        assert_relative_eq!(pump, 1.65649e-3, max_relative = 1e-5);
        assert!(pump < 0.60);
        let pdc = coherence_length(10e-9, 814e-9).unwrap();
        assert_relative_eq!(pdc, 66.2596e-6, max_relative = 1e-5);
        assert!(coherence_length(407e-9 / 2.0, 407e-9).unwrap() > 0.0);
        assert!(coherence_length(0.0, 407e-9).is_err());
        assert!(coherence_length(1e-9, -1.0).is_err());
    }

    #[test]
    fn profile_invariants() {
        assert!(SpectralProfile::gaussian(814e-9, 0.0).is_err());
        assert!(SpectralProfile::gaussian(814e-9, 900e-9).is_err());
        assert!(SpectralProfile::gaussian(-1.0, 1e-9).is_err());
    }

    #[test]
    fn gaussian_half_point_matches_numeric_transform() {
        let p = SpectralProfile::gaussian(814e-9, 10e-9).unwrap();
        // closed-form inversion of exp(-(d/σ)²) = 1/2
        let half = p.envelope_width() * std::f64::consts::LN_2.sqrt();
        assert_relative_eq!(dip_envelope(half, &p), 0.5, epsilon = 1e-12);
        assert_relative_eq!(numeric_envelope(half, &p), 0.5, epsilon = 1e-6);
        for k in 0..20 {
            let d = k as f64 * 0.1 * p.envelope_width();
            assert!((numeric_envelope(d, &p) - dip_envelope(d, &p)).abs() < 1e-6);
        }
    }

    #[test]
    fn rectangular_has_negative_lobe() {
        let p = SpectralProfile::rectangular(814e-9, 10e-9).unwrap();
        let tc = 1.0 / p.fwhm_frequency();
        let lobe = 1.43 * tc;
        assert!(numeric_envelope(lobe, &p) < -0.2);
        assert!((numeric_envelope(lobe, &p) - dip_envelope(lobe, &p)).abs() < 1e-6);
        let grid: Vec<f64> = (-1000..=1000).map(|i| i as f64 * 0.01 * tc).collect();
        assert!(grid.iter().any(|&d| dip_envelope(d, &p) < 0.0));
    }

    #[test]
    fn envelope_zero_delay_and_parity() {
        for p in [SpectralProfile::gaussian(814e-9, 10e-9).unwrap(), SpectralProfile::rectangular(814e-9, 10e-9).unwrap()] {
            assert_eq!(dip_envelope(0.0, &p), 1.0);
            let tc = 1.0 / p.fwhm_frequency();
            for i in 1..200 {
                let d = i as f64 * 0.05 * tc;
                assert!((dip_envelope(d, &p) - dip_envelope(-d, &p)).abs() < 1e-12);
                assert!(dip_envelope(d, &p).abs() <= 1.0);
                if p.shape() == SpectralShape::Gaussian {
                    assert!((0.0..=1.0).contains(&dip_envelope(d, &p)));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn beamsplitter_is_unitary(
            a in -10.0f64..10.0, b in -10.0f64..10.0,
            c_ in -10.0f64..10.0, d in -10.0f64..10.0,
            r in 0.0f64..=1.0,
        ) {
            let (i1, i2) = (c(a, b), c(c_, d));
            let (o1, o2) = beamsplitter(i1, i2, r).unwrap();
            let pin = i1.norm_sqr() + i2.norm_sqr();
            let pout = o1.norm_sqr() + o2.norm_sqr();
            prop_assert!((pin - pout).abs() <= 1e-12 * pin.max(1e-300));
        }
    }
}
