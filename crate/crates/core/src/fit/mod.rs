//! Visibility extraction from scans.

mod bootstrap;
mod dip;
mod fringe;
pub mod lm;

pub use bootstrap::{bootstrap, BootstrapResult};
pub use dip::{fit_dip, fit_dip_data, DipFit, EnvelopeShape};
pub use fringe::{fit_fringe, fit_fringe_data, fit_fringe_with, FringeFit, FringeOptions, PhaseInit, PhaseModel};

use crate::error::{domain, Result};

/// `(max − min)/(max + min)`.
pub fn visibility_of(max_rate: f64, min_rate: f64) -> Result<f64> {
    if !(min_rate >= 0.0 && max_rate >= min_rate && max_rate > 0.0) {
        return domain(format!("visibility needs max >= min >= 0 and max > 0, got ({max_rate}, {min_rate})"));
    }
    Ok((max_rate - min_rate) / (max_rate + min_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility_of(1.5, 0.5).unwrap(), 0.5);
        assert_eq!(visibility_of(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(visibility_of(2.0, 0.0).unwrap(), 1.0);
        assert!(visibility_of(0.5, 1.0).is_err());
        assert!(visibility_of(0.0, 0.0).is_err());
        assert!(visibility_of(1.0, -0.1).is_err());
    }
}
