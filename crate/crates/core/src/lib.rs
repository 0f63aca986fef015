#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
//! Simulation and analysis of two-photon interferometry with partially
//! coherent pump lasers.
//!
//! A down-converted photon pair forms a two-photon N00N state inside an
//! unbalanced Mach-Zehnder. When the pump itself passes through a matched
//! unbalanced interferometer, two of the four path combinations share the
//! same pump phase and interfere even when the pump coherence length is far
//! shorter than the imbalance; the other two form an incoherent background
//! that halves the visibility. The crate covers that intermediate regime
//! and its two limits (long-coherence Franson interferometry and gated
//! time-bin interferometry).
//!
//! * [`optics`]: beamsplitter, filter spectra, coherence length
//! * [`pump`]: pump field models and first-order coherence
//! * [`engine`]: four-term amplitudes and Monte Carlo coincidence rates
//! * [`scan`]: HOM, phase and first-order scans with count synthesis
//! * [`fit`]: fringe and dip fits, bootstrap errors

pub mod apparatus;
pub mod engine;
mod error;
pub mod fit;
pub mod optics;
pub mod pump;
pub mod rng;
pub mod scan;

pub use apparatus::{Apparatus, Gate, PdcInterferometer, PumpInterferometer};
pub use engine::{coincidence_rate, expected_rate, four_term_amplitudes, gated_coincidence_rate, RateEstimate, TermAmplitude, TermLabel};
pub use error::{Error, Result};
pub use optics::{beamsplitter, coherence_length, dip_envelope, Amplitude, SpectralProfile, SpectralShape, SplitRatio, SPEED_OF_LIGHT};
pub use pump::{first_order_mz_visibility, g1_analytic, g1_estimate, michelson_scan, sample_field, FieldSamples, MichelsonScan, PumpModel};
pub use rng::RngStream;
pub use scan::{
    first_order_scan, hom_scan, mean_rate_ratio, phase_scan, CountSynthesis, DriftModel, PhaseScanSettings, ScanMeta, ScanPoint, ScanResult,
};
