//! Interferometer geometry.

use crate::error::{config, Result};
use crate::optics::{SpectralProfile, SplitRatio, SPEED_OF_LIGHT};
use crate::pump::PumpModel;

pub const PUMP_WAVELENGTH: f64 = 407e-9;
pub const PDC_WAVELENGTH: f64 = 814e-9;
pub const FILTER_FWHM: f64 = 10e-9;
/// Nominal path imbalance of both interferometers.
pub const IMBALANCE_PATH: f64 = 0.60;

/// Unbalanced Mach-Zehnder acting on the pump beam.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpInterferometer {
    /// `cτ_p`, meters.
    pub imbalance_path: f64,
    pub split: SplitRatio,
    /// `φ_p`, radians.
    pub phase: f64,
    pub enabled: bool,
}

/// Mach-Zehnder traversed by the two-photon N00N state.
#[derive(Debug, Clone, PartialEq)]
pub struct PdcInterferometer {
    /// `cτ`, meters.
    pub imbalance_path: f64,
    /// Two-photon phase `φ`, radians.
    pub phase: f64,
    pub enabled: bool,
}

/// Detection-time post-selection, available with a pulsed pump.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub enabled: bool,
    /// Slot index relative to the earliest amplitude: 0, 1 or 2.
    pub accepted_slot: i64,
    /// Width of the acceptance window, seconds.
    pub slot_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus {
    pub pump_wavelength: f64,
    pub pdc_wavelength: f64,
    pub pump_mz: PumpInterferometer,
    pub pdc_mz: PdcInterferometer,
    /// Signal–idler delay `δ` at the HOM beamsplitter, seconds.
    pub hom_delay: f64,
    pub filter: SpectralProfile,
    /// Lumped mode-matching factor `V₀` applied to every interference term.
    pub baseline_visibility: f64,
    /// Accidental coincidence floor, in units of the normalized rate.
    pub background_rate: f64,
    /// Fraction of pairs leaving the HOM beamsplitter in separate arms
    /// (non-N00N), which only adds an incoherent floor.
    pub contamination: f64,
    pub gate: Gate,
}

impl Default for Apparatus {
    fn default() -> Self {
        Self::intermediate()
    }
}

impl Apparatus {
    /// Both interferometers enabled and matched at 60 cm, balanced splits.
    pub fn intermediate() -> Self {
        Apparatus {
            pump_wavelength: PUMP_WAVELENGTH,
            pdc_wavelength: PDC_WAVELENGTH,
            pump_mz: PumpInterferometer { imbalance_path: IMBALANCE_PATH, split: SplitRatio::BALANCED, phase: 0.0, enabled: true },
            pdc_mz: PdcInterferometer { imbalance_path: IMBALANCE_PATH, phase: 0.0, enabled: true },
            hom_delay: 0.0,
            filter: SpectralProfile::gaussian(PDC_WAVELENGTH, FILTER_FWHM).expect("valid constants"),
            baseline_visibility: 1.0,
            background_rate: 0.0,
            contamination: 0.0,
            gate: Gate { enabled: false, accepted_slot: 1, slot_width: IMBALANCE_PATH / SPEED_OF_LIGHT / 4.0 },
        }
    }

    /// Balanced PDC interferometer, no pump interferometer.
    pub fn balanced_pdc() -> Self {
        let mut app = Self::intermediate();
        app.pump_mz.enabled = false;
        app.pdc_mz.imbalance_path = 0.0;
        app
    }

    /// 60 cm PDC imbalance without the pump interferometer.
    pub fn unbalanced_pdc() -> Self {
        let mut app = Self::intermediate();
        app.pump_mz.enabled = false;
        app
    }

    /// Intermediate geometry with detection gated on the central slot.
    pub fn time_bin() -> Self {
        let mut app = Self::intermediate();
        app.gate.enabled = true;
        app.gate.accepted_slot = 1;
        app
    }

    /// PDC interferometer delay `τ`, seconds.
    pub fn tau(&self) -> f64 {
        self.pdc_mz.imbalance_path / SPEED_OF_LIGHT
    }

    /// Pump interferometer delay `τ_p`, seconds.
    pub fn tau_p(&self) -> f64 {
        self.pump_mz.imbalance_path / SPEED_OF_LIGHT
    }

    /// Two-photon phase produced by a path change `path` in one PDC arm:
    /// one pump wavelength of path is one full fringe.
    pub fn noon_phase(&self, path: f64) -> f64 {
        2.0 * std::f64::consts::TAU * path / self.pdc_wavelength
    }

    /// Fraction of the pump power delivered to the crystal relative to the
    /// bare laser: one half with the pump interferometer, whose arms add
    /// incoherently and whose second port is discarded.
    pub fn delivered_power(&self) -> f64 {
        if self.pump_mz.enabled {
            0.5
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("pump_wavelength", self.pump_wavelength), ("pdc_wavelength", self.pdc_wavelength)] {
            if !(v > 0.0 && v.is_finite()) {
                return config(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("pump_mz.imbalance_path", self.pump_mz.imbalance_path), ("pdc_mz.imbalance_path", self.pdc_mz.imbalance_path)] {
            if !(v >= 0.0 && v.is_finite()) {
                return config(format!("{name} must be non-negative, got {v}"));
            }
        }
        for (name, v) in [("pump_mz.phase", self.pump_mz.phase), ("pdc_mz.phase", self.pdc_mz.phase), ("hom_delay", self.hom_delay)] {
            if !v.is_finite() {
                return config(format!("{name} must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.baseline_visibility) {
            return config(format!("baseline_visibility {} outside [0, 1]", self.baseline_visibility));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return config("background_rate must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.contamination) {
            return config("contamination must lie in [0, 1]");
        }
        if self.gate.enabled {
            if !(0..=2).contains(&self.gate.accepted_slot) {
                return config(format!("gate.accepted_slot {} outside 0..=2", self.gate.accepted_slot));
            }
            if !(self.gate.slot_width > 0.0 && self.gate.slot_width.is_finite()) {
                return config("gate.slot_width must be positive");
            }
        }
        Ok(())
    }

    /// Validates the apparatus together with the pump driving it.
    pub fn validate_with(&self, pump: &PumpModel) -> Result<()> {
        self.validate()?;
        pump.validate()?;
        if self.gate.enabled {
            let PumpModel::Pulsed { pulse_fwhm, .. } = *pump else {
                return config(format!("detection gating needs a pulsed pump as timing reference, got {}", pump.name()));
            };
            if self.tau() <= pulse_fwhm || self.gate.slot_width <= pulse_fwhm {
                return config(format!(
                    "time slots unresolvable: tau = {:.3e} s, slot width = {:.3e} s, pulse FWHM = {pulse_fwhm:.3e} s",
                    self.tau(),
                    self.gate.slot_width
                ));
            }
        }
        Ok(())
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        format!(
            "pump_mz={}(cτp={} m, f={}, φp={}) pdc_mz={}(cτ={} m, φ={}) V0={} bg={} gate={}",
            self.pump_mz.enabled,
            self.pump_mz.imbalance_path,
            self.pump_mz.split.short_power_fraction(),
            self.pump_mz.phase,
            self.pdc_mz.enabled,
            self.pdc_mz.imbalance_path,
            self.pdc_mz.phase,
            self.baseline_visibility,
            self.background_rate,
            if self.gate.enabled { format!("slot{}", self.gate.accepted_slot) } else { "off".into() },
        )
    }
}
