//! Scenario presets and the resolved key/value configuration.

use std::collections::BTreeMap;

use clap::ValueEnum;
use sha2::{Digest, Sha256};
use twophoton::apparatus::{PDC_WAVELENGTH, PUMP_WAVELENGTH};
use twophoton::pump::{DIODE_LINEWIDTH, DIODE_MODE_COUNT, DIODE_MODE_LINEWIDTH_PATH, DIODE_PEAK_SPACING};
use twophoton::{coherence_length, Apparatus, DriftModel, PhaseScanSettings, PumpModel, SpectralProfile, SplitRatio, SPEED_OF_LIGHT};

use crate::config::{parse_value, Entry, Unit, Value, KEYS};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Scenario {
    /// HOM dip of the down-converted pair
    Hom,
    /// Balanced PDC interferometer, no pump interferometer
    Balanced,
    /// 60 cm PDC interferometer alone: fringes wash out
    Unbalanced,
    /// Matched pump and PDC interferometers
    PumpMz,
    /// Long-coherence pump, unbalanced PDC interferometer
    Franson,
    /// Pulsed pump with central-slot gating
    Timebin,
    /// First-order fringes of the pump interferometer
    PumpStability,
    /// Michelson delay scan of the multimode pump
    Michelson,
    /// Visibility against pump/PDC path mismatch
    MismatchSweep,
    /// Visibility against pump split ratio
    SplitSweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Hom => "hom",
            Scenario::Balanced => "balanced",
            Scenario::Unbalanced => "unbalanced",
            Scenario::PumpMz => "pump-mz",
            Scenario::Franson => "franson",
            Scenario::Timebin => "timebin",
            Scenario::PumpStability => "pump-stability",
            Scenario::Michelson => "michelson",
            Scenario::MismatchSweep => "mismatch-sweep",
            Scenario::SplitSweep => "split-sweep",
        }
    }

    pub fn is_sweep(self) -> bool {
        matches!(self, Scenario::MismatchSweep | Scenario::SplitSweep)
    }

    /// Whether the fit uses a phase-scan of two-photon fringes.
    pub fn is_fringe(self) -> bool {
        matches!(self, Scenario::Balanced | Scenario::Unbalanced | Scenario::PumpMz | Scenario::Franson | Scenario::Timebin)
    }

    fn overrides(self) -> Vec<(&'static str, Value)> {
        use Value::*;
        match self {
            Scenario::Hom => {
                vec![("pump_mz.enabled", Flag(false)), ("pdc_mz.imbalance_path", Number(0.0)), ("scan.rate_scale", Number(4000.0))]
            }
            Scenario::Balanced => vec![("pump_mz.enabled", Flag(false)), ("pdc_mz.imbalance_path", Number(0.0))],
            Scenario::Unbalanced => vec![("pump_mz.enabled", Flag(false))],
            Scenario::Franson => vec![("pump.model", Word("coherent")), ("pump_mz.enabled", Flag(false))],
            Scenario::Timebin => vec![("pump.model", Word("pulsed")), ("gate.enabled", Flag(true))],
            Scenario::PumpStability => vec![("pump.model", Word("comb")), ("scan.rate_scale", Number(1e4))],
            Scenario::Michelson => vec![("pump.model", Word("comb"))],
            Scenario::MismatchSweep | Scenario::SplitSweep => vec![("scan.trials", Count(20_000)), ("scan.rate_scale", Number(1e4))],
            Scenario::PumpMz => vec![],
        }
    }

    /// The swept parameter: its name and unit.
    pub fn sweep_parameter(self) -> Option<(&'static str, Unit)> {
        match self {
            Scenario::MismatchSweep => Some(("pump_mz.path_mismatch", Unit::Length)),
            Scenario::SplitSweep => Some(("pump_mz.split.short_power_fraction", Unit::Ratio)),
            _ => None,
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Scenario::MismatchSweep => vec![0.0, 66e-6, 1e-3],
            Scenario::SplitSweep => vec![0.5, 0.6, 0.7],
            _ => Vec::new(),
        }
    }
}

fn base_defaults() -> Vec<(&'static str, Value)> {
    use Value::*;
    vec![
        ("pump.model", Word("phase-diffusion")),
        ("pump.wavelength", Number(PUMP_WAVELENGTH)),
        ("pump.linewidth", Number(DIODE_LINEWIDTH)),
        ("pump.peak_spacing", Number(DIODE_PEAK_SPACING)),
        ("pump.mode_count", Count(DIODE_MODE_COUNT as u64)),
        ("pump.mode_linewidth", Number(DIODE_MODE_LINEWIDTH_PATH)),
        ("pump.pulse_fwhm", Number(1e-12)),
        ("pump.period", Number(1e-8)),
        ("pump_mz.enabled", Flag(true)),
        ("pump_mz.imbalance_path", Number(0.6)),
        ("pump_mz.split.short_power_fraction", Number(0.5)),
        ("pump_mz.phase", Number(0.0)),
        ("pdc_mz.enabled", Flag(true)),
        ("pdc_mz.imbalance_path", Number(0.6)),
        ("pdc_mz.phase", Number(0.0)),
        ("pdc.wavelength", Number(PDC_WAVELENGTH)),
        ("filter.shape", Word("gaussian")),
        ("filter.fwhm", Number(10e-9)),
        ("apparatus.baseline_visibility", Number(1.0)),
        ("apparatus.background_rate", Number(0.0)),
        ("apparatus.contamination", Number(0.0)),
        ("apparatus.hom_delay", Number(0.0)),
        ("gate.enabled", Flag(false)),
        ("gate.accepted_slot", Count(1)),
        ("gate.slot_width", Number(0.6 / SPEED_OF_LIGHT / 4.0)),
        ("scan.points", Count(60)),
        ("scan.trials", Count(100_000)),
        ("scan.seed", Count(1)),
        ("scan.duration", Number(300.0)),
        ("scan.periods", Number(3.0)),
        ("scan.drift", Word("linear")),
        ("scan.dwell", Number(5.0)),
        ("scan.rate_scale", Number(300.0)),
        ("fit.phase_model", Word("linear")),
        ("fit.bootstrap_resamples", Count(200)),
        ("hom.injected_visibility", Number(0.978)),
        ("hom.half_range", Number(600e-15)),
        ("hom.points", Count(61)),
        ("michelson.max_delay", Number(25e-3)),
        ("michelson.step", Number(5e-6)),
    ]
}

/// Checks a single value against the invariants of its own key.
fn check(key: &str, value: &Value) -> Result<(), String> {
    let x = value.number();
    let in_unit = |lo: f64, hi: f64| {
        if (lo..=hi).contains(&x) {
            Ok(())
        } else {
            Err(format!("{key} = {x} outside [{lo}, {hi}]"))
        }
    };
    let positive = || if x > 0.0 { Ok(()) } else { Err(format!("{key} must be positive, got {x}")) };
    let at_least = |n: f64| if x >= n { Ok(()) } else { Err(format!("{key} must be at least {n}, got {x}")) };
    match key {
        "pump_mz.split.short_power_fraction" => SplitRatio::new(x).map(|_| ()).map_err(|e| format!("{key}: {e}")),
        "apparatus.baseline_visibility" | "apparatus.contamination" | "hom.injected_visibility" => in_unit(0.0, 1.0),
        "pump.wavelength"
        | "pump.linewidth"
        | "pump.peak_spacing"
        | "pump.mode_linewidth"
        | "pump.pulse_fwhm"
        | "pump.period"
        | "pdc.wavelength"
        | "filter.fwhm"
        | "gate.slot_width"
        | "scan.duration"
        | "scan.periods"
        | "scan.dwell"
        | "hom.half_range"
        | "michelson.max_delay"
        | "michelson.step" => positive(),
        "pump_mz.imbalance_path" | "pdc_mz.imbalance_path" | "apparatus.background_rate" | "scan.rate_scale" => at_least(0.0),
        "pump.mode_count" | "scan.trials" => at_least(1.0),
        "scan.points" => at_least(10.0),
        "hom.points" => at_least(8.0),
        "gate.accepted_slot" => in_unit(0.0, 2.0),
        _ => Ok(()),
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scenario: Scenario,
    values: BTreeMap<&'static str, Value>,
}

/// Command-line overrides, applied after the configuration file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Flags {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub points: Option<u64>,
    pub v0: Option<f64>,
}

impl Resolved {
    pub fn defaults(scenario: Scenario) -> Self {
        let mut values: BTreeMap<&'static str, Value> = base_defaults().into_iter().collect();
        values.extend(scenario.overrides());
        Resolved { scenario, values }
    }

    /// Defaults, then file entries, then flags.
    pub fn build(scenario: Scenario, entries: &[Entry], flags: &Flags) -> Result<Self, CliError> {
        let mut r = Self::defaults(scenario);
        for e in entries {
            let key = KEYS
                .iter()
                .find(|(k, _)| *k == e.key)
                .map(|(k, _)| *k)
                .ok_or_else(|| CliError::Validation(format!("config line {}: unknown key `{}`", e.line, e.key)))?;
            check(key, &e.value).map_err(|m| CliError::Validation(format!("config line {}: {m}", e.line)))?;
            r.values.insert(key, e.value.clone());
        }
        let points_key = if scenario == Scenario::Hom { "hom.points" } else { "scan.points" };
        let flag_values = [
            ("scan.seed", flags.seed.map(Value::Count)),
            ("scan.trials", flags.trials.map(Value::Count)),
            (points_key, flags.points.map(Value::Count)),
            ("apparatus.baseline_visibility", flags.v0.map(Value::Number)),
        ];
        for (key, value) in flag_values {
            if let Some(v) = value {
                check(key, &v).map_err(|m| CliError::Validation(format!("command line: {m}")))?;
                r.values.insert(key, v);
            }
        }
        r.apparatus()?.validate_with(&r.pump()?)?;
        Ok(r)
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<(), CliError> {
        let key =
            KEYS.iter().find(|(k, _)| *k == key).map(|(k, _)| *k).ok_or_else(|| CliError::Validation(format!("unknown key `{key}`")))?;
        check(key, &value).map_err(CliError::Validation)?;
        self.values.insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("no default for {key}"))
    }

    pub fn num(&self, key: &str) -> f64 {
        self.get(key).number()
    }

    pub fn count(&self, key: &str) -> u64 {
        match *self.get(key) {
            Value::Count(n) => n,
            ref v => panic!("{key} holds {v}, not a count"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.get(key), Value::Flag(true))
    }

    pub fn word(&self, key: &str) -> &'static str {
        match *self.get(key) {
            Value::Word(w) => w,
            ref v => panic!("{key} holds {v}, not a word"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.count("scan.seed")
    }

    pub fn trials(&self) -> usize {
        self.count("scan.trials") as usize
    }

    pub fn pump(&self) -> Result<PumpModel, CliError> {
        let pump = match self.word("pump.model") {
            "coherent" => PumpModel::Coherent,
            "phase-diffusion" => {
                PumpModel::PhaseDiffusion { coherence_length: coherence_length(self.num("pump.linewidth"), self.num("pump.wavelength"))? }
            }
            "comb" => PumpModel::MultimodeComb {
                peak_spacing_path: self.num("pump.peak_spacing"),
                mode_count: self.count("pump.mode_count") as usize,
                envelope_fwhm_wavelength: self.num("pump.linewidth"),
                mode_linewidth_path: self.num("pump.mode_linewidth"),
                center_wavelength: self.num("pump.wavelength"),
            },
            _ => PumpModel::Pulsed { pulse_fwhm: self.num("pump.pulse_fwhm"), period: self.num("pump.period") },
        };
        pump.validate()?;
        Ok(pump)
    }

    pub fn apparatus(&self) -> Result<Apparatus, CliError> {
        let mut app = Apparatus::intermediate();
        app.pump_wavelength = self.num("pump.wavelength");
        app.pdc_wavelength = self.num("pdc.wavelength");
        app.pump_mz.enabled = self.flag("pump_mz.enabled");
        app.pump_mz.imbalance_path = self.num("pump_mz.imbalance_path");
        app.pump_mz.split = SplitRatio::new(self.num("pump_mz.split.short_power_fraction"))?;
        app.pump_mz.phase = self.num("pump_mz.phase");
        app.pdc_mz.enabled = self.flag("pdc_mz.enabled");
        app.pdc_mz.imbalance_path = self.num("pdc_mz.imbalance_path");
        app.pdc_mz.phase = self.num("pdc_mz.phase");
        app.filter = match self.word("filter.shape") {
            "rectangular" => SpectralProfile::rectangular(app.pdc_wavelength, self.num("filter.fwhm"))?,
            _ => SpectralProfile::gaussian(app.pdc_wavelength, self.num("filter.fwhm"))?,
        };
        app.baseline_visibility = self.num("apparatus.baseline_visibility");
        app.background_rate = self.num("apparatus.background_rate");
        app.contamination = self.num("apparatus.contamination");
        app.hom_delay = self.num("apparatus.hom_delay");
        app.gate.enabled = self.flag("gate.enabled");
        app.gate.accepted_slot = self.count("gate.accepted_slot") as i64;
        app.gate.slot_width = self.num("gate.slot_width");
        app.validate()?;
        Ok(app)
    }

    pub fn drift(&self) -> DriftModel {
        let duration = self.num("scan.duration");
        match self.word("scan.drift") {
            "cooling" => DriftModel::relaxing(self.num("scan.periods"), duration, 2.0 * duration),
            _ => DriftModel::linear(self.num("scan.periods"), duration),
        }
    }

    pub fn phase_scan_settings(&self) -> PhaseScanSettings {
        PhaseScanSettings {
            drift: self.drift(),
            duration: self.num("scan.duration"),
            points: self.count("scan.points") as usize,
            trials: self.trials(),
        }
    }

    /// Canonical `key = value` listing in key order.
    pub fn listing(&self) -> String {
        KEYS.iter().map(|(k, _)| format!("{k} = {}\n", self.get(k))).collect()
    }

    /// SHA-256 of the scenario name and the canonical listing.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("scenario = {}\n", self.scenario.name()));
        h.update(self.listing());
        hex::encode(h.finalize())
    }
}

/// Parses a sweep grid: a comma-separated list (`0, 66um, 1mm`) or
/// `start:stop:count` with evenly spaced points.
pub fn parse_grid(spec: &str, unit: Unit) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Validation(format!("grid `{spec}`: {m}"));
    let value = |s: &str| parse_value(unit, s).map(|v| v.number()).map_err(bad);
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count".into()));
        }
        let (start, stop) = (value(parts[0])?, value(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad(format!("count `{}` is not an integer", parts[2].trim())))?;
        if n < 2 {
            return Err(bad("a sweep needs at least 3 points".into()));
        }
        (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect()
    } else {
        spec.split(',').map(value).collect::<Result<Vec<_>, _>>()?
    };
    if grid.len() < 3 {
        return Err(bad("a sweep needs at least 3 points".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn resolve(text: &str) -> Result<Resolved, CliError> {
        Resolved::build(Scenario::PumpMz, &parse_config(text)?, &Flags::default())
    }

    #[test]
    fn every_key_has_a_valid_default() {
        for s in Scenario::value_variants() {
            let r = Resolved::defaults(*s);
            for (k, unit) in KEYS {
                let text = r.get(k).to_string();
                assert_eq!(parse_value(*unit, &text).unwrap(), *r.get(k), "{k}");
            }
            Resolved::build(*s, &[], &Flags::default()).unwrap();
        }
    }

    #[test]
    fn split_override_builds_split_ratio() {
        let r = resolve("pump_mz.split.short_power_fraction = 0.6").unwrap();
        assert_eq!(r.apparatus().unwrap().pump_mz.split.short_power_fraction(), 0.6);
    }

    #[test]
    fn length_override() {
        let r = resolve("pdc_mz.imbalance_path = 60 cm").unwrap();
        assert_eq!(r.apparatus().unwrap().pdc_mz.imbalance_path, 0.6);
    }

    #[test]
    fn out_of_range_split_names_line() {
        let e = resolve("# split\npump_mz.split.short_power_fraction = 1.3").unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn cross_field_validation() {
        // gating needs a pulsed pump
        let e = resolve("gate.enabled = true").unwrap_err();
        assert!(matches!(e, CliError::Validation(_)));
    }

    #[test]
    fn flags_override_file() {
        let entries = parse_config("scan.seed = 5\napparatus.baseline_visibility = 0.9").unwrap();
        let flags = Flags { seed: Some(9), v0: Some(0.93), ..Flags::default() };
        let r = Resolved::build(Scenario::PumpMz, &entries, &flags).unwrap();
        assert_eq!(r.seed(), 9);
        assert_eq!(r.num("apparatus.baseline_visibility"), 0.93);
        assert!(Resolved::build(Scenario::PumpMz, &[], &Flags { v0: Some(1.2), ..Flags::default() }).is_err());
    }

    #[test]
    fn hash_tracks_configuration() {
        let a = Resolved::defaults(Scenario::PumpMz);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set("pdc_mz.phase", Value::Number(0.1)).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.hash(), Resolved::defaults(Scenario::Balanced).hash());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5,0.6,0.7", Unit::Ratio).unwrap(), vec![0.5, 0.6, 0.7]);
        assert_eq!(parse_grid("0, 66um, 1mm", Unit::Length).unwrap(), vec![0.0, 66e-6, 1e-3]);
        let g = parse_grid("0mm:1mm:5", Unit::Length).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[4] - 1e-3).abs() < 1e-18);
        assert!(parse_grid("0.5", Unit::Ratio).is_err());
        assert!(parse_grid("0:1:2", Unit::Ratio).is_err());
        assert!(parse_grid("0.5, 0.6 cm, 0.7", Unit::Ratio).is_err());
    }
}
