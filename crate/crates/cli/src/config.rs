//! `section.key = value` configuration files.
//!
//! Lengths are meters unless suffixed (`m`, `cm`, `mm`, `um`/`μm`, `nm`),
//! times are seconds unless suffixed (`s`, `ms`, `us`/`μs`, `ns`, `ps`, `fs`),
//! angles are radians unless suffixed (`rad`, `deg`). Rates accept `Hz` or
//! `/s`. Dimensionless keys take no suffix at all.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Length,
    Time,
    Angle,
    Rate,
    Ratio,
    Count,
    Flag,
    Choice(&'static [&'static str]),
}

impl Unit {
    fn describe(self) -> String {
        match self {
            Unit::Length => "a length (m, cm, mm, um, nm)".into(),
            Unit::Time => "a time (s, ms, us, ns, ps, fs)".into(),
            Unit::Angle => "an angle (rad, deg)".into(),
            Unit::Rate => "a rate (Hz or /s)".into(),
            Unit::Ratio => "a dimensionless number".into(),
            Unit::Count => "a non-negative integer".into(),
            Unit::Flag => "true or false".into(),
            Unit::Choice(names) => format!("one of {}", names.join(", ")),
        }
    }
}

pub const PUMP_MODELS: &[&str] = &["coherent", "phase-diffusion", "comb", "pulsed"];
pub const FILTER_SHAPES: &[&str] = &["gaussian", "rectangular"];
pub const DRIFTS: &[&str] = &["linear", "cooling"];
pub const PHASE_MODELS: &[&str] = &["linear", "stretched"];

/// Every key a configuration file may set.
pub const KEYS: &[(&str, Unit)] = &[
    ("pump.model", Unit::Choice(PUMP_MODELS)),
    ("pump.wavelength", Unit::Length),
    ("pump.linewidth", Unit::Length),
    ("pump.peak_spacing", Unit::Length),
    ("pump.mode_count", Unit::Count),
    ("pump.mode_linewidth", Unit::Length),
    ("pump.pulse_fwhm", Unit::Time),
    ("pump.period", Unit::Time),
    ("pump_mz.enabled", Unit::Flag),
    ("pump_mz.imbalance_path", Unit::Length),
    ("pump_mz.split.short_power_fraction", Unit::Ratio),
    ("pump_mz.phase", Unit::Angle),
    ("pdc_mz.enabled", Unit::Flag),
    ("pdc_mz.imbalance_path", Unit::Length),
    ("pdc_mz.phase", Unit::Angle),
    ("pdc.wavelength", Unit::Length),
    ("filter.shape", Unit::Choice(FILTER_SHAPES)),
    ("filter.fwhm", Unit::Length),
    ("apparatus.baseline_visibility", Unit::Ratio),
    ("apparatus.background_rate", Unit::Ratio),
    ("apparatus.contamination", Unit::Ratio),
    ("apparatus.hom_delay", Unit::Time),
    ("gate.enabled", Unit::Flag),
    ("gate.accepted_slot", Unit::Count),
    ("gate.slot_width", Unit::Time),
    ("scan.points", Unit::Count),
    ("scan.trials", Unit::Count),
    ("scan.seed", Unit::Count),
    ("scan.duration", Unit::Time),
    ("scan.periods", Unit::Ratio),
    ("scan.drift", Unit::Choice(DRIFTS)),
    ("scan.dwell", Unit::Time),
    ("scan.rate_scale", Unit::Rate),
    ("fit.phase_model", Unit::Choice(PHASE_MODELS)),
    ("fit.bootstrap_resamples", Unit::Count),
    ("hom.injected_visibility", Unit::Ratio),
    ("hom.half_range", Unit::Time),
    ("hom.points", Unit::Count),
    ("michelson.max_delay", Unit::Length),
    ("michelson.step", Unit::Length),
];

pub fn unit_of(key: &str) -> Option<Unit> {
    KEYS.iter().find(|(k, _)| *k == key).map(|&(_, u)| u)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Count(u64),
    Flag(bool),
    Word(&'static str),
}

impl Value {
    pub fn number(&self) -> f64 {
        match *self {
            Value::Number(x) => x,
            Value::Count(n) => n as f64,
            _ => f64::NAN,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Count(n) => write!(f, "{n}"),
            Value::Flag(b) => write!(f, "{b}"),
            Value::Word(w) => f.write_str(w),
        }
    }
}

/// One assignment and the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub line: usize,
}

/// Splits `"60 cm"` into the number and its suffix, taking the longest
/// prefix that parses.
fn split_number(text: &str) -> Option<(f64, &str)> {
    let mut cuts: Vec<usize> = text.char_indices().map(|(i, _)| i).skip(1).collect();
    cuts.push(text.len());
    cuts.into_iter().rev().find_map(|i| text[..i].trim().parse::<f64>().ok().map(|x| (x, text[i..].trim())))
}

/// Converts `number` with `suffix` to the base unit. Decimal prefixes
/// divide by an exact power of ten so `66 um` reads as `66e-6`.
fn convert(unit: Unit, number: f64, suffix: &str) -> Option<f64> {
    let divisors: &[(&str, f64)] = match unit {
        Unit::Length => &[("", 1.0), ("m", 1.0), ("cm", 1e2), ("mm", 1e3), ("um", 1e6), ("μm", 1e6), ("nm", 1e9)],
        Unit::Time => &[("", 1.0), ("s", 1.0), ("ms", 1e3), ("us", 1e6), ("μs", 1e6), ("ns", 1e9), ("ps", 1e12), ("fs", 1e15)],
        Unit::Angle if suffix == "deg" => return Some(number.to_radians()),
        Unit::Angle => &[("", 1.0), ("rad", 1.0)],
        Unit::Rate => &[("", 1.0), ("Hz", 1.0), ("/s", 1.0)],
        Unit::Ratio => &[("", 1.0)],
        _ => &[],
    };
    divisors.iter().find(|(s, _)| *s == suffix).map(|&(_, d)| number / d)
}

/// Parses `text` as a value of `unit`; errors describe the mismatch.
pub fn parse_value(unit: Unit, text: &str) -> Result<Value, String> {
    let text = text.trim();
    match unit {
        Unit::Flag => match text {
            "true" => Ok(Value::Flag(true)),
            "false" => Ok(Value::Flag(false)),
            _ => Err(format!("expected {}, got `{text}`", unit.describe())),
        },
        Unit::Choice(names) => {
            names.iter().find(|n| **n == text).map(|n| Value::Word(n)).ok_or_else(|| format!("expected {}, got `{text}`", unit.describe()))
        }
        Unit::Count => text.parse().map(Value::Count).map_err(|_| format!("expected {}, got `{text}`", unit.describe())),
        _ => {
            let (number, suffix) = split_number(text).ok_or_else(|| format!("expected {}, got `{text}`", unit.describe()))?;
            let value =
                convert(unit, number, suffix).ok_or_else(|| format!("unit `{suffix}` does not fit: expected {}", unit.describe()))?;
            if !value.is_finite() {
                return Err(format!("`{text}` is not finite"));
            }
            Ok(Value::Number(value))
        }
    }
}

fn line_error(line: usize, msg: impl fmt::Display) -> CliError {
    CliError::Validation(format!("config line {line}: {msg}"))
}

/// Parses the configuration text into ordered entries. Blank lines and `#`
/// comments are skipped; trailing comments are allowed.
pub fn parse_config(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| line_error(line, format!("expected `section.key = value`, got `{body}`")))?;
        let key = key.trim();
        let unit = unit_of(key).ok_or_else(|| line_error(line, format!("unknown key `{key}`")))?;
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(line_error(line, format!("duplicate key `{key}` (first set on line {first})")));
        }
        let value = parse_value(unit, value).map_err(|e| line_error(line, format!("{key}: {e}")))?;
        entries.push(Entry { key: key.to_string(), value, line });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Value {
        parse_config(text).unwrap().remove(0).value
    }

    fn err(text: &str) -> String {
        parse_config(text).unwrap_err().to_string()
    }

    #[test]
    fn lengths_with_suffixes() {
        assert_eq!(one("pdc_mz.imbalance_path = 60 cm"), Value::Number(0.6));
        assert_eq!(one("pdc_mz.imbalance_path = 0.6"), Value::Number(0.6));
        assert_eq!(one("pump.peak_spacing = 4705.5um"), Value::Number(4705.5e-6));
        assert_eq!(one("pump.linewidth = 0.1 nm"), Value::Number(0.1e-9));
        assert_eq!(one("pump.wavelength = 4.07e-7 m"), Value::Number(4.07e-7));
    }

    #[test]
    fn other_units() {
        assert_eq!(one("pump_mz.phase = 180 deg"), Value::Number(std::f64::consts::PI));
        assert_eq!(one("pump.pulse_fwhm = 1 ps"), Value::Number(1e-12));
        assert_eq!(one("scan.rate_scale = 300 Hz"), Value::Number(300.0));
        assert_eq!(one("scan.points = 60"), Value::Count(60));
        assert_eq!(one("pump_mz.enabled = false"), Value::Flag(false));
        assert_eq!(one("pump.model = comb"), Value::Word("comb"));
    }

    #[test]
    fn split_fraction() {
        assert_eq!(one("pump_mz.split.short_power_fraction = 0.6"), Value::Number(0.6));
    }

    #[test]
    fn comments_and_blanks() {
        let entries = parse_config("# header\n\npdc_mz.phase = 1 # trailing\n").unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].line, 3);
    }

    #[test]
    fn errors_name_the_line() {
        assert!(err("\nfoo.bar = 1").contains("line 2"));
        assert!(err("pdc_mz.phase = 1\npdc_mz.phase = 2").contains("line 2"));
        assert!(err("pdc_mz.phase = 1\npdc_mz.phase = 2").contains("duplicate"));
        let mismatch = err("# c\n\npdc_mz.imbalance_path = 5 ns");
        assert!(mismatch.contains("line 3") && mismatch.contains("unit"), "{mismatch}");
        assert!(err("pump_mz.split.short_power_fraction = 0.6 cm").contains("line 1"));
        assert!(err("scan.points = 6.5").contains("line 1"));
        assert!(err("just words").contains("line 1"));
    }
}
