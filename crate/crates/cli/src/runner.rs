//! Scenario execution: scan, CSV, fit, report.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use twophoton::fit::{bootstrap, fit_dip, fit_fringe_with, EnvelopeShape, FringeOptions, PhaseInit, PhaseModel};
use twophoton::{
    expected_rate, first_order_mz_visibility, first_order_scan, hom_scan, michelson_scan, phase_scan, Apparatus, CountSynthesis,
    DriftModel, PumpModel, RngStream, ScanResult, SpectralShape,
};

use crate::error::CliError;
use crate::output::{self, SweepRow};
use crate::settings::{Resolved, Scenario};

// stream indices under the run seed
const MC_STREAM: u64 = 0;
const COUNT_STREAM: u64 = 1;
const BOOTSTRAP_STREAM: u64 = 2;
const SWEEP_STREAM_BASE: u64 = 16;

/// Files written by a run and the headline result.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub headline: String,
}

/// Visibility of the two-photon fringe expected in closed form, scanning
/// the PDC phase over one period.
pub fn expected_visibility(app: &Apparatus, pump: &PumpModel) -> Result<f64, CliError> {
    let mut at = app.clone();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..720 {
        at.pdc_mz.phase = app.pdc_mz.phase + TAU * k as f64 / 720.0;
        let r = expected_rate(&at, pump)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(if hi + lo > 0.0 { (hi - lo) / (hi + lo) } else { 0.0 })
}

fn synthesis(r: &Resolved, stream: RngStream) -> Result<CountSynthesis, CliError> {
    Ok(CountSynthesis::new(r.num("scan.rate_scale"), r.num("scan.dwell"), stream)?)
}

fn phase_model(r: &Resolved) -> PhaseModel {
    match r.word("fit.phase_model") {
        "stretched" => PhaseModel::Stretched,
        _ => PhaseModel::Linear,
    }
}

/// Fit options that keep the known drift trajectory fixed. A relaxing
/// drift enters through its second-order expansion.
fn calibrated_options(r: &Resolved) -> FringeOptions {
    let (linear, quadratic) = match r.drift() {
        DriftModel::Linear { rate, .. } => (rate, 0.0),
        DriftModel::Relaxing { total, relax_time, .. } => (total / relax_time, -total / (2.0 * relax_time * relax_time)),
    };
    let mut opts = FringeOptions::new(phase_model(r));
    opts.init = PhaseInit::Fixed { linear, quadratic };
    opts
}

type Analysis = Box<dyn Fn(&ScanResult, &mut Report) -> Result<String, CliError>>;

struct Report {
    lines: Vec<String>,
}

impl Report {
    fn new(r: &Resolved) -> Self {
        let mut lines = vec![
            format!("scenario: {}", r.scenario.name()),
            format!("seed: {}", r.seed()),
            format!("trials: {}", r.trials()),
            format!("config_sha256: {}", r.hash()),
            "resolved config:".to_string(),
        ];
        lines.extend(r.listing().lines().map(|l| format!("  {l}")));
        Report { lines }
    }

    fn push(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn finish(mut self, started: Instant) -> String {
        self.push(format!("wall_clock_s: {:.3}", started.elapsed().as_secs_f64()));
        let mut s = String::new();
        for l in self.lines {
            let _ = writeln!(s, "{l}");
        }
        s
    }
}

/// Fringe fit with optional bootstrap, appended to the report.
fn fringe_analysis(r: &Resolved, scan: &ScanResult, opts: &FringeOptions, expected: f64, report: &mut Report) -> Result<String, CliError> {
    let fit = fit_fringe_with(scan, opts)?;
    report.push(format!("fit: visibility = {:.4} ± {:.4} (analytic expectation {:.4})", fit.visibility, fit.visibility_stderr, expected));
    if fit.at_bound {
        report.push("fit: unconstrained optimum above 1 within its error, reported on the V = 1 boundary");
    }
    report.push(format!("fit: period = {:.4} {}", fit.period, scan.x_label));
    report.push(format!("fit: residual_rms = {:.4}, iterations = {}", fit.residual_rms, fit.iterations));
    let resamples = r.count("fit.bootstrap_resamples") as usize;
    if resamples > 0 {
        let refit = match opts.init {
            PhaseInit::Fixed { .. } => *opts,
            _ => fit.reseeded(opts.model),
        };
        let stream = RngStream::new(r.seed(), BOOTSTRAP_STREAM);
        match bootstrap(scan, resamples, stream, |s| Ok(vec![fit_fringe_with(s, &refit)?.visibility])) {
            Ok(b) => {
                report.push(format!("bootstrap: visibility stderr = {:.4} ({} resamples, {} failed)", b.stderr[0], b.resamples, b.failures))
            }
            Err(e) => report.push(format!("bootstrap: not available ({e})")),
        }
    }
    Ok(format!("visibility {:.4} ± {:.4} (expected {:.4})", fit.visibility, fit.visibility_stderr, expected))
}

/// Runs `r.scenario` and writes its CSV and report into `out_dir`. On a fit
/// failure both files are still written before the error is returned.
pub fn run(r: &Resolved, out_dir: &Path) -> Result<Outcome, CliError> {
    if r.scenario.is_sweep() {
        return sweep(r, &r.scenario.default_grid(), out_dir);
    }
    let started = Instant::now();
    let app = r.apparatus()?;
    let pump = r.pump()?;
    let name = r.scenario.name();
    let mc = RngStream::new(r.seed(), MC_STREAM);
    let synth = synthesis(r, RngStream::new(r.seed(), COUNT_STREAM))?;
    let mut report = Report::new(r);

    let (scan, analysis): (ScanResult, Analysis) = match r.scenario {
        Scenario::Hom => {
            let n = r.count("hom.points") as usize;
            let half = r.num("hom.half_range");
            let grid: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
            let injected = r.num("hom.injected_visibility");
            let shape = match app.filter.shape() {
                SpectralShape::Gaussian => EnvelopeShape::Gaussian,
                SpectralShape::Rectangular => EnvelopeShape::FourierOfRectangular,
            };
            let scan = hom_scan(&app, &grid, injected, &synth)?;
            (
                scan,
                Box::new(move |scan, report| {
                    let fit = fit_dip(scan, shape)?;
                    report.push(format!(
                        "fit: dip visibility = {:.4} ± {:.4} (injected {injected:.4})",
                        fit.visibility, fit.visibility_stderr
                    ));
                    report.push(format!(
                        "fit: center = {:.3e} s, width = {:.3e} s, baseline = {:.1}",
                        fit.center_delay, fit.width, fit.baseline
                    ));
                    report.push(format!("fit: residual_rms = {:.4}", fit.residual_rms));
                    Ok(format!("dip visibility {:.4} ± {:.4} (injected {injected:.4})", fit.visibility, fit.visibility_stderr))
                }),
            )
        }
        Scenario::PumpStability => {
            let scan = first_order_scan(&app, &pump, &r.phase_scan_settings(), &synth, mc)?;
            let expected = first_order_mz_visibility(&pump, app.pump_mz.imbalance_path, app.pump_mz.split);
            let opts = FringeOptions::new(phase_model(r));
            let rr = r.clone();
            (scan, Box::new(move |scan, report| fringe_analysis(&rr, scan, &opts, expected, report)))
        }
        Scenario::Michelson => {
            let step = r.num("michelson.step");
            let n = (r.num("michelson.max_delay") / step).floor() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
            let m = michelson_scan(&pump, &grid)?;
            let expected = match pump {
                PumpModel::MultimodeComb { peak_spacing_path, .. } => Some(peak_spacing_path),
                _ => None,
            };
            let (peaks, spacing) = (m.peaks.clone(), m.spacing);
            (
                m.scan,
                Box::new(move |_, report| {
                    report.push(format!("peaks: {}", peaks.iter().map(|p| format!("{:.1} um", p * 1e6)).collect::<Vec<_>>().join(", ")));
                    let expect = expected.map_or("none".to_string(), |d| format!("{:.1} um", d * 1e6));
                    match spacing {
                        Some(d) => {
                            report.push(format!("fit: peak spacing = {:.1} um (configured {expect})", d * 1e6));
                            Ok(format!("peak spacing {:.1} um (configured {expect})", d * 1e6))
                        }
                        None => Err(CliError::Fit(format!("no recurring coherence peaks within the scan (configured spacing {expect})"))),
                    }
                }),
            )
        }
        _ => {
            let scan = phase_scan(&app, &pump, &r.phase_scan_settings(), &synth, mc)?;
            let expected = expected_visibility(&app, &pump)?;
            let opts = if r.scenario == Scenario::Unbalanced { calibrated_options(r) } else { FringeOptions::new(phase_model(r)) };
            if let Some(f) = scan.meta.acceptance_fraction {
                report.push(format!("gate: acceptance fraction = {f:.4}"));
            }
            report.push(format!("delivered pump power: {}", scan.meta.delivered_power));
            let rr = r.clone();
            (scan, Box::new(move |scan, report| fringe_analysis(&rr, scan, &opts, expected, report)))
        }
    };

    let csv_name = format!("{name}_scan.csv");
    let csv = output::write(out_dir, &csv_name, &output::scan_csv(r, &scan))?;
    report.push(format!("points: {}", scan.points.len()));
    report.push(format!("csv: {csv_name}"));
    let result = analysis(&scan, &mut report);
    if let Err(e) = &result {
        report.push(format!("fit: FAILED: {e}"));
    }
    let report_path = output::write(out_dir, &format!("{name}_report.txt"), &report.finish(started))?;
    let headline = result?;
    Ok(Outcome { files: vec![csv, report_path], headline: format!("{name}: {headline}") })
}

fn sweep_point(r: &Resolved, x: f64, index: usize) -> Result<(f64, f64, f64), CliError> {
    let mut app = r.apparatus()?;
    match r.scenario {
        Scenario::MismatchSweep => app.pump_mz.imbalance_path = app.pdc_mz.imbalance_path + x,
        _ => app.pump_mz.split = twophoton::SplitRatio::new(x)?,
    }
    let pump = r.pump()?;
    app.validate_with(&pump)?;
    let base = SWEEP_STREAM_BASE + 2 * index as u64;
    let synth = synthesis(r, RngStream::new(r.seed(), base + 1))?;
    let scan = phase_scan(&app, &pump, &r.phase_scan_settings(), &synth, RngStream::new(r.seed(), base))?;
    let fit = fit_fringe_with(&scan, &calibrated_options(r))?;
    Ok((fit.visibility, fit.visibility_stderr, expected_visibility(&app, &pump)?))
}

/// One fitted visibility per grid value. Failing points are recorded and
/// the sweep continues; it fails only when no point succeeds.
pub fn sweep(r: &Resolved, grid: &[f64], out_dir: &Path) -> Result<Outcome, CliError> {
    let Some((parameter, _)) = r.scenario.sweep_parameter() else {
        return Err(CliError::Validation(format!("`{}` is not a sweep scenario (use mismatch-sweep or split-sweep)", r.scenario.name())));
    };
    if grid.len() < 3 {
        return Err(CliError::Validation(format!("a sweep needs at least 3 grid points, got {}", grid.len())));
    }
    let started = Instant::now();
    let rows: Vec<SweepRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| match sweep_point(r, x, i) {
            Ok((visibility, stderr, expected)) => SweepRow { parameter: x, visibility, stderr, expected, failure: None },
            Err(e) => SweepRow { parameter: x, visibility: f64::NAN, stderr: f64::NAN, expected: f64::NAN, failure: Some(e.to_string()) },
        })
        .collect();
    let name = r.scenario.name();
    let csv_name = format!("{name}_sweep.csv");
    let csv = output::write(out_dir, &csv_name, &output::sweep_csv(r, parameter, &rows))?;
    let mut report = Report::new(r);
    report.push(format!("parameter: {parameter}"));
    report.push(format!("csv: {csv_name}"));
    for row in &rows {
        report.push(match &row.failure {
            None => format!(
                "{parameter} = {}: visibility = {:.4} ± {:.4} (analytic expectation {:.4})",
                row.parameter, row.visibility, row.stderr, row.expected
            ),
            Some(m) => format!("{parameter} = {}: FAILED: {m}", row.parameter),
        });
    }
    let failed = rows.iter().filter(|r| r.failure.is_some()).count();
    let report_path = output::write(out_dir, &format!("{name}_report.txt"), &report.finish(started))?;
    if failed == rows.len() {
        return Err(CliError::Fit(format!("every sweep point failed; see {}", report_path.display())));
    }
    Ok(Outcome { files: vec![csv, report_path], headline: format!("{name}: {} points, {failed} failed", rows.len()) })
}
