//! Vanishing-viscosity laboratory: run an inviscid reference and a sweep
//! of viscous solutions from bit-identical initial data, difference the
//! snapshots, fit the convergence rate and test the linear-in-viscosity
//! bound on the squared error.
//!
//! The bound is an upper bound: it is falsified by slower decay, never by
//! faster. The verdict therefore passes when the ratio total_sq/nu is
//! non-increasing as nu decreases (within slack) or the fitted slope is
//! at least 0.9; the measured slope is reported without asserting its
//! value, and slopes near 2 are expected for fully compatible data.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{sobolev_norm_sq, sobolev_norm_sq_vec, NormSpec};
use crate::solver::{run, FlowState, IcPreset, RunLogEntry, SolverParams, Trajectory};
use crate::spectral::{DomainSpec, Grid};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("constituent run failed: {failures:?} ({ok} of {total} runs completed)")]
    RunFailed { failures: Vec<(f64, String)>, ok: usize, total: usize, partial: Vec<ErrorRecord> },
    #[error("rate fit needs at least 3 distinct viscosities at the requested time, got {0}")]
    InsufficientPoints(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Specification of one sweep experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Strictly positive, strictly decreasing, length >= 3.
    pub nu_list: Vec<f64>,
    pub t_end: f64,
    /// Times at which errors are evaluated (snapshots, never interpolation).
    pub eval_times: Vec<f64>,
    /// Sobolev order of the error norms.
    pub norm_order: u32,
    pub ic: IcPreset,
    pub resolution: DomainSpec,
}

pub fn default_nu_list() -> Vec<f64> {
    vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.nu_list.len() < 3 {
            return Err(SweepError::InvalidSpec("nu_list must have at least 3 entries".into()));
        }
        for pair in self.nu_list.windows(2) {
            // partial_cmp so NaN entries fail validation too.
            if pair[0].partial_cmp(&pair[1]) != Some(std::cmp::Ordering::Greater) {
                return Err(SweepError::InvalidSpec(
                    "nu_list must be strictly decreasing".into(),
                ));
            }
        }
        if self.nu_list.iter().any(|nu| *nu <= 0.0) {
            return Err(SweepError::InvalidSpec("nu_list must be strictly positive".into()));
        }
        if self.eval_times.is_empty() {
            return Err(SweepError::InvalidSpec("eval_times must not be empty".into()));
        }
        for &t in &self.eval_times {
            if t < 0.0 || t > self.t_end + 1e-14 {
                return Err(SweepError::InvalidSpec(format!(
                    "eval time {t} outside [0, t_end = {}]",
                    self.t_end
                )));
            }
        }
        if self.norm_order > 3 {
            return Err(SweepError::InvalidSpec("norm_order must be <= 3".into()));
        }
        self.resolution.validate().map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
        self.ic.validate().map_err(SweepError::InvalidSpec)?;
        Ok(())
    }
}

/// Squared error norms of one viscous run against the inviscid reference
/// at one evaluation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub nu: f64,
    pub t: f64,
    /// ||rho(nu) - rho_euler||_s^2
    pub err_rho_sq: f64,
    /// ||u(nu) - u_euler||_s^2
    pub err_u_sq: f64,
    pub total_sq: f64,
}

/// Per-run summary retained in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub nu: f64,
    pub steps: usize,
    pub max_h3: f64,
    pub norm_growth_flagged: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<ErrorRecord>,
    pub euler_summary: RunSummary,
    pub viscous_summaries: Vec<RunSummary>,
    /// Per-run step logs, euler first, then viscous in nu_list order.
    pub logs: Vec<(f64, Vec<RunLogEntry>)>,
}

fn summarize(nu: f64, traj: &Trajectory) -> RunSummary {
    RunSummary {
        nu,
        steps: traj.log.len(),
        max_h3: traj.max_h3,
        norm_growth_flagged: traj.norm_growth_flagged,
    }
}

fn error_records(
    nu: f64,
    viscous: &[FlowState],
    euler: &[FlowState],
    order: u32,
) -> Vec<ErrorRecord> {
    let spec = NormSpec::full(order);
    viscous
        .iter()
        .zip(euler)
        .map(|(v, e)| {
            debug_assert!((v.t - e.t).abs() <= 1e-12);
            let err_rho_sq = sobolev_norm_sq(&v.rho.sub(&e.rho), spec).expect("order validated");
            let err_u_sq =
                sobolev_norm_sq_vec(&v.u.sub(&e.u), spec).expect("order validated");
            ErrorRecord { nu, t: v.t, err_rho_sq, err_u_sq, total_sq: err_rho_sq + err_u_sq }
        })
        .collect()
}

/// Run the sweep: one Euler reference plus one run per viscosity, all from
/// bit-identical initial data, resolution and dt policy. Per-viscosity
/// runs execute in parallel; records are assembled in (nu, t) order so the
/// outcome does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec, base: &SolverParams) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let grid = Grid::new(spec.resolution.clone());
    let (rho0, u0) = spec.ic.build(&grid);
    let state0 = FlowState::new(0.0, rho0, u0);

    let params_for = |nu: f64| -> SolverParams {
        let mut p = base.clone();
        p.nu = nu;
        p.t_end = spec.t_end;
        p
    };

    let euler =
        run(&state0, &params_for(0.0), &spec.eval_times, None).map_err(|e| SweepError::RunFailed {
            failures: vec![(0.0, e.to_string())],
            ok: 0,
            total: spec.nu_list.len() + 1,
            partial: Vec::new(),
        })?;

    let results: Vec<(f64, Result<Trajectory, String>)> = spec
        .nu_list
        .par_iter()
        .map(|&nu| {
            let traj = run(&state0, &params_for(nu), &spec.eval_times, None)
                .map_err(|e| e.to_string());
            (nu, traj)
        })
        .collect();

    let mut records = Vec::new();
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for (nu, res) in &results {
        match res {
            Ok(traj) => {
                records.extend(error_records(*nu, &traj.states, &euler.states, spec.norm_order));
                summaries.push(summarize(*nu, traj));
            }
            Err(msg) => failures.push((*nu, msg.clone())),
        }
    }
    // Records sorted by (nu, t), ascending; deterministic reduction.
    records.sort_by(|a, b| {
        a.nu.partial_cmp(&b.nu).unwrap().then(a.t.partial_cmp(&b.t).unwrap())
    });

    if !failures.is_empty() {
        let ok = summaries.len() + 1;
        return Err(SweepError::RunFailed {
            failures,
            ok,
            total: spec.nu_list.len() + 1,
            partial: records,
        });
    }

    let mut logs = Vec::with_capacity(results.len() + 1);
    logs.push((0.0, euler.log.clone()));
    for (nu, res) in results {
        if let Ok(traj) = res {
            logs.push((nu, traj.log));
        }
    }

    Ok(SweepResult {
        records,
        euler_summary: summarize(0.0, &euler),
        viscous_summaries: summaries,
        logs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Least-squares fit of log(total_sq) against log(nu) at one evaluation
/// time, plus the bound-satisfaction verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub at_time: f64,
    /// Fitted exponent; `None` when every error vanished (reported as
    /// infinite decay).
    pub slope: Option<f64>,
    /// Fitted constant C in total_sq ~ C nu^slope.
    pub constant: Option<f64>,
    /// RMS residual of the linear fit in log space.
    pub fit_residual: Option<f64>,
    /// max over the sweep of total_sq / nu.
    pub bound_ratio_max: f64,
    /// total_sq/nu non-increasing as nu decreases, within 10% slack.
    pub ratio_non_increasing: bool,
    pub n_points: usize,
    pub all_errors_zero: bool,
    pub verdict: Verdict,
}

/// Slack factor for the ratio monotonicity check.
const RATIO_SLACK: f64 = 1.10;
/// Slope threshold of the bound test.
const SLOPE_THRESHOLD: f64 = 0.9;

/// Fit the convergence rate from the records taken at time `at`.
pub fn fit_rate(records: &[ErrorRecord], at: f64) -> Result<RateFit, SweepError> {
    let mut pts: Vec<&ErrorRecord> =
        records.iter().filter(|r| (r.t - at).abs() <= 1e-12).collect();
    // Descending in nu, the sweep direction.
    pts.sort_by(|a, b| b.nu.partial_cmp(&a.nu).unwrap());
    pts.dedup_by(|a, b| a.nu == b.nu);
    if pts.len() < 3 {
        return Err(SweepError::InsufficientPoints(pts.len()));
    }

    if pts.iter().all(|r| r.total_sq == 0.0) {
        return Ok(RateFit {
            at_time: at,
            slope: None,
            constant: None,
            fit_residual: None,
            bound_ratio_max: 0.0,
            ratio_non_increasing: true,
            n_points: pts.len(),
            all_errors_zero: true,
            verdict: Verdict::Pass,
        });
    }

    let bound_ratio_max =
        pts.iter().map(|r| r.total_sq / r.nu).fold(f64::NEG_INFINITY, f64::max);
    let mut ratio_non_increasing = true;
    for pair in pts.windows(2) {
        let prev = pair[0].total_sq / pair[0].nu;
        let next = pair[1].total_sq / pair[1].nu;
        if next > prev * RATIO_SLACK {
            ratio_non_increasing = false;
        }
    }

    // Log-log least squares over the strictly positive errors.
    let positive: Vec<&&ErrorRecord> = pts.iter().filter(|r| r.total_sq > 0.0).collect();
    let (slope, constant, fit_residual) = if positive.len() >= 3 {
        let xs: Vec<f64> = positive.iter().map(|r| r.nu.ln()).collect();
        let ys: Vec<f64> = positive.iter().map(|r| r.total_sq.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - (slope * x + intercept);
                e * e
            })
            .sum();
        (Some(slope), Some(intercept.exp()), Some((rss / n).sqrt()))
    } else {
        (None, None, None)
    };

    let slope_ok = slope.is_some_and(|s| s >= SLOPE_THRESHOLD);
    let verdict = if ratio_non_increasing || slope_ok { Verdict::Pass } else { Verdict::Fail };

    Ok(RateFit {
        at_time: at,
        slope,
        constant,
        fit_residual,
        bound_ratio_max,
        ratio_non_increasing,
        n_points: pts.len(),
        all_errors_zero: false,
        verdict,
    })
}

/// Report metadata echoed into report.json. Deliberately contains nothing
/// wall-clock dependent: the report bytes must be a pure function of the
/// inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMeta {
    pub solver_version: String,
    pub ic: IcPreset,
    pub resolution: DomainSpec,
    pub nu_list: Vec<f64>,
    pub t_end: f64,
    pub eval_times: Vec<f64>,
    pub norm_order: u32,
    pub config_echo: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub meta: ReportMeta,
    pub fits: Vec<RateFit>,
    pub overall_verdict: Verdict,
    pub euler_summary: Option<RunSummary>,
    pub run_summaries: Vec<RunSummary>,
    pub records: Vec<ErrorRecord>,
}

/// Format a float so that parsing the text reproduces the value exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn records_to_csv(records: &[ErrorRecord]) -> String {
    let mut out = String::from("nu,t,err_rho_sq,err_u_sq,total_sq\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(r.nu),
            fmt_f64(r.t),
            fmt_f64(r.err_rho_sq),
            fmt_f64(r.err_u_sq),
            fmt_f64(r.total_sq)
        ));
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<ErrorRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty csv")?;
    if header != "nu,t,err_rho_sq,err_u_sq,total_sq" {
        return Err(format!("unexpected csv header: {header}"));
    }
    let mut out = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(format!("bad csv row: {line}"));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("bad float {s}: {e}"));
        out.push(ErrorRecord {
            nu: parse(cols[0])?,
            t: parse(cols[1])?,
            err_rho_sq: parse(cols[2])?,
            err_u_sq: parse(cols[3])?,
            total_sq: parse(cols[4])?,
        });
    }
    Ok(out)
}

/// Write report.csv and report.json into `dir`. Byte output is
/// deterministic for fixed inputs.
pub fn emit_report(
    records: &[ErrorRecord],
    report: &SweepReport,
    dir: &Path,
) -> Result<(PathBuf, PathBuf), SweepError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("report.csv");
    let json_path = dir.join("report.json");

    let mut csv = std::fs::File::create(&csv_path)?;
    csv.write_all(records_to_csv(records).as_bytes())?;

    let mut json = std::fs::File::create(&json_path)?;
    let body = serde_json::to_string_pretty(report).expect("report serializes");
    json.write_all(body.as_bytes())?;
    json.write_all(b"\n")?;
    Ok((csv_path, json_path))
}
