//! Job implementations: the bridge from configs to core runs, artifact
//! files and wire outcomes.

use std::io::Write;
use std::path::{Path, PathBuf};

use vvlab_core::config::Config;
use vvlab_core::diagnostics;
use vvlab_core::snapshot;
use vvlab_core::solver::{
    self, DensityBounds, FlowState, RunLogEntry, SolverError, Stepper, Trajectory,
};
use vvlab_core::spectral::Grid;
use vvlab_core::sweep::{self, ReportMeta, SweepReport, Verdict};
use vvlab_proto::{
    CompareRequest, CompareResponse, ErrorBody, ErrorKind, JobOutcome, SimulateOutcome,
    SweepOutcome, VerifyOutcome,
};

fn err(kind: ErrorKind, message: impl Into<String>) -> ErrorBody {
    ErrorBody { kind, message: message.into() }
}

fn classify_solver_error(e: &SolverError) -> ErrorKind {
    match e {
        SolverError::InvalidInitialData(_) => ErrorKind::Validation,
        SolverError::InvalidParams(_) | SolverError::SnapshotOutOfRange(_) => ErrorKind::Config,
        _ => ErrorKind::Solver,
    }
}

fn prepare_output_dir(config: &Config) -> Result<PathBuf, ErrorBody> {
    let dir = config.output_dir.clone();
    // An unusable output path is a configuration problem, not an internal
    // one: the config contract says referenced paths must be writable.
    std::fs::create_dir_all(&dir)
        .map_err(|e| err(ErrorKind::Config, format!("cannot create output dir: {e}")))?;
    std::fs::write(dir.join("resolved_config.json"), vvlab_core::config::emit_resolved(config))
        .map_err(|e| err(ErrorKind::Internal, format!("cannot write resolved config: {e}")))?;
    Ok(dir)
}

fn write_log(path: &Path, entries: &[RunLogEntry]) -> Result<(), ErrorBody> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| err(ErrorKind::Internal, format!("cannot create log: {e}")))?;
    for entry in entries {
        let line = serde_json::to_string(entry)
            .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
    }
    Ok(())
}

fn build_initial_state(config: &Config) -> (std::sync::Arc<Grid>, FlowState) {
    let grid = Grid::new(config.domain.clone());
    let (rho0, u0) = config.ic.build(&grid);
    (grid, FlowState::new(0.0, rho0, u0))
}

pub fn run_simulate(config: &Config) -> Result<JobOutcome, ErrorBody> {
    let dir = prepare_output_dir(config)?;
    let (_grid, state0) = build_initial_state(config);

    let traj: Trajectory =
        match solver::run(&state0, &config.solver, &config.snapshot_times, None) {
            Ok(traj) => traj,
            Err(failure) => {
                // Keep the partial log around for post-mortem before
                // reporting the failure.
                let _ = write_log(&dir.join("run.log.jsonl"), &failure.partial.log);
                return Err(err(classify_solver_error(&failure.error), failure.to_string()));
            }
        };

    let log_path = dir.join("run.log.jsonl");
    write_log(&log_path, &traj.log)?;

    let mut snapshot_paths = Vec::new();
    for (i, state) in traj.states.iter().enumerate() {
        let path = dir.join(format!("snapshot_{i:03}.vvs"));
        snapshot::write_flow_state(&path, state)
            .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
        snapshot_paths.push(path.display().to_string());
    }
    std::fs::write(
        dir.join("trajectory.csv"),
        diagnostics::trajectory_csv(&traj.states, config.solver.nu),
    )
    .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;

    let final_time = traj.states.last().map(|s| s.t).unwrap_or(0.0);
    Ok(JobOutcome::Simulate(SimulateOutcome {
        snapshot_paths,
        log_path: log_path.display().to_string(),
        final_time,
        steps: traj.log.len(),
        max_h3: traj.max_h3,
        norm_growth_flagged: traj.norm_growth_flagged,
    }))
}

pub fn run_sweep_job(config: &Config) -> Result<JobOutcome, ErrorBody> {
    let dir = prepare_output_dir(config)?;
    let spec = config
        .sweep_spec()
        .map_err(|e| err(ErrorKind::Config, e.to_string()))?;

    let result = match sweep::run_sweep(&spec, &config.solver) {
        Ok(result) => result,
        Err(sweep::SweepError::RunFailed { failures, ok, total, partial }) => {
            // Flag the partial records on disk, then fail the job.
            let _ = std::fs::write(dir.join("report.partial.csv"), sweep::records_to_csv(&partial));
            return Err(err(
                ErrorKind::Solver,
                format!("sweep aborted ({ok}/{total} runs finished): {failures:?}"),
            ));
        }
        Err(e) => return Err(err(ErrorKind::Config, e.to_string())),
    };

    let mut fits = Vec::new();
    for &t in &spec.eval_times {
        let fit = sweep::fit_rate(&result.records, t)
            .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
        fits.push(fit);
    }
    let overall_verdict = if fits.iter().all(|f| f.verdict == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    let runs_dir = dir.join("runs");
    std::fs::create_dir_all(&runs_dir)
        .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
    for (nu, log) in &result.logs {
        let name = if *nu == 0.0 { "euler".to_string() } else { format!("nu_{nu}") };
        let run_dir = runs_dir.join(name);
        std::fs::create_dir_all(&run_dir).map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
        write_log(&run_dir.join("run.log.jsonl"), log)?;
    }

    let config_echo = serde_json::to_value(config)
        .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
    let report = SweepReport {
        meta: ReportMeta {
            solver_version: vvlab_core::VERSION.to_string(),
            ic: spec.ic.clone(),
            resolution: spec.resolution.clone(),
            nu_list: spec.nu_list.clone(),
            t_end: spec.t_end,
            eval_times: spec.eval_times.clone(),
            norm_order: spec.norm_order,
            config_echo,
        },
        fits: fits.clone(),
        overall_verdict,
        euler_summary: Some(result.euler_summary.clone()),
        run_summaries: result.viscous_summaries.clone(),
        records: result.records.clone(),
    };
    let (csv_path, json_path) = sweep::emit_report(&result.records, &report, &dir)
        .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;

    Ok(JobOutcome::Sweep(SweepOutcome {
        report_csv: csv_path.display().to_string(),
        report_json: json_path.display().to_string(),
        fits,
        overall_verdict,
        records: result.records.len(),
    }))
}

/// Number of steps the short invariant run takes (or fewer, when t_end is
/// reached first).
const VERIFY_STEPS: usize = 8;

pub fn run_verify(config: &Config) -> Result<JobOutcome, ErrorBody> {
    let dir = prepare_output_dir(config)?;
    let (_grid, state0) = build_initial_state(config);

    let bounds = DensityBounds::from_field(&state0.rho);
    let validation = solver::validate_initial_data(&state0.rho, &state0.u, &bounds);

    let mut steps = 0;
    let mut max_divergence: f64 = validation.divergence_l2;
    let mut max_trace: f64 = validation
        .u3_wall
        .max(validation.du1_dz_wall)
        .max(validation.du2_dz_wall)
        .max(validation.drho_dz_wall);
    let mut mean_drift: f64 = 0.0;
    let mut run_error: Option<SolverError> = None;

    if validation.pass && config.solver.t_end > 0.0 {
        let mut stepper = Stepper::new(&config.solver);
        let mut state = state0.clone();
        let mean0 = state.rho.mean();
        for _ in 0..VERIFY_STEPS {
            if state.t >= config.solver.t_end - 1e-14 {
                break;
            }
            let dt = match stepper.propose_dt(&state) {
                Ok(dt) => dt.min(config.solver.t_end - state.t),
                Err(e) => {
                    run_error = Some(e);
                    break;
                }
            };
            match stepper.step(&state, dt) {
                Ok(next) => {
                    steps += 1;
                    let report = diagnostics::boundary_residuals(&next);
                    max_trace = max_trace.max(report.max_structural());
                    max_divergence = max_divergence.max(next.u.divergence().norm_l2());
                    mean_drift = mean_drift.max((next.rho.mean() - mean0).abs());
                    state = next;
                }
                Err(e) => {
                    run_error = Some(e);
                    break;
                }
            }
        }
    }

    if let Some(e) = run_error {
        return Err(err(classify_solver_error(&e), e.to_string()));
    }

    let pass = validation.pass
        && max_divergence <= solver::DIV_TOL
        && max_trace <= solver::TRACE_TOL
        && mean_drift <= 1e-12;

    let outcome = VerifyOutcome {
        validation,
        steps,
        max_divergence,
        max_trace_residual: max_trace,
        mean_density_drift: mean_drift,
        pass,
        report_path: dir.join("verify_report.json").display().to_string(),
    };
    let body = serde_json::to_string_pretty(&outcome)
        .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;
    std::fs::write(dir.join("verify_report.json"), body)
        .map_err(|e| err(ErrorKind::Internal, e.to_string()))?;

    Ok(JobOutcome::Verify(outcome))
}

pub fn run_compare(req: &CompareRequest) -> Result<CompareResponse, (ErrorKind, String)> {
    if req.norm_order > 3 {
        return Err((ErrorKind::Config, format!("norm order {} unsupported", req.norm_order)));
    }
    let a = snapshot::read_snapshot(Path::new(&req.a))
        .map_err(|e| (ErrorKind::Validation, format!("{}: {e}", req.a)))?;
    let b = snapshot::read_snapshot(Path::new(&req.b))
        .map_err(|e| (ErrorKind::Validation, format!("{}: {e}", req.b)))?;
    let distance = snapshot::snapshot_distance(&a, &b, req.norm_order)
        .map_err(|e| (ErrorKind::Validation, e.to_string()))?;
    Ok(CompareResponse { distance, norm_order: req.norm_order })
}
