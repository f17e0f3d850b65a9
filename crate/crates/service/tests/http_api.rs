//! End-to-end tests of the HTTP surface: a real listener, the blocking
//! client, and small configurations that finish in seconds.

use std::time::Duration;

use vvlab_client::{ClientError, VvlabClient};
use vvlab_proto::{ErrorKind, JobOutcome, JobState, Verdict};

fn spawn_service() -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            vvlab_service::serve(listener).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

fn client() -> VvlabClient {
    VvlabClient::new(&spawn_service()).with_poll_interval(Duration::from_millis(20))
}

fn config_json(output_dir: &std::path::Path, extra: &str) -> vvlab_proto::Config {
    let text = format!(
        r#"{{
            "domain": {{"lx": 1.0, "ly": 1.0, "nx": 16, "ny": 1, "nz": 16, "dim": "2"}},
            "ic": {{"preset": "stratified_vortex"}},
            "solver": {{"nu": 0.01, "t_end": 0.02}},
            "output_dir": "{}"{extra}
        }}"#,
        output_dir.display()
    );
    vvlab_core::config::parse_config(&text).expect("test config parses")
}

#[test]
fn health_reports_version() {
    let c = client();
    let health = c.health().unwrap();
    assert_eq!(health.status, "ok");
    assert_eq!(health.version, vvlab_core::VERSION);
}

#[test]
fn simulate_job_writes_snapshots_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let c = client();
    let mut config = config_json(dir.path(), "");
    config.snapshot_times = vec![0.0, 0.02];
    let id = c.submit_simulate(&config).unwrap();
    let info = c.wait(id).unwrap();
    assert_eq!(info.state, JobState::Done);
    let out = match info.outcome {
        Some(JobOutcome::Simulate(out)) => out,
        other => panic!("unexpected outcome {other:?}"),
    };
    assert_eq!(out.snapshot_paths.len(), 2);
    assert!((out.final_time - 0.02).abs() < 1e-14);
    for p in &out.snapshot_paths {
        assert!(std::path::Path::new(p).exists());
    }
    assert!(std::path::Path::new(&out.log_path).exists());
    assert!(dir.path().join("resolved_config.json").exists());
    let traj_csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj_csv
        .starts_with("t,kinetic_energy,dissipation_rate,divergence_l2,wall_trace_max\n"));
    assert_eq!(traj_csv.lines().count(), 3);

    // Compare a snapshot against itself through the API: distance 0.
    let resp = c.compare(&out.snapshot_paths[0], &out.snapshot_paths[0], 2).unwrap();
    assert_eq!(resp.distance, 0.0);
}

#[test]
fn sweep_job_produces_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let c = client();
    let config = config_json(
        dir.path(),
        r#", "sweep": {"nu_list": [3e-2, 1e-2, 3e-3], "t_end": 0.05, "eval_times": [0.05]}"#,
    );
    let id = c.submit_sweep(&config).unwrap();
    let info = c.wait(id).unwrap();
    let out = match info.outcome {
        Some(JobOutcome::Sweep(out)) => out,
        other => panic!("unexpected outcome {other:?}"),
    };
    assert_eq!(out.records, 3);
    assert_eq!(out.overall_verdict, Verdict::Pass);
    let csv = std::fs::read_to_string(&out.report_csv).unwrap();
    assert!(csv.starts_with("nu,t,err_rho_sq,err_u_sq,total_sq\n"));
    assert_eq!(csv.lines().count(), 4);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out.report_json).unwrap()).unwrap();
    assert_eq!(report["overall_verdict"], "pass");
    assert!(dir.path().join("runs/euler/run.log.jsonl").exists());
    assert!(dir.path().join("runs/nu_0.01/run.log.jsonl").exists());
}

#[test]
fn verify_job_passes_for_valid_preset() {
    let dir = tempfile::tempdir().unwrap();
    let c = client();
    let config = config_json(dir.path(), "");
    let id = c.submit_verify(&config).unwrap();
    let info = c.wait(id).unwrap();
    let out = match info.outcome {
        Some(JobOutcome::Verify(out)) => out,
        other => panic!("unexpected outcome {other:?}"),
    };
    assert!(out.pass, "verify failed: {:?}", out.validation.failures);
    assert!(out.steps > 0);
    assert!(out.max_trace_residual <= 1e-12);
    assert!(dir.path().join("verify_report.json").exists());
}

#[test]
fn sweep_section_required_for_sweep_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let c = client();
    let config = config_json(dir.path(), "");
    match c.submit_sweep(&config) {
        Err(ClientError::Service(body)) => assert_eq!(body.kind, ErrorKind::Config),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn sweep_section_rejected_for_simulate_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let c = client();
    let config = config_json(
        dir.path(),
        r#", "sweep": {"nu_list": [3e-2, 1e-2, 3e-3], "t_end": 0.05, "eval_times": [0.05]}"#,
    );
    match c.submit_simulate(&config) {
        Err(ClientError::Service(body)) => assert_eq!(body.kind, ErrorKind::Config),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn compare_rejects_missing_files() {
    let c = client();
    match c.compare("/nonexistent/a.vvs", "/nonexistent/b.vvs", 2) {
        Err(ClientError::Service(body)) => assert_eq!(body.kind, ErrorKind::Validation),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn unknown_job_is_a_clean_404() {
    let c = client();
    match c.job(999_999) {
        Err(ClientError::Service(_)) => {}
        other => panic!("expected service error, got {other:?}"),
    }
}

#[test]
fn solver_abort_is_classified() {
    // Positivity-violating stratification is caught by preset validation
    // at parse time; drive a solver abort instead via a CFL-violating
    // fixed step.
    let dir = tempfile::tempdir().unwrap();
    let c = client();
    let text = format!(
        r#"{{
            "domain": {{"lx": 1.0, "ly": 1.0, "nx": 16, "ny": 1, "nz": 16, "dim": "2"}},
            "ic": {{"preset": "stratified_vortex", "psi_amp": 0.05}},
            "solver": {{"nu": 0.0, "t_end": 0.5, "dt_policy": {{"policy": "fixed", "dt": 0.45}}}},
            "output_dir": "{}"
        }}"#,
        dir.path().display()
    );
    let config = vvlab_core::config::parse_config(&text).unwrap();
    let id = c.submit_simulate(&config).unwrap();
    match c.wait(id) {
        Err(ClientError::Service(body)) => {
            assert_eq!(body.kind, ErrorKind::Solver, "message: {}", body.message);
            assert_eq!(body.kind.exit_code(), 4);
        }
        other => panic!("expected solver error, got {other:?}"),
    }
}
