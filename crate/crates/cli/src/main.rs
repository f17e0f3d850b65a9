//! Command-line client for the vvlab service.
//!
//! Every subcommand except `serve` talks HTTP: pass `--server` (or set
//! VVLAB_SERVER) to use a running service, otherwise an in-process server
//! is started on an ephemeral local port and used the same way.
//!
//! Exit codes: 0 success, 2 configuration error, 3 validation failure,
//! 4 solver abort, 5 sweep bound-verdict failure, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vvlab_client::{ClientError, VvlabClient};
use vvlab_proto::{Config, JobInfo, JobOutcome, Verdict};

#[derive(Parser)]
#[command(name = "vvlab", version, about = "Variable-density slip-channel flow lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        /// Address to bind.
        #[arg(long, default_value = "127.0.0.1:7447")]
        addr: String,
    },
    /// Integrate one configuration and write snapshots + a step log.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "VVLAB_SERVER")]
        server: Option<String>,
    },
    /// Run the vanishing-viscosity sweep and emit report.csv/report.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "VVLAB_SERVER")]
        server: Option<String>,
    },
    /// Validate initial data and run the invariant suite over a short run.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "VVLAB_SERVER")]
        server: Option<String>,
    },
    /// Print the H^s distance between two snapshot files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Sobolev order s of the distance.
        #[arg(long, default_value_t = 2)]
        norm: u32,
        #[arg(long, env = "VVLAB_SERVER")]
        server: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_from(e.exit_code())
        }
    }
}

fn exit_from(code: i32) -> ExitCode {
    ExitCode::from(code.clamp(0, 255) as u8)
}

fn dispatch(command: Command) -> Result<ExitCode, ClientError> {
    match command {
        Command::Serve { addr } => {
            serve_blocking(&addr);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { config, server } => {
            let config = load_config(&config)?;
            let client = connect(server);
            let id = client.submit_simulate(&config)?;
            let info = client.wait(id)?;
            print_simulate(&info);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, server } => {
            let config = load_config(&config)?;
            let client = connect(server);
            let id = client.submit_sweep(&config)?;
            let info = client.wait(id)?;
            let verdict = print_sweep(&info);
            if verdict == Some(Verdict::Fail) {
                eprintln!("bound verdict: FAIL");
                return Ok(exit_from(5));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { config, server } => {
            let config = load_config(&config)?;
            let client = connect(server);
            let id = client.submit_verify(&config)?;
            let info = client.wait(id)?;
            let pass = print_verify(&info);
            if !pass {
                return Ok(exit_from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { a, b, norm, server } => {
            let client = connect(server);
            let resp =
                client.compare(&a.display().to_string(), &b.display().to_string(), norm)?;
            println!("{}", resp.distance);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Parse the config locally first: configuration mistakes are reported
/// before any job is submitted, with the strict-schema message.
fn load_config(path: &PathBuf) -> Result<Config, ClientError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            return Err(ClientError::Service(vvlab_proto::ErrorBody {
                kind: vvlab_proto::ErrorKind::Config,
                message: format!("cannot read {}: {e}", path.display()),
            }))
        }
    };
    vvlab_core::config::parse_config(&text).map_err(|e| {
        ClientError::Service(vvlab_proto::ErrorBody {
            kind: vvlab_proto::ErrorKind::Config,
            message: e.to_string(),
        })
    })
}

fn connect(server: Option<String>) -> VvlabClient {
    let base = server.unwrap_or_else(spawn_local_server);
    VvlabClient::new(&base)
}

/// Run the service inside this process on an ephemeral port; the CLI then
/// talks to it over HTTP exactly as it would to a remote instance.
fn spawn_local_server() -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("tokio runtime");
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
                .await
                .expect("bind ephemeral port");
            let addr = listener.local_addr().expect("local addr");
            tx.send(addr).expect("report addr");
            if let Err(e) = vvlab_service::serve(listener).await {
                eprintln!("local service stopped: {e}");
            }
        });
    });
    let addr = rx.recv().expect("local service failed to start");
    format!("http://{addr}")
}

fn serve_blocking(addr: &str) {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime");
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.expect("bind address");
        println!("listening on http://{}", listener.local_addr().expect("local addr"));
        if let Err(e) = vvlab_service::serve(listener).await {
            eprintln!("service stopped: {e}");
        }
    });
}

fn print_simulate(info: &JobInfo) {
    if let Some(JobOutcome::Simulate(out)) = &info.outcome {
        println!(
            "simulate done: t = {}, {} steps, max H3 = {:.6}",
            out.final_time, out.steps, out.max_h3
        );
        if out.norm_growth_flagged {
            println!("note: H3 monitor exceeded the growth limit during the run");
        }
        println!("log: {}", out.log_path);
        for p in &out.snapshot_paths {
            println!("snapshot: {p}");
        }
    }
}

fn print_sweep(info: &JobInfo) -> Option<Verdict> {
    if let Some(JobOutcome::Sweep(out)) = &info.outcome {
        for fit in &out.fits {
            match fit.slope {
                Some(slope) => println!(
                    "t = {}: slope = {:.4}, C = {:.4e}, ratio non-increasing = {}, verdict = {:?}",
                    fit.at_time,
                    slope,
                    fit.constant.unwrap_or(f64::NAN),
                    fit.ratio_non_increasing,
                    fit.verdict
                ),
                None => println!(
                    "t = {}: all errors zero (infinite decay), verdict = {:?}",
                    fit.at_time, fit.verdict
                ),
            }
        }
        println!("report: {}", out.report_csv);
        println!("report: {}", out.report_json);
        Some(out.overall_verdict)
    } else {
        None
    }
}

fn print_verify(info: &JobInfo) -> bool {
    if let Some(JobOutcome::Verify(out)) = &info.outcome {
        println!(
            "validation: {} (div = {:.3e}, traces = {:.3e})",
            if out.validation.pass { "pass" } else { "FAIL" },
            out.validation.divergence_l2,
            out.validation
                .u3_wall
                .max(out.validation.du1_dz_wall)
                .max(out.validation.du2_dz_wall)
                .max(out.validation.drho_dz_wall)
        );
        for failure in &out.validation.failures {
            println!("  - {failure}");
        }
        println!(
            "invariant run: {} steps, max div = {:.3e}, max trace = {:.3e}, mean drift = {:.3e}",
            out.steps, out.max_divergence, out.max_trace_residual, out.mean_density_drift
        );
        println!("report: {}", out.report_path);
        println!("verify: {}", if out.pass { "PASS" } else { "FAIL" });
        out.pass
    } else {
        false
    }
}
