//! Run configuration: strict-schema JSON in, resolved config echoed out.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{IcPreset, SolverParams};
use crate::spectral::DomainSpec;
use crate::sweep::{default_nu_list, SweepSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),
}

/// Sweep section of the config file. `resolution` falls back to the
/// top-level domain when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_nu_list")]
    pub nu_list: Vec<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub eval_times: Vec<f64>,
    #[serde(default = "default_norm_order")]
    pub norm_order: u32,
    #[serde(default)]
    pub resolution: Option<DomainSpec>,
}

fn default_norm_order() -> u32 {
    2
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Top-level configuration. Unknown keys are rejected everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub domain: DomainSpec,
    pub solver: SolverParams,
    pub ic: IcPreset,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Times at which `simulate` writes FlowState snapshots.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Config {
    /// Build the core sweep spec, applying the domain fallback and the
    /// default evaluation time (t_end).
    pub fn sweep_spec(&self) -> Result<SweepSpec, ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError::Inconsistent("sweep section missing".into()))?;
        let eval_times = if sweep.eval_times.is_empty() {
            vec![sweep.t_end]
        } else {
            sweep.eval_times.clone()
        };
        Ok(SweepSpec {
            nu_list: sweep.nu_list.clone(),
            t_end: sweep.t_end,
            eval_times,
            norm_order: sweep.norm_order,
            ic: self.ic.clone(),
            resolution: sweep.resolution.clone().unwrap_or_else(|| self.domain.clone()),
        })
    }
}

/// Parse a config file with a strict schema; unknown keys are rejected
/// with the offending key named in the message.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let config: Config = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("unknown field") || msg.contains("missing field") {
            ConfigError::Schema(msg)
        } else {
            ConfigError::Json(msg)
        }
    })?;
    validate_config(&config)?;
    Ok(config)
}

fn validate_config(config: &Config) -> Result<(), ConfigError> {
    config
        .domain
        .validate()
        .map_err(|e| ConfigError::Schema(format!("domain: {e}")))?;
    config.solver.validate().map_err(|e| ConfigError::Schema(format!("solver: {e}")))?;
    config.ic.validate().map_err(|e| ConfigError::Schema(format!("ic: {e}")))?;
    for &t in &config.snapshot_times {
        if t < 0.0 || t > config.solver.t_end + 1e-14 {
            return Err(ConfigError::Inconsistent(format!(
                "snapshot time {t} outside [0, t_end = {}]",
                config.solver.t_end
            )));
        }
    }
    if let Some(sweep) = &config.sweep {
        if let Some(res) = &sweep.resolution {
            res.validate().map_err(|e| ConfigError::Schema(format!("sweep.resolution: {e}")))?;
        }
        // Full sweep validation happens when the spec is materialized.
        let spec = config.sweep_spec()?;
        spec.validate().map_err(|e| ConfigError::Schema(e.to_string()))?;
    }
    Ok(())
}

/// The resolved config with every default filled in, as written to the
/// output directory.
pub fn emit_resolved(config: &Config) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("config serializes");
    s.push('\n');
    s
}
