pub mod config;

use std::path::{Path, PathBuf};

use multilevel_control::experiments::{run_scenario, write_atomic, write_report, ScenarioReport, SCENARIOS};
use serde::Serialize;

pub use config::UserConfig;

/// Failure reported as JSON on stderr and, for runs, as `{scenario}_{seed}.error.json`.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{kind}: {}{message}", key.as_ref().map(|k| format!("{k}: ")).unwrap_or_default())]
pub struct CliError {
    pub kind: String,
    pub key: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &str, key: Option<&str>, message: String) -> Self {
        Self { kind: kind.to_string(), key: key.map(str::to_string), message }
    }

    pub fn config(key: &str, message: String) -> Self {
        Self::new("config", Some(key), message)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<multilevel_control::Error> for CliError {
    fn from(e: multilevel_control::Error) -> Self {
        let key = match &e {
            multilevel_control::Error::InvalidParameter { name, .. } => Some(name.as_str()),
            _ => None,
        };
        CliError::new(e.kind(), key, e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: String,
    pub config: UserConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    /// Defaults, then the config file, then each `key=value` in order.
    pub fn parse(
        scenario: &str,
        file: Option<&Path>,
        sets: &[String],
        seed: u64,
        out: PathBuf,
    ) -> Result<Self, CliError> {
        if !SCENARIOS.iter().any(|s| s.name == scenario) {
            return Err(CliError::new("unknown-scenario", Some("scenario"), format!("'{scenario}'; see `mlctl list`")));
        }
        let mut config = UserConfig::default();
        if let Some(path) = file {
            config.apply_file(path)?;
        }
        for s in sets {
            config.set_flag(s)?;
        }
        config.to_scenario().validate()?;
        Ok(Self { scenario: scenario.to_string(), config, seed, out })
    }

    pub fn stem(&self) -> String {
        format!("{}_{}", self.scenario, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ScenarioReport,
    pub files: Vec<PathBuf>,
}

/// Runs the scenario and writes `{stem}.json`, `{stem}.csv` (when tabular) and the
/// effective user-unit configuration `{stem}.config.json`, which `--config` accepts back.
pub fn run(rc: &RunConfig) -> Result<RunOutput, CliError> {
    let mut report = run_scenario(&rc.scenario, &rc.config.to_scenario(), rc.seed)?;
    let config_name = format!("{}.config.json", rc.stem());
    report.artifacts.push(config_name.clone());
    std::fs::create_dir_all(&rc.out).map_err(io_error(&rc.out))?;
    let mut files = write_report(&report, &rc.out)?;
    files.push(write_atomic(&rc.out, &config_name, rc.config.to_json().as_bytes())?);
    Ok(RunOutput { report, files })
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::new("io", None, format!("{}: {e}", path.display()))
}

/// Best-effort `{stem}.error.json` next to where the report would have gone.
pub fn write_error_file(out: &Path, stem: &str, err: &CliError) -> Option<PathBuf> {
    std::fs::create_dir_all(out).ok()?;
    write_atomic(out, &format!("{stem}.error.json"), err.to_json().as_bytes()).ok()
}

pub fn list_scenarios() -> String {
    let width = SCENARIOS.iter().map(|s| s.name.len()).max().unwrap_or(0);
    SCENARIOS.iter().map(|s| format!("{:<width$}  {}\n", s.name, s.anchor)).collect()
}
