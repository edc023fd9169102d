//! Experiment runner: parses a config, dispatches the task, persists
//! deterministic artifacts with metadata sidecars.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod tasks;

use artifacts::ArtifactWriter;
use config::{ExperimentConfig, TaskKind};
use error::CliError;
use std::path::{Path, PathBuf};

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    /// When set (by the subcommand), the config's task must match.
    pub expected_task: Option<TaskKind>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub task: TaskKind,
    pub artifacts: Vec<PathBuf>,
}

/// Reads, validates and runs one experiment. Nothing is written before the
/// whole configuration has validated.
pub fn run_experiment(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Io(format!("read {config_path:?}: {e}")))?;
    run_experiment_from_str(&text, overrides)
}

pub fn run_experiment_from_str(
    config_text: &str,
    overrides: &Overrides,
) -> Result<RunOutcome, CliError> {
    init_threads(overrides.threads);

    let cfg: ExperimentConfig =
        toml::from_str(config_text).map_err(|e| CliError::Config(format!("parse config: {e}")))?;
    cfg.validate_shape().map_err(CliError::Config)?;
    if let Some(expected) = overrides.expected_task {
        if expected != cfg.task {
            return Err(CliError::Config(format!(
                "config declares task '{}' but the subcommand was '{}'",
                cfg.task.name(),
                expected.name()
            )));
        }
    }

    // Full validation before any computation or output.
    let mut params = cfg.params;
    if let Some(p) = params.as_mut() {
        if let Some(seed) = overrides.seed {
            p.seed = seed;
        }
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(model) = &cfg.model {
        model.build().map_err(|e| CliError::Config(e.to_string()))?;
    }

    let out_dir = overrides.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut writer = ArtifactWriter::new(
        out_dir,
        cfg.out_prefix.clone(),
        config_text,
        params.as_ref().map(|p| p.seed),
    );

    match cfg.task {
        TaskKind::Rates => tasks::rates::run(cfg.rates.as_ref().unwrap(), &mut writer)?,
        TaskKind::Envelope => tasks::envelope::run(cfg.envelope.as_ref().unwrap(), &mut writer)?,
        TaskKind::Simulate => {
            tasks::simulate::run(
                cfg.simulate.as_ref().unwrap(),
                cfg.model.as_ref().unwrap(),
                params.as_ref().unwrap(),
                &mut writer,
            )?;
        }
        TaskKind::Propagation => {
            tasks::propagation::run(cfg.propagation.as_ref().unwrap(), &mut writer)?
        }
        TaskKind::Oracle => {
            tasks::oracle::run(cfg.oracle.as_ref().unwrap(), cfg.model.as_ref().unwrap(), &mut writer)?
        }
        TaskKind::DecayStudy => {
            tasks::decay_study::run(
                cfg.decay_study.as_ref().unwrap(),
                cfg.model.as_ref().unwrap(),
                params.as_ref().unwrap(),
                &mut writer,
            )?;
        }
    }

    Ok(RunOutcome { task: cfg.task, artifacts: writer.written })
}

/// Worker-pool size: --threads beats GDL_THREADS beats the rayon default.
/// Results never depend on it; only wall time does.
fn init_threads(cli_threads: Option<usize>) {
    let n = cli_threads.or_else(|| {
        std::env::var("GDL_THREADS").ok().and_then(|v| v.parse::<usize>().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
