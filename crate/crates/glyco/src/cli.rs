//! Command-line front end. Exit codes: 0 success, 1 some patients or a stage
//! failed, 2 invalid config.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{DataSource, ExperimentConfig, OUTPUT_ENV};
use crate::error::Result;
use crate::experiment::{self, Outcome};
use crate::render;

#[derive(Debug, Parser)]
#[command(name = "glyco", version, about = "Multi-step glucose forecasting experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate the synthetic cohort as raw CSV files.
    Synth(Common),
    /// Resample, clean and split every patient.
    Preprocess(Common),
    /// Grid-search every configured model and save the selected ones.
    Train(Common),
    /// Score saved models on the test days, raw and smoothed.
    Evaluate(Common),
    /// Summary tables and SVG figures from the evaluation files.
    Report(Common),
    /// Preprocess, train, evaluate and report in one go.
    Grid(Common),
}

#[derive(Debug, Clone, PartialEq, Eq, clap::Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; takes precedence over GLYCO_OUT and the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed and the synthetic cohort seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Synth(c)
            | Command::Preprocess(c)
            | Command::Train(c)
            | Command::Evaluate(c)
            | Command::Report(c)
            | Command::Grid(c) => c,
        }
    }
}

/// Loads the config and applies the command-line overrides.
pub fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
        if let DataSource::Synthetic(s) = &mut config.data {
            s.seed = Some(seed);
        }
    }
    config.validate()?;
    Ok(config)
}

/// Runs one subcommand; `env_out` is the value of `GLYCO_OUT`.
pub fn execute(command: &Command, env_out: Option<&str>) -> Result<Outcome> {
    let common = command.common();
    let config = load_config(common)?;
    let out = config.resolve_output_dir(common.out.as_deref(), env_out);
    let jobs = common.jobs.map(|j| j as usize);
    log::info!("output directory {}", out.display());
    match command {
        Command::Synth(_) => experiment::run_synth(&config, &out),
        Command::Preprocess(_) => experiment::run_preprocess(&config, &out, jobs),
        Command::Train(_) => experiment::run_train(&config, &out, jobs),
        Command::Evaluate(_) => experiment::run_evaluate(&config, &out, jobs),
        Command::Report(_) => {
            let summary = render::run_report(&out)?;
            Ok(Outcome {
                patients: summary.iter().map(|r| r.patients).max().unwrap_or(0),
                failures: Vec::new(),
            })
        }
        Command::Grid(_) => experiment::run_experiment(&config, &out, jobs),
    }
}

pub fn exit_code(result: &Result<Outcome>) -> u8 {
    match result {
        Ok(o) if o.is_success() => 0,
        Ok(_) => 1,
        Err(e) if e.is_config() => 2,
        Err(_) => 1,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let env_out = std::env::var(OUTPUT_ENV).ok();
    let result = execute(&cli.command, env_out.as_deref());
    match &result {
        Ok(o) if o.is_success() => log::info!("done: {} patients", o.patients),
        Ok(o) => log::error!("{} of {} patients failed", o.failures.len(), o.patients),
        Err(e) => eprintln!("glyco: {e}"),
    }
    ExitCode::from(exit_code(&result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_common_flags() {
        let cli = Cli::try_parse_from(["glyco", "grid", "--config", "c.json", "--seed", "7", "--jobs", "2"]).unwrap();
        let c = cli.command.common();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.jobs, Some(2));
        assert!(Cli::try_parse_from(["glyco", "grid", "--config", "c.json", "--jobs", "0"]).is_err());
        assert!(Cli::try_parse_from(["glyco", "grid"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(Outcome { patients: 2, failures: vec![] })), 0);
        let partial = Outcome {
            patients: 2,
            failures: vec![("a".into(), "boom".into())],
        };
        assert_eq!(exit_code(&Ok(partial)), 1);
        assert_eq!(exit_code(&Err(Error::Config("x".into()))), 2);
        assert_eq!(exit_code(&Err(Error::Missing("r.csv".into()))), 1);
    }
}
