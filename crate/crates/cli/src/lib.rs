//! Config-driven experiment runner for `brwre-core`.
//!
//! Every command reads a [`ConfigDoc`], writes its artifacts into the
//! config's output directory and records them in `manifest.json`. `report`
//! turns a directory holding the outputs of `check`, `shape`, `beta`,
//! `classify` and `simulate` into `summary.txt` plus SVG plots.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod svg;

use brwre_core::environment::EnvironmentField;

pub use config::{CommandDoc, ConfigDoc, Overrides};
pub use error::{CliError, CliResult};

/// Exit status for an inconclusive or boundary classification.
pub const EXIT_INCONCLUSIVE: i32 = 4;

pub struct RunOutput {
    pub stdout: String,
    pub exit_code: i32,
}

fn workers(config: &ConfigDoc) -> usize {
    config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Validates `config` and runs its command.
pub fn run_command(config: &ConfigDoc) -> CliResult<RunOutput> {
    if let CommandDoc::Report = config.command {
        let text = report::report(&config.output_dir, Some(config))?;
        return Ok(RunOutput {
            stdout: text,
            exit_code: 0,
        });
    }
    let spec = config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(config))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let mut rec = manifest::Recorder::new(&config.output_dir)?;
    let outcome = pool.install(|| -> CliResult<commands::Outcome> {
        if let CommandDoc::Check = config.command {
            return commands::check(&spec, &mut rec);
        }
        if let CommandDoc::Classify(p) = &config.command {
            return commands::classify(&spec, p, &mut rec);
        }
        rec.stage("environment");
        let env = EnvironmentField::new(spec.clone())?;
        match &config.command {
            CommandDoc::Solve(p) => commands::solve(&env, p, &mut rec),
            CommandDoc::Shape(p) => commands::shape(&env, p, &mut rec),
            CommandDoc::Beta(p) => commands::beta(&env, p, &mut rec),
            CommandDoc::Simulate(p) => commands::simulate(&env, p, &mut rec),
            CommandDoc::Check | CommandDoc::Classify(_) | CommandDoc::Report => unreachable!(),
        }
    })?;
    rec.finish(config)?;
    let mut stdout = serde_json::to_string_pretty(&outcome.stdout)?;
    stdout.push('\n');
    Ok(RunOutput {
        stdout,
        exit_code: if outcome.inconclusive { EXIT_INCONCLUSIVE } else { 0 },
    })
}
