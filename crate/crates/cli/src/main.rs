use std::path::PathBuf;
use std::process::ExitCode;

use brwre_cli::{run_command, CliError, CliResult, CommandDoc, ConfigDoc, Overrides};
use clap::{Args, Parser, Subcommand};

/// Branching random walks in random environment: exact expectations,
/// shapes, growth exponents, classification and simulation.
#[derive(Parser)]
#[command(name = "brwre", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the command named in the config file.
    Run(Common),
    /// Check the standing conditions of the environment.
    Check(Common),
    /// Exact expected particle counts, layer by layer.
    Solve(Common),
    /// Passage times and shape hulls over a grid of thresholds.
    Shape(Common),
    /// Local growth exponent profile, B hull and growth verdict.
    Beta(Common),
    /// Explicit transience criterion (i.i.d. environments).
    Classify(Common),
    /// Particle-level Monte Carlo.
    Simulate(Common),
    /// Summary text and SVG plots for an output directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(short, long)]
    config: PathBuf,
    /// Master seed; overrides BRWRE_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated threshold grid for `shape`.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// Horizon for `solve`, `beta` and `simulate`.
    #[arg(long)]
    horizon: Option<usize>,
    /// Replica count for `simulate`.
    #[arg(long)]
    replicas: Option<u64>,
    /// Print the effective config and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory to summarise; taken from the config when omitted.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(short, long)]
    config: Option<PathBuf>,
}

fn load_config(path: &PathBuf) -> CliResult<ConfigDoc> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ConfigDoc::from_json(&text)
}

/// The config's own parameters when it names `name`, defaults otherwise.
fn retarget(config: &mut ConfigDoc, name: &str) {
    if config.command.name() != name {
        config.command = CommandDoc::default_for(name).expect("known subcommand");
    }
}

fn effective(args: &Common, name: Option<&str>) -> CliResult<ConfigDoc> {
    let mut config = load_config(&args.config)?;
    if let Some(name) = name {
        retarget(&mut config, name);
    }
    let overrides = Overrides {
        seed: args.seed,
        output_dir: args.output_dir.clone(),
        workers: args.workers,
        deltas: args.deltas.clone(),
        horizon: args.horizon,
        replicas: args.replicas,
    };
    let env_seed = std::env::var("BRWRE_SEED").ok();
    config.apply_overrides(&overrides, env_seed.as_deref())?;
    Ok(config)
}

fn execute(cli: Cli) -> CliResult<i32> {
    let (args, name) = match &cli.command {
        Cmd::Run(a) => (a, None),
        Cmd::Check(a) => (a, Some("check")),
        Cmd::Solve(a) => (a, Some("solve")),
        Cmd::Shape(a) => (a, Some("shape")),
        Cmd::Beta(a) => (a, Some("beta")),
        Cmd::Classify(a) => (a, Some("classify")),
        Cmd::Simulate(a) => (a, Some("simulate")),
        Cmd::Report(r) => {
            let config = r.config.as_ref().map(load_config).transpose()?;
            let dir = match (&r.output_dir, &config) {
                (Some(d), _) => d.clone(),
                (None, Some(c)) => c.output_dir.clone(),
                (None, None) => return Err(CliError::Config("report needs --output-dir or --config".into())),
            };
            let config = config.map(|mut c| {
                c.output_dir = dir.clone();
                c.command = CommandDoc::Report;
                c
            });
            let text = brwre_cli::report::report(&dir, config.as_ref())?;
            print!("{text}");
            return Ok(0);
        }
    };
    let config = effective(args, name)?;
    if args.dry_run {
        config.validate()?;
        println!("{}", config.to_canonical_json());
        return Ok(0);
    }
    let out = run_command(&config)?;
    print!("{}", out.stdout);
    Ok(out.exit_code)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
