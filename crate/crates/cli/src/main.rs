use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ringavg_cli::commands::{self, cmd_check, cmd_compare, cmd_run, CliError, EXIT_CONFIG};
use ringavg_cli::experiment::{
    AlgorithmArg, ColoringArg, ExperimentSpec, FileFormat, ModeArg, RunSpec, VerbosityArg,
};

#[derive(Parser)]
#[command(
    name = "ringavg",
    version,
    about = "Finite-time gossip averaging on ring networks: run simulations, invariant suites, and algorithm comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulations and write traces plus a metrics summary
    Run(RunArgs),
    /// Run the invariant suites over a sweep and print a pass/fail matrix
    Check(CheckArgs),
    /// Run two or more algorithms on the same input and compare costs
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Spec file (JSON with the ExperimentSpec schema); excludes the
    /// per-run flags below
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Ring size (number of agents, > 2)
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated initial values: p/q or integers in exact mode,
    /// decimals in float mode
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<String>>,
    /// Seed for deterministic pseudo-random initial values (default 0)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Auto)]
    algorithm: AlgorithmArg,
    /// Rounds to run non-terminating baselines for (default 10*m)
    #[arg(long)]
    horizon: Option<usize>,
    /// Coloring for odd rings (presets fig2a/fig2b exist for m=7)
    #[arg(long, value_enum)]
    coloring: Option<ColoringArg>,
    /// Output directory (default: $RINGAVG_OUT or ./ringavg-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace file formats to emit
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Option<Vec<FileFormat>>,
    #[arg(long, value_enum, default_value_t = VerbosityArg::PerIteration)]
    verbosity: VerbosityArg,
}

#[derive(Args)]
struct CheckArgs {
    /// Spec file; without it the default sweep covers every even size in
    /// 4..=64 and every odd size in 3..=63, three seeds each
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Ring size
    #[arg(long)]
    m: usize,
    /// Two or more algorithms to compare
    #[arg(long, value_enum, value_delimiter = ',')]
    algorithms: Vec<AlgorithmArg>,
    /// Seed for deterministic pseudo-random initial values (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated initial values, alternative to --seed
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Rounds to run non-terminating baselines for (default 10*m)
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory for the comparison CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_spec(path: &PathBuf) -> Result<ExperimentSpec, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad spec file {}: {e}", path.display())))
}

fn run_command(args: RunArgs) -> Result<i32, CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            if args.m.is_some() || args.values.is_some() || args.seed.is_some() {
                return Err(CliError::Usage(
                    "--spec excludes --m/--values/--seed".to_string(),
                ));
            }
            load_spec(path)?
        }
        None => {
            let m = args
                .m
                .ok_or_else(|| CliError::Usage("either --spec or --m is required".to_string()))?;
            ExperimentSpec {
                configs: vec![RunSpec {
                    m,
                    values: args.values.clone(),
                    seed: args.seed,
                    mode: args.mode,
                    algorithm: args.algorithm,
                    coloring: args.coloring,
                    horizon: args.horizon,
                }],
                ..Default::default()
            }
        }
    };
    if args.out.is_some() {
        spec.out_dir = args.out.clone();
    }
    if let Some(formats) = &args.format {
        spec.formats = formats.clone();
    }
    cmd_run(&spec, args.verbosity.into())
}

fn check_command(args: CheckArgs) -> Result<i32, CliError> {
    let spec = match &args.spec {
        Some(path) => load_spec(path)?,
        None => ringavg_cli::experiment::default_check_spec(),
    };
    cmd_check(&spec)
}

fn compare_command(args: CompareArgs) -> Result<i32, CliError> {
    let mut runs = Vec::new();
    for algorithm in &args.algorithms {
        let run = RunSpec {
            m: args.m,
            values: args.values.clone(),
            seed: args.seed,
            mode: args.mode,
            algorithm: *algorithm,
            coloring: None,
            horizon: args.horizon,
        }
        .resolve(ringavg_core::Verbosity::FinalOnly)?;
        runs.push(run);
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os(commands::OUT_DIR_ENV).map(PathBuf::from));
    cmd_compare(&runs, out_dir.as_deref())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Check(args) => check_command(args),
        Command::Compare(args) => compare_command(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    }
}
