use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gwpt::config::{preset_text, ExperimentConfig};
use gwpt::experiment::{self, ExperimentError, RunOptions};

#[derive(Parser)]
#[command(name = "gwpt", about = "Gaussian wave packet transform experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the summation curve against its cosine series and bounds.
    Summation(Common),
    /// Reconstruction error sweep over rules and grid sizes.
    Sweep(Common),
    /// Compare analytic overlaps of random packet pairs with a quadrature oracle.
    OverlapCheck(OverlapArgs),
    /// Sup error of the exact semi-discrete representation.
    SemiDiscreteCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file in `namespace.key = value` form.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, value_parser = ["example1", "example2"])]
    preset: Option<String>,
    /// Override a single field, e.g. `--set box.M=32`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output CSV path; defaults to `output.path` or standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Sample points per dimension for the sup norm.
    #[arg(long)]
    samples: Option<usize>,
    /// Fill the wall_time_s column (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct OverlapArgs {
    #[arg(long, default_value_t = 200)]
    pairs_1d: usize,
    #[arg(long, default_value_t = 50)]
    pairs_2d: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, message) = match self {
            Failure::Config(m) => (2, format!("configuration error: {m}")),
            Failure::Numeric(m) => (3, m),
            Failure::Io(m) => (1, m),
        };
        eprintln!("gwpt: {message}");
        ExitCode::from(code)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) => Failure::Config(e.to_string()),
            ExperimentError::Numeric { .. } => Failure::Numeric(e.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = match (&common.config, &common.preset) {
        (Some(path), _) => fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => preset_text(name).map_err(|e| Failure::Config(e.to_string()))?.to_string(),
        (None, None) => return Err(Failure::Config("give --config PATH or --preset NAME".into())),
    };
    ExperimentConfig::parse_with_overrides(&text, &common.overrides).map_err(|e| Failure::Config(e.to_string()))
}

fn write_output(path: Option<PathBuf>, fallback: Option<&str>, csv: &str) -> Result<(), Failure> {
    match path.or_else(|| fallback.map(PathBuf::from)) {
        Some(path) => fs::write(&path, csv).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Io(e.to_string()))?;
    Ok(pool.install(f))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::OverlapCheck(args) => {
            let rows = with_jobs(args.jobs, || experiment::overlap_comparisons(args.seed, args.pairs_1d, args.pairs_2d))?
                .map_err(|e| Failure::Numeric(e.to_string()))?;
            write_output(args.out, None, &experiment::overlap_csv(&rows))
        }
        Command::Summation(common) | Command::Sweep(common) | Command::SemiDiscreteCheck(common)
            if common.samples.is_some_and(|s| s < 2) =>
        {
            Err(Failure::Config("--samples must be at least 2".into()))
        }
        Command::Summation(common) => {
            let config = load(&common)?;
            let options = RunOptions { samples: common.samples, timing: false };
            let csv = with_jobs(common.jobs, || experiment::summation_csv(&config, options))??;
            write_output(common.out, config.output.as_deref(), &csv)
        }
        Command::Sweep(common) => {
            let config = load(&common)?;
            let options = RunOptions { samples: common.samples, timing: common.timing };
            let records = with_jobs(common.jobs, || experiment::run_sweep(&config, options))??;
            write_output(common.out, config.output.as_deref(), &experiment::sweep_csv(&records))
        }
        Command::SemiDiscreteCheck(common) => {
            let config = load(&common)?;
            let options = RunOptions { samples: common.samples, timing: false };
            let csv = with_jobs(common.jobs, || experiment::semi_discrete_csv(&config, options))??;
            write_output(common.out, config.output.as_deref(), &csv)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.report(),
    }
}
