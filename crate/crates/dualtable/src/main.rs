use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dualtable::bench::{bench_sweep, write_bench_csv, BenchSpec};
use dualtable::calibrate::{calibrate, PROBE_BYTES};
use dualtable::config::Config;
use dualtable::engine::Database;
use dualtable::error::Error;
use dualtable::script::{describe_report, repl, run_script};
use dualtable_core::ModOp;

const DEFAULT_CONFIG: &str = "dualtable.toml";

#[derive(Parser)]
#[command(name = "dualtable", version, about = "Hybrid master/attached table engine")]
struct Cli {
    /// Config file of `key = value` lines. Defaults to ./dualtable.toml if present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set R_M=2e9`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a script; SELECT results go to stdout as CSV.
    Run { script: PathBuf },
    /// Interactive session reading statements from stdin.
    Repl,
    /// Ratio sweep under forced EDIT, forced OVERWRITE and the cost model.
    Bench(BenchArgs),
    /// Merge a table's attached store into its master segments.
    Compact { table: String },
    /// Measure store throughput and print config lines for the rates.
    Calibrate {
        /// Probe size in bytes per store.
        #[arg(long, default_value_t = PROBE_BYTES)]
        bytes: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Update,
    Delete,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    op: OpArg,
    #[arg(long, default_value_t = 100_000)]
    rows: u64,
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Comma-separated ratios in [0, 1].
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    /// Successive reads after each modification; defaults to k_default.
    #[arg(long)]
    k: Option<u32>,
    /// Extra config file with the rates to use.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    reps: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Concurrent grid points; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
    /// Scratch directory; defaults to a fresh directory under the system temp dir.
    #[arg(long)]
    work_dir: Option<PathBuf>,
}

/// Failure classified for the exit status: 1 for user errors, 2 otherwise.
struct Failure {
    message: String,
    user: bool,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            user: e.is_user_error(),
            message: e.to_string(),
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None if Path::new(DEFAULT_CONFIG).exists() => Config::load(Path::new(DEFAULT_CONFIG))?,
        None => Config::default(),
    };
    for pair in &cli.overrides {
        config.set_pair(pair)?;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Run { script } => {
            let text = std::fs::read_to_string(&script).map_err(|e| Failure {
                message: format!("{}: {e}", script.display()),
                user: true,
            })?;
            let mut db = Database::open(config)?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            run_script(&mut db, &text, &mut out).map_err(|e| Failure {
                user: e.error.is_user_error(),
                message: e.to_string(),
            })?;
            out.flush().map_err(|e| Error::io("<stdout>", e))?;
        }
        Command::Repl => {
            let mut db = Database::open(config)?;
            let stdin = io::stdin();
            repl(&mut db, &mut stdin.lock(), &mut io::stdout(), &mut io::stderr())
                .map_err(|e| Error::io("<stdio>", e))?;
        }
        Command::Compact { table } => {
            let mut db = Database::open(config)?;
            let report = db.compact(&table)?;
            eprintln!("{}", describe_report(&report));
        }
        Command::Calibrate { bytes } => {
            let rates = calibrate(&config.data_dir, bytes)?;
            print!("{}", rates.to_config_text());
        }
        Command::Bench(args) => {
            if let Some(p) = &args.params {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                config.apply_text(&text)?;
            }
            let work_dir = args
                .work_dir
                .clone()
                .unwrap_or_else(|| std::env::temp_dir().join(format!("dualtable-bench-{}", std::process::id())));
            let spec = BenchSpec {
                op: match args.op {
                    OpArg::Update => ModOp::Update,
                    OpArg::Delete => ModOp::Delete,
                },
                rows: args.rows,
                cols: args.cols,
                grid: args.grid,
                k: args.k.unwrap_or(config.k_default),
                config,
                repetitions: args.reps,
                seed: args.seed,
                work_dir: work_dir.clone(),
                threads: args
                    .threads
                    .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            };
            let rows = bench_sweep(&spec);
            let _ = std::fs::remove_dir_all(&work_dir);
            write_bench_csv(&rows?, &mut io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(if f.user { 1 } else { 2 })
        }
    }
}
