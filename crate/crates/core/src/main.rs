use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdsec::experiment::{
    emit_convergence_trace, run_experiment, ExperimentConfig, RunOptions, QUICK_TRIALS,
};
use fdsec::oracle::{render, run_suite};
use fdsec::Error;

#[derive(Parser)]
#[command(name = "fdsec", version, about = "Robust secure full-duplex beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write per-trial and aggregate CSVs.
    Run(RunArgs),
    /// Write per-iteration BCD objective values for every trial.
    Trace(RunArgs),
    /// Run the oracle suite; exits nonzero on any violation.
    Verify {
        /// Only run checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        verbose: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key=value experiment file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run 20 trials per sweep value.
    #[arg(long)]
    quick: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
    /// Record per-trial wall time (output no longer byte-reproducible).
    #[arg(long)]
    timing: bool,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, RunOptions), Error> {
    let mut c = ExperimentConfig::load(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    if args.quick {
        c.trials = QUICK_TRIALS;
    }
    if let Some(t) = args.trials {
        c.trials = t;
    }
    if let Some(s) = args.seed {
        c.base_seed = s;
    }
    if let Some(o) = &args.out {
        c.output_path = o.clone();
    }
    c.validate()?;
    let opts = RunOptions {
        jobs: args.jobs.unwrap_or(0),
        timing: args.timing,
    };
    Ok((c, opts))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            init_logging(args.verbose);
            let (c, opts) = load(&args)?;
            let res = run_experiment(&c, &opts)?;
            println!("{:>12} {:>10} {:>10} {:>10} {:>5} {:>5} {:>6}", c.sweep.name(), "method", "mean_r_w", "std_r_w", "ok", "fail", "iters");
            for a in &res.aggregates {
                println!(
                    "{:>12} {:>10} {:>10.4} {:>10.4} {:>5} {:>5} {:>6.2}",
                    a.sweep_value,
                    a.method.name(),
                    a.mean_r_w,
                    a.std_r_w,
                    a.n_ok,
                    a.n_fail,
                    a.mean_bcd_iters
                );
            }
            println!("wrote {} and {}", c.trials_path().display(), c.aggregate_path().display());
            Ok(())
        }
        Command::Trace(args) => {
            init_logging(args.verbose);
            let (c, opts) = load(&args)?;
            let rows = emit_convergence_trace(&c, &opts)?;
            println!("wrote {} rows to {}", rows.len(), c.trace_path().display());
            Ok(())
        }
        Command::Verify { filter, seed, verbose } => {
            init_logging(verbose);
            let reports = run_suite(filter.as_deref(), seed)?;
            print!("{}", render(&reports));
            if reports.is_empty() {
                return Err(Error::Config(format!("no oracle check matches {filter:?}")));
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(Error::Solver(format!("{failed} oracle check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
