//! Experiment CLI: `sqnkit generate | run | compare`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sqnkit::harness::{cmd_compare, cmd_generate, cmd_run, load_config, Overrides};
use sqnkit::Error;

#[derive(Parser)]
#[command(name = "sqnkit", version, about = "Stochastic damped L-BFGS experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Override the output directory.
    #[arg(long = "out")]
    out_dir: Option<PathBuf>,
    /// Restrict to these algorithm names (repeatable).
    #[arg(long = "algo")]
    algorithms: Vec<String>,
    /// Override the metrics cadence.
    #[arg(long = "eval-every")]
    eval_every: Option<u64>,
}

impl CommonArgs {
    fn resolve(&self) -> sqnkit::Result<sqnkit::harness::ExperimentConfig> {
        let config = load_config(&self.config)?;
        let overrides = Overrides {
            seeds: self.seeds.clone(),
            out_dir: self.out_dir.clone(),
            algorithms: self.algorithms.clone(),
            eval_every: self.eval_every,
        };
        overrides.apply(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic train/test datasets plus metadata.
    Generate(CommonArgs),
    /// Run every configured (algorithm, seed) pair and emit CSV traces.
    Run(CommonArgs),
    /// Merge existing traces into one long-format comparison CSV.
    Compare(CommonArgs),
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_ALL_DIVERGED: u8 = 4;

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Argument(_) | Error::Schedule { .. } => EXIT_CONFIG,
        Error::Data { .. }
        | Error::Parse { .. }
        | Error::Label { .. }
        | Error::Io(_)
        | Error::Dimension { .. }
        | Error::IndexOutOfRange { .. } => EXIT_DATA,
        _ => 1,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(args) => {
            let config = args.resolve()?;
            let files = cmd_generate(&config)?;
            println!("wrote {}", files.train.display());
            println!("wrote {}", files.test.display());
            println!("wrote {}", files.xbar.display());
            println!("wrote {}", files.metadata.display());
        }
        Command::Run(args) => {
            let config = args.resolve()?;
            let outcome = cmd_run(&config)?;
            for row in &outcome.summaries {
                println!(
                    "{} seed {}: iterations {}, final SNG {:.6e}, accuracy {:.4}, \
                     SFO calls {}, damped {}, s'y<0 {}{}",
                    row.algorithm,
                    row.seed,
                    row.iterations,
                    row.final_sng,
                    row.final_accuracy,
                    row.sfo_total,
                    row.damped_steps,
                    row.negative_curvature_steps,
                    if row.diverged { " [DIVERGED]" } else { "" },
                );
            }
            println!("summary: {}", outcome.summary_path.display());
            if outcome.all_diverged {
                eprintln!("error: every run diverged");
                return Ok(EXIT_ALL_DIVERGED);
            }
        }
        Command::Compare(args) => {
            let config = args.resolve()?;
            let path = cmd_compare(&config)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
