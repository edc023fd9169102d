use clap::{Args, Parser, Subcommand};
use gdl::config::TaskKind;
use gdl::{run_experiment, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Heavy-tailed lattice spin dynamics: rate functions, decay envelopes,
/// simulation experiments and small-system oracles.
#[derive(Parser)]
#[command(name = "gdl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the seed in the [params] block.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (also: GDL_THREADS). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a composed rate function to CSV (s, beta).
    Rates(CommonArgs),
    /// Tabulate a decay envelope to CSV (t, bound, s_star).
    Envelope(CommonArgs),
    /// Estimate a variance-decay series to CSV (t, var, se).
    Simulate(CommonArgs),
    /// Tabulate the finite-speed bound vs the cube size.
    Propagation(CommonArgs),
    /// Run a named quadrature check and emit a JSON verdict.
    Oracle(CommonArgs),
    /// Full decay-shape experiment: series, exponent fits, envelope verdicts.
    DecayStudy(CommonArgs),
}

impl Command {
    fn task(&self) -> TaskKind {
        match self {
            Command::Rates(_) => TaskKind::Rates,
            Command::Envelope(_) => TaskKind::Envelope,
            Command::Simulate(_) => TaskKind::Simulate,
            Command::Propagation(_) => TaskKind::Propagation,
            Command::Oracle(_) => TaskKind::Oracle,
            Command::DecayStudy(_) => TaskKind::DecayStudy,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Rates(a)
            | Command::Envelope(a)
            | Command::Simulate(a)
            | Command::Propagation(a)
            | Command::Oracle(a)
            | Command::DecayStudy(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();
    let overrides = Overrides {
        seed: args.seed,
        out_dir: args.out.clone(),
        threads: args.threads,
        expected_task: Some(cli.command.task()),
    };
    match run_experiment(&args.config, &overrides) {
        Ok(outcome) => {
            for path in &outcome.artifacts {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
