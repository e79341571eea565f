//! `storalloc`: feasibility checks, simulations, exact verification and
//! reference-table reproduction for the storage allocation game.

mod check;
mod horizon;
mod reproduce;
mod runs;
mod simulate;
mod spec;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use storalloc::dynamics::{GammaSchedule, MoveVariant};

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "STORALLOC_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "storalloc",
    version,
    about = "Storage allocation game: feasibility, dynamics and exact checks",
    after_help = "Exit status: 0 success, 1 usage or I/O error, 2 negative verdict (infeasible instance or failed property)."
)]
struct Cli {
    /// Worker threads for replications (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether every demand can be placed; exit 2 if not.
    Check {
        /// Instance file (TOML).
        instance: PathBuf,
    },
    /// Run the replications described by an experiment file.
    Simulate {
        /// Experiment file (TOML).
        spec: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        out: OutFlag,
    },
    /// Enumerate a small instance and check the chain against its closed-form law.
    Verify(verify::VerifyArgs),
    /// Rerun a reference table (1 to 4) and compare with its reference values.
    Reproduce {
        /// Table number: 1 complete graph, 2 regular graph, 3 mixed demand, 4 scaling.
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        table: u8,
        #[command(flatten)]
        run: RunFlags,
        /// Also write the comparison as CSV to this directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

/// Overrides for the dynamics settings of an experiment.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// Seed of the first replication; replication i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replications.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub replications: Option<u64>,
    /// Initial inverse noise of the annealing schedule.
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Per-step increase of the inverse noise [default: 1/(100 max lambda)].
    #[arg(long)]
    pub gamma_increment: Option<f64>,
    /// Rule choosing between allocating and relocating.
    #[arg(long, value_parser = ["proportional", "allocate-first"])]
    pub variant: Option<String>,
    /// Steps per run, e.g. 5000 or "2*sum_alpha" (also n, sum_beta, + and *).
    #[arg(long, value_name = "EXPR")]
    pub horizon: Option<String>,
    /// Record every step to traces/seed-<s>.csv.
    #[arg(long)]
    pub trace: bool,
}

impl RunFlags {
    pub fn variant(&self) -> Option<MoveVariant> {
        self.variant.as_deref().map(|v| v.parse().expect("restricted by clap"))
    }

    /// Applies `--gamma0` / `--gamma-increment`; either switches the schedule
    /// to annealing.
    pub fn schedule(&self, base: GammaSchedule) -> GammaSchedule {
        if self.gamma0.is_none() && self.gamma_increment.is_none() {
            return base;
        }
        let (g0, inc) = match base {
            GammaSchedule::Annealed { gamma0, increment } => (gamma0, increment),
            _ => (1.0, None),
        };
        GammaSchedule::Annealed {
            gamma0: self.gamma0.unwrap_or(g0),
            increment: self.gamma_increment.or(inc),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutFlag {
    /// Output directory [default: the experiment's output.dir, else ./storalloc-out].
    #[arg(long, value_name = "DIR", env = OUT_ENV)]
    pub out: Option<PathBuf>,
}

/// Outcome of a command that completed without error.
pub enum Verdict {
    Positive,
    Negative,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Check { instance } => check::run(&instance),
        Command::Simulate { spec, run, out } => simulate::run(&spec, &run, out.out, cli.threads),
        Command::Verify(args) => verify::run(&args),
        Command::Reproduce { table, run, out } => reproduce::run(table, &run, out, cli.threads),
    };
    match result {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
