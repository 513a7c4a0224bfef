use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use invpress_core::experiment::{self, Command, RunOptions};

const AFTER_HELP: &str = "\
Outputs (written atomically into --out):
  report.json    command result; identical configs give byte-identical reports
  per_n.csv      columns n,a_lower,a_upper,exact,log_a_over_n
                 (sweep: value,n,a_lower,a_upper,exact,log_a_over_n;
                  properties: property,fixture,status,checks;
                  linear-formula: quantity,value)
  manifest.json  config hash (SHA-256 of canonical JSON), version, timestamps,
                 budgets, per-stage work and exhaustiveness flags

Exit codes: 0 success, 1 configuration or runtime error, 2 infeasible (no spanning family).";

#[derive(Parser)]
#[command(name = "invpress", version, about = "Invariance pressure estimates for quantized control systems", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the branch-and-bound node budget.
    #[arg(long = "budget-nodes")]
    budget_nodes: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pressure estimate in the configured mode.
    Estimate(Common),
    /// Same as estimate with a zero weight.
    Entropy(Common),
    /// Outer pressure along an epsilon ladder.
    Outer(Common),
    /// Feedback pressure from invariant covers.
    Feedback(Common),
    /// Property battery on random table systems.
    Properties(Common),
    /// Closed-form value for linear systems.
    LinearFormula(Common),
    /// Repeats estimate over a list of parameter values.
    Sweep(Common),
}

impl Cmd {
    fn split(self) -> (Command, Common) {
        match self {
            Cmd::Estimate(c) => (Command::Estimate, c),
            Cmd::Entropy(c) => (Command::Entropy, c),
            Cmd::Outer(c) => (Command::Outer, c),
            Cmd::Feedback(c) => (Command::Feedback, c),
            Cmd::Properties(c) => (Command::Properties, c),
            Cmd::LinearFormula(c) => (Command::LinearFormula, c),
            Cmd::Sweep(c) => (Command::Sweep, c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (command, common) = cli.command.split();
    let opts = RunOptions {
        threads: common.threads,
        node_budget: common.budget_nodes,
    };
    match experiment::run(command, &common.config, &common.out, &opts) {
        Ok(out) => {
            println!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiment::exit_code(&e) as u8)
        }
    }
}
