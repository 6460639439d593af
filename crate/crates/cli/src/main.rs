use std::path::PathBuf;
use std::process::ExitCode;

use chatcascade::{set_tolerance, Execution};
use chatcascade_cli::commands::{self, Body, LambdaRange, Output, Settings};
use chatcascade_cli::report::Format;
use chatcascade_cli::scenario::InputError;
use clap::{Parser, Subcommand};

const EXIT_INPUT: u8 = 1;
const EXIT_NO_EQUILIBRIUM: u8 = 2;

/// Solve and sweep cascades of a message through chatrooms.
#[derive(Debug, Parser)]
#[command(name = "chatcascade", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Comparison tolerance for ties and strict inequalities.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Seed for the randomized engine-vs-oracle check run by `validate`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run sweeps on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the cascade from the scenario's root.
    Solve { scenario: PathBuf },
    /// Re-solve while varying the sensitivity of some agents.
    SweepLambda {
        scenario: PathBuf,
        /// Comma-separated agent ids; all agents when omitted.
        #[arg(long, value_delimiter = ',')]
        agents: Vec<u32>,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Root a graph scenario at every agent and compare reach.
    SweepRoot { scenario: PathBuf },
    /// Report every problem in a scenario; exit 0 iff there is none.
    Validate {
        scenario: PathBuf,
        /// Random instances for the oracle check (needs --seed).
        #[arg(long, default_value_t = 500)]
        draws: usize,
    },
    /// Print the scenario in canonical form.
    Normalize { scenario: PathBuf },
}

fn run(cli: &Cli) -> Result<Output, InputError> {
    if let Some(eps) = cli.tolerance {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(InputError::Usage(format!("--tolerance {eps} must be a positive number")));
        }
        set_tolerance(eps);
    }
    let settings = Settings {
        exec: if cli.sequential { Execution::Sequential } else { Execution::Parallel },
        seed: cli.seed,
    };
    match &cli.command {
        Command::Solve { scenario } => commands::solve(scenario),
        Command::SweepLambda {
            scenario,
            agents,
            from,
            to,
            step,
        } => {
            let range = LambdaRange {
                from: *from,
                to: *to,
                step: *step,
            };
            commands::sweep_lambda(scenario, &commands::dedup_agents(agents), &range, &settings)
        }
        Command::SweepRoot { scenario } => commands::sweep_root(scenario, &settings),
        Command::Validate { scenario, draws } => commands::validate(scenario, *draws, &settings),
        Command::Normalize { scenario } => commands::normalize(scenario),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let output = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let text = match &output.body {
        Body::Report(r) => r.render(cli.format),
        Body::Text(t) => t.clone(),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_INPUT);
            }
        }
        None => print!("{text}"),
    }
    if output.no_equilibrium {
        ExitCode::from(EXIT_NO_EQUILIBRIUM)
    } else if output.unclean {
        ExitCode::from(EXIT_INPUT)
    } else {
        ExitCode::SUCCESS
    }
}
