//! `serialcons`: bounds, simulations and formation scenarios from the command line.
//!
//! The JSON report goes to stdout, diagnostics and timings to stderr.
//! Exit codes: 0 success, 1 property violation, 2 bad input, 3 divergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use serial_consensus::scenario::{
    run_bound, run_formation, run_simulation, run_sweep, to_json, Override, ScenarioFile,
};
use serial_consensus::verify::{run_suite, Suite};
use serial_consensus::Error;

#[derive(Parser)]
#[command(name = "serialcons", version, about = "Serial consensus bounds and formation simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transient bound of a pole set.
    Bound {
        /// Comma-separated positive poles; fractions such as 1/3 are accepted.
        #[arg(long, value_delimiter = ',', value_parser = parse_pole, required = true, allow_hyphen_values = true)]
        poles: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a serial consensus network from a scenario.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Seeds the random initial state when the scenario has no `xi0`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a vehicle formation scenario.
    Formation {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run a formation scenario for several agent counts concurrently.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        agents: Vec<usize>,
    },
    /// Randomized property suite: theorem1, theorem2, lemma2 or contraction.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a scenario field, e.g. `--set disturbance.theta=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    overrides: Vec<Override>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioFile, Error> {
        if !self.scenario.is_file() {
            return Err(Error::InvalidScenario(format!(
                "scenario file {} does not exist",
                self.scenario.display()
            )));
        }
        ScenarioFile::load(&self.scenario, &self.overrides)
    }
}

fn parse_pole(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            num / den
        }
        None => s.parse().map_err(|e| format!("{s}: {e}"))?,
    };
    Ok(value)
}

fn parse_override(s: &str) -> Result<Override, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Input(Error),
    Diverged(Error),
    Violation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFiniteState { .. } | Error::ExpmOverflow => Failure::Diverged(e),
            e => Failure::Input(e),
        }
    }
}

fn emit(json: &str, out: Option<&Path>) -> Result<(), Error> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), json)?;
    }
    print!("{json}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bound { poles, out } => {
            let report = run_bound(&poles)?;
            eprint!("{report}");
            emit(&to_json(&report)?, out.as_deref())?;
        }
        Command::Simulate { scenario, seed } => {
            let file = scenario.load()?;
            let outcome = run_simulation(&file, seed)?;
            eprint!("{}", outcome.report);
            if let Some(dir) = &scenario.out {
                outcome.write(dir)?;
            }
            print!("{}", to_json(&outcome.report)?);
        }
        Command::Formation { scenario } => {
            let file = scenario.load()?;
            let outcome = run_formation(&file)?;
            eprint!("{}", outcome.report);
            if let Some(dir) = &scenario.out {
                outcome.write(dir)?;
            }
            print!("{}", to_json(&outcome.report)?);
        }
        Command::Sweep { scenario, agents } => {
            let file = scenario.load()?;
            let (report, runs) = run_sweep(&file, &agents)?;
            eprint!("{report}");
            if let Some(dir) = &scenario.out {
                for run in &runs {
                    run.write(&dir.join(format!("n{}", run.report.n_agents)))?;
                }
            }
            emit(&to_json(&report)?, scenario.out.as_deref())?;
        }
        Command::Verify { suite, seed, out } => {
            let report = run_suite(suite, seed)?;
            eprint!("{report}");
            emit(&to_json(&report)?, out.as_deref())?;
            if !report.passed {
                return Err(Failure::Violation);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(cli);
    eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Diverged(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
