//! `itheta`: batch computations of indefinite theta series from a job file.

mod commands;
mod job;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use indefinite_theta::Error;

use commands::{Outcome, Payload};
use job::{JobSpec, TauText};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Input = 1,
    Refuted = 2,
    Undecided = 3,
    NonConvergence = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { exit: Exit::Input, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::NonConvergence(_) => Exit::NonConvergence,
            _ => Exit::Input,
        };
        Self { exit, message: e.to_string() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "itheta", version, about = "Indefinite theta series, their completions and shadows")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Job file (TOML, or JSON including a previous result document).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Evaluation point "u,v" (τ = u + iv); repeatable, replaces the job's list.
    #[arg(long, global = true, value_parser = TauText::parse)]
    tau: Vec<TauText>,

    /// Truncation exponent of the q-expansion.
    #[arg(long = "N", global = true, allow_negative_numbers = true)]
    n: Option<i64>,

    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    mc_samples: Option<u64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Grid intervals per axis for cube certification.
    #[arg(long, global = true)]
    resolution: Option<u32>,

    /// Evaluate lattice sums even when certification fails.
    #[arg(long, global = true)]
    force: bool,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Good-position certificate of the collection.
    Check,
    /// Φ(x), the intersection point s(x) and the intersection number.
    Phi,
    /// E_q(C; x) by recursion and by Monte-Carlo.
    Erf,
    /// Holomorphic q-expansion and completed values.
    Theta,
    /// Shadow against a numerical lowering.
    Shadow,
    /// Built-in identity suites.
    Verify {
        /// One of sum-identity, radial-derivative, simplicial-phi, boundary-limit, oracle, all.
        suite: Option<String>,
    },
}

impl Cli {
    fn job(&self) -> Result<JobSpec, CliError> {
        let mut job = match &self.config {
            Some(path) => JobSpec::load(path)?,
            None => JobSpec::default(),
        };
        if !self.tau.is_empty() {
            job.tau = self.tau.clone();
        }
        job.n = self.n.or(job.n);
        job.tol = self.tol.or(job.tol);
        job.mc_samples = self.mc_samples.or(job.mc_samples);
        job.seed = self.seed.or(job.seed);
        job.resolution = self.resolution.or(job.resolution);
        job.force |= self.force;
        if let Command::Verify { suite: Some(s) } = &self.command {
            job.suite = Some(s.clone());
        }
        Ok(job)
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let job = self.job()?;
        match self.command {
            Command::Check => commands::check(&job, self.format),
            Command::Phi => commands::phi(&job, self.format),
            Command::Erf => commands::erf(&job, self.format),
            Command::Theta => commands::theta(&job, self.format),
            Command::Shadow => commands::shadow(&job, self.format),
            Command::Verify { .. } => commands::verify(&job, self.format),
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let text = match &outcome.payload {
        Payload::Json(v) => serde_json::to_string_pretty(v).map_err(|e| CliError::input(e.to_string()))? + "\n",
        Payload::Csv(s) => s.clone(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.run().and_then(|outcome| {
        emit(&cli, &outcome)?;
        eprintln!("{}", outcome.summary);
        Ok(outcome.exit)
    });
    match result {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit as u8)
        }
    }
}
