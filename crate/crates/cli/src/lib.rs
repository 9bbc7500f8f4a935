//! Command-line driver: configuration, the `solve`, `field`, `sweep` and
//! `validate` commands, CSV output and run manifests.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod suites;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

/// Environment variable consulted when neither `--out` nor `output.dir` is set.
pub const OUTPUT_DIR_ENV: &str = "WAVE_TPBVP_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "wave-tpbvp", version, about = "Spectral two-point boundary value solver for the 1-D wave equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration; built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (overrides `output.dir` and the environment).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Seed for the randomized validation suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Override `numerics.N`.
    #[arg(long, global = true, value_name = "N")]
    pub modes: Option<usize>,

    /// Override `numerics.mu`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the configured boundary value problem and verify it by propagation.
    Solve,
    /// Run the invariant suites.
    Validate,
    /// Export the space-time displacement field of the solved problem.
    Field,
    /// Tabulate the gap between perturbed and unperturbed evolutions.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Validate => "validate",
            Self::Field => "field",
            Self::Sweep => "sweep",
        }
    }
}

/// Why a command did not succeed. Each kind has its own exit status.
#[derive(Debug)]
pub enum Failure {
    Config(Vec<String>),
    ConjugatePoint { modes: Vec<usize>, detail: String },
    Suite(Vec<String>),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::ConjugatePoint { .. } => 3,
            Self::Suite(_) => 4,
            Self::Runtime(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::ConjugatePoint { .. } => "conjugate-point",
            Self::Suite(_) => "suite-failure",
            Self::Runtime(_) => "runtime",
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            Self::Config(m) | Self::Suite(m) => m.clone(),
            Self::ConjugatePoint { detail, .. } => vec![detail.clone()],
            Self::Runtime(e) => vec![format!("{e:#}")],
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn report(&self) -> serde_json::Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "messages": self.messages(),
        });
        if let Self::ConjugatePoint { modes, .. } = self {
            v["modes"] = json!(modes);
        }
        v
    }

    /// Maps solver errors onto exit categories.
    pub fn from_core(e: wave_tpbvp::Error) -> Self {
        use wave_tpbvp::Error as E;
        match e {
            E::ConjugatePoint { ref modes } | E::SingularTridiagonal { ref modes } => Self::ConjugatePoint {
                modes: modes.clone(),
                detail: e.to_string(),
            },
            E::InvalidParameter { .. }
            | E::InvalidProfile(_)
            | E::HorizonViolation { .. }
            | E::HorizonTooShort { .. }
            | E::PenaltyTooSmall { .. }
            | E::NoAdmissibleSegmentation { .. }
            | E::PositionOutOfRange { .. } => Self::Config(vec![e.to_string()]),
            other => Self::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Runtime(e)
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.report());
            f.exit_code()
        }
    }
}
