mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qrel", version, about = "Finite-dimensional quantum relations lab")]
pub struct Cli {
    /// Relative tolerance for ranks, inclusions and gaps.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Amplification level k for sampled projections in M_k(M); defaults to d.
    #[arg(long, global = true)]
    pub amp_level: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a von Neumann algebra (built-in name or generator file).
    Algebra { spec: String },
    /// Structural report for a relation instance file.
    Relation { file: PathBuf },
    /// Relation -> ideal -> relation (or the reverse) with gaps.
    Roundtrip {
        file: PathBuf,
        /// Amplified projection pairs for the intrinsic comparison.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Compare ideal and module descriptions on sampled projection pairs.
    Intrinsic {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Group duality between left ideals of C[G] and invariant relations.
    Group {
        spec: String,
        /// JSON with `elements`, each a coefficient vector `{re, im}`.
        #[arg(long, conflicts_with = "relation")]
        ideal: Option<PathBuf>,
        /// Subspace JSON `{dim, basis}` over l²(G).
        #[arg(long)]
        relation: Option<PathBuf>,
        /// Random ideals to check when no input is given.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Recover the quantum metric of a classical distance matrix.
    Metric { spec: String },
    /// Markov checks, heat kernel and off-diagonal decay of a semigroup.
    Semigroup { spec: String },
    /// Run every seeded property suite.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
