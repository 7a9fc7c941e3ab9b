//! crdeg: batch computations on formal maps between generic submanifolds.
//!
//! Problems arrive as JSON files with exact rational coefficients; results
//! leave as short summaries or as versioned, byte-stable JSON reports. Exit
//! codes separate the three ways a run can end: 0 for any mathematical
//! outcome (including negative verdicts), 1 for unusable input, 2 for input
//! that violates a hypothesis of the requested computation.

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

mod commands;
mod input;
mod report;

#[derive(Parser)]
#[command(
    name = "crdeg",
    version,
    about = "Exact degeneracy invariants of formal maps between generic submanifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the single-file commands. Flags override the file's
/// options block, which overrides the built-in defaults.
#[derive(Args)]
pub struct ProblemArgs {
    /// Problem file (JSON)
    pub file: std::path::PathBuf,
    /// Pin every block to this truncation order
    #[arg(long)]
    pub order: Option<u32>,
    /// Derivative budget of the filtration (default: target CR dimension + 1);
    /// for holvf, the coefficient jet order (default 1)
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Chain depth for segre and finite-type (default 4)
    #[arg(long)]
    pub levels: Option<usize>,
    /// Sampled points for the constancy probe (default 3)
    #[arg(long)]
    pub trials: Option<u32>,
    /// Seed behind every sampled point (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the versioned JSON report instead of the summary
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct PairArgs {
    /// Problem file with the geometry and the first map
    pub file: std::path::PathBuf,
    /// Problem file with the same geometry and the second map
    pub file2: std::path::PathBuf,
    /// Pin every block to this truncation order
    #[arg(long)]
    pub order: Option<u32>,
    /// Derivative budget of the filtration (default: target CR dimension + 1)
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Chain depth searched for a spanning level (default 4)
    #[arg(long)]
    pub levels: Option<usize>,
    /// Seed behind every sampled point (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the versioned JSON report instead of the summary
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a problem file and verify the map lands in the target
    Check(ProblemArgs),
    /// The degeneracy filtration and the invariant pair (k0, s) at the origin
    Degeneracy(ProblemArgs),
    /// Probe whether the invariant pair is constant near the origin
    Constancy(ProblemArgs),
    /// Holomorphic vector fields along the map tangent to the target
    Holvf(ProblemArgs),
    /// Iterated chain maps of the source and their vanishing residuals
    Segre(ProblemArgs),
    /// Finite-type test for the source by generic chain ranks
    #[command(name = "finite-type")]
    FiniteType(ProblemArgs),
    /// Solve the pulled-back target relations for the map from its jets
    #[command(name = "basic-identity")]
    BasicIdentity(ProblemArgs),
    /// The degeneracy-one variant with the eliminating determinant
    #[command(name = "basic-identity-1deg")]
    BasicIdentity1Deg(ProblemArgs),
    /// Compare two maps against the jet determination threshold
    Jets(PairArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors; everything else is
            // unusable input
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    let started = Instant::now();
    let out = match &cli.command {
        Command::Check(a) => commands::check(a),
        Command::Degeneracy(a) => commands::degeneracy(a),
        Command::Constancy(a) => commands::constancy(a),
        Command::Holvf(a) => commands::holvf(a),
        Command::Segre(a) => commands::segre(a),
        Command::FiniteType(a) => commands::finite_type(a),
        Command::BasicIdentity(a) => commands::basic_identity_cmd(a),
        Command::BasicIdentity1Deg(a) => commands::one_degenerate_cmd(a),
        Command::Jets(a) => commands::jets(a),
    };

    match out {
        Ok(out) => {
            if out.json {
                let env =
                    report::envelope(out.command, out.order, out.seed, &out.digests, out.result);
                let text = serde_json::to_string_pretty(&env).expect("report is a finite tree");
                println!("{text}");
            } else {
                print!("{}", out.human);
                eprintln!("elapsed: {:.2?}", started.elapsed());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
