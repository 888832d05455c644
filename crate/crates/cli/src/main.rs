use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twisted_cli::config::Overrides;
use twisted_cli::RunOptions;

#[derive(Parser)]
#[command(name = "twisted", version, about = "Numerical checks for twisted spectral triples")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,
    #[arg(long, value_name = "INT", global = true)]
    seed: Option<u64>,
    /// Append the report here instead of printing it.
    #[arg(long, value_name = "PATH", global = true)]
    out: Option<PathBuf>,
    /// Truncation N of the Fourier representation.
    #[arg(long, value_name = "INT", global = true)]
    n_trunc: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long, value_name = "FLOAT", global = true)]
    tol_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized identities on finite-dimensional twisted triples.
    VerifyMatrix,
    /// Convergence and cocycle checks on the circle crossed product.
    VerifyCircle,
    /// Evaluate one expression: psi1_spectral, psi1_closed, tau, residue, index_pair or chern_phi.
    Compute {
        expression: String,
        /// Arguments as a JSON object.
        #[arg(default_value = "{}")]
        args: String,
    },
    /// Residue functional of `V_chi^-1 pi(f) |D|^-1`.
    Residue {
        /// Arguments as a JSON object: {"f": ..., "chi": ..., "n": ...}.
        #[arg(default_value = r#"{"f": "one"}"#)]
        args: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = cli.common;
    let opts = RunOptions {
        config: c.config,
        overrides: Overrides {
            seed: c.seed,
            n_trunc: c.n_trunc,
            tol_scale: c.tol_scale,
        },
        out: c.out,
    };
    let outcome = match &cli.command {
        Command::VerifyMatrix => twisted_cli::verify_matrix(&opts),
        Command::VerifyCircle => twisted_cli::verify_circle(&opts),
        Command::Compute { expression, args } => twisted_cli::compute(&opts, expression, args),
        Command::Residue { args } => twisted_cli::residue(&opts, args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
