use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixflow::{exit, orchestrate, parse_config, CliError, Command, Options};

/// Incompressible Navier-Stokes with mixed boundary conditions on 2-D meshes.
#[derive(Debug, Parser)]
#[command(name = "mixflow", version)]
struct Cli {
    /// Output directory (overrides `[output] dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat a `not_in_H` compatibility verdict as an error.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Check the boundary identities on the built-in analytic suite.
    VerifyIdentities,
    /// Korn constant and coercivity shift.
    Coercivity { config: PathBuf },
    /// Refinement study of the initial compatibility functional.
    Compat {
        config: PathBuf,
        /// Use the perturbation functional around the base problem.
        #[arg(long)]
        perturbation: bool,
    },
    /// Time integration of the configured problem.
    Solve { config: PathBuf },
    /// Base run, then the perturbation response to `[perturbation]` data.
    Perturb { config: PathBuf },
    /// Convergence table on the manufactured channel solution.
    ConvergenceStudy { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    let (cmd, path) = match cli.command {
        Sub::VerifyIdentities => (Command::VerifyIdentities, None),
        Sub::Coercivity { config } => (Command::Coercivity, Some(config)),
        Sub::Compat { config, perturbation } => (Command::Compat { perturbation }, Some(config)),
        Sub::Solve { config } => (Command::Solve, Some(config)),
        Sub::Perturb { config } => (Command::Perturb, Some(config)),
        Sub::ConvergenceStudy { config } => (Command::ConvergenceStudy, Some(config)),
    };
    let opts = Options { out: cli.out, strict: cli.strict };
    let result = path.as_deref().map(parse_config).transpose().and_then(|cfg| {
        orchestrate(cmd, cfg.as_ref(), &opts, &mut std::io::stdout(), &mut std::io::stderr())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code(&e))
        }
    }
}

fn code(e: &CliError) -> u8 {
    e.exit_code() as u8
}
