use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kahler_lab::cli::{cmd_eval, cmd_flow, cmd_verify};

#[derive(Parser)]
#[command(
    name = "kahler-lab",
    version,
    about = "Energy functionals and Kähler-Ricci flow on radial metrics over CP^n"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite and print the report.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate the flow and write the trace.
    Flow {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate all functionals at a polynomial potential.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Monomial coefficients `c0,c1,...`.
        #[arg(long, allow_hyphen_values = true)]
        phi: String,
    },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match &args.command {
        Command::Verify { config } => cmd_verify(config, &mut out, &mut err),
        Command::Flow { config, out: path } => cmd_flow(config, path, &mut out, &mut err),
        Command::Eval { config, phi } => cmd_eval(config, phi, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
