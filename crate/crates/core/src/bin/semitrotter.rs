use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semitrotter::experiments::{run, write_outputs, ExperimentKind, RunConfig};
use semitrotter::Error;

#[derive(Parser)]
#[command(
    name = "semitrotter",
    version,
    about = "Trotter-Suzuki error sweeps for the semiclassical Schrodinger equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Observable and unitary error against the time step.
    DtSweep(RunArgs),
    /// Observable and unitary error against h at a fixed time step.
    HSweep(RunArgs),
    /// Nested commutator norms against h.
    CommSweep(RunArgs),
    /// Commutator coefficient beta against h.
    Beta(RunArgs),
    /// Randomized height/width checks of the symbolic commutator algebra.
    VerifySymbolic(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<bool, Error> {
    let cfg = match &args.config {
        Some(path) => RunConfig::from_file(path, kind)?,
        None => RunConfig::defaults(kind),
    };
    let dir = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run(&cfg)?;
    for file in write_outputs(&cfg, &outcome, &dir)? {
        println!("wrote {}", file.display());
    }
    for (label, fit) in &outcome.fits {
        println!("{label:<32} slope {:>8.4}  r2 {:.4}", fit.slope, fit.r2);
    }
    if kind == ExperimentKind::VerifySymbolic {
        for row in &outcome.rows {
            println!("{:<32} {}", row.metric, row.value);
        }
        println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::DtSweep(a) => (ExperimentKind::DtSweep, a),
        Command::HSweep(a) => (ExperimentKind::HSweep, a),
        Command::CommSweep(a) => (ExperimentKind::CommSweep, a),
        Command::Beta(a) => (ExperimentKind::Beta, a),
        Command::VerifySymbolic(a) => (ExperimentKind::VerifySymbolic, a),
    };
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
