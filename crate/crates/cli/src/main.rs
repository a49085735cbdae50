use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ftsmc_cli::{record_stride_from_env, ExitStatus, Options};

#[derive(Parser)]
#[command(name = "ftsmc", version, about = "PPF-aware hybrid-gain sliding mode control scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes trajectory.csv and metrics.txt
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a PPF-aware and a baseline scenario side by side; writes comparison.csv
    Compare {
        ppf: PathBuf,
        baseline: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check both gain inequalities and print the time bounds (exit 2 on failure)
    Feasibility { scenario: PathBuf },
    /// Print the closed-form reaching and settling time bounds
    Bounds { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { ExitStatus::Usage.code() } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let opts = match record_stride_from_env() {
        Ok(record_stride) => Options { record_stride },
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(ExitStatus::Usage.code() as u8);
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let status = match cli.command {
        Command::Simulate { scenario, out: dir } => ftsmc_cli::simulate(&scenario, &dir, opts, &mut out, &mut err),
        Command::Compare { ppf, baseline, out: dir } => {
            ftsmc_cli::compare(&ppf, &baseline, &dir, opts, &mut out, &mut err)
        }
        Command::Feasibility { scenario } => ftsmc_cli::feasibility(&scenario, &mut out, &mut err),
        Command::Bounds { scenario } => ftsmc_cli::bounds(&scenario, &mut out, &mut err),
    };
    ExitCode::from(status.code() as u8)
}
