use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harmap_cli::{generate, parse_overrides, plotdata, suite_of, verify, ExperimentConfig};

#[derive(Parser)]
#[command(name = "harmap", version, about = "Harmonic maps into the hyperbolic plane from Bäcklund pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build fields and the map for a config, export them and check every residual.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check exported fields against their manifest.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Tolerance override, e.g. `hopf=1e-3`.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// Polylines of the images of coordinate lines.
    Plotdata {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 11)]
        xlines: usize,
        #[arg(long, default_value_t = 11)]
        ylines: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(2)
}

fn report(summary: &harmap_core::verifier::VerificationSummary) -> ExitCode {
    for r in &summary.reports {
        println!("{}", r.line());
    }
    if summary.all_pass() {
        println!("all residuals within tolerance");
        return ExitCode::SUCCESS;
    }
    let mut suites: Vec<&str> = summary.failing().iter().map(|n| suite_of(n)).collect();
    suites.dedup();
    eprintln!("failing suites: {}", suites.join(", "));
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { config, out } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match generate(&cfg, &out) {
                Ok(g) => report(&g.summary),
                Err(e) => fail(e),
            }
        }
        Command::Verify { input, tol } => {
            let overrides = match parse_overrides(&tol) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            match verify(&input, &overrides) {
                Ok(s) => report(&s),
                Err(e) => fail(e),
            }
        }
        Command::Plotdata { input, xlines, ylines, out } => match plotdata(&input, xlines, ylines, &out) {
            Ok(n) => {
                println!("wrote {n} polylines to {}", out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
