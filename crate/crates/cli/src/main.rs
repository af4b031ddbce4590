//! `tpns`: runs one experiment from a manifest and writes its ledger,
//! reports, dumps and figures.
//!
//! Exit status: 0 when every ledger entry passes, 1 when some entry fails,
//! 2 on any error (an `error.json` is written to the output directory when
//! one is known).

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tpns_core::diagnostics::run::write_error_report;
use tpns_core::diagnostics::{report, run_experiment, Experiment, RunManifest, RunOutcome};

#[derive(Parser)]
#[command(name = "tpns", version, about = "Time-periodic flow past a moving body: experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; defaults to `output.dir` of the manifest, then `out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Stokes eigenbasis, Hardy and Heywood checks, Bogovskii constant.
    Basis(Common),
    /// Periodic solve on one truncated domain with estimate replay.
    SolveLinear(Common),
    /// Invading-domain sweep over `[invade] radii`.
    Invade(Common),
    /// Far-field wake and decay fits.
    Oseen(Common),
    /// Small-data fixed-point solve.
    SolveNonlinear(Common),
    /// Fixed-point solve plus the uniqueness probe.
    Uniqueness(Common),
    /// Rebuilds figures and re-checks the ledger of a finished run.
    Report(Common),
}

fn out_dir(c: &Common, m: Option<&RunManifest>, exp: Experiment) -> PathBuf {
    c.out
        .clone()
        .or_else(|| m.and_then(|m| m.output.dir.clone()))
        .unwrap_or_else(|| Path::new("out").join(exp.name()))
}

fn summarise(o: &RunOutcome) {
    for e in o.ledger.failures() {
        println!(
            "FAIL {} R={} h={} k={} n_t={}: lhs={:.6e} rhs={:.6e} constant={:.6e}",
            e.name, e.r, e.h, e.k, e.n_t, e.lhs, e.rhs, e.constant
        );
    }
    let failed = o.ledger.failures().count();
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    let note = if o.trivial { " (zero data)" } else { "" };
    println!(
        "{}: {} ledger entries, {failed} failed{note}: {verdict}",
        o.experiment.name(),
        o.ledger.entries.len()
    );
    println!("output: {}", o.dir.display());
    for a in &o.artifacts {
        println!("  {}", a.display());
    }
}

fn finish(res: tpns_core::Result<RunOutcome>, dir: &Path, exp: Experiment) -> ExitCode {
    match res {
        Ok(o) => {
            summarise(&o);
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            write_error_report(dir, exp, &e);
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (c, exp) = match &cli.command {
        Command::Basis(c) => (c, Some(Experiment::Basis)),
        Command::SolveLinear(c) => (c, Some(Experiment::Linear)),
        Command::Invade(c) => (c, Some(Experiment::Invade)),
        Command::Oseen(c) => (c, Some(Experiment::Oseen)),
        Command::SolveNonlinear(c) => (c, Some(Experiment::Nonlinear)),
        Command::Uniqueness(c) => (c, Some(Experiment::Uniqueness)),
        Command::Report(c) => (c, None),
    };
    let m = match RunManifest::from_path(&c.manifest) {
        Ok(m) => m,
        Err(e) => {
            let exp = exp.unwrap_or(Experiment::Linear);
            if let Some(dir) = &c.out {
                write_error_report(dir, exp, &e);
            }
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match exp {
        Some(exp) => {
            let dir = out_dir(c, Some(&m), exp);
            let seed = c.seed.unwrap_or(m.seed);
            finish(run_experiment(&m, exp, &dir, seed), &dir, exp)
        }
        None => {
            let Some(exp) = m.experiment else {
                eprintln!("error: `report` needs `experiment = ...` in the manifest");
                return ExitCode::from(2);
            };
            let dir = out_dir(c, Some(&m), exp);
            finish(report(exp, &dir), &dir, exp)
        }
    }
}
