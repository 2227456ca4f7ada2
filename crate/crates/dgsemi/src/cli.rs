//! Command line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use dgsemi_core::adapt::{AdaptConfig, MarkingStrategy};
use dgsemi_core::harness::{ConvergeConfig, RATE_MEASURES};

use crate::error::Error;
use crate::{experiments, selftest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "dgsemi",
    version,
    about = "Interior penalty dG solver for -Δu + |u|^{p-2}u = f"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uniform refinement study for u = sin(πx) sin(πy).
    Converge {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 10.0)]
        csigma: f64,
        #[arg(long = "quad-bump", default_value_t = 0)]
        quad_bump: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write one VTK file per level.
        #[arg(long)]
        vtk: bool,
    },
    /// Adaptive refinement with the constant source f = 1000.
    Adapt {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 13)]
        iters: usize,
        #[arg(long = "mark-frac", default_value_t = 0.5)]
        mark_frac: f64,
        #[arg(long, value_enum, default_value_t = Marking::Maximum)]
        marking: Marking,
        #[arg(long = "max-dofs", default_value_t = 2_000_000)]
        max_dofs: usize,
        #[arg(long, default_value_t = 10.0)]
        csigma: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip the per-iteration VTK files.
        #[arg(long = "no-vtk")]
        no_vtk: bool,
    },
    /// Run the randomised invariant suites.
    Selftest {
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Marking {
    /// Cells with η_K ≥ mark-frac · max η.
    Maximum,
    /// The mark-frac share of cells with the largest η_K.
    Fraction,
}

impl From<Marking> for MarkingStrategy {
    fn from(m: Marking) -> Self {
        match m {
            Marking::Maximum => MarkingStrategy::Maximum,
            Marking::Fraction => MarkingStrategy::Fraction,
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_solver_failure() {
                EXIT_SOLVER
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Error> {
    match command {
        Command::Converge {
            k,
            p,
            levels,
            csigma,
            quad_bump,
            out: dir,
            vtk,
        } => {
            let cfg = ConvergeConfig {
                c_sigma: csigma,
                quad_bump,
                ..ConvergeConfig::new(k, p, levels)
            };
            let (run, artifacts) = experiments::converge(&cfg, &dir, vtk)?;
            let _ = writeln!(
                out,
                "{:>5} {:>7} {:>8} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>7}",
                "level", "cells", "dofs", "h_max", "enorm", "lp", "quasinorm", "l2", "estimator", "eff"
            );
            for r in &run.table.rows {
                let _ = writeln!(
                    out,
                    "{:>5} {:>7} {:>8} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>7.3}",
                    r.level,
                    r.cells,
                    r.dofs,
                    r.h_max,
                    r.enorm_err,
                    r.lp_err,
                    r.quasinorm_err,
                    r.l2_err,
                    r.estimator_total,
                    r.effectivity
                );
            }
            if let Some(e) = run.table.eocs().last() {
                let pairs: Vec<String> = RATE_MEASURES
                    .iter()
                    .zip(e)
                    .map(|(m, v)| format!("{m} {v:.3}"))
                    .collect();
                let _ = writeln!(out, "finest EOC: {}", pairs.join(", "));
            }
            let _ = writeln!(out, "wrote {}", artifacts.csv.display());
            if let Some(svg) = &artifacts.svg {
                let _ = writeln!(out, "wrote {}", svg.display());
            }
            Ok(EXIT_OK)
        }
        Command::Adapt {
            k,
            p,
            iters,
            mark_frac,
            marking,
            max_dofs,
            csigma,
            out: dir,
            no_vtk,
        } => {
            let cfg = AdaptConfig {
                max_iterations: iters,
                mark_fraction: mark_frac,
                marking: marking.into(),
                max_dofs,
                ..AdaptConfig::default()
            };
            let (outcome, artifacts) = experiments::adapt(p, csigma, k, &cfg, &dir, !no_vtk)?;
            let _ = writeln!(
                out,
                "{:>9} {:>8} {:>9} {:>12} {:>6}",
                "iteration", "cells", "dofs", "estimator", "newton"
            );
            for r in &outcome.records {
                let _ = writeln!(
                    out,
                    "{:>9} {:>8} {:>9} {:>12.5e} {:>6}",
                    r.iteration, r.cells, r.dofs, r.estimator, r.newton_iterations
                );
            }
            let _ = writeln!(
                out,
                "wrote {} and {} VTK files",
                artifacts.csv.display(),
                artifacts.vtk.len()
            );
            Ok(EXIT_OK)
        }
        Command::Selftest { cases } => {
            let results = selftest::run_all(cases);
            for r in &results {
                let _ = writeln!(out, "{r}");
            }
            Ok(if results.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_USAGE
            })
        }
    }
}
