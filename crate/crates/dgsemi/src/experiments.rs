//! Experiment drivers that write their artifacts to an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use dgsemi_core::adapt::{adapt_loop, AdaptConfig, AdaptOutcome};
use dgsemi_core::harness::{constant_source_problem, run_converge, ConvergeConfig, ConvergeRun};

use crate::error::{Error, Result};
use crate::{plot, rates, vtk};

fn tag(p: f64) -> String {
    format!("{p}")
}

pub fn converge_stem(k: usize, p: f64) -> String {
    format!("converge_k{k}_p{}", tag(p))
}

pub fn adapt_stem(p: f64) -> String {
    format!("adapt_p{}", tag(p))
}

/// Paths written by a run.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
    pub vtk: Vec<PathBuf>,
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(Error::io(out))
}

/// Uniform refinement study of the manufactured solution; writes the CSV
/// table, the SVG plot and, if asked, one VTK file per level.
pub fn converge(cfg: &ConvergeConfig, out: &Path, with_vtk: bool) -> Result<(ConvergeRun, Artifacts)> {
    ensure_dir(out)?;
    let stem = converge_stem(cfg.k, cfg.p);
    let mut artifacts = Artifacts::default();
    let mut vtk_err = None;
    let run = run_converge(cfg, &mut |level, uh, est| {
        if !with_vtk || vtk_err.is_some() {
            return;
        }
        let path = out.join(format!("{stem}_level{level}.vtk"));
        match vtk::write(uh, Some(est), &format!("{stem} level {level}"), &path) {
            Ok(()) => artifacts.vtk.push(path),
            Err(e) => vtk_err = Some(e),
        }
    })?;
    if let Some(e) = vtk_err {
        return Err(e);
    }
    artifacts.csv = out.join(format!("{stem}.csv"));
    rates::save_rate_table(&run.table, &artifacts.csv)?;
    let svg = out.join(format!("{stem}.svg"));
    let title = format!("k = {}, p = {}", cfg.k, cfg.p);
    fs::write(&svg, plot::rate_plot(&run.table, cfg.k, &title)).map_err(Error::io(&svg))?;
    artifacts.svg = Some(svg);
    Ok((run, artifacts))
}

/// Adaptive run with the constant source; writes the per-iteration CSV and,
/// if asked, a VTK file per iteration.
pub fn adapt(
    p: f64,
    c_sigma: f64,
    k: usize,
    cfg: &AdaptConfig,
    out: &Path,
    with_vtk: bool,
) -> Result<(AdaptOutcome, Artifacts)> {
    ensure_dir(out)?;
    let spec = constant_source_problem(p, c_sigma)?;
    let stem = adapt_stem(p);
    let mut artifacts = Artifacts {
        csv: out.join(format!("{stem}.csv")),
        ..Artifacts::default()
    };
    let mut vtk_err = None;
    let result = adapt_loop(&spec, k, cfg, &mut |state| {
        if !with_vtk || vtk_err.is_some() {
            return;
        }
        let it = state.record.iteration;
        let path = out.join(format!("{stem}_iter{it:02}.vtk"));
        match vtk::write(
            state.solution,
            Some(state.estimator),
            &format!("{stem} iteration {it}"),
            &path,
        ) {
            Ok(()) => artifacts.vtk.push(path),
            Err(e) => vtk_err = Some(e),
        }
    });
    let records = match &result {
        Ok(o) => &o.records,
        Err(f) => &f.records,
    };
    rates::save_adapt_records(records, &artifacts.csv)?;
    if let Some(e) = vtk_err {
        return Err(e);
    }
    Ok((result?, artifacts))
}
