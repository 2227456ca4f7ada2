//! CSV files for convergence studies and adaptive runs.
//!
//! Rate tables use the fixed header below, followed by one EOC column per
//! measure (empty on the first row). Reals carry 12 significant digits.

use std::path::Path;

use dgsemi_core::adapt::IterationRecord;
use dgsemi_core::harness::{RateRow, RateTable, RATE_MEASURES};

use crate::error::{Error, Result};

pub const RATE_COLUMNS: [&str; 10] = [
    "level",
    "cells",
    "dofs",
    "h_max",
    "enorm_err",
    "lp_err",
    "quasinorm_err",
    "l2_err",
    "estimator_total",
    "effectivity",
];

pub const ADAPT_COLUMNS: [&str; 5] = ["iteration", "cells", "dofs", "estimator", "newton_iters"];

/// `x` with 12 significant digits.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

pub fn rate_header() -> Vec<String> {
    RATE_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(RATE_MEASURES.iter().map(|m| format!("eoc_{m}")))
        .collect()
}

pub fn write_rate_table<W: std::io::Write>(table: &RateTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(rate_header())?;
    let eocs = table.eocs();
    for (i, r) in table.rows.iter().enumerate() {
        let mut rec = vec![
            r.level.to_string(),
            r.cells.to_string(),
            r.dofs.to_string(),
            real(r.h_max),
            real(r.enorm_err),
            real(r.lp_err),
            real(r.quasinorm_err),
            real(r.l2_err),
            real(r.estimator_total),
            real(r.effectivity),
        ];
        match i.checked_sub(1).map(|j| eocs[j]) {
            Some(e) => rec.extend(e.iter().map(|v| real(*v))),
            None => rec.extend(std::iter::repeat_n(String::new(), RATE_MEASURES.len())),
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(Error::io("<csv>"))?;
    Ok(())
}

pub fn save_rate_table(table: &RateTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(Error::io(path))?;
    write_rate_table(table, file)
}

/// Reads the row columns back; EOC columns are recomputed, not parsed.
pub fn read_rate_table<R: std::io::Read>(input: R, path: &Path) -> Result<RateTable> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != rate_header() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |col: usize| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("cannot parse column `{}`", RATE_COLUMNS[col]),
        };
        let int = |col: usize| rec[col].parse::<usize>().map_err(|_| bad(col));
        let f = |col: usize| rec[col].parse::<f64>().map_err(|_| bad(col));
        rows.push(RateRow {
            level: int(0)?,
            cells: int(1)?,
            dofs: int(2)?,
            h_max: f(3)?,
            enorm_err: f(4)?,
            lp_err: f(5)?,
            quasinorm_err: f(6)?,
            l2_err: f(7)?,
            estimator_total: f(8)?,
            effectivity: f(9)?,
        });
    }
    Ok(RateTable { rows })
}

pub fn load_rate_table(path: &Path) -> Result<RateTable> {
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    read_rate_table(file, path)
}

pub fn write_adapt_records<W: std::io::Write>(records: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ADAPT_COLUMNS)?;
    for r in records {
        w.write_record([
            r.iteration.to_string(),
            r.cells.to_string(),
            r.dofs.to_string(),
            real(r.estimator),
            r.newton_iterations.to_string(),
        ])?;
    }
    w.flush().map_err(Error::io("<csv>"))?;
    Ok(())
}

pub fn save_adapt_records(records: &[IterationRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(Error::io(path))?;
    write_adapt_records(records, file)
}
