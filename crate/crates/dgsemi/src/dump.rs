//! Coefficient dumps of discrete functions.
//!
//! First line `k nc dofs_per_cell`, then one line of modal coefficients per
//! cell. Reading requires a space with matching degree and cell count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use dgsemi_core::{DGFunction, DGSpace};

use crate::error::{Error, Result};

pub fn to_string(f: &DGFunction) -> String {
    let space = f.space();
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", space.degree(), space.num_cells(), space.dofs_per_cell());
    for c in 0..space.num_cells() {
        let row: Vec<String> = f.cell_coeffs(c).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn write(f: &DGFunction, path: &Path) -> Result<()> {
    fs::write(path, to_string(f)).map_err(Error::io(path))
}

pub fn read(space: &Arc<DGSpace>, path: &Path) -> Result<DGFunction> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse(space, &text, path)
}

pub fn parse(space: &Arc<DGSpace>, text: &str, path: &Path) -> Result<DGFunction> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header: Vec<usize> = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(1, format!("cannot parse `{t}`"))))
        .collect::<Result<_>>()?;
    let expected = [space.degree(), space.num_cells(), space.dofs_per_cell()];
    if header != expected {
        return Err(err(1, format!("header {header:?} does not match space {expected:?}")));
    }
    let mut coeffs = Vec::with_capacity(space.total_dofs());
    for c in 0..space.num_cells() {
        let line = lines.next().ok_or_else(|| err(c + 2, "missing cell row".into()))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(c + 2, format!("cannot parse `{t}`"))))
            .collect::<Result<_>>()?;
        if row.len() != space.dofs_per_cell() {
            return Err(err(
                c + 2,
                format!("expected {} coefficients, found {}", space.dofs_per_cell(), row.len()),
            ));
        }
        coeffs.extend(row);
    }
    Ok(DGFunction::from_coeffs(space, coeffs)?)
}
