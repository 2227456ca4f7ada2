//! Plain-text mesh files.
//!
//! ```text
//! nv nc nf
//! x y                      (nv lines)
//! i j k ref_edge gen       (nc lines, counter-clockwise)
//! ```
//!
//! Facets are rebuilt on load; `nf` is checked against the rebuilt count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dgsemi_core::Mesh;

use crate::error::{Error, Result};

pub fn to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", mesh.num_vertices(), mesh.num_cells(), mesh.num_facets());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {}", v[0], v[1]);
    }
    for (c, cell) in mesh.cells().iter().enumerate() {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            cell[0],
            cell[1],
            cell[2],
            mesh.refinement_edge(c),
            mesh.generation(c)
        );
    }
    s
}

pub fn write(mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, to_string(mesh)).map_err(Error::io(path))
}

pub fn read(path: &Path) -> Result<Mesh> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> Result<Mesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")))
    };

    let (ln, header) = next("header")?;
    let counts = numbers::<usize>(header).map_err(|m| err(ln + 1, m))?;
    let [nv, nc, nf] = counts[..] else {
        return Err(err(ln + 1, "header must be `nv nc nf`".into()));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        match numbers::<f64>(l).map_err(|m| err(ln + 1, m))?[..] {
            [x, y] => vertices.push([x, y]),
            _ => return Err(err(ln + 1, "vertex line must be `x y`".into())),
        }
    }
    let mut cells = Vec::with_capacity(nc);
    let mut edges = Vec::with_capacity(nc);
    let mut generations = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = next("cell")?;
        match numbers::<usize>(l).map_err(|m| err(ln + 1, m))?[..] {
            [i, j, k, e, g] => {
                let e = u8::try_from(e).map_err(|_| err(ln + 1, format!("refinement edge {e} out of range")))?;
                let g = u32::try_from(g).map_err(|_| err(ln + 1, format!("generation {g} out of range")))?;
                cells.push([i, j, k]);
                edges.push(e);
                generations.push(g);
            }
            _ => return Err(err(ln + 1, "cell line must be `i j k ref_edge gen`".into())),
        }
    }
    let mesh = Mesh::from_parts(vertices, cells, edges, generations).map_err(dgsemi_core::Error::from)?;
    if mesh.num_facets() != nf {
        return Err(err(
            1,
            format!("header declares {nf} facets, mesh has {}", mesh.num_facets()),
        ));
    }
    Ok(mesh)
}

fn numbers<T: std::str::FromStr>(line: &str) -> std::result::Result<Vec<T>, String> {
    line.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| format!("cannot parse `{t}`")))
        .collect()
}
