//! Legacy ASCII VTK output.
//!
//! Vertices are duplicated per cell so the discontinuous solution is shown
//! exactly at the cell corners.

use std::path::Path;

use dgsemi_core::estimator::EstimatorReport;
use dgsemi_core::DGFunction;
use vtkio::model::{
    Attribute, Attributes, ByteOrder, CellType, Cells, DataSet, UnstructuredGridPiece, Version, VertexNumbers, Vtk,
};

use crate::error::{Error, Result};

const CORNERS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

pub fn to_string(uh: &DGFunction, estimator: Option<&EstimatorReport>, title: &str) -> Result<String> {
    let space = uh.space();
    let mesh = space.mesh();
    let nc = mesh.num_cells();
    let mut points = Vec::with_capacity(9 * nc);
    let mut values = Vec::with_capacity(3 * nc);
    let mut verts = Vec::with_capacity(4 * nc);
    for c in 0..nc {
        verts.push(3);
        for (i, xi) in CORNERS.iter().enumerate() {
            let x = mesh.cell_points(c)[i];
            points.extend([x[0], x[1], 0.0]);
            values.push(uh.eval_at(c, *xi).value);
            verts.push((3 * c + i) as u32);
        }
    }
    let cell = match estimator {
        Some(e) => vec![
            Attribute::scalars("eta_R2", 1).with_data(e.eta_r2.clone()),
            Attribute::scalars("eta_J2", 1).with_data(e.eta_j2.clone()),
        ],
        None => Vec::new(),
    };
    let vtk = Vtk {
        version: Version::new((2, 0)),
        byte_order: ByteOrder::BigEndian,
        title: title.to_string(),
        file_path: None,
        data: DataSet::inline(UnstructuredGridPiece {
            points: points.into(),
            cells: Cells {
                cell_verts: VertexNumbers::Legacy {
                    num_cells: nc as u32,
                    vertices: verts,
                },
                types: vec![CellType::Triangle; nc],
            },
            data: Attributes {
                point: vec![Attribute::scalars("u_h", 1).with_data(values)],
                cell,
            },
        }),
    };
    let mut s = String::new();
    vtk.write_legacy_ascii(&mut s).map_err(|e| Error::Vtk(e.to_string()))?;
    Ok(s)
}

pub fn write(uh: &DGFunction, estimator: Option<&EstimatorReport>, title: &str, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(uh, estimator, title)?).map_err(Error::io(path))
}
