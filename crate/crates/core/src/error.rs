use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::solver::SolveReport;

/// Structural problems detected while building or refining a mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    /// A grid resolution of zero was requested.
    EmptyGrid,
    /// A cell references a vertex that does not exist.
    VertexOutOfRange { cell: usize, vertex: usize },
    /// A cell has zero or negative signed area.
    NonPositiveArea { cell: usize, area: f64 },
    /// An edge is shared by more than two cells.
    NonManifoldEdge { vertices: [usize; 2] },
    /// A local refinement edge index outside `0..3`.
    BadRefinementEdge { cell: usize, edge: usize },
    /// A marked cell index outside the mesh.
    CellOutOfRange { cell: usize, cells: usize },
    /// The boundary does not form closed loops (hanging node or overlap).
    NonConforming { vertex: usize, degree: usize },
    /// A vertex is not used by any cell.
    OrphanVertex { vertex: usize },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::EmptyGrid => write!(f, "grid resolution must be at least 1"),
            MeshError::VertexOutOfRange { cell, vertex } => {
                write!(f, "cell {cell} references missing vertex {vertex}")
            }
            MeshError::NonPositiveArea { cell, area } => {
                write!(f, "cell {cell} has non-positive signed area {area}")
            }
            MeshError::NonManifoldEdge { vertices } => write!(
                f,
                "edge ({}, {}) is shared by more than two cells",
                vertices[0], vertices[1]
            ),
            MeshError::BadRefinementEdge { cell, edge } => {
                write!(f, "cell {cell} has invalid refinement edge {edge}")
            }
            MeshError::CellOutOfRange { cell, cells } => {
                write!(f, "cell index {cell} out of range for mesh with {cells} cells")
            }
            MeshError::NonConforming { vertex, degree } => write!(
                f,
                "vertex {vertex} has {degree} boundary facets (hanging node or overlap)"
            ),
            MeshError::OrphanVertex { vertex } => write!(f, "vertex {vertex} is not used by any cell"),
        }
    }
}

impl core::error::Error for MeshError {}

#[derive(Debug, Clone)]
pub enum Error {
    Mesh(MeshError),
    InvalidInput(String),
    CellOutOfRange {
        cell: usize,
        cells: usize,
    },
    FacetOutOfRange {
        facet: usize,
        facets: usize,
    },
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    /// Newton ran out of iterations or damping steps.
    NonConvergence(Box<SolveReport>),
    /// The conjugate gradient iteration did not reach its tolerance.
    LinearSolveFailure {
        iterations: usize,
        relative_residual: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Mesh(e) => write!(f, "mesh error: {e}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::CellOutOfRange { cell, cells } => {
                write!(f, "cell index {cell} out of range ({cells} cells)")
            }
            Error::FacetOutOfRange { facet, facets } => {
                write!(f, "facet index {facet} out of range ({facets} facets)")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "coefficient vector has length {found}, expected {expected}")
            }
            Error::NonConvergence(report) => write!(
                f,
                "Newton iteration did not converge (final residual {:.3e})",
                report.final_residual
            ),
            Error::LinearSolveFailure {
                iterations,
                relative_residual,
            } => write!(
                f,
                "conjugate gradients failed after {iterations} iterations (relative residual {relative_residual:.3e})"
            ),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Mesh(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MeshError> for Error {
    fn from(e: MeshError) -> Self {
        Error::Mesh(e)
    }
}
