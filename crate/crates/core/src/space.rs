//! Broken polynomial spaces `V_h` of degree `k` and functions living in them.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::basis::{dofs_per_cell, OrthonormalBasis, Tabulation};
use crate::error::Error;
use crate::mesh::Mesh;
use crate::quadrature::{LineRule, TriangleRule};

/// Affine map `x = origin + B ξ` from the reference triangle onto a cell.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    /// Row-major `B`, columns are the edge vectors `v1 - v0`, `v2 - v0`.
    pub jacobian: [[f64; 2]; 2],
    /// `B^{-T}`, row-major.
    pub inv_transpose: [[f64; 2]; 2],
    pub det: f64,
}

impl CellGeometry {
    pub fn new(points: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = points;
        let b = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        // B^{-1} = [[b11, -b01], [-b10, b00]] / det, so B^{-T}:
        let inv_t = [[b[1][1] / det, -b[1][0] / det], [-b[0][1] / det, b[0][0] / det]];
        CellGeometry {
            origin: p0,
            jacobian: b,
            inv_transpose: inv_t,
            det,
        }
    }

    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        let b = &self.jacobian;
        [
            self.origin[0] + b[0][0] * xi[0] + b[0][1] * xi[1],
            self.origin[1] + b[1][0] * xi[0] + b[1][1] * xi[1],
        ]
    }

    pub fn inverse_map(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        // ξ = B^{-1} d = (B^{-T})^T d
        let t = &self.inv_transpose;
        [t[0][0] * d[0] + t[1][0] * d[1], t[0][1] * d[0] + t[1][1] * d[1]]
    }

    /// Physical gradient from a reference gradient.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        let t = &self.inv_transpose;
        [t[0][0] * g[0] + t[0][1] * g[1], t[1][0] * g[0] + t[1][1] * g[1]]
    }

    /// Physical Laplacian from a reference Hessian `[ξξ, ξη, ηη]`.
    pub fn laplacian(&self, h: [f64; 3]) -> f64 {
        let t = &self.inv_transpose;
        // trace(T H T^T) with T = B^{-T}
        let mut s = 0.0;
        for row in t {
            s += row[0] * row[0] * h[0] + 2.0 * row[0] * row[1] * h[1] + row[1] * row[1] * h[2];
        }
        s
    }
}

/// Quadrature degrees used by a [`DGSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureDegrees {
    pub cell: usize,
    pub facet: usize,
}

impl QuadratureDegrees {
    /// `max(2k+2, ⌈k p⌉+2) + bump` on cells, `2k+2` on facets.
    pub fn for_problem(k: usize, p: f64, bump: usize) -> Self {
        let nonlinear = libm::ceil(k as f64 * p) as usize + 2;
        QuadratureDegrees {
            cell: (2 * k + 2).max(nonlinear) + bump,
            facet: 2 * k + 2,
        }
    }
}

/// Degree-`k` broken polynomial space on a mesh.
#[derive(Debug, Clone)]
pub struct DGSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    basis: OrthonormalBasis,
    quad: QuadratureDegrees,
    cell_rule: TriangleRule,
    facet_rule: LineRule,
    cell_tab: Tabulation,
    /// Basis tabulated on the facet rule mapped onto local edge `e`,
    /// forward (`[e][0]`) or reversed (`[e][1]`).
    edge_tabs: [[Tabulation; 2]; 3],
    geometry: Vec<CellGeometry>,
}

/// Reference coordinates of the point at parameter `t` along local edge
/// `edge`, which runs from local vertex `edge+1` to `edge+2`.
pub fn reference_edge_point(edge: usize, t: f64) -> [f64; 2] {
    match edge {
        0 => [1.0 - t, t],
        1 => [0.0, 1.0 - t],
        _ => [t, 0.0],
    }
}

impl DGSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, quad: QuadratureDegrees) -> Result<Self, Error> {
        if degree == 0 {
            return Err(Error::InvalidInput("polynomial degree must be at least 1".into()));
        }
        let basis = OrthonormalBasis::new(degree);
        let cell_rule = TriangleRule::with_degree(quad.cell);
        let facet_rule = LineRule::with_degree(quad.facet);
        let cell_tab = basis.tabulate(&cell_rule.points);
        let tab_edge = |e: usize, rev: bool| {
            let pts: Vec<[f64; 2]> = facet_rule
                .points
                .iter()
                .map(|&t| reference_edge_point(e, if rev { 1.0 - t } else { t }))
                .collect();
            basis.tabulate(&pts)
        };
        let edge_tabs = [
            [tab_edge(0, false), tab_edge(0, true)],
            [tab_edge(1, false), tab_edge(1, true)],
            [tab_edge(2, false), tab_edge(2, true)],
        ];
        let geometry = (0..mesh.num_cells())
            .map(|c| CellGeometry::new(mesh.cell_points(c)))
            .collect();
        Ok(DGSpace {
            mesh,
            degree,
            basis,
            quad,
            cell_rule,
            facet_rule,
            cell_tab,
            edge_tabs,
            geometry,
        })
    }

    /// Space with the default quadrature for exponent `p`.
    pub fn for_problem(mesh: Arc<Mesh>, degree: usize, p: f64) -> Result<Self, Error> {
        Self::new(mesh, degree, QuadratureDegrees::for_problem(degree, p, 0))
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dofs_per_cell(&self) -> usize {
        dofs_per_cell(self.degree)
    }

    pub fn num_cells(&self) -> usize {
        self.mesh.num_cells()
    }

    pub fn total_dofs(&self) -> usize {
        self.num_cells() * self.dofs_per_cell()
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn quadrature_degrees(&self) -> QuadratureDegrees {
        self.quad
    }

    pub fn cell_rule(&self) -> &TriangleRule {
        &self.cell_rule
    }

    pub fn facet_rule(&self) -> &LineRule {
        &self.facet_rule
    }

    /// Basis tabulated at the cell quadrature points.
    pub fn cell_tabulation(&self) -> &Tabulation {
        &self.cell_tab
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    /// Tabulation of the facet rule seen from one side of `facet`: `plus`
    /// traverses the facet forward, `minus` reversed. Point `q` of either
    /// tabulation is the same physical point.
    pub fn facet_tabulation(&self, facet: usize, minus_side: bool) -> &Tabulation {
        let f = &self.mesh.facets()[facet];
        let local = f.local[minus_side as usize] as usize;
        &self.edge_tabs[local][minus_side as usize]
    }

    /// Physical facet quadrature points and weights (including length).
    pub fn facet_points(&self, facet: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
        let f = &self.mesh.facets()[facet];
        let a = self.mesh.vertices()[f.vertices[0]];
        let b = self.mesh.vertices()[f.vertices[1]];
        let pts = self
            .facet_rule
            .points
            .iter()
            .map(|&t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
            .collect();
        let w = self.facet_rule.weights.iter().map(|w| w * f.length).collect();
        (pts, w)
    }

    pub fn cell_range(&self, cell: usize) -> core::ops::Range<usize> {
        let n = self.dofs_per_cell();
        cell * n..(cell + 1) * n
    }

    /// Cellwise `L^2` projection of `g` onto `V_h` using the cell rule.
    pub fn project<G: Fn(f64, f64) -> f64 + ?Sized>(self: &Arc<Self>, g: &G) -> DGFunction {
        let n = self.dofs_per_cell();
        let mut coeffs = alloc::vec![0.0; self.total_dofs()];
        let rule = &self.cell_rule;
        for c in 0..self.num_cells() {
            let geo = &self.geometry[c];
            let out = &mut coeffs[c * n..(c + 1) * n];
            for q in 0..rule.len() {
                let x = geo.map(rule.points[q]);
                let gv = g(x[0], x[1]) * rule.weights[q];
                for (o, phi) in out.iter_mut().zip(self.cell_tab.point_values(q)) {
                    *o += gv * phi;
                }
            }
        }
        DGFunction {
            space: Arc::clone(self),
            coeffs,
        }
    }
}

/// Value and physical gradient of a function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub grad: [f64; 2],
}

/// Traces of a [`DGFunction`] on a facet at the facet quadrature points.
#[derive(Debug, Clone)]
pub struct FacetTrace {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Outward normal of the `plus` cell.
    pub normal: [f64; 2],
    pub plus: Vec<PointEval>,
    /// `None` on boundary facets.
    pub minus: Option<Vec<PointEval>>,
}

impl FacetTrace {
    /// `[v] = v⁺n⁺ + v⁻n⁻`, or `v⁺n` on the boundary.
    pub fn jump(&self, q: usize) -> [f64; 2] {
        let d = self.plus[q].value - self.minus.as_ref().map_or(0.0, |m| m[q].value);
        [d * self.normal[0], d * self.normal[1]]
    }

    /// `{v}`; one-sided on the boundary.
    pub fn average(&self, q: usize) -> f64 {
        match &self.minus {
            Some(m) => 0.5 * (self.plus[q].value + m[q].value),
            None => self.plus[q].value,
        }
    }

    /// `{∇v}`; one-sided on the boundary.
    pub fn average_grad(&self, q: usize) -> [f64; 2] {
        let p = self.plus[q].grad;
        match &self.minus {
            Some(m) => [0.5 * (p[0] + m[q].grad[0]), 0.5 * (p[1] + m[q].grad[1])],
            None => p,
        }
    }

    /// Normal flux jump `∇v⁺·n⁺ + ∇v⁻·n⁻`; zero on boundary facets.
    pub fn normal_flux_jump(&self, q: usize) -> f64 {
        match &self.minus {
            Some(m) => {
                let (a, b) = (self.plus[q].grad, m[q].grad);
                (a[0] - b[0]) * self.normal[0] + (a[1] - b[1]) * self.normal[1]
            }
            None => 0.0,
        }
    }
}

/// A coefficient vector over a [`DGSpace`].
#[derive(Debug, Clone)]
pub struct DGFunction {
    space: Arc<DGSpace>,
    coeffs: Vec<f64>,
}

impl DGFunction {
    pub fn zeros(space: &Arc<DGSpace>) -> Self {
        DGFunction {
            space: Arc::clone(space),
            coeffs: alloc::vec![0.0; space.total_dofs()],
        }
    }

    pub fn from_coeffs(space: &Arc<DGSpace>, coeffs: Vec<f64>) -> Result<Self, Error> {
        if coeffs.len() != space.total_dofs() {
            return Err(Error::LengthMismatch {
                expected: space.total_dofs(),
                found: coeffs.len(),
            });
        }
        Ok(DGFunction {
            space: Arc::clone(space),
            coeffs,
        })
    }

    /// The function equal to `c` everywhere.
    pub fn constant(space: &Arc<DGSpace>, c: f64) -> Self {
        let mut f = Self::zeros(space);
        let n = space.dofs_per_cell();
        let scale = c / space.basis().constant_value();
        for cell in 0..space.num_cells() {
            f.coeffs[cell * n] = scale;
        }
        f
    }

    pub fn space(&self) -> &Arc<DGSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn cell_coeffs(&self, cell: usize) -> &[f64] {
        &self.coeffs[self.space.cell_range(cell)]
    }

    pub fn scaled(&self, s: f64) -> Self {
        DGFunction {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    /// Values and physical gradients of `f|_K` at reference points.
    pub fn evaluate(&self, cell: usize, points: &[[f64; 2]]) -> Result<Vec<PointEval>, Error> {
        if cell >= self.space.num_cells() {
            return Err(Error::CellOutOfRange {
                cell,
                cells: self.space.num_cells(),
            });
        }
        let tab = self.space.basis().tabulate(points);
        Ok((0..points.len()).map(|q| self.eval_tab(cell, &tab, q)).collect())
    }

    /// Value and gradient at a single reference point.
    pub fn eval_at(&self, cell: usize, xi: [f64; 2]) -> PointEval {
        let n = self.space.dofs_per_cell();
        let mut v = [0.0; 64];
        let mut g = [[0.0; 2]; 64];
        let mut h = [[0.0; 3]; 64];
        if n <= 64 {
            self.space.basis().eval(xi, &mut v[..n], &mut g[..n], &mut h[..n]);
            combine(self.cell_coeffs(cell), &v[..n], &g[..n], self.space.geometry(cell))
        } else {
            let tab = self.space.basis().tabulate(&[xi]);
            self.eval_tab(cell, &tab, 0)
        }
    }

    /// Evaluates using point `q` of a tabulation on the reference cell.
    pub fn eval_tab(&self, cell: usize, tab: &Tabulation, q: usize) -> PointEval {
        combine(
            self.cell_coeffs(cell),
            tab.point_values(q),
            tab.point_grads(q),
            self.space.geometry(cell),
        )
    }

    /// Broken Laplacian at point `q` of a tabulation.
    pub fn laplacian_tab(&self, cell: usize, tab: &Tabulation, q: usize) -> f64 {
        let geo = self.space.geometry(cell);
        self.cell_coeffs(cell)
            .iter()
            .zip(tab.point_hessians(q))
            .map(|(c, h)| c * geo.laplacian(*h))
            .sum()
    }

    pub fn facet_trace(&self, facet: usize) -> Result<FacetTrace, Error> {
        let mesh = self.space.mesh();
        if facet >= mesh.num_facets() {
            return Err(Error::FacetOutOfRange {
                facet,
                facets: mesh.num_facets(),
            });
        }
        let f = &mesh.facets()[facet];
        let (points, weights) = self.space.facet_points(facet);
        let side = |cell: usize, minus: bool| {
            let tab = self.space.facet_tabulation(facet, minus);
            (0..tab.n_points)
                .map(|q| self.eval_tab(cell, tab, q))
                .collect::<Vec<_>>()
        };
        Ok(FacetTrace {
            points,
            weights,
            normal: f.normal,
            plus: side(f.plus, false),
            minus: f.minus.map(|m| side(m, true)),
        })
    }
}

fn combine(coeffs: &[f64], values: &[f64], grads: &[[f64; 2]], geo: &CellGeometry) -> PointEval {
    let mut value = 0.0;
    let mut g = [0.0; 2];
    for ((c, v), d) in coeffs.iter().zip(values).zip(grads) {
        value += c * v;
        g[0] += c * d[0];
        g[1] += c * d[1];
    }
    PointEval {
        value,
        grad: geo.grad(g),
    }
}
