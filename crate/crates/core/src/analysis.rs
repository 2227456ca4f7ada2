//! Error measures and the nodal-averaging conforming reconstruction.
//!
//! Norms of discrete functions use the space's cell rule, which is exact for
//! the polynomial integrands. Errors against an exact solution use a rule of
//! degree four above it.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::basis::Tabulation;
use crate::dense;
use crate::forms::ExactSolution;
use crate::mesh::MeshSizeField;
use crate::quadrature::TriangleRule;
use crate::space::{DGFunction, DGSpace};

/// Quadrature degree added on top of the cell rule when measuring errors.
pub const ERROR_QUAD_BUMP: usize = 4;

/// `(Σ_K ‖∇v‖²_K + Σ_e σ_e ‖[v]‖²_e)^{1/2}`.
pub fn energy_norm(v: &DGFunction, sigma: &[f64]) -> f64 {
    libm::sqrt(energy_norm_parts(v, sigma).iter().sum())
}

/// Per-cell squared energy contributions, facet terms split evenly between
/// the adjacent cells.
pub fn energy_norm_parts(v: &DGFunction, sigma: &[f64]) -> Vec<f64> {
    let space = v.space();
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let mut parts: Vec<f64> = (0..space.num_cells())
        .map(|c| {
            let jac = libm::fabs(space.geometry(c).det);
            (0..rule.len())
                .map(|q| {
                    let g = v.eval_tab(c, tab, q).grad;
                    rule.weights[q] * jac * (g[0] * g[0] + g[1] * g[1])
                })
                .sum()
        })
        .collect();
    add_jump_terms(v, |e| sigma[e], &mut parts);
    parts
}

/// Adds `weight(e) ‖[v]‖²_e` to the cells adjacent to every facet `e`.
fn add_jump_terms(v: &DGFunction, weight: impl Fn(usize) -> f64, parts: &mut [f64]) {
    let mesh = v.space().mesh();
    for (e, facet) in mesh.facets().iter().enumerate() {
        let t = v.facet_trace(e).expect("facet index in range");
        let j2: f64 = (0..t.points.len())
            .map(|q| {
                let j = t.jump(q);
                t.weights[q] * (j[0] * j[0] + j[1] * j[1])
            })
            .sum();
        let c = weight(e) * j2;
        match facet.minus {
            Some(m) => {
                parts[facet.plus] += 0.5 * c;
                parts[m] += 0.5 * c;
            }
            None => parts[facet.plus] += c,
        }
    }
}

fn integrate(space: &DGSpace, v: &DGFunction, mut f: impl FnMut(f64) -> f64) -> f64 {
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let mut s = 0.0;
    for c in 0..space.num_cells() {
        let jac = libm::fabs(space.geometry(c).det);
        for q in 0..rule.len() {
            s += rule.weights[q] * jac * f(v.eval_tab(c, tab, q).value);
        }
    }
    s
}

/// `‖w‖_{L^p}`.
pub fn lp_norm(w: &DGFunction, p: f64) -> f64 {
    let s = integrate(w.space(), w, |x| libm::pow(libm::fabs(x), p));
    libm::pow(s, 1.0 / p)
}

pub fn l2_norm(w: &DGFunction) -> f64 {
    libm::sqrt(integrate(w.space(), w, |x| x * x))
}

/// Pointwise quasinorm density `|v|²(|w|+|v|)^{p-2}`.
#[inline]
pub fn quasinorm_density(v: f64, w: f64, p: f64) -> f64 {
    let a = libm::fabs(v);
    if p == 2.0 {
        a * a
    } else {
        a * a * libm::pow(libm::fabs(w) + a, p - 2.0)
    }
}

/// `|||v|||_{(w,p)} = (∫ |v|²(|w|+|v|)^{p-2})^{1/2}`; `v`, `w` on the same space.
pub fn quasinorm(v: &DGFunction, w: &DGFunction, p: f64) -> f64 {
    let space = v.space();
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let mut s = 0.0;
    for c in 0..space.num_cells() {
        let jac = libm::fabs(space.geometry(c).det);
        for q in 0..rule.len() {
            let a = v.eval_tab(c, tab, q).value;
            let b = w.eval_tab(c, tab, q).value;
            s += rule.weights[q] * jac * quasinorm_density(a, b, p);
        }
    }
    libm::sqrt(s)
}

/// Errors of a discrete solution against a known exact solution.
///
/// The per-cell vectors hold contributions whose combination reproduces the
/// totals: squares summed for the quadratic measures, `p`-th powers for `L^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub enorm: f64,
    pub lp: f64,
    /// `|||u - u_h|||_{(u,p)}`.
    pub quasinorm: f64,
    pub l2: f64,
    /// `(|||u - u_h|||² + |||u - u_h|||²_{(u,p)})^{1/2}`.
    pub combined: f64,
    pub cell_enorm: Vec<f64>,
    pub cell_lp: Vec<f64>,
    pub cell_quasinorm: Vec<f64>,
    pub cell_l2: Vec<f64>,
}

/// Measures `u - u_h` with `[u] = 0` on interior facets and `u = 0` on the
/// boundary, so the jump of the error is `-[u_h]`.
pub fn compute_errors(uh: &DGFunction, exact: &ExactSolution, p: f64, sigma: &[f64]) -> ErrorReport {
    let space = uh.space();
    let rule = TriangleRule::with_degree(space.quadrature_degrees().cell + ERROR_QUAD_BUMP);
    let tab: Tabulation = space.basis().tabulate(&rule.points);
    let nc = space.num_cells();
    let (mut e2, mut lp, mut qn, mut l2) = (
        alloc::vec![0.0; nc],
        alloc::vec![0.0; nc],
        alloc::vec![0.0; nc],
        alloc::vec![0.0; nc],
    );
    for c in 0..nc {
        let geo = space.geometry(c);
        let jac = libm::fabs(geo.det);
        for q in 0..rule.len() {
            let x = geo.map(rule.points[q]);
            let w = rule.weights[q] * jac;
            let ev = uh.eval_tab(c, &tab, q);
            let u = (exact.u)(x[0], x[1]);
            let gu = (exact.grad)(x[0], x[1]);
            let err = u - ev.value;
            let ge = [gu[0] - ev.grad[0], gu[1] - ev.grad[1]];
            e2[c] += w * (ge[0] * ge[0] + ge[1] * ge[1]);
            lp[c] += w * libm::pow(libm::fabs(err), p);
            qn[c] += w * quasinorm_density(err, u, p);
            l2[c] += w * err * err;
        }
    }
    add_jump_terms(uh, |e| sigma[e], &mut e2);

    let enorm = libm::sqrt(e2.iter().sum());
    let quasi = libm::sqrt(qn.iter().sum());
    ErrorReport {
        enorm,
        lp: libm::pow(lp.iter().sum(), 1.0 / p),
        quasinorm: quasi,
        l2: libm::sqrt(l2.iter().sum()),
        combined: libm::hypot(enorm, quasi),
        cell_enorm: e2.into_iter().map(libm::sqrt).collect(),
        cell_lp: lp.into_iter().map(|v| libm::pow(v, 1.0 / p)).collect(),
        cell_quasinorm: qn.into_iter().map(libm::sqrt).collect(),
        cell_l2: l2.into_iter().map(libm::sqrt).collect(),
    }
}

/// Equispaced Lagrange nodes of degree `k`, as integer barycentric
/// coordinates `[λ0, λ1, λ2]` summing to `k` (vertex `i` has `λi = k`).
pub fn lagrange_nodes(k: usize) -> Vec<[usize; 3]> {
    let mut nodes = Vec::with_capacity(crate::basis::dofs_per_cell(k));
    for j in 0..=k {
        for i in 0..=k - j {
            nodes.push([k - i - j, i, j]);
        }
    }
    nodes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum NodeKey {
    Vertex(usize),
    /// Facet and the barycentric weight of its first vertex.
    Edge(usize, usize),
    Interior(usize, usize),
}

/// Nodal-averaging operator onto the continuous, zero-trace subspace.
///
/// Builds the node numbering and the modal/nodal transforms once per space.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    space: Arc<DGSpace>,
    /// Node values of the basis, `nodes x basis`.
    node_tab: Tabulation,
    /// Inverse Vandermonde: coefficients from nodal values.
    vinv: Vec<f64>,
    /// Global node of every local node, per cell.
    cell_nodes: Vec<usize>,
    boundary: Vec<bool>,
    multiplicity: Vec<usize>,
}

impl Reconstruction {
    pub fn new(space: &Arc<DGSpace>) -> Self {
        let k = space.degree();
        let mesh = space.mesh();
        let local = lagrange_nodes(k);
        let pts: Vec<[f64; 2]> = local
            .iter()
            .map(|l| [l[1] as f64 / k as f64, l[2] as f64 / k as f64])
            .collect();
        let node_tab = space.basis().tabulate(&pts);
        let n = local.len();
        let vinv = dense::invert(&node_tab.values, n).expect("Lagrange nodes are unisolvent");

        let bverts = mesh.boundary_vertices();
        let mut index: BTreeMap<NodeKey, usize> = BTreeMap::new();
        let mut boundary = Vec::new();
        let mut multiplicity = Vec::new();
        let mut cell_nodes = Vec::with_capacity(n * mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let verts = mesh.cells()[c];
            let facets = mesh.cell_facets(c);
            for (li, l) in local.iter().enumerate() {
                let zeros: Vec<usize> = (0..3).filter(|&m| l[m] == 0).collect();
                let (key, on_boundary) = match zeros.len() {
                    2 => {
                        let m = (0..3).find(|&m| l[m] == k).unwrap();
                        (NodeKey::Vertex(verts[m]), bverts[verts[m]])
                    }
                    1 => {
                        let e = zeros[0];
                        let f = facets[e];
                        let facet = &mesh.facets()[f];
                        let m = (0..3).find(|&m| verts[m] == facet.vertices[0]).unwrap();
                        (NodeKey::Edge(f, l[m]), facet.is_boundary())
                    }
                    _ => (NodeKey::Interior(c, li), false),
                };
                let next = index.len();
                let g = *index.entry(key).or_insert(next);
                if g == boundary.len() {
                    boundary.push(on_boundary);
                    multiplicity.push(0);
                }
                multiplicity[g] += 1;
                cell_nodes.push(g);
            }
        }
        Reconstruction {
            space: Arc::clone(space),
            node_tab,
            vinv,
            cell_nodes,
            boundary,
            multiplicity,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.boundary.len()
    }

    /// `E(v)`: average the cell values at each node, zero on the boundary.
    pub fn apply(&self, v: &DGFunction) -> DGFunction {
        let space = &self.space;
        let n = space.dofs_per_cell();
        let mut sums = alloc::vec![0.0; self.num_nodes()];
        for c in 0..space.num_cells() {
            let coeffs = v.cell_coeffs(c);
            for li in 0..n {
                let val: f64 = coeffs
                    .iter()
                    .zip(self.node_tab.point_values(li))
                    .map(|(a, b)| a * b)
                    .sum();
                sums[self.cell_nodes[c * n + li]] += val;
            }
        }
        for (g, s) in sums.iter_mut().enumerate() {
            *s = if self.boundary[g] {
                0.0
            } else {
                *s / self.multiplicity[g] as f64
            };
        }
        let mut out = alloc::vec![0.0; space.total_dofs()];
        let mut nodal = alloc::vec![0.0; n];
        for c in 0..space.num_cells() {
            for li in 0..n {
                nodal[li] = sums[self.cell_nodes[c * n + li]];
            }
            dense::matvec(&self.vinv, n, n, &nodal, &mut out[c * n..(c + 1) * n]);
        }
        DGFunction::from_coeffs(space, out).expect("length matches space")
    }
}

/// One-shot [`Reconstruction::apply`].
pub fn reconstruct(v: &DGFunction) -> DGFunction {
    Reconstruction::new(v.space()).apply(v)
}

/// Both sides of the reconstruction stability bound for `α = 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpTerms {
    /// `Σ_K ‖v - E v‖²_{L²(K)}`.
    pub defect_l2: f64,
    /// `Σ_K |v - E v|²_{H¹(K)}`.
    pub defect_h1: f64,
    /// `Σ_e h_e ‖[v]‖²_e`.
    pub jumps_h: f64,
    /// `Σ_e h_e^{-1} ‖[v]‖²_e`.
    pub jumps_h_inv: f64,
}

impl KpTerms {
    pub fn ratio_l2(&self) -> f64 {
        self.defect_l2 / self.jumps_h
    }

    pub fn ratio_h1(&self) -> f64 {
        self.defect_h1 / self.jumps_h_inv
    }
}

pub fn kp_terms(rec: &Reconstruction, v: &DGFunction, sizes: &MeshSizeField) -> KpTerms {
    let ev = rec.apply(v);
    let d: Vec<f64> = v.coeffs().iter().zip(ev.coeffs()).map(|(a, b)| a - b).collect();
    let d = DGFunction::from_coeffs(v.space(), d).expect("same space");
    let space = v.space();
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..space.num_cells() {
        let jac = libm::fabs(space.geometry(c).det);
        for q in 0..rule.len() {
            let e = d.eval_tab(c, tab, q);
            let w = rule.weights[q] * jac;
            l2 += w * e.value * e.value;
            h1 += w * (e.grad[0] * e.grad[0] + e.grad[1] * e.grad[1]);
        }
    }
    let nc = space.num_cells();
    let mut jh = alloc::vec![0.0; nc];
    let mut jhi = alloc::vec![0.0; nc];
    add_jump_terms(v, |e| sizes.h_facet[e], &mut jh);
    add_jump_terms(v, |e| 1.0 / sizes.h_facet[e], &mut jhi);
    KpTerms {
        defect_l2: l2,
        defect_h1: h1,
        jumps_h: jh.iter().sum(),
        jumps_h_inv: jhi.iter().sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::penalty_for;
    use crate::mesh::Mesh;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};

    fn space(n: usize, k: usize, p: f64) -> Arc<DGSpace> {
        Arc::new(DGSpace::for_problem(Arc::new(Mesh::crisscross(n).unwrap()), k, p).unwrap())
    }

    fn random(s: &Arc<DGSpace>, seed: u64) -> DGFunction {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DGFunction::from_coeffs(s, (0..s.total_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn lagrange_node_counts() {
        assert_eq!(lagrange_nodes(1), vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(lagrange_nodes(3).len(), 10);
    }

    #[test]
    fn energy_norm_of_smooth_function() {
        let s = space(8, 2, 2.0);
        let sizes = s.mesh().mesh_size();
        let sigma = penalty_for(2, 10.0, &sizes);
        let zero = DGFunction::zeros(&s);
        let exact = ExactSolution {
            u: Arc::new(|x, y| (PI * x).sin() * (PI * y).sin()),
            grad: Arc::new(|x, y| {
                [
                    PI * (PI * x).cos() * (PI * y).sin(),
                    PI * (PI * x).sin() * (PI * y).cos(),
                ]
            }),
        };
        let r = compute_errors(&zero, &exact, 4.0, &sigma);
        assert!((r.enorm - PI / 2f64.sqrt()).abs() < 1e-10);
        assert!((r.l2 - 0.5).abs() < 1e-10);
        // ∫ sin⁴(πx) sin⁴(πy) = (3/8)²
        assert!((r.lp - (9.0f64 / 64.0).powf(0.25)).abs() < 1e-10);
        assert!((r.quasinorm * r.quasinorm - 9.0 / 64.0 * 4.0).abs() < 1e-10);
        let tot: f64 = r.cell_enorm.iter().map(|v| v * v).sum();
        assert!((tot.sqrt() - r.enorm).abs() < 1e-12);
        let totp: f64 = r.cell_lp.iter().map(|v| v.powf(4.0)).sum();
        assert!((totp.powf(0.25) - r.lp).abs() < 1e-12);
    }

    #[test]
    fn single_facet_jump() {
        let mesh = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let s = Arc::new(DGSpace::for_problem(Arc::new(mesh), 1, 2.0).unwrap());
        let mut v = DGFunction::zeros(&s);
        v.coeffs_mut()[3] = 1.0 / s.basis().constant_value();
        // only the interior facet carries weight
        let sigma: Vec<f64> = s
            .mesh()
            .facets()
            .iter()
            .map(|f| if f.is_boundary() { 0.0 } else { 7.0 })
            .collect();
        let len = s.mesh().facets().iter().find(|f| !f.is_boundary()).unwrap().length;
        assert!((energy_norm(&v, &sigma).powi(2) - 7.0 * len).abs() < 1e-12);
    }

    #[test]
    fn quasinorm_examples() {
        let s = space(2, 1, 4.0);
        let v = random(&s, 1);
        let w = random(&s, 2);
        let zero = DGFunction::zeros(&s);
        let q = quasinorm(&v, &zero, 4.0);
        assert!((q * q - lp_norm(&v, 4.0).powi(4)).abs() < 1e-13);
        assert!((quasinorm(&v, &w, 2.0) - l2_norm(&v)).abs() < 1e-14);
        let one = DGFunction::constant(&s, 1.0);
        assert!((quasinorm(&one, &one, 4.0).powi(2) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneity() {
        let s = space(2, 2, 4.0);
        let v = random(&s, 9);
        let sigma = penalty_for(2, 10.0, &s.mesh().mesh_size());
        let c = -2.5;
        let cv = v.scaled(c);
        assert!((lp_norm(&cv, 4.0) - c.abs() * lp_norm(&v, 4.0)).abs() < 1e-12);
        assert!((energy_norm(&cv, &sigma) - c.abs() * energy_norm(&v, &sigma)).abs() < 1e-10);
    }

    #[test]
    fn reconstruction_two_cell_average() {
        let mesh = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, -1.0]],
            vec![[0, 1, 3], [1, 2, 3], [0, 4, 1], [4, 2, 1]],
        )
        .unwrap();
        let s = Arc::new(DGSpace::for_problem(Arc::new(mesh), 1, 2.0).unwrap());
        // vertex 1 is the only interior vertex
        let v = s.project(&|x: f64, _y: f64| if x < 1.0 { 0.0 } else { 1.0 });
        let mut w = DGFunction::zeros(&s);
        w.coeffs_mut().copy_from_slice(v.coeffs());
        let ev = reconstruct(&w);
        let at = ev.eval_at(0, [1.0, 0.0]).value;
        assert!((at - 0.5).abs() < 1e-12, "{at}");
        assert!(ev.eval_at(0, [0.0, 0.0]).value.abs() < 1e-12);
    }

    #[test]
    fn reconstruction_is_projection_onto_conforming_functions() {
        for k in 1..=3 {
            let s = space(3, k, 2.0);
            let rec = Reconstruction::new(&s);
            let v = random(&s, 4 + k as u64);
            let ev = rec.apply(&v);
            let eev = rec.apply(&ev);
            for (a, b) in ev.coeffs().iter().zip(eev.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
            // continuity and zero trace
            for (f, facet) in s.mesh().facets().iter().enumerate() {
                let t = ev.facet_trace(f).unwrap();
                for q in 0..t.points.len() {
                    let j = t.jump(q);
                    assert!(
                        j[0].abs() < 1e-11 && j[1].abs() < 1e-11,
                        "k={k} facet {f} boundary={}",
                        facet.is_boundary()
                    );
                }
            }
        }
    }

    #[test]
    fn kp_terms_vanish_on_conforming_input() {
        let s = space(2, 2, 2.0);
        let rec = Reconstruction::new(&s);
        let v = rec.apply(&random(&s, 3));
        let t = kp_terms(&rec, &v, &s.mesh().mesh_size());
        assert!(t.defect_l2 < 1e-24 && t.defect_h1 < 1e-20 && t.jumps_h < 1e-20);
    }
}
