//! Assembly of the symmetric interior penalty form, the semilinear term, the
//! discrete residual and its Jacobian.
//!
//! Dirichlet data are imposed weakly: boundary facets carry the consistency
//! and penalty terms with `[v] = v n` and one-sided averages.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::mesh::MeshSizeField;
use crate::space::DGSpace;
use crate::sparse::BlockCsr;

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// A known solution `u` with its gradient, used for error measurement.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub grad: VectorField,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExactSolution { .. }")
    }
}

/// Exponent, source and penalty constant of one problem instance.
#[derive(Clone)]
pub struct ProblemSpec {
    pub p: f64,
    pub source: ScalarField,
    pub c_sigma: f64,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("p", &self.p)
            .field("c_sigma", &self.c_sigma)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_C_SIGMA: f64 = 10.0;

impl ProblemSpec {
    pub fn new(p: f64, source: ScalarField, c_sigma: f64) -> Result<Self, Error> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "exponent p must satisfy p >= 2, got {p}"
            )));
        }
        if !(c_sigma > 0.0) || !c_sigma.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "penalty constant must be positive, got {c_sigma}"
            )));
        }
        Ok(ProblemSpec {
            p,
            source,
            c_sigma,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Conjugate exponent `p / (p - 1)`.
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// `|u|^{p-2} u`.
#[inline]
pub fn nonlinearity(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        u
    } else {
        libm::pow(libm::fabs(u), p - 2.0) * u
    }
}

/// `(p - 1) |u|^{p-2}`.
#[inline]
pub fn nonlinearity_derivative(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        (p - 1.0) * libm::pow(libm::fabs(u), p - 2.0)
    }
}

/// `σ_e = C_σ k² / h_e` on every facet.
pub fn penalty(space: &DGSpace, spec: &ProblemSpec, sizes: &MeshSizeField) -> Vec<f64> {
    penalty_for(space.degree(), spec.c_sigma, sizes)
}

pub fn penalty_for(k: usize, c_sigma: f64, sizes: &MeshSizeField) -> Vec<f64> {
    let k2 = (k * k) as f64;
    sizes.h_facet.iter().map(|h| c_sigma * k2 / h).collect()
}

/// Volume stiffness block `∫_K ∇φ_j·∇φ_i` of one cell, row-major.
pub fn local_stiffness(space: &DGSpace, cell: usize) -> Vec<f64> {
    let n = space.dofs_per_cell();
    let geo = space.geometry(cell);
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let mut k = alloc::vec![0.0; n * n];
    let mut grads = alloc::vec![[0.0; 2]; n];
    for q in 0..rule.len() {
        let w = rule.weights[q] * libm::fabs(geo.det);
        for (g, r) in grads.iter_mut().zip(tab.point_grads(q)) {
            *g = geo.grad(*r);
        }
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
        }
    }
    k
}

/// Matrix of the interior penalty form `A_h`.
pub fn assemble_bilinear(space: &DGSpace, spec: &ProblemSpec) -> BlockCsr {
    let sigma = penalty(space, spec, &space.mesh().mesh_size());
    assemble_bilinear_with(space, &sigma)
}

/// Matrix of `A_h` for a given per-facet penalty.
pub fn assemble_bilinear_with(space: &DGSpace, sigma: &[f64]) -> BlockCsr {
    let mesh = space.mesh();
    let n = space.dofs_per_cell();
    let mut a = BlockCsr::for_mesh(mesh, n);
    for c in 0..mesh.num_cells() {
        let k = local_stiffness(space, c);
        a.add_block(c, c, &k);
    }

    let mut blocks = [
        alloc::vec![0.0; n * n],
        alloc::vec![0.0; n * n],
        alloc::vec![0.0; n * n],
        alloc::vec![0.0; n * n],
    ];
    for (fi, facet) in mesh.facets().iter().enumerate() {
        let (_, weights) = space.facet_points(fi);
        let normal = facet.normal;
        let cells = [Some(facet.plus), facet.minus];
        let sides = if facet.minus.is_some() { 2 } else { 1 };
        let avg = if sides == 2 { 0.5 } else { 1.0 };
        let tabs = [space.facet_tabulation(fi, false), space.facet_tabulation(fi, true)];
        for b in blocks.iter_mut() {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
        for (q, &w) in weights.iter().enumerate() {
            // per side: values and normal derivatives of the basis
            let mut vals = [[0.0; 64]; 2];
            let mut dn = [[0.0; 64]; 2];
            for s in 0..sides {
                let cell = cells[s].unwrap();
                let geo = space.geometry(cell);
                for i in 0..n {
                    let g = geo.grad(tabs[s].grad(q, i));
                    vals[s][i] = tabs[s].value(q, i);
                    dn[s][i] = g[0] * normal[0] + g[1] * normal[1];
                }
            }
            for tb in 0..sides {
                let sb = if tb == 0 { 1.0 } else { -1.0 };
                for ta in 0..sides {
                    let sa = if ta == 0 { 1.0 } else { -1.0 };
                    let blk = &mut blocks[tb * 2 + ta];
                    for i in 0..n {
                        for j in 0..n {
                            let consistency = -sb * vals[tb][i] * avg * dn[ta][j] - sa * vals[ta][j] * avg * dn[tb][i];
                            let pen = sigma[fi] * sa * sb * vals[tb][i] * vals[ta][j];
                            blk[i * n + j] += w * (consistency + pen);
                        }
                    }
                }
            }
        }
        for tb in 0..sides {
            for ta in 0..sides {
                a.add_block(cells[tb].unwrap(), cells[ta].unwrap(), &blocks[tb * 2 + ta]);
            }
        }
    }
    a
}

/// Load vector `ℓ_i = ∫ f φ_i`.
pub fn assemble_load<F: Fn(f64, f64) -> f64 + ?Sized>(space: &DGSpace, f: &F) -> Vec<f64> {
    let n = space.dofs_per_cell();
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let mut out = alloc::vec![0.0; space.total_dofs()];
    for c in 0..space.num_cells() {
        let geo = space.geometry(c);
        let jac = libm::fabs(geo.det);
        let o = &mut out[c * n..(c + 1) * n];
        for q in 0..rule.len() {
            let x = geo.map(rule.points[q]);
            let fw = f(x[0], x[1]) * rule.weights[q] * jac;
            for (oi, phi) in o.iter_mut().zip(tab.point_values(q)) {
                *oi += fw * phi;
            }
        }
    }
    out
}

fn value_at(coeffs: &[f64], phi: &[f64]) -> f64 {
    coeffs.iter().zip(phi).map(|(c, v)| c * v).sum()
}

/// `b_i = ∫ |u_h|^{p-2} u_h φ_i` for the coefficient vector `u`.
pub fn assemble_semilinear(space: &DGSpace, p: f64, u: &[f64]) -> Vec<f64> {
    let n = space.dofs_per_cell();
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let mut out = alloc::vec![0.0; space.total_dofs()];
    for c in 0..space.num_cells() {
        let jac = libm::fabs(space.geometry(c).det);
        let uc = &u[c * n..(c + 1) * n];
        let o = &mut out[c * n..(c + 1) * n];
        for q in 0..rule.len() {
            let phi = tab.point_values(q);
            let s = nonlinearity(value_at(uc, phi), p) * rule.weights[q] * jac;
            for (oi, v) in o.iter_mut().zip(phi) {
                *oi += s * v;
            }
        }
    }
    out
}

/// Block-diagonal `∫ (p-1)|u_h|^{p-2} φ_j φ_i`.
pub fn assemble_jacobian_semilinear(space: &DGSpace, p: f64, u: &[f64]) -> BlockCsr {
    let n = space.dofs_per_cell();
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let mut m = BlockCsr::block_diagonal(space.num_cells(), n);
    for c in 0..space.num_cells() {
        let jac = libm::fabs(space.geometry(c).det);
        let uc = &u[c * n..(c + 1) * n];
        let blk = m.block_mut(c, c);
        for q in 0..rule.len() {
            let phi = tab.point_values(q);
            let d = nonlinearity_derivative(value_at(uc, phi), p) * rule.weights[q] * jac;
            if d == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    blk[i * n + j] += d * phi[i] * phi[j];
                }
            }
        }
    }
    m
}

/// Residual, Jacobian and penalty at one state.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub residual: Vec<f64>,
    pub jacobian: BlockCsr,
    pub penalty_field: Vec<f64>,
}

/// The discrete problem on a fixed space with `A_h` and `ℓ` cached.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    space: Arc<DGSpace>,
    spec: ProblemSpec,
    sigma: Vec<f64>,
    bilinear: BlockCsr,
    load: Vec<f64>,
}

impl DiscreteProblem {
    pub fn new(space: Arc<DGSpace>, spec: ProblemSpec) -> Self {
        let sizes = space.mesh().mesh_size();
        let sigma = penalty(&space, &spec, &sizes);
        let bilinear = assemble_bilinear_with(&space, &sigma);
        let load = assemble_load(&space, &*spec.source);
        DiscreteProblem {
            space,
            spec,
            sigma,
            bilinear,
            load,
        }
    }

    pub fn space(&self) -> &Arc<DGSpace> {
        &self.space
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn bilinear(&self) -> &BlockCsr {
        &self.bilinear
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// `F(U) = A U + b(U) - ℓ` with exponent `p`.
    pub fn residual_with(&self, u: &[f64], p: f64) -> Vec<f64> {
        let mut r = self.bilinear.mul(u);
        let b = assemble_semilinear(&self.space, p, u);
        for ((ri, bi), li) in r.iter_mut().zip(&b).zip(&self.load) {
            *ri += bi - li;
        }
        r
    }

    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.residual_with(u, self.spec.p)
    }

    /// `A + J_B(U)` with exponent `p`.
    pub fn jacobian_with(&self, u: &[f64], p: f64) -> BlockCsr {
        let mut j = self.bilinear.clone();
        j.add_diagonal(&assemble_jacobian_semilinear(&self.space, p, u));
        j
    }

    pub fn assemble(&self, u: &[f64]) -> AssembledSystem {
        AssembledSystem {
            residual: self.residual(u),
            jacobian: self.jacobian_with(u, self.spec.p),
            penalty_field: self.sigma.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::space::DGFunction;
    use rand::{Rng, SeedableRng};

    fn zero_source() -> ScalarField {
        Arc::new(|_, _| 0.0)
    }

    fn space(mesh: Mesh, k: usize, p: f64) -> Arc<DGSpace> {
        Arc::new(DGSpace::for_problem(Arc::new(mesh), k, p).unwrap())
    }

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new(1.5, zero_source(), 10.0).is_err());
        assert!(ProblemSpec::new(4.0, zero_source(), 0.0).is_err());
        let s = ProblemSpec::new(4.0, zero_source(), 10.0).unwrap();
        assert!((s.q() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn penalty_values() {
        let sizes = MeshSizeField {
            h_cell: vec![],
            h_facet: vec![0.5, 0.25],
        };
        assert_eq!(penalty_for(1, 10.0, &sizes), vec![20.0, 40.0]);
        assert_eq!(penalty_for(2, 10.0, &sizes)[1], 160.0);
        let halved = MeshSizeField {
            h_cell: vec![],
            h_facet: vec![0.25, 0.125],
        };
        let a = penalty_for(1, 10.0, &sizes);
        let b = penalty_for(1, 10.0, &halved);
        assert!(a.iter().zip(&b).all(|(x, y)| (2.0 * x - y).abs() < 1e-12));
    }

    #[test]
    fn p1_stiffness_on_reference_triangle() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let s = space(mesh, 1, 2.0);
        let k = local_stiffness(&s, 0);
        // nodal hat functions expressed in the modal basis
        let hats: [fn(f64, f64) -> f64; 3] = [|x, y| 1.0 - x - y, |x, _| x, |_, y| y];
        let c: Vec<Vec<f64>> = hats.iter().map(|h| s.project(h).into_coeffs()).collect();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                let mut v = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        v += c[a][i] * k[i * 3 + j] * c[b][j];
                    }
                }
                assert!((v - expected[a][b]).abs() < 1e-13, "({a},{b}) {v}");
            }
        }
    }

    #[test]
    fn bilinear_is_symmetric() {
        for k in 1..=3 {
            let s = space(Mesh::crisscross(3).unwrap(), k, 2.0);
            let spec = ProblemSpec::new(2.0, zero_source(), 10.0).unwrap();
            let a = assemble_bilinear(&s, &spec);
            assert!(a.max_asymmetry() <= 1e-10 * a.max_abs());
        }
    }

    #[test]
    fn constant_function_only_sees_boundary_terms() {
        // two-cell mesh of the unit square
        let mesh = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let s = space(mesh, 2, 2.0);
        let spec = ProblemSpec::new(2.0, zero_source(), 10.0).unwrap();
        let sigma = penalty(&s, &spec, &s.mesh().mesh_size());
        let a = assemble_bilinear_with(&s, &sigma);
        let c = 1.7;
        let u = DGFunction::constant(&s, c);
        let au = a.mul(u.coeffs());

        // oracle: Σ_{e ⊂ ∂Ω} ∫_e (σ c φ_i - c ∇φ_i·n) with a high-order line rule
        let n = s.dofs_per_cell();
        let rule = crate::quadrature::LineRule::with_degree(12);
        let mut expected = vec![0.0; s.total_dofs()];
        for (fi, f) in s.mesh().facets().iter().enumerate() {
            if !f.is_boundary() {
                continue;
            }
            let cell = f.plus;
            let geo = s.geometry(cell);
            let pa = s.mesh().vertices()[f.vertices[0]];
            let pb = s.mesh().vertices()[f.vertices[1]];
            for (t, w) in rule.points.iter().zip(&rule.weights) {
                let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                let xi = geo.inverse_map(x);
                let tab = s.basis().tabulate(&[xi]);
                for i in 0..n {
                    let g = geo.grad(tab.grad(0, i));
                    let dn = g[0] * f.normal[0] + g[1] * f.normal[1];
                    expected[cell * n + i] += w * f.length * (sigma[fi] * c * tab.value(0, i) - c * dn);
                }
            }
        }
        for (x, y) in au.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-11, "{x} vs {y}");
        }
    }

    #[test]
    fn semilinear_examples() {
        let s = space(Mesh::crisscross(2).unwrap(), 2, 4.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..s.total_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // p = 2: b = M U with the block-diagonal mass |det B| I
        let b = assemble_semilinear(&s, 2.0, &u);
        let n = s.dofs_per_cell();
        for c in 0..s.num_cells() {
            let det = s.geometry(c).det.abs();
            for i in 0..n {
                assert!((b[c * n + i] - det * u[c * n + i]).abs() < 1e-13);
            }
        }
        let jm = assemble_jacobian_semilinear(&s, 2.0, &u);
        for c in 0..s.num_cells() {
            let det = s.geometry(c).det.abs();
            let blk = jm.block(c, c).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { det } else { 0.0 };
                    assert!((blk[i * n + j] - e).abs() < 1e-13);
                }
            }
        }

        // constant c, p = 4, tested against the constant 1 on the unit square
        let cst = 0.7;
        let uc = DGFunction::constant(&s, cst);
        let b = assemble_semilinear(&s, 4.0, uc.coeffs());
        let one = DGFunction::constant(&s, 1.0);
        let total: f64 = b.iter().zip(one.coeffs()).map(|(x, y)| x * y).sum();
        assert!((total - cst * cst * cst).abs() < 1e-13);

        // odd symmetry
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let bp = assemble_semilinear(&s, 4.0, &u);
        let bn = assemble_semilinear(&s, 4.0, &neg);
        assert!(bp.iter().zip(&bn).all(|(a, b)| *a == -*b));

        // U = 0, p > 2: zero Jacobian
        let z = assemble_jacobian_semilinear(&s, 4.0, &vec![0.0; s.total_dofs()]);
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn residual_examples() {
        let s = space(Mesh::crisscross(2).unwrap(), 1, 2.0);
        let spec = ProblemSpec::new(2.0, zero_source(), 10.0).unwrap();
        let prob = DiscreteProblem::new(Arc::clone(&s), spec);
        let zero = vec![0.0; s.total_dofs()];
        assert!(prob.residual(&zero).iter().all(|&r| r == 0.0));

        let source: ScalarField = Arc::new(|x, y| 1.0 + x * y);
        let prob = DiscreteProblem::new(Arc::clone(&s), ProblemSpec::new(2.0, source, 10.0).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u1: Vec<f64> = (0..s.total_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u2: Vec<f64> = (0..s.total_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let (f12, f1, f2, f0) = (
            prob.residual(&sum),
            prob.residual(&u1),
            prob.residual(&u2),
            prob.residual(&zero),
        );
        for i in 0..s.total_dofs() {
            assert!((f12[i] - f1[i] - f2[i] + f0[i]).abs() < 1e-12);
        }
        let sys = prob.assemble(&u1);
        assert_eq!(sys.residual, f1);
        assert!(sys.jacobian.max_asymmetry() <= 1e-10 * sys.jacobian.max_abs());
        assert_eq!(sys.penalty_field.len(), s.mesh().num_facets());
    }
}
