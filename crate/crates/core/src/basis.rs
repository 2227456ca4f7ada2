//! Orthonormal modal basis of `P_k` on the reference triangle.
//!
//! The basis is obtained from monomials centred at the reference centroid by
//! two passes of Cholesky orthonormalisation against the exact (quadrature)
//! reference mass matrix, so `∫_ref φ_i φ_j = δ_ij`. Basis function 0 is the
//! constant `√2`.

use alloc::vec::Vec;

use crate::dense;
use crate::quadrature::TriangleRule;

const CENTRE: f64 = 1.0 / 3.0;

/// Number of polynomials of total degree `<= k` in two variables.
pub const fn dofs_per_cell(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Row-major `n x n`, lower triangular: `φ_i = Σ_j c_ij m_j`.
    coeffs: Vec<f64>,
}

/// Basis values, gradients and Hessians at a set of reference points.
///
/// Entries are stored point-major: index `q * n_basis + i`.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_points: usize,
    pub n_basis: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    /// `[∂ξξ, ∂ξη, ∂ηη]` in reference coordinates.
    pub hessians: Vec<[f64; 3]>,
}

impl Tabulation {
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n_basis + i]
    }

    pub fn grad(&self, q: usize, i: usize) -> [f64; 2] {
        self.grads[q * self.n_basis + i]
    }

    pub fn point_values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_basis..(q + 1) * self.n_basis]
    }

    pub fn point_grads(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.n_basis..(q + 1) * self.n_basis]
    }

    pub fn point_hessians(&self, q: usize) -> &[[f64; 3]] {
        &self.hessians[q * self.n_basis..(q + 1) * self.n_basis]
    }
}

fn powi(x: f64, e: i32) -> f64 {
    if e <= 0 {
        1.0
    } else {
        let mut r = 1.0;
        for _ in 0..e {
            r *= x;
        }
        r
    }
}

impl OrthonormalBasis {
    pub fn new(degree: usize) -> Self {
        let n = dofs_per_cell(degree);
        let mut exponents = Vec::with_capacity(n);
        for d in 0..=degree as i32 {
            for b in 0..=d {
                exponents.push((d - b, b));
            }
        }
        let mut basis = OrthonormalBasis {
            degree,
            exponents,
            coeffs: identity(n),
        };
        let rule = TriangleRule::with_degree(2 * degree);
        // Second pass removes the round-off left by the first.
        for _ in 0..2 {
            let mut gram = alloc::vec![0.0; n * n];
            let mut vals = alloc::vec![0.0; n];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                basis.values_at(*p, &mut vals);
                for i in 0..n {
                    for j in 0..=i {
                        gram[i * n + j] += w * vals[i] * vals[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    gram[j * n + i] = gram[i * n + j];
                }
            }
            dense::cholesky(&mut gram, n).expect("monomial Gram matrix is positive definite");
            let linv = dense::lower_triangular_inverse(&gram, n);
            let mut next = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    next[i * n + j] = (0..n).map(|k| linv[i * n + k] * basis.coeffs[k * n + j]).sum();
                }
            }
            basis.coeffs = next;
        }
        basis
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Value of the constant basis function.
    pub fn constant_value(&self) -> f64 {
        self.coeffs[0]
    }

    fn values_at(&self, p: [f64; 2], out: &mut [f64]) {
        let n = self.len();
        let (x, y) = (p[0] - CENTRE, p[1] - CENTRE);
        let mono: Vec<f64> = self.exponents.iter().map(|&(a, b)| powi(x, a) * powi(y, b)).collect();
        for i in 0..n {
            out[i] = (0..=i).map(|j| self.coeffs[i * n + j] * mono[j]).sum();
        }
    }

    /// Values, gradients and Hessians at one reference point.
    pub fn eval(&self, p: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]], hess: &mut [[f64; 3]]) {
        let n = self.len();
        let (x, y) = (p[0] - CENTRE, p[1] - CENTRE);
        let mut m = Vec::with_capacity(n);
        for &(a, b) in &self.exponents {
            let (af, bf) = (a as f64, b as f64);
            let v = powi(x, a) * powi(y, b);
            let dx = af * powi(x, a - 1) * powi(y, b);
            let dy = bf * powi(x, a) * powi(y, b - 1);
            let dxx = af * (af - 1.0) * powi(x, a - 2) * powi(y, b);
            let dxy = af * bf * powi(x, a - 1) * powi(y, b - 1);
            let dyy = bf * (bf - 1.0) * powi(x, a) * powi(y, b - 2);
            m.push([v, dx, dy, dxx, dxy, dyy]);
        }
        for i in 0..n {
            let mut acc = [0.0; 6];
            for j in 0..=i {
                let c = self.coeffs[i * n + j];
                for (a, mj) in acc.iter_mut().zip(&m[j]) {
                    *a += c * mj;
                }
            }
            values[i] = acc[0];
            grads[i] = [acc[1], acc[2]];
            hess[i] = [acc[3], acc[4], acc[5]];
        }
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> Tabulation {
        let n = self.len();
        let mut tab = Tabulation {
            n_points: points.len(),
            n_basis: n,
            values: alloc::vec![0.0; n * points.len()],
            grads: alloc::vec![[0.0; 2]; n * points.len()],
            hessians: alloc::vec![[0.0; 3]; n * points.len()],
        };
        for (q, p) in points.iter().enumerate() {
            let r = q * n..(q + 1) * n;
            self.eval(
                *p,
                &mut tab.values[r.clone()],
                &mut tab.grads[r.clone()],
                &mut tab.hessians[r],
            );
        }
        tab
    }

    /// Values only, for a single point.
    pub fn values(&self, p: [f64; 2]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.len()];
        self.values_at(p, &mut out);
        out
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = alloc::vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}
