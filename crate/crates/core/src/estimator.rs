//! Residual/jump a posteriori error estimator.
//!
//! Per cell, `η_R² = h_K² ‖f + Δu_h - |u_h|^{p-2}u_h‖²_K`. Per facet,
//! `η_J² = h_e ‖[∇u_h]‖²_e + (h_e^{-1} + h_e) ‖[u_h]‖²_e`, where the normal
//! flux jump is taken on interior facets only. Interior facet contributions
//! are split evenly between the two neighbouring cells.

use alloc::vec::Vec;

use crate::analysis::ErrorReport;
use crate::forms::{nonlinearity, ProblemSpec};
use crate::mesh::MeshSizeField;
use crate::space::DGFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub eta_r2: Vec<f64>,
    pub eta_j2: Vec<f64>,
    pub total: f64,
}

impl EstimatorReport {
    /// Per-cell indicators `(η_R² + η_J²)^{1/2}`.
    pub fn indicators(&self) -> Vec<f64> {
        self.eta_r2
            .iter()
            .zip(&self.eta_j2)
            .map(|(r, j)| libm::sqrt(r + j))
            .collect()
    }
}

pub fn estimate(uh: &DGFunction, spec: &ProblemSpec, sizes: &MeshSizeField) -> EstimatorReport {
    let space = uh.space();
    let mesh = space.mesh();
    let tab = space.cell_tabulation();
    let rule = space.cell_rule();
    let nc = space.num_cells();

    let mut eta_r2 = alloc::vec![0.0; nc];
    for (c, out) in eta_r2.iter_mut().enumerate() {
        let geo = space.geometry(c);
        let jac = libm::fabs(geo.det);
        let mut s = 0.0;
        for q in 0..rule.len() {
            let x = geo.map(rule.points[q]);
            let u = uh.eval_tab(c, tab, q).value;
            let lap = uh.laplacian_tab(c, tab, q);
            let r = (spec.source)(x[0], x[1]) + lap - nonlinearity(u, spec.p);
            s += rule.weights[q] * jac * r * r;
        }
        let h = sizes.h_cell[c];
        *out = h * h * s;
    }

    let mut eta_j2 = alloc::vec![0.0; nc];
    for (e, facet) in mesh.facets().iter().enumerate() {
        let t = uh.facet_trace(e).expect("facet index in range");
        let h = sizes.h_facet[e];
        let (mut flux, mut jump) = (0.0, 0.0);
        for q in 0..t.points.len() {
            let g = t.normal_flux_jump(q);
            let j = t.jump(q);
            flux += t.weights[q] * g * g;
            jump += t.weights[q] * (j[0] * j[0] + j[1] * j[1]);
        }
        let c = h * flux + (1.0 / h + h) * jump;
        match facet.minus {
            Some(m) => {
                eta_j2[facet.plus] += 0.5 * c;
                eta_j2[m] += 0.5 * c;
            }
            None => eta_j2[facet.plus] += c,
        }
    }

    let total = libm::sqrt(eta_r2.iter().chain(&eta_j2).sum());
    EstimatorReport { eta_r2, eta_j2, total }
}

/// `total / |||u - u_h|||`; infinite when the error vanishes.
pub fn effectivity(report: &EstimatorReport, err: &ErrorReport) -> f64 {
    if err.enorm == 0.0 {
        f64::INFINITY
    } else {
        report.total / err.enorm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Reconstruction;
    use crate::mesh::Mesh;
    use crate::space::DGSpace;
    use alloc::sync::Arc;

    fn setup(k: usize, p: f64, f: f64) -> (Arc<DGSpace>, ProblemSpec) {
        let s = Arc::new(DGSpace::for_problem(Arc::new(Mesh::crisscross(3).unwrap()), k, p).unwrap());
        let spec = ProblemSpec::new(p, Arc::new(move |_, _| f), 10.0).unwrap();
        (s, spec)
    }

    #[test]
    fn linear_residual_has_no_laplacian() {
        let (s, spec) = setup(1, 4.0, 3.0);
        let u = s.project(&|x: f64, y: f64| x - 2.0 * y);
        let sizes = s.mesh().mesh_size();
        let r = estimate(&u, &spec, &sizes);
        let tab = s.cell_tabulation();
        let rule = s.cell_rule();
        for c in 0..s.num_cells() {
            let jac = s.geometry(c).det.abs();
            let direct: f64 = (0..rule.len())
                .map(|q| {
                    let v = u.eval_tab(c, tab, q).value;
                    let res = 3.0 - v * v * v;
                    rule.weights[q] * jac * res * res
                })
                .sum();
            let h = sizes.h_cell[c];
            assert!((r.eta_r2[c] - h * h * direct).abs() < 1e-12);
        }
    }

    #[test]
    fn conforming_input_sees_only_flux_jumps() {
        let (s, spec) = setup(2, 2.0, 0.0);
        let rec = Reconstruction::new(&s);
        let u = rec.apply(&s.project(&|x: f64, y: f64| x * y * (1.0 - x) * (2.0 - y)));
        let sizes = s.mesh().mesh_size();
        let r = estimate(&u, &spec, &sizes);
        let mut flux_only = vec![0.0; s.num_cells()];
        for (e, facet) in s.mesh().facets().iter().enumerate() {
            let t = u.facet_trace(e).unwrap();
            let g: f64 = (0..t.points.len())
                .map(|q| t.weights[q] * t.normal_flux_jump(q).powi(2))
                .sum();
            let c = sizes.h_facet[e] * g;
            if let Some(m) = facet.minus {
                flux_only[facet.plus] += 0.5 * c;
                flux_only[m] += 0.5 * c;
            }
        }
        for (a, b) in r.eta_j2.iter().zip(&flux_only) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn total_matches_cell_sum_and_dominates_jumps() {
        let (s, spec) = setup(1, 4.0, 10.0);
        let u = s.project(&|x: f64, y: f64| (3.0 * x).sin() + y);
        let sizes = s.mesh().mesh_size();
        let r = estimate(&u, &spec, &sizes);
        let cells: f64 = (0..s.num_cells()).map(|c| r.eta_r2[c] + r.eta_j2[c]).sum();
        assert!((r.total * r.total - cells).abs() <= 1e-12 * cells);
        assert!(r.eta_r2.iter().chain(&r.eta_j2).all(|&v| v >= 0.0));
        let mut jumps = 0.0;
        for e in 0..s.mesh().num_facets() {
            let t = u.facet_trace(e).unwrap();
            let j: f64 = (0..t.points.len())
                .map(|q| {
                    let j = t.jump(q);
                    t.weights[q] * (j[0] * j[0] + j[1] * j[1])
                })
                .sum();
            jumps += j / sizes.h_facet[e];
        }
        assert!(r.total * r.total >= jumps);
    }

    #[test]
    fn effectivity_ratio() {
        let rep = EstimatorReport {
            eta_r2: vec![100.0],
            eta_j2: vec![0.0],
            total: 10.0,
        };
        let mut err = ErrorReport {
            enorm: 1.0,
            lp: 0.0,
            quasinorm: 0.0,
            l2: 0.0,
            combined: 1.0,
            cell_enorm: vec![],
            cell_lp: vec![],
            cell_quasinorm: vec![],
            cell_l2: vec![],
        };
        assert_eq!(effectivity(&rep, &err), 10.0);
        err.enorm = 0.0;
        assert!(effectivity(&rep, &err).is_infinite());
    }
}
