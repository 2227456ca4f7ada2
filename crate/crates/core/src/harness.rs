//! Problem definitions and experiment drivers.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::analysis::{compute_errors, energy_norm, lp_norm, ErrorReport};
use crate::error::Error;
use crate::estimator::{effectivity, estimate, EstimatorReport};
use crate::forms::{penalty, ExactSolution, ProblemSpec, ScalarField};
use crate::mesh::Mesh;
use crate::solver::{solve, NewtonConfig, SolveReport};
use crate::space::{DGFunction, DGSpace, QuadratureDegrees};

/// Source of the constant-forcing experiment.
pub const ADAPT_SOURCE: f64 = 1000.0;

/// `u = sin(πx) sin(πy)` with its gradient.
pub fn manufactured_solution() -> ExactSolution {
    ExactSolution {
        u: Arc::new(|x, y| libm::sin(PI * x) * libm::sin(PI * y)),
        grad: Arc::new(|x, y| {
            [
                PI * libm::cos(PI * x) * libm::sin(PI * y),
                PI * libm::sin(PI * x) * libm::cos(PI * y),
            ]
        }),
    }
}

/// `f = 2π² u + u^{p-1}` for the manufactured `u`, which is nonnegative on
/// the unit square.
pub fn manufacture_source(p: f64) -> ScalarField {
    Arc::new(move |x, y| {
        let u = libm::sin(PI * x) * libm::sin(PI * y);
        2.0 * PI * PI * u + crate::forms::nonlinearity(u, p)
    })
}

pub fn manufactured_problem(p: f64, c_sigma: f64) -> Result<ProblemSpec, Error> {
    Ok(ProblemSpec::new(p, manufacture_source(p), c_sigma)?.with_exact(manufactured_solution()))
}

pub fn constant_source_problem(p: f64, c_sigma: f64) -> Result<ProblemSpec, Error> {
    ProblemSpec::new(p, Arc::new(|_, _| ADAPT_SOURCE), c_sigma)
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive pairs.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>, Error> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidInput(
            "need two or more errors and matching mesh sizes".into(),
        ));
    }
    if errors.iter().chain(hs).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("errors and mesh sizes must be positive".into()));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| libm::log(e[0] / e[1]) / libm::log(h[0] / h[1]))
        .collect())
}

/// One level of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub level: usize,
    pub cells: usize,
    pub dofs: usize,
    pub h_max: f64,
    pub enorm_err: f64,
    pub lp_err: f64,
    /// `(|||e|||² + |||e|||²_{(u,p)})^{1/2}`.
    pub quasinorm_err: f64,
    pub l2_err: f64,
    pub estimator_total: f64,
    pub effectivity: f64,
}

/// Measures with an EOC column, in CSV order.
pub const RATE_MEASURES: [&str; 5] = ["enorm_err", "lp_err", "quasinorm_err", "l2_err", "estimator_total"];

impl RateRow {
    pub fn measures(&self) -> [f64; 5] {
        [
            self.enorm_err,
            self.lp_err,
            self.quasinorm_err,
            self.l2_err,
            self.estimator_total,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    /// EOCs between consecutive rows, one array per pair in
    /// [`RATE_MEASURES`] order. Undefined rates are NaN.
    pub fn eocs(&self) -> Vec<[f64; 5]> {
        self.rows
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].measures(), w[1].measures());
                let mut out = [f64::NAN; 5];
                for i in 0..5 {
                    if let Ok(r) = eoc(&[a[i], b[i]], &[w[0].h_max, w[1].h_max]) {
                        out[i] = r[0];
                    }
                }
                out
            })
            .collect()
    }

    /// EOC of measure `i` between the last two rows.
    pub fn final_eoc(&self, i: usize) -> Option<f64> {
        self.eocs().last().map(|r| r[i])
    }
}

/// Per-level results beyond the rate table.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub errors: ErrorReport,
    pub estimator: EstimatorReport,
    pub solve: SolveReport,
    /// `|||u_h|||² + ‖u_h‖_p^p / q`.
    pub stability: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergeRun {
    pub table: RateTable,
    pub levels: Vec<LevelData>,
    pub solution: DGFunction,
}

/// Failure of a convergence study at a given level.
#[derive(Debug, Clone)]
pub struct LevelError {
    pub level: usize,
    pub error: Error,
}

impl core::fmt::Display for LevelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "level {}: {}", self.level, self.error)
    }
}

impl core::error::Error for LevelError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.error)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub k: usize,
    pub p: f64,
    pub levels: usize,
    pub c_sigma: f64,
    pub quad_bump: usize,
    pub newton: NewtonConfig,
}

impl ConvergeConfig {
    pub fn new(k: usize, p: f64, levels: usize) -> Self {
        ConvergeConfig {
            k,
            p,
            levels,
            c_sigma: crate::forms::DEFAULT_C_SIGMA,
            quad_bump: 0,
            newton: NewtonConfig::default(),
        }
    }
}

/// `|||u_h|||² + ‖u_h‖_p^p / q`.
pub fn stability_quantity(uh: &DGFunction, sigma: &[f64], p: f64) -> f64 {
    let e = energy_norm(uh, sigma);
    let q = p / (p - 1.0);
    e * e + libm::pow(lp_norm(uh, p), p) / q
}

/// Uniform refinement study for the manufactured solution, starting from
/// the `2 x 2` criss-cross mesh. `observer` sees every level's solution.
pub fn run_converge(
    cfg: &ConvergeConfig,
    observer: &mut dyn FnMut(usize, &DGFunction, &EstimatorReport),
) -> Result<ConvergeRun, LevelError> {
    let at = |level: usize| move |error: Error| LevelError { level, error };
    let spec = manufactured_problem(cfg.p, cfg.c_sigma).map_err(at(0))?;
    let exact = spec.exact.clone().expect("manufactured problem has an exact solution");
    let quad = QuadratureDegrees::for_problem(cfg.k, cfg.p, cfg.quad_bump);

    let mut mesh = Mesh::crisscross(2).map_err(|e| at(0)(e.into()))?;
    let mut table = RateTable::default();
    let mut levels = Vec::with_capacity(cfg.levels);
    let mut previous: Option<(DGFunction, Vec<usize>)> = None;
    let mut last = None;
    for level in 0..cfg.levels {
        let space = Arc::new(DGSpace::new(Arc::new(mesh.clone()), cfg.k, quad).map_err(at(level))?);
        let guess = previous
            .take()
            .map(|(u, parent)| crate::adapt::transfer(&u, &parent, &space));
        let (uh, report) = solve(&space, &spec, &cfg.newton, guess.as_ref()).map_err(at(level))?;
        let sizes = mesh.mesh_size();
        let sigma = penalty(&space, &spec, &sizes);
        let errors = compute_errors(&uh, &exact, cfg.p, &sigma);
        let est = estimate(&uh, &spec, &sizes);
        observer(level, &uh, &est);
        table.rows.push(RateRow {
            level,
            cells: mesh.num_cells(),
            dofs: space.total_dofs(),
            h_max: mesh.h_max(),
            enorm_err: errors.enorm,
            lp_err: errors.lp,
            quasinorm_err: errors.combined,
            l2_err: errors.l2,
            estimator_total: est.total,
            effectivity: effectivity(&est, &errors),
        });
        levels.push(LevelData {
            stability: stability_quantity(&uh, &sigma, cfg.p),
            errors,
            estimator: est,
            solve: report,
        });
        if level + 1 < cfg.levels {
            let r = mesh.refine_uniform();
            mesh = r.mesh;
            previous = Some((uh.clone(), r.parent));
        }
        last = Some(uh);
    }
    let solution = last.ok_or_else(|| at(0)(Error::InvalidInput("at least one level is required".into())))?;
    Ok(ConvergeRun {
        table,
        levels,
        solution,
    })
}

/// Distance from `x` to the boundary of the unit square.
pub fn distance_to_boundary(x: [f64; 2]) -> f64 {
    x[0].min(x[1]).min(1.0 - x[0]).min(1.0 - x[1])
}

/// Width of the boundary band and inner edge of the central region.
pub const BAND_WIDTH: f64 = 0.05;
pub const CENTRAL_DISTANCE: f64 = 0.2;

/// Mean diameters of cells touching the boundary band and of cells lying
/// entirely in the central region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandStats {
    pub band_cells: usize,
    pub band_mean: f64,
    pub central_cells: usize,
    pub central_mean: f64,
}

impl BandStats {
    /// `band_mean / central_mean`, NaN if either region is empty.
    pub fn ratio(&self) -> f64 {
        if self.band_cells == 0 || self.central_cells == 0 {
            f64::NAN
        } else {
            self.band_mean / self.central_mean
        }
    }
}

/// A cell is in the band if one of its vertices lies within
/// [`BAND_WIDTH`] of the boundary, central if all lie beyond
/// [`CENTRAL_DISTANCE`].
pub fn band_stats(mesh: &Mesh) -> BandStats {
    let (mut b, mut nb, mut c, mut nc) = (0.0, 0, 0.0, 0);
    for k in 0..mesh.num_cells() {
        let d = mesh
            .cell_points(k)
            .iter()
            .map(|&x| distance_to_boundary(x))
            .fold(f64::INFINITY, f64::min);
        if d <= BAND_WIDTH {
            b += mesh.cell_diameter(k);
            nb += 1;
        }
        if d > CENTRAL_DISTANCE {
            c += mesh.cell_diameter(k);
            nc += 1;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    BandStats {
        band_cells: nb,
        band_mean: mean(b, nb),
        central_cells: nc,
        central_mean: mean(c, nc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_values() {
        let f2 = manufacture_source(2.0);
        let f4 = manufacture_source(4.0);
        let expected = 2.0 * PI * PI + 1.0;
        assert!((f2(0.5, 0.5) - expected).abs() < 1e-12);
        assert!((f2(0.5, 0.5) - 20.7392).abs() < 1e-4);
        assert!((f4(0.5, 0.5) - expected).abs() < 1e-12);
        for t in [0.0, 0.3, 0.8] {
            assert!(f4(t, 0.0).abs() < 1e-12 && f4(1.0, t).abs() < 1e-12);
        }
    }

    #[test]
    fn eoc_examples() {
        assert!((eoc(&[0.1, 0.025], &[1.0, 0.5]).unwrap()[0] - 2.0).abs() < 1e-14);
        assert_eq!(eoc(&[1.0, 1.0], &[1.0, 0.5]).unwrap(), vec![0.0]);
        assert!((eoc(&[8.0, 1.0], &[1.0, 0.5]).unwrap()[0] - 3.0).abs() < 1e-14);
        assert!(eoc(&[1.0, 0.0], &[1.0, 0.5]).is_err());
        assert!(eoc(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn small_study_converges() {
        let run = run_converge(&ConvergeConfig::new(1, 2.0, 3), &mut |_, _, _| {}).unwrap();
        assert_eq!(run.table.rows.len(), 3);
        let rows = &run.table.rows;
        assert_eq!(rows[0].cells, 16);
        assert!((rows[1].h_max * 2.0 - rows[0].h_max).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[1].enorm_err < w[0].enorm_err));
        assert_eq!(run.table.eocs().len(), 2);
    }

    #[test]
    fn band_stats_on_uniform_mesh() {
        let st = band_stats(&Mesh::crisscross(10).unwrap());
        assert!(st.band_cells > 0 && st.central_cells > 0);
        assert!((st.ratio() - 1.0).abs() < 1e-12);
        assert!(band_stats(&Mesh::crisscross(1).unwrap()).ratio().is_nan());
    }
}
