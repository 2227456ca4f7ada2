//! Solve, estimate, mark, refine.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::estimator::{estimate, EstimatorReport};
use crate::forms::ProblemSpec;
use crate::mesh::Mesh;
use crate::quadrature::TriangleRule;
use crate::solver::{solve, NewtonConfig, SolveReport};
use crate::space::{DGFunction, DGSpace};

/// The `⌈fraction · n⌉` cells with the largest indicators, ties to the lower
/// index, returned in increasing index order.
pub fn mark(etas: &[f64], fraction: f64) -> Vec<usize> {
    let n = etas.len();
    let count = (libm::ceil(fraction * n as f64) as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| etas[b].total_cmp(&etas[a]).then(a.cmp(&b)));
    let mut marked: Vec<usize> = order.into_iter().take(count).collect();
    marked.sort_unstable();
    marked
}

/// Cells with `η_K ≥ θ · max η`, in increasing index order.
pub fn mark_maximum(etas: &[f64], theta: f64) -> Vec<usize> {
    let max = etas.iter().copied().fold(0.0, f64::max);
    (0..etas.len()).filter(|&i| etas[i] >= theta * max).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkingStrategy {
    /// [`mark_maximum`] with `θ = mark_fraction`.
    #[default]
    Maximum,
    /// [`mark`]: a fixed share of the cells.
    Fraction,
}

impl MarkingStrategy {
    pub fn select(self, etas: &[f64], fraction: f64) -> Vec<usize> {
        match self {
            MarkingStrategy::Maximum => mark_maximum(etas, fraction),
            MarkingStrategy::Fraction => mark(etas, fraction),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    pub max_iterations: usize,
    pub mark_fraction: f64,
    pub marking: MarkingStrategy,
    pub max_dofs: usize,
    pub newton: NewtonConfig,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            max_iterations: 13,
            mark_fraction: 0.5,
            marking: MarkingStrategy::Maximum,
            max_dofs: 2_000_000,
            newton: NewtonConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cells: usize,
    pub dofs: usize,
    pub estimator: f64,
    pub newton_iterations: usize,
    pub solve: SolveReport,
}

/// Everything known at the end of one iteration, passed to observers.
#[derive(Debug)]
pub struct IterationState<'a> {
    pub record: &'a IterationRecord,
    pub solution: &'a DGFunction,
    pub estimator: &'a EstimatorReport,
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub records: Vec<IterationRecord>,
    pub mesh: Arc<Mesh>,
    pub solution: DGFunction,
    pub estimator: EstimatorReport,
}

/// A failed loop together with the iterations that completed.
#[derive(Debug, Clone)]
pub struct AdaptFailure {
    pub error: Error,
    pub records: Vec<IterationRecord>,
}

impl fmt::Display for AdaptFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "adaptive iteration {} failed: {}", self.records.len(), self.error)
    }
}

impl core::error::Error for AdaptFailure {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Cellwise `L²` projection of `u` onto a refinement of its mesh; `parent`
/// maps every cell of `space` to the cell of `u`'s mesh containing it.
pub fn transfer(u: &DGFunction, parent: &[usize], space: &Arc<DGSpace>) -> DGFunction {
    let old = u.space();
    let rule = TriangleRule::with_degree(2 * old.degree().max(space.degree()));
    let tab = space.basis().tabulate(&rule.points);
    let n = space.dofs_per_cell();
    let mut coeffs = alloc::vec![0.0; space.total_dofs()];
    for (c, &pc) in parent.iter().enumerate() {
        let geo = space.geometry(c);
        let pgeo = old.geometry(pc);
        let out = &mut coeffs[c * n..(c + 1) * n];
        for q in 0..rule.len() {
            let xi = pgeo.inverse_map(geo.map(rule.points[q]));
            let v = u.eval_at(pc, xi).value * rule.weights[q];
            for (o, phi) in out.iter_mut().zip(tab.point_values(q)) {
                *o += v * phi;
            }
        }
    }
    DGFunction::from_coeffs(space, coeffs).expect("length matches space")
}

/// Runs the adaptive loop from the four-cell criss-cross mesh.
pub fn adapt_loop(
    spec: &ProblemSpec,
    k: usize,
    config: &AdaptConfig,
    observer: &mut dyn FnMut(&IterationState<'_>),
) -> Result<AdaptOutcome, AdaptFailure> {
    let fail = |error: Error, records: &Vec<IterationRecord>| AdaptFailure {
        error,
        records: records.clone(),
    };
    if !(config.mark_fraction > 0.0 && config.mark_fraction <= 1.0) {
        return Err(fail(
            Error::InvalidInput("mark fraction must lie in (0, 1]".into()),
            &Vec::new(),
        ));
    }
    if config.max_iterations == 0 {
        return Err(fail(
            Error::InvalidInput("at least one iteration is required".into()),
            &Vec::new(),
        ));
    }
    let mut records = Vec::new();
    let mut mesh = Arc::new(Mesh::crisscross(1).map_err(|e| fail(e.into(), &records))?);
    let mut guess: Option<(DGFunction, Vec<usize>)> = None;
    let mut iteration = 0;
    loop {
        let space = Arc::new(DGSpace::for_problem(Arc::clone(&mesh), k, spec.p).map_err(|e| fail(e, &records))?);
        let initial = guess.take().map(|(g, parent)| transfer(&g, &parent, &space));
        let (uh, report) = solve(&space, spec, &config.newton, initial.as_ref()).map_err(|e| fail(e, &records))?;
        let est = estimate(&uh, spec, &mesh.mesh_size());
        let record = IterationRecord {
            iteration,
            cells: mesh.num_cells(),
            dofs: space.total_dofs(),
            estimator: est.total,
            newton_iterations: report.total_iterations(),
            solve: report,
        };
        records.push(record);
        observer(&IterationState {
            record: records.last().unwrap(),
            solution: &uh,
            estimator: &est,
        });
        iteration += 1;

        let done = |mesh: Arc<Mesh>, records: Vec<IterationRecord>| {
            Ok(AdaptOutcome {
                records,
                mesh,
                solution: uh.clone(),
                estimator: est.clone(),
            })
        };
        if iteration >= config.max_iterations {
            return done(mesh, records);
        }
        let marked = config.marking.select(&est.indicators(), config.mark_fraction);
        let refined = mesh.bisect(&marked).map_err(|e| fail(e.into(), &records))?;
        if refined.mesh.num_cells() * space.dofs_per_cell() > config.max_dofs {
            return done(mesh, records);
        }
        guess = Some((uh.clone(), refined.parent));
        mesh = Arc::new(refined.mesh);
    }
}
