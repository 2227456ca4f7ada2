//! Damped Newton iteration with continuation in the exponent, and the
//! preconditioned conjugate gradient solve used for each Newton step.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dense;
use crate::error::Error;
use crate::forms::{DiscreteProblem, ProblemSpec};
use crate::space::{DGFunction, DGSpace};
use crate::sparse::BlockCsr;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on `‖F(U)‖₂`.
    pub tol_residual: f64,
    /// Newton iterations allowed per continuation stage.
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Exponents to step through; `None` uses [`continuation_stages`].
    pub continuation: Option<Vec<f64>>,
    /// Relative residual tolerance of the inner conjugate gradient solve.
    pub linear_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol_residual: 1e-10,
            max_iter: 50,
            max_halvings: 20,
            continuation: None,
            linear_tol: 1e-12,
        }
    }
}

/// `2, 4, 6, …` below `p`, then `p`.
pub fn continuation_stages(p: f64) -> Vec<f64> {
    let mut stages = Vec::new();
    let mut s = 2.0;
    while s < p {
        stages.push(s);
        s += 2.0;
    }
    stages.push(p);
    stages
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub p: f64,
    pub iterations: usize,
    /// `‖F‖₂` before the first step and after every accepted step.
    pub residuals: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub stages: Vec<StageReport>,
    pub final_residual: f64,
    pub converged: bool,
    /// True when a warm start failed and the solve was restarted from zero.
    pub restarted: bool,
}

impl SolveReport {
    pub fn total_iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }

    pub fn total_linear_iterations(&self) -> usize {
        self.stages.iter().flat_map(|s| &s.linear_iterations).sum()
    }
}

/// Solves the discrete problem on `space`, from `initial` or from zero.
pub fn solve(
    space: &Arc<DGSpace>,
    spec: &ProblemSpec,
    config: &NewtonConfig,
    initial: Option<&DGFunction>,
) -> Result<(DGFunction, SolveReport), Error> {
    let problem = DiscreteProblem::new(Arc::clone(space), spec.clone());
    solve_problem(&problem, config, initial)
}

/// As [`solve`] with the assembled forms supplied by the caller.
///
/// With an initial guess only the target exponent is solved; if that fails
/// the full continuation is run from zero.
pub fn solve_problem(
    problem: &DiscreteProblem,
    config: &NewtonConfig,
    initial: Option<&DGFunction>,
) -> Result<(DGFunction, SolveReport), Error> {
    if !(config.tol_residual > 0.0) {
        return Err(Error::InvalidInput("Newton tolerance must be positive".into()));
    }
    let space = problem.space();
    let p = problem.spec().p;
    let stages = match &config.continuation {
        Some(s) => {
            let increasing = s.windows(2).all(|w| w[0] < w[1]);
            if s.is_empty() || !increasing || s.last() != Some(&p) || s[0] < 2.0 {
                return Err(Error::InvalidInput(
                    "continuation must increase from >= 2 and end at p".into(),
                ));
            }
            s.clone()
        }
        None => continuation_stages(p),
    };

    if let Some(u0) = initial {
        if u0.coeffs().len() != space.total_dofs() {
            return Err(Error::LengthMismatch {
                expected: space.total_dofs(),
                found: u0.coeffs().len(),
            });
        }
        let mut report = SolveReport::default();
        let mut u = u0.coeffs().to_vec();
        match newton_stage(problem, p, &mut u, config, &mut report) {
            Ok(()) => return finish(space, u, report),
            Err(Error::NonConvergence(_)) | Err(Error::LinearSolveFailure { .. }) => {}
            Err(e) => return Err(e),
        }
        let (f, mut r) = continuation(problem, &stages, config)?;
        r.restarted = true;
        r.stages.splice(0..0, report.stages);
        return Ok((f, r));
    }
    continuation(problem, &stages, config)
}

fn continuation(
    problem: &DiscreteProblem,
    stages: &[f64],
    config: &NewtonConfig,
) -> Result<(DGFunction, SolveReport), Error> {
    let mut u = alloc::vec![0.0; problem.space().total_dofs()];
    let mut report = SolveReport::default();
    for &s in stages {
        newton_stage(problem, s, &mut u, config, &mut report)?;
    }
    finish(problem.space(), u, report)
}

fn finish(space: &Arc<DGSpace>, u: Vec<f64>, report: SolveReport) -> Result<(DGFunction, SolveReport), Error> {
    Ok((DGFunction::from_coeffs(space, u)?, report))
}

fn newton_stage(
    problem: &DiscreteProblem,
    p: f64,
    u: &mut Vec<f64>,
    config: &NewtonConfig,
    report: &mut SolveReport,
) -> Result<(), Error> {
    let mut stage = StageReport {
        p,
        iterations: 0,
        residuals: Vec::new(),
        linear_iterations: Vec::new(),
        converged: false,
    };
    let mut r = problem.residual_with(u, p);
    let mut rnorm = dense::norm2(&r);
    stage.residuals.push(rnorm);

    let fail = |stage: StageReport, report: &mut SolveReport, rnorm: f64| {
        report.stages.push(stage);
        report.final_residual = rnorm;
        report.converged = false;
        Err(Error::NonConvergence(alloc::boxed::Box::new(report.clone())))
    };

    while rnorm > config.tol_residual {
        if stage.iterations == config.max_iter {
            return fail(stage, report, rnorm);
        }
        let jac = problem.jacobian_with(u, p);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let (delta, its) = pcg(&jac, &rhs, config.linear_tol, config.tol_residual * 1e-3)?;
        stage.linear_iterations.push(its);
        stage.iterations += 1;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let rt = problem.residual_with(&trial, p);
            let nt = dense::norm2(&rt);
            if nt < rnorm {
                accepted = Some((trial, rt, nt));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, rt, nt)) => {
                *u = trial;
                r = rt;
                rnorm = nt;
                stage.residuals.push(rnorm);
            }
            None => return fail(stage, report, rnorm),
        }
    }
    stage.converged = true;
    report.stages.push(stage);
    report.final_residual = rnorm;
    report.converged = true;
    Ok(())
}

/// Solves `A x = b` for symmetric positive definite `A` to relative
/// residual `1e-12`.
pub fn linear_solve(a: &BlockCsr, rhs: &[f64]) -> Result<Vec<f64>, Error> {
    pcg(a, rhs, 1e-12, 0.0).map(|(x, _)| x)
}

/// Block-Jacobi preconditioned conjugate gradients from `x = 0`.
///
/// Stops once the residual is below `rel_tol·‖b‖` or `abs_tol`, whichever
/// is smaller. Returns the solution and the iteration count.
pub fn pcg(a: &BlockCsr, b: &[f64], rel_tol: f64, abs_tol: f64) -> Result<(Vec<f64>, usize), Error> {
    let n = a.dim();
    let nb = a.block_size();
    let bnorm = dense::norm2(b);
    let mut x = alloc::vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let target = (rel_tol * bnorm).min(if abs_tol > 0.0 { abs_tol } else { f64::INFINITY });

    let mut factors = Vec::with_capacity(a.block_rows());
    for r in 0..a.block_rows() {
        let mut blk = a
            .block(r, r)
            .map(|s| s.to_vec())
            .unwrap_or_else(|| alloc::vec![0.0; nb * nb]);
        if dense::cholesky(&mut blk, nb).is_none() {
            // fall back to the diagonal; the outer iteration still converges
            let mut diag = alloc::vec![0.0; nb * nb];
            for i in 0..nb {
                let d = a.get(r * nb + i, r * nb + i);
                diag[i * nb + i] = if d > 0.0 { libm::sqrt(d) } else { 1.0 };
            }
            blk = diag;
        }
        factors.push(blk);
    }
    let precondition = |r: &[f64], z: &mut [f64]| {
        z.copy_from_slice(r);
        for (c, l) in factors.iter().enumerate() {
            dense::cholesky_solve(l, nb, &mut z[c * nb..(c + 1) * nb]);
        }
    };

    let mut r = b.to_vec();
    let mut z = alloc::vec![0.0; n];
    precondition(&r, &mut z);
    let mut d = z.clone();
    let mut rz = dense::dot(&r, &z);
    let mut ad = alloc::vec![0.0; n];
    let max_iter = 10 * n.max(1);
    for it in 1..=max_iter {
        a.matvec(&d, &mut ad);
        let dad = dense::dot(&d, &ad);
        if !(dad > 0.0) {
            return Err(Error::LinearSolveFailure {
                iterations: it,
                relative_residual: dense::norm2(&r) / bnorm,
            });
        }
        let alpha = rz / dad;
        for i in 0..n {
            x[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        let rnorm = dense::norm2(&r);
        if rnorm <= target {
            return Ok((x, it));
        }
        precondition(&r, &mut z);
        let rz_new = dense::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
    }
    Err(Error::LinearSolveFailure {
        iterations: max_iter,
        relative_residual: dense::norm2(&r) / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::ScalarField;
    use crate::mesh::Mesh;
    use rand::{Rng, SeedableRng};

    #[test]
    fn stages() {
        assert_eq!(continuation_stages(2.0), vec![2.0]);
        assert_eq!(continuation_stages(4.0), vec![2.0, 4.0]);
        assert_eq!(continuation_stages(5.0), vec![2.0, 4.0, 5.0]);
        assert_eq!(continuation_stages(12.0).len(), 6);
    }

    #[test]
    fn small_linear_systems() {
        let id = BlockCsr::from_dense(&[1.0, 0.0, 0.0, 1.0], 2, 1);
        assert_eq!(linear_solve(&id, &[3.0, -2.0]).unwrap(), vec![3.0, -2.0]);
        let d = BlockCsr::from_dense(&[2.0, 0.0, 0.0, 4.0], 2, 1);
        let x = linear_solve(&d, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_system() {
        let n = 50;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] =
                    (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = BlockCsr::from_dense(&a, n, 5);
        let x = linear_solve(&m, &rhs).unwrap();
        let ax = m.mul(&x);
        let err: f64 = ax.iter().zip(&rhs).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        assert!(err / dense::norm2(&rhs) <= 1e-12);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let m = BlockCsr::from_dense(&[0.0, 1.0, 1.0, 0.0], 2, 1);
        assert!(matches!(
            linear_solve(&m, &[1.0, 0.0]),
            Err(Error::LinearSolveFailure { .. })
        ));
    }

    fn test1_space(n: usize, k: usize, p: f64) -> Arc<DGSpace> {
        Arc::new(DGSpace::for_problem(Arc::new(Mesh::crisscross(n).unwrap()), k, p).unwrap())
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let s = test1_space(2, 1, 6.0);
        let spec = ProblemSpec::new(6.0, Arc::new(|_, _| 0.0), 10.0).unwrap();
        let (u, r) = solve(&s, &spec, &NewtonConfig::default(), None).unwrap();
        assert!(u.coeffs().iter().all(|&c| c == 0.0));
        assert_eq!(r.total_iterations(), 0);
        assert!(r.converged);
    }

    #[test]
    fn linear_problem_takes_one_step() {
        let s = test1_space(4, 2, 2.0);
        let f: ScalarField = Arc::new(|x, y| 1.0 + x * y);
        let spec = ProblemSpec::new(2.0, f, 10.0).unwrap();
        let (_, r) = solve(&s, &spec, &NewtonConfig::default(), None).unwrap();
        assert_eq!(r.total_iterations(), 1);
        assert!(r.final_residual <= 1e-10);
    }

    #[test]
    fn bad_continuation_rejected() {
        let s = test1_space(1, 1, 4.0);
        let spec = ProblemSpec::new(4.0, Arc::new(|_, _| 1.0), 10.0).unwrap();
        let cfg = NewtonConfig {
            continuation: Some(vec![2.0, 3.0]),
            ..NewtonConfig::default()
        };
        assert!(solve(&s, &spec, &cfg, None).is_err());
        let cfg = NewtonConfig {
            tol_residual: 0.0,
            ..NewtonConfig::default()
        };
        assert!(solve(&s, &spec, &cfg, None).is_err());
    }

    #[test]
    fn exhausted_iterations_report_nonconvergence() {
        let s = test1_space(2, 1, 8.0);
        let spec = ProblemSpec::new(8.0, Arc::new(|_, _| 1000.0), 10.0).unwrap();
        let cfg = NewtonConfig {
            max_iter: 1,
            continuation: Some(vec![8.0]),
            ..NewtonConfig::default()
        };
        match solve(&s, &spec, &cfg, None) {
            Err(Error::NonConvergence(r)) => {
                assert!(!r.converged);
                assert!(r.final_residual > cfg.tol_residual);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
