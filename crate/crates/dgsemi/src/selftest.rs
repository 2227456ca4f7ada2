//! Randomised invariant suites with a fixed seed.

use std::fmt;
use std::sync::Arc;

use dgsemi_core::analysis::{kp_terms, lp_norm, quasinorm, Reconstruction};
use dgsemi_core::dense;
use dgsemi_core::forms::{assemble_semilinear, DiscreteProblem, ProblemSpec};
use dgsemi_core::quadrature::{LineRule, TriangleRule};
use dgsemi_core::{DGFunction, DGSpace, Mesh};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0x005e_edd9;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} cases): {}", self.name, self.cases, self.detail)
    }
}

fn space(n: usize, k: usize, p: f64) -> Arc<DGSpace> {
    Arc::new(DGSpace::for_problem(Arc::new(Mesh::crisscross(n).expect("n >= 1")), k, p).expect("k >= 1"))
}

fn random_function(s: &Arc<DGSpace>, rng: &mut ChaCha8Rng, scale: f64) -> DGFunction {
    let c = (0..s.total_dofs()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    DGFunction::from_coeffs(s, c).expect("length matches")
}

/// `[b(U) - b(W)]ᵀ(U - W) ≥ -1e-12`.
pub fn monotonicity(cases: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = f64::INFINITY;
    for _ in 0..cases {
        let k = rng.gen_range(1..=3);
        let p = *[2.0, 3.0, 4.0, 8.0, 12.0].choose(rng).unwrap();
        let s = space(2, k, p);
        let u = random_function(&s, rng, 1.5);
        // every other case probes the near-diagonal regime
        let w = if rng.gen_bool(0.5) {
            let d = random_function(&s, rng, 1e-4);
            let c = u.coeffs().iter().zip(d.coeffs()).map(|(a, b)| a + b).collect();
            DGFunction::from_coeffs(&s, c).expect("length matches")
        } else {
            random_function(&s, rng, 1.5)
        };
        let bu = assemble_semilinear(&s, p, u.coeffs());
        let bw = assemble_semilinear(&s, p, w.coeffs());
        let v: f64 = bu
            .iter()
            .zip(&bw)
            .zip(u.coeffs().iter().zip(w.coeffs()))
            .map(|((a, b), (x, y))| (a - b) * (x - y))
            .sum();
        worst = worst.min(v);
    }
    CheckResult {
        name: "monotonicity of the semilinear term",
        cases,
        passed: worst >= -1e-12,
        detail: format!("min [b(U)-b(W)]·(U-W) = {worst:.3e}"),
    }
}

/// `‖v‖_p^p ≤ |||v|||²_{(w,p)} (1 + 1e-10)`.
pub fn quasinorm_lower_bound(cases: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let p = *[2.0, 4.0, 8.0].choose(rng).unwrap();
        let s = space(2, rng.gen_range(1..=2), p);
        let v = random_function(&s, rng, 1.0);
        let w = random_function(&s, rng, 2.0);
        let lhs = lp_norm(&v, p).powf(p);
        let q = quasinorm(&v, &w, p);
        worst = worst.max(lhs / (q * q));
    }
    CheckResult {
        name: "quasinorm lower bound",
        cases,
        passed: worst <= 1.0 + 1e-10,
        detail: format!("max ‖v‖_p^p / |||v|||² = {worst:.12}"),
    }
}

/// Finite-difference check of the Jacobian along random directions.
pub fn jacobian_fd(cases: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = f64::INFINITY;
    let eps = [1e-3, 1e-4, 1e-5];
    for _ in 0..cases {
        let p = *[3.0, 4.0, 6.0, 8.0].choose(rng).unwrap();
        let s = space(2, rng.gen_range(1..=2), p);
        let spec = ProblemSpec::new(p, Arc::new(|x, y| 1.0 + x - y), 10.0).expect("valid spec");
        let prob = DiscreteProblem::new(Arc::clone(&s), spec);
        let u = random_function(&s, rng, 1.0);
        let d = random_function(&s, rng, 1.0);
        let f0 = prob.residual(u.coeffs());
        let jd = prob.jacobian_with(u.coeffs(), p).mul(d.coeffs());
        let errs: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let shifted: Vec<f64> = u.coeffs().iter().zip(d.coeffs()).map(|(a, b)| a + e * b).collect();
                let fe = prob.residual(&shifted);
                let diff: Vec<f64> = fe.iter().zip(&f0).zip(&jd).map(|((a, b), j)| (a - b) / e - j).collect();
                dense::norm2(&diff)
            })
            .collect();
        // least-squares slope of log err against log eps
        let xs: Vec<f64> = eps.iter().map(|e| e.log10()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).log10()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        worst = worst.min(num / den);
    }
    CheckResult {
        name: "Jacobian against finite differences",
        cases,
        passed: worst >= 0.9,
        detail: format!("min observed order = {worst:.3}"),
    }
}

/// `E(E v) = E v` and the stability ratios of `v - E v` against jumps.
pub fn reconstruction(cases: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut idempotence: f64 = 0.0;
    let levels = [2, 4, 8];
    let mut max_ratio = [[0.0f64; 2]; 3];
    for (li, &n) in levels.iter().enumerate() {
        let s = space(n, 2, 2.0);
        let rec = Reconstruction::new(&s);
        let sizes = s.mesh().mesh_size();
        for case in 0..cases {
            let v = random_function(&s, rng, 1.0);
            let ev = rec.apply(&v);
            if li == 0 || case % 10 == 0 {
                let eev = rec.apply(&ev);
                let d = ev
                    .coeffs()
                    .iter()
                    .zip(eev.coeffs())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                idempotence = idempotence.max(d);
            }
            let t = kp_terms(&rec, &v, &sizes);
            max_ratio[li][0] = max_ratio[li][0].max(t.ratio_l2());
            max_ratio[li][1] = max_ratio[li][1].max(t.ratio_h1());
        }
    }
    let spread = |a: usize| {
        let vals: Vec<f64> = max_ratio.iter().map(|r| r[a]).collect();
        vals.iter().cloned().fold(0.0, f64::max) / vals.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let (s0, s1) = (spread(0), spread(1));
    CheckResult {
        name: "reconstruction identity and stability",
        cases: cases * levels.len(),
        passed: idempotence <= 1e-12 && s0 < 10.0 && s1 < 10.0,
        detail: format!(
            "max |E(Ev)-Ev| = {idempotence:.2e}; C_0 per level {:.3?} (spread {s0:.2}); C_1 per level {:.3?} (spread {s1:.2})",
            max_ratio.iter().map(|r| r[0]).collect::<Vec<_>>(),
            max_ratio.iter().map(|r| r[1]).collect::<Vec<_>>()
        ),
    }
}

/// Random marking sequences keep the mesh conforming and shape regular.
pub fn mesh_conformity(cases: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut failures = Vec::new();
    let mut min_angle = f64::INFINITY;
    for case in 0..cases {
        let mut mesh = Mesh::crisscross(rng.gen_range(1..=3)).expect("n >= 1");
        let rounds = rng.gen_range(1..=6);
        for _ in 0..rounds {
            let n = mesh.num_cells();
            let count = rng.gen_range(0..=n.min(8));
            let marked: Vec<usize> = (0..count).map(|_| rng.gen_range(0..n)).collect();
            mesh = match mesh.bisect(&marked) {
                Ok(r) => r.mesh,
                Err(e) => {
                    failures.push(format!("case {case}: {e}"));
                    break;
                }
            };
        }
        if let Err(e) = mesh.check_conformity() {
            failures.push(format!("case {case}: {e}"));
        }
        if (mesh.total_area() - 1.0).abs() > 1e-12 {
            failures.push(format!("case {case}: area {}", mesh.total_area()));
        }
        for c in 0..mesh.num_cells() {
            min_angle = min_angle.min(mesh.min_angle(c));
        }
    }
    let quarter = std::f64::consts::FRAC_PI_4;
    if min_angle < quarter - 1e-9 {
        failures.push(format!("minimum angle {min_angle} below 45 degrees"));
    }
    CheckResult {
        name: "mesh conformity under random marking",
        cases,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("min angle {:.2} deg", min_angle.to_degrees())
        } else {
            failures.join("; ")
        },
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Random monomials up to the declared degree are integrated exactly.
pub fn quadrature_exactness(cases: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let d = rng.gen_range(0..=24u32);
        let a = rng.gen_range(0..=d);
        let b = rng.gen_range(0..=d - a);
        let tri = TriangleRule::with_degree(d as usize);
        let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
        let got: f64 = tri
            .points
            .iter()
            .zip(&tri.weights)
            .map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32))
            .sum();
        worst = worst.max((got - exact).abs() / exact);
        let line = LineRule::with_degree(d as usize);
        let got: f64 = line
            .points
            .iter()
            .zip(&line.weights)
            .map(|(t, w)| w * t.powi(d as i32))
            .sum();
        worst = worst.max((got - 1.0 / f64::from(d + 1)).abs() * f64::from(d + 1));
    }
    CheckResult {
        name: "quadrature exactness",
        cases,
        passed: worst <= 1e-12,
        detail: format!("max relative error {worst:.2e}"),
    }
}

/// All suites, `cases` each, from the fixed seed.
pub fn run_all(cases: usize) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    vec![
        monotonicity(cases, &mut rng),
        quasinorm_lower_bound(cases, &mut rng),
        jacobian_fd(cases, &mut rng),
        reconstruction(cases, &mut rng),
        mesh_conformity(cases, &mut rng),
        quadrature_exactness(cases, &mut rng),
    ]
}
