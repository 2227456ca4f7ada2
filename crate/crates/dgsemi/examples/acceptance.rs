//! Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
//!
//! `cargo run --release -p dgsemi --example acceptance`
//!
//! Exits with status 1 if any criterion fails.

use std::time::{Duration, Instant};

use dgsemi::selftest;
use dgsemi_core::adapt::{adapt_loop, AdaptConfig, AdaptOutcome};
use dgsemi_core::harness::{band_stats, constant_source_problem, run_converge, ConvergeConfig, ConvergeRun};

const PAIRS: [(usize, f64); 4] = [(1, 4.0), (2, 4.0), (1, 8.0), (2, 8.0)];
const ADAPT_ITERATIONS: usize = 8;

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(n: usize, name: &str, o: &Outcome) {
    let status = if o.passed { "PASS" } else { "FAIL" };
    println!("{status} [{n}] {name}: {}", o.detail);
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn rates(runs: &[(usize, f64, ConvergeRun, Duration)]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, p, run, time) in runs {
        let kf = *k as f64;
        let t = &run.table;
        let (e, l, q) = (
            t.final_eoc(0).unwrap(),
            t.final_eoc(1).unwrap(),
            t.final_eoc(2).unwrap(),
        );
        let ok = within(e, kf - 0.15, kf + 0.2)
            && within(q, kf - 0.2, kf + 0.2)
            && within(l, kf + 0.8, kf + 1.2)
            && *time < Duration::from_secs(180);
        passed &= ok;
        parts.push(format!(
            "(k={k},p={p}) dG {e:.3} quasi {q:.3} Lp {l:.3} in {:.1}s",
            time.as_secs_f64()
        ));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn estimator(runs: &[(usize, f64, ConvergeRun, Duration)]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, p, run, _) in runs {
        let t = &run.table;
        let (e, est) = (t.final_eoc(0).unwrap(), t.final_eoc(4).unwrap());
        let eff: Vec<f64> = t.rows.iter().map(|r| r.effectivity).collect();
        let tail = &eff[eff.len().saturating_sub(3)..];
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(0.0, f64::max);
        let ok = (est - e).abs() <= 0.2 && eff.iter().all(|v| within(*v, 0.5, 50.0)) && hi <= 2.0 * lo;
        passed &= ok;
        parts.push(format!(
            "(k={k},p={p}) EOC {est:.3} vs {e:.3}, effectivity {lo:.2}..{hi:.2}"
        ));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn exactness(runs: &[(usize, f64, ConvergeRun, Duration)], adapts: &[(f64, AdaptOutcome)]) -> Outcome {
    let linear = run_converge(&ConvergeConfig::new(1, 2.0, 4), &mut |_, _, _| {});
    let (one_step, mut worst) = match &linear {
        Ok(r) => (
            r.levels.iter().all(|l| l.solve.total_iterations() == 1),
            r.levels.iter().map(|l| l.solve.final_residual).fold(0.0, f64::max),
        ),
        Err(_) => (false, f64::INFINITY),
    };
    let mut solves = linear.as_ref().map_or(0, |r| r.levels.len());
    for (_, _, run, _) in runs {
        for l in &run.levels {
            worst = worst.max(l.solve.final_residual);
            solves += 1;
        }
    }
    for (_, out) in adapts {
        for r in &out.records {
            worst = worst.max(r.solve.final_residual);
            solves += 1;
        }
    }
    Outcome {
        passed: one_step && worst <= 1e-9,
        detail: format!("p=2 one Newton step per level: {one_step}; max ‖F(U)‖₂ = {worst:.2e} over {solves} solves"),
    }
}

fn properties() -> Outcome {
    let results = selftest::run_all(100);
    Outcome {
        passed: results.iter().all(|r| r.passed && r.cases >= 100),
        detail: results
            .iter()
            .map(|r| format!("{} {}", if r.passed { "ok" } else { "FAILED" }, r.name))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn boundary_layers(adapts: &[(f64, AdaptOutcome)]) -> Outcome {
    let find = |p: f64| &adapts.iter().find(|(q, _)| *q == p).unwrap().1;
    let (a2, a4, a12) = (find(2.0), find(4.0), find(12.0));
    let r12 = band_stats(&a12.mesh).ratio();
    let r2 = band_stats(&a2.mesh).ratio();
    let cells = |o: &AdaptOutcome| o.records.last().map_or(0, |r| r.cells);
    let (c2, c4, c12) = (cells(a2), cells(a4), cells(a12));
    let complete = adapts.iter().all(|(_, o)| o.records.len() == ADAPT_ITERATIONS);
    Outcome {
        passed: complete && r12 < 0.5 && r2 >= 0.5 && c2 > c4 && c2 > c12,
        detail: format!(
            "band/central diameter ratio p=12 {r12:.3}, p=2 {r2:.3}; cells after {ADAPT_ITERATIONS} iterations p=2 {c2}, p=4 {c4}, p=12 {c12}"
        ),
    }
}

fn stability(runs: &[(usize, f64, ConvergeRun, Duration)]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (k, p, run, _) in runs {
        let s: Vec<f64> = run.levels.iter().map(|l| l.stability).collect();
        let worst = s.windows(2).map(|w| (w[1] / w[0]).max(w[0] / w[1])).fold(0.0, f64::max);
        passed &= worst <= 1.1;
        let values: Vec<String> = s.iter().map(|v| format!("{v:.4}")).collect();
        parts.push(format!("(k={k},p={p}) [{}] max ratio {worst:.4}", values.join(", ")));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn main() {
    let mut runs = Vec::new();
    for (k, p) in PAIRS {
        let start = Instant::now();
        match run_converge(&ConvergeConfig::new(k, p, 5), &mut |_, _, _| {}) {
            Ok(run) => runs.push((k, p, run, start.elapsed())),
            Err(e) => {
                println!("FAIL convergence study k={k} p={p}: {e}");
                std::process::exit(1);
            }
        }
    }
    let mut adapts = Vec::new();
    for p in [2.0, 4.0, 12.0] {
        let spec = constant_source_problem(p, 10.0).expect("valid problem");
        let cfg = AdaptConfig {
            max_iterations: ADAPT_ITERATIONS,
            ..AdaptConfig::default()
        };
        match adapt_loop(&spec, 1, &cfg, &mut |_| {}) {
            Ok(out) => adapts.push((p, out)),
            Err(e) => {
                println!("FAIL adaptive run p={p}: {e}");
                std::process::exit(1);
            }
        }
    }

    let outcomes = [
        ("convergence rates", rates(&runs)),
        ("estimator rate and effectivity", estimator(&runs)),
        ("linear-case exactness and residuals", exactness(&runs, &adapts)),
        ("property suites", properties()),
        ("adaptive boundary layers", boundary_layers(&adapts)),
        ("discrete stability across levels", stability(&runs)),
    ];
    for (i, (name, o)) in outcomes.iter().enumerate() {
        report(i + 1, name, o);
    }
    let failed = outcomes.iter().filter(|(_, o)| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
