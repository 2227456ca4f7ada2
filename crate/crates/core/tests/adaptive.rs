//! Adaptive runs with the constant source `f = 1000`.

use dgsemi_core::adapt::{adapt_loop, AdaptConfig, AdaptOutcome, IterationState};
use dgsemi_core::harness::{band_stats, constant_source_problem, distance_to_boundary};

fn run(p: f64, iterations: usize, observer: &mut dyn FnMut(&IterationState<'_>)) -> AdaptOutcome {
    let spec = constant_source_problem(p, 10.0).unwrap();
    let cfg = AdaptConfig {
        max_iterations: iterations,
        ..AdaptConfig::default()
    };
    adapt_loop(&spec, 1, &cfg, observer).unwrap()
}

fn cells(out: &AdaptOutcome) -> Vec<usize> {
    out.records.iter().map(|r| r.cells).collect()
}

#[test]
fn runs_are_deterministic() {
    let a = run(4.0, 6, &mut |_| {});
    let b = run(4.0, 6, &mut |_| {});
    assert_eq!(cells(&a), cells(&b));
    let ea: Vec<f64> = a.records.iter().map(|r| r.estimator).collect();
    let eb: Vec<f64> = b.records.iter().map(|r| r.estimator).collect();
    assert_eq!(ea, eb);
}

#[test]
fn large_exponent_concentrates_cells_at_the_boundary() {
    let out = run(12.0, 8, &mut |s| {
        assert!(s.solution.space().mesh().check_conformity().is_ok());
    });
    let st = band_stats(&out.mesh);
    assert!(st.ratio() < 0.5, "{st:?}");
}

#[test]
fn linear_problem_refines_the_interior() {
    let out = run(2.0, 8, &mut |_| {});
    let st = band_stats(&out.mesh);
    assert!(st.ratio() >= 0.5, "{st:?}");
}

#[test]
fn smaller_exponents_refine_more() {
    let c2 = cells(&run(2.0, 8, &mut |_| {}));
    let c4 = cells(&run(4.0, 8, &mut |_| {}));
    let c12 = cells(&run(12.0, 8, &mut |_| {}));
    assert!(c2[7] > c4[7] && c4[7] > c12[7], "{c2:?} {c4:?} {c12:?}");
}

#[test]
fn boundary_layer_gradients() {
    let out = run(12.0, 8, &mut |_| {});
    let uh = &out.solution;
    let mesh = uh.space().mesh();
    let (mut boundary, mut central) = (0.0f64, 0.0f64);
    let samples = [[1.0 / 3.0, 1.0 / 3.0], [0.1, 0.1], [0.8, 0.1], [0.1, 0.8]];
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let g = samples.iter().map(|&xi| {
            let g = uh.eval_at(c, xi).grad;
            g[0].hypot(g[1])
        });
        let g = g.fold(0.0, f64::max);
        if pts.iter().any(|&x| distance_to_boundary(x) < 1e-12) {
            boundary = boundary.max(g);
        }
        if pts
            .iter()
            .all(|x| (x[0] - 0.5).abs() <= 0.25 && (x[1] - 0.5).abs() <= 0.25)
        {
            central = central.max(g);
        }
    }
    assert!(boundary >= 5.0 * central, "boundary {boundary} central {central}");
}

#[test]
fn linear_solution_maximum_stabilises() {
    let mut maxima = Vec::new();
    run(2.0, 10, &mut |s| {
        let uh = s.solution;
        let m = (0..uh.space().num_cells())
            .map(|c| uh.eval_at(c, [1.0 / 3.0, 1.0 / 3.0]).value)
            .fold(f64::MIN, f64::max);
        maxima.push(m);
    });
    let n = maxima.len();
    assert!(
        (maxima[n - 1] - maxima[n - 2]).abs() <= 0.01 * maxima[n - 1],
        "{maxima:?}"
    );
    assert!(maxima[n - 1] > maxima[0]);
}

#[test]
fn estimator_decreases_after_second_iteration() {
    for p in [2.0, 4.0] {
        let out = run(p, 10, &mut |_| {});
        let eta: Vec<f64> = out.records.iter().map(|r| r.estimator).collect();
        assert!(eta[2..].windows(2).all(|w| w[1] <= 1.05 * w[0]), "p={p}: {eta:?}");
    }
}

#[test]
fn ten_iterations_fit_within_the_cap() {
    for p in [2.0, 4.0, 8.0, 12.0] {
        let out = run(p, 10, &mut |s| {
            assert!(s.record.solve.converged);
            assert!(s.record.solve.final_residual <= 1e-9);
        });
        assert_eq!(out.records.len(), 10, "p={p}");
        assert!(out.records.iter().all(|r| r.dofs <= AdaptConfig::default().max_dofs));
    }
}
