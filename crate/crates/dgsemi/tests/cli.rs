use dgsemi::cli::{run, EXIT_OK, EXIT_SOLVER, EXIT_USAGE};
use dgsemi::rates;

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["dgsemi"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn help_and_version_succeed() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("converge") && out.contains("adapt") && out.contains("selftest"));
    assert_eq!(call(&["--version"]).0, EXIT_OK);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["bogus"]).0, EXIT_USAGE);
    assert_eq!(call(&["converge", "--k", "x"]).0, EXIT_USAGE);
    assert_eq!(call(&["adapt", "--marking", "dorfler"]).0, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // invalid parameters are usage errors, not solver failures
    let (code, _, err) = call(&["converge", "--p", "1.5", "--levels", "2", "--out", out]);
    assert_eq!(code, EXIT_USAGE, "{err}");
    assert_eq!(call(&["adapt", "--mark-frac", "0", "--out", out]).0, EXIT_USAGE);
    assert_eq!(
        call(&["converge", "--k", "0", "--levels", "2", "--out", out]).0,
        EXIT_USAGE
    );
}

#[test]
fn solver_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // a tiny penalty makes the system indefinite
    let (code, _, err) = call(&[
        "converge", "--p", "8", "--levels", "2", "--csigma", "0.01", "--out", out,
    ]);
    assert_eq!(code, EXIT_SOLVER, "{err}");
    assert!(err.contains("level 0"));
}

#[test]
fn converge_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, err) = call(&[
        "converge", "--k", "1", "--p", "4", "--levels", "3", "--out", out, "--vtk",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(stdout.contains("finest EOC"));
    let csv = dir.path().join("converge_k1_p4.csv");
    let table = rates::load_rate_table(&csv).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert!(dir.path().join("converge_k1_p4.svg").exists());
    for l in 0..3 {
        assert!(dir.path().join(format!("converge_k1_p4_level{l}.vtk")).exists());
    }
}

#[test]
fn adapt_writes_records_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = call(&["adapt", "--p", "4", "--iters", "3", "--out", out]);
    assert_eq!(code, EXIT_OK, "{err}");
    let text = std::fs::read_to_string(dir.path().join("adapt_p4.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,cells,dofs,estimator,newton_iters");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,4,12,"));
    for it in 0..3 {
        assert!(dir.path().join(format!("adapt_p4_iter{it:02}.vtk")).exists());
    }

    let other = tempfile::tempdir().unwrap();
    let args = [
        "adapt",
        "--p",
        "4",
        "--iters",
        "2",
        "--marking",
        "fraction",
        "--no-vtk",
        "--out",
    ];
    let (code, _, _) = call(&[&args[..], &[other.path().to_str().unwrap()]].concat());
    assert_eq!(code, EXIT_OK);
    assert!(other.path().join("adapt_p4.csv").exists());
    assert!(!other.path().join("adapt_p4_iter00.vtk").exists());
}

#[test]
fn selftest_passes() {
    let (code, out, _) = call(&["selftest", "--cases", "100"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    for r in dgsemi::selftest::run_all(100) {
        assert!(r.cases >= 100, "{r}");
    }
}
