use std::path::Path;
use std::sync::Arc;

use dgsemi::{dump, mesh_io, plot, rates};
use dgsemi_core::estimator::estimate;
use dgsemi_core::harness::{constant_source_problem, run_converge, ConvergeConfig, RateRow, RateTable};
use dgsemi_core::{DGSpace, Mesh};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-11 * a.abs().max(b.abs())
}

fn table() -> RateTable {
    run_converge(&ConvergeConfig::new(1, 4.0, 3), &mut |_, _, _| {})
        .unwrap()
        .table
}

#[test]
fn rate_table_round_trips_through_csv() {
    let t = table();
    let mut buf = Vec::new();
    rates::write_rate_table(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0]
        .starts_with("level,cells,dofs,h_max,enorm_err,lp_err,quasinorm_err,l2_err,estimator_total,effectivity,eoc_"));
    // no rate on the first row
    assert!(lines[1].ends_with(",,,,,"));
    let back = rates::read_rate_table(buf.as_slice(), Path::new("mem")).unwrap();
    assert_eq!(back.rows.len(), t.rows.len());
    for (a, b) in t.rows.iter().zip(&back.rows) {
        assert_eq!((a.level, a.cells, a.dofs), (b.level, b.cells, b.dofs));
        for (x, y) in a.measures().iter().zip(b.measures()) {
            assert!(close(*x, y));
        }
        assert!(close(a.h_max, b.h_max) && close(a.effectivity, b.effectivity));
    }
}

#[test]
fn rate_table_rejects_bad_input() {
    assert!(rates::read_rate_table("a,b\n1,2\n".as_bytes(), Path::new("x")).is_err());
    let mut buf = Vec::new();
    rates::write_rate_table(&table(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap().replacen(",16,", ",sixteen,", 1);
    let err = rates::read_rate_table(text.as_bytes(), Path::new("x")).unwrap_err();
    assert!(err.to_string().contains("cells"), "{err}");
}

#[test]
fn eoc_columns_match_table() {
    let t = table();
    let mut buf = Vec::new();
    rates::write_rate_table(&t, &mut buf).unwrap();
    let mut r = csv::Reader::from_reader(buf.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    let eocs = t.eocs();
    for (i, e) in eocs.iter().enumerate() {
        for (j, v) in e.iter().enumerate() {
            let parsed: f64 = rows[i + 1][10 + j].parse().unwrap();
            assert!(close(parsed, *v));
        }
    }
}

#[test]
fn svg_has_one_polyline_per_measure_and_guides() {
    let svg = plot::rate_plot(&table(), 1, "k = 1, p = 4");
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline class=\"measure\"").count(), 5);
    assert_eq!(svg.matches("class=\"reference\"").count(), 2);
    assert!(svg.contains("slope 1") && svg.contains("slope 2"));
    assert!(!svg.contains("href"));
}

#[test]
fn svg_handles_degenerate_tables() {
    let row = RateRow {
        level: 0,
        cells: 4,
        dofs: 12,
        h_max: 0.5,
        enorm_err: 0.0,
        lp_err: 0.0,
        quasinorm_err: 0.0,
        l2_err: 0.0,
        estimator_total: 0.0,
        effectivity: f64::INFINITY,
    };
    let svg = plot::rate_plot(&RateTable { rows: vec![row] }, 2, "<&>");
    assert!(svg.contains("&lt;&amp;&gt;"));
    assert!(!svg.contains("NaN"));
}

#[test]
fn mesh_round_trips() {
    let mesh = Mesh::crisscross(2).unwrap().bisect(&[0, 5, 9]).unwrap().mesh;
    let text = mesh_io::to_string(&mesh);
    let back = mesh_io::parse(&text, Path::new("mem")).unwrap();
    assert_eq!(back.cells(), mesh.cells());
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.refinement_edges(), mesh.refinement_edges());
    assert_eq!(back.generations(), mesh.generations());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    mesh_io::write(&mesh, &path).unwrap();
    assert_eq!(mesh_io::read(&path).unwrap().cells(), mesh.cells());
}

#[test]
fn mesh_parse_errors_carry_line_numbers() {
    let err = mesh_io::parse("3 1 0\n0 0\n1 0\n", Path::new("m")).unwrap_err();
    assert!(err.to_string().contains('m'));
    let bad = "3 1 0\n0 0\n1 0\n0 1\n0 1 7 0 0\n";
    assert!(mesh_io::parse(bad, Path::new("m")).is_err());
}

#[test]
fn coefficients_round_trip() {
    let s = Arc::new(DGSpace::for_problem(Arc::new(Mesh::crisscross(2).unwrap()), 2, 4.0).unwrap());
    let u = s.project(&|x: f64, y: f64| (x * 3.0).exp() - y);
    let back = dump::parse(&s, &dump::to_string(&u), Path::new("d")).unwrap();
    assert_eq!(back.coeffs(), u.coeffs());
    let other = Arc::new(DGSpace::for_problem(Arc::new(Mesh::crisscross(1).unwrap()), 2, 4.0).unwrap());
    assert!(dump::parse(&other, &dump::to_string(&u), Path::new("d")).is_err());
}

#[test]
fn vtk_holds_solution_and_indicators() {
    let s = Arc::new(DGSpace::for_problem(Arc::new(Mesh::crisscross(1).unwrap()), 1, 2.0).unwrap());
    let u = s.project(&|x: f64, y: f64| x + 2.0 * y);
    let est = estimate(&u, &constant_source_problem(2.0, 10.0).unwrap(), &s.mesh().mesh_size());
    let text = dgsemi::vtk::to_string(&u, Some(&est), "test").unwrap();
    assert!(text.starts_with("# vtk DataFile Version"));
    assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
    assert!(text.contains("POINTS 12"));
    assert!(text.contains("CELLS 4 16"));
    assert!(text.contains("POINT_DATA 12") && text.contains("u_h"));
    assert!(text.contains("CELL_DATA 4") && text.contains("eta_R2") && text.contains("eta_J2"));

    let parsed = vtkio::Vtk::parse_legacy_be(text.as_bytes()).unwrap();
    let vtkio::model::DataSet::UnstructuredGrid { pieces, .. } = parsed.data else {
        panic!("unexpected data set");
    };
    let vtkio::model::Piece::Inline(piece) = &pieces[0] else {
        panic!("expected inline piece");
    };
    let vtkio::model::Attribute::DataArray(arr) = &piece.data.point[0] else {
        panic!("expected a data array");
    };
    let values: Vec<f64> = arr.data.clone().cast_into().unwrap();
    let pts: Vec<f64> = piece.points.clone().cast_into().unwrap();
    for (i, v) in values.iter().enumerate() {
        assert!((v - (pts[3 * i] + 2.0 * pts[3 * i + 1])).abs() < 1e-9);
    }
}
