use std::fs;
use std::path::Path;

use shapeopt::harness::{run_table1, ExperimentSpec, Table1Report};
use shapeopt::solver::Method;

fn spec_in(dir: &Path) -> ExperimentSpec {
    ExperimentSpec {
        output_dir: dir.to_path_buf(),
        ..ExperimentSpec::default()
    }
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn table1_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_table1(&spec_in(a.path())).unwrap();
    run_table1(&spec_in(b.path())).unwrap();
    for name in [
        "sd.csv",
        "newton.csv",
        "sd.svg",
        "newton.svg",
        "table1.txt",
        "table1.json",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn table1_outputs_have_one_row_per_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_table1(&spec_in(dir.path())).unwrap();
    let newton = data_rows(&dir.path().join("newton.csv"));
    let sd = data_rows(&dir.path().join("sd.csv"));
    assert!(newton <= 6, "{newton}");
    assert!((10..=20).contains(&sd), "{sd}");

    for run in &report.runs {
        let name = run.method.short_name();
        let svg = fs::read_to_string(dir.path().join(format!("{name}.svg"))).unwrap();
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), run.records.len());
        assert_eq!(data_rows(&dir.path().join(format!("{name}.csv"))), run.records.len());
        assert!((run.records.last().unwrap().objective + std::f64::consts::FRAC_PI_4).abs() < 1e-3);
        assert!(run.error.is_none());
    }
}

#[test]
fn json_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_table1(&spec_in(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("table1.json")).unwrap();
    let back: Table1Report = serde_json::from_str(&text).unwrap();
    assert_eq!(back.runs.len(), 2);
    assert_eq!(back.nodes, 100);
    for (x, y) in back.runs.iter().zip(&report.runs) {
        assert_eq!(x.records.len(), y.records.len());
        assert_eq!(x.method, y.method);
    }
}

#[test]
fn failing_method_still_writes_its_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        methods: vec![Method::NewtonMultiplicative, Method::NewtonGeneralForm],
        ..spec_in(dir.path())
    };
    assert!(run_table1(&spec).is_err());
    assert!(data_rows(&dir.path().join("newton-general.csv")) >= 1);
    let table = fs::read_to_string(dir.path().join("table1.txt")).unwrap();
    assert!(table.contains("newton-general:"), "{table}");
    assert!(dir.path().join("newton.svg").exists());
}

#[test]
fn table1_text_lists_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    run_table1(&spec_in(dir.path())).unwrap();
    let table = fs::read_to_string(dir.path().join("table1.txt")).unwrap();
    let header = table.lines().next().unwrap();
    assert!(header.contains("f[sd]") && header.contains("f[newton]"), "{header}");
    assert!(table.contains("-0.7854"));
}
