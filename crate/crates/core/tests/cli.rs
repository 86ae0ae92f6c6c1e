use orthoasym::commands::RecurrenceReport;
use orthoasym::measure::{recurrence_for, BaseMeasureSpec, WeightKind};
use orthoasym::numeric::c;
use orthoasym::verify::{VerifyReport, CSV_HEADER};
use std::path::Path;
use std::process::Command;

fn orthoasym(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_orthoasym"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn bundled_scenarios_pass() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["sobolev_point_derivative", "pade_gonchar", "modified_complex_rational"] {
        assert_eq!(orthoasym(&["verify", "--scenario", name], dir.path()), 0, "{name}");
        assert!(dir.path().join(format!("{name}.json")).exists());
        assert!(dir.path().join(format!("{name}_relative.csv")).exists());
    }
}

#[test]
fn probe_on_the_cut_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cut.json");
    std::fs::write(
        &cfg,
        r#"{"name":"cut","measure":{"weight":{"kind":"chebyshev_first_kind"}},"target":{"kind":"base_only"},"probe_points":[[0.5,0.0]]}"#,
    )
    .unwrap();
    assert_eq!(orthoasym(&["verify", "--config", cfg.to_str().unwrap()], dir.path()), 3);
    assert_eq!(orthoasym(&["verify", "--scenario", "no_such_scenario"], dir.path()), 3);
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let absent = dir.path().join("absent.json");
    assert_eq!(orthoasym(&["recurrence", "--config", absent.to_str().unwrap()], dir.path()), 2);
    assert_eq!(orthoasym(&["verify", "--config", absent.to_str().unwrap()], dir.path()), 2);
}

#[test]
fn recurrence_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cheb.json");
    std::fs::write(&cfg, r#"{"measure":{"weight":{"kind":"chebyshev_first_kind"}},"nmax":20}"#).unwrap();
    assert_eq!(orthoasym(&["recurrence", "--config", cfg.to_str().unwrap()], dir.path()), 0);
    let rep: RecurrenceReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("recurrence.json")).unwrap()).unwrap();
    assert!((rep.table.a(1) - 0.5f64.sqrt()).abs() < 1e-15);
    for k in 2..=20 {
        assert!((rep.table.a(k) - 0.5).abs() < 1e-15);
    }

    // atom off the interval: the table agrees with one built from twice the degree
    let atom = dir.path().join("atom.json");
    std::fs::write(
        &atom,
        r#"{"measure":{"weight":{"kind":"legendre"},"mass_points":[{"location":-1.5,"mass":0.25}]},"nmax":30}"#,
    )
    .unwrap();
    assert_eq!(orthoasym(&["recurrence", "--config", atom.to_str().unwrap()], dir.path()), 0);
    let rep: RecurrenceReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("recurrence.json")).unwrap()).unwrap();
    let spec = BaseMeasureSpec::pure(WeightKind::Legendre).with_atom(-1.5, 0.25);
    let long = recurrence_for(&spec, 60).unwrap();
    for k in 1..=30 {
        assert!((rep.table.a(k) - long.a(k)).abs() < 1e-12, "{k}");
        assert!((rep.table.b(k) - long.b(k)).abs() < 1e-12, "{k}");
    }
}

#[test]
fn csv_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(orthoasym(&["verify", "--scenario", "sobolev_general"], dir.path()), 0);
    let rep: VerifyReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sobolev_general.json")).unwrap()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("sobolev_general_consecutive.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<_> = rep
        .rows
        .iter()
        .filter(|r| r.kind.label() == "consecutive")
        .collect();
    let csv: Vec<&str> = lines.collect();
    assert_eq!(csv.len(), rows.len());
    for (line, row) in csv.iter().zip(rows) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 10);
        assert_eq!(cols[0].parse::<usize>().unwrap(), row.n);
        let num: Vec<f64> = cols[1..].iter().map(|s| s.parse().unwrap()).collect();
        let err = num[7];
        if !err.is_nan() {
            let recomputed = (c(num[3], num[4]) - c(num[5], num[6])).norm();
            assert!((recomputed - err).abs() <= 1e-15 * c(num[5], num[6]).norm().max(1.0));
        }
        match row.abs_err {
            // serde_json's default float parser may land one ulp away
            Some(e) => assert!((err - e).abs() <= 4.0 * f64::EPSILON * e.abs(), "{err} vs {e}"),
            None => assert!(err.is_nan()),
        }
    }
}

#[test]
fn zero_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(orthoasym(&["zeros", "--scenario", "sobolev_point_derivative"], dir.path()), 0);
    let text = std::fs::read_to_string(dir.path().join("sobolev_point_derivative_zeros.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"][0]["report"]["cluster_counts"][0], 1);
    assert_eq!(v["checks"][0]["report"]["support_count"], 59);
    assert_eq!(orthoasym(&["zeros", "--scenario", "base_legendre"], dir.path()), 3);
}

#[test]
fn sequential_and_parallel_reports_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(orthoasym(&["verify", "--scenario", "sobolev_general", "--jobs", "1"], &a), 0);
    assert_eq!(orthoasym(&["verify", "--scenario", "sobolev_general", "--jobs", "4"], &b), 0);
    for f in std::fs::read_dir(&a).unwrap() {
        let f = f.unwrap();
        assert_eq!(
            std::fs::read(f.path()).unwrap(),
            std::fs::read(b.join(f.file_name())).unwrap(),
            "{:?}",
            f.file_name()
        );
    }
}

#[test]
fn extended_precision_runs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        orthoasym(&["verify", "--scenario", "base_chebyshev", "--precision", "extended"], dir.path()),
        0
    );
}
