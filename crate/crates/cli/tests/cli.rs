use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lqproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqproj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn coordinate_planes_config(output: &Path) -> String {
    format!(
        r#"{{"space": {{"n": 3, "q": 3}},
            "subspaces": [{{"name": "M1", "basis": [[1,0,0],[0,1,0]]}},
                          {{"name": "M2", "basis": [[1,0,0],[0,0,1]]}}],
            "x0": [1, 2, 3], "algorithm": "alternate_bregman",
            "output": "{}", "kappa_samples": 100}}"#,
        output.display()
    )
}

#[test]
fn example_subcommands_exit_codes() {
    let ok = lqproj(&["example1", "--samples", "200"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("overall: PASS"));

    let ok = lqproj(&["example2"]);
    assert_eq!(ok.status.code(), Some(0));

    // The ratio at λ = 1 exceeds the one at λ = 0.1, so monotonicity fails.
    let fail = lqproj(&["example2", "--lambda-grid", "1,0.1"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("overall: FAIL"));
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("out/ex1");
    let config = write_config(dir.path(), &coordinate_planes_config(&prefix));
    let out = lqproj(&["run", "--config", &config]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(format!("{}_trace.csv", prefix.display())).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,d_breg_to_limit,dist_to_limit,norm,step_gap"));
    assert_eq!(lines.count(), 3);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{}_summary.json", prefix.display())).unwrap()).unwrap();
    let limit: Vec<f64> = serde_json::from_value(summary["limit"].clone()).unwrap();
    for (got, want) in limit.iter().zip([1.0, 0.0, 0.0]) {
        assert!((got - want).abs() < 1e-14, "{limit:?}");
    }
    assert_eq!(summary["stop_reason"], "tol_reached");
}

#[test]
fn cyclic_residual_on_coordinate_lines_reaches_zero() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("cyc");
    let body = format!(
        r#"{{"space": {{"n": 3, "q": 3, "p": 2}},
            "subspaces": [{{"name": "e1", "basis": [[1,0,0]]}},
                          {{"name": "e2", "basis": [[0,1,0]]}},
                          {{"name": "e3", "basis": [[0,0,1]]}}],
            "x0": [0.5, -1.5, 2.0], "algorithm": "cyclic_residual",
            "output": "{}"}}"#,
        prefix.display()
    );
    let config = write_config(dir.path(), &body);
    let out = lqproj(&["run", "--config", &config]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{}_summary.json", prefix.display())).unwrap()).unwrap();
    let limit: Vec<f64> = serde_json::from_value(summary["limit"].clone()).unwrap();
    assert!(limit.iter().all(|v| v.abs() < 1e-12), "{limit:?}");
    assert!(summary["kappa_hat"].is_null());
}

#[test]
fn unknown_subspace_name_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = coordinate_planes_config(&dir.path().join("x"))
        .replace(r#""algorithm""#, r#""apply": ["M1", "M9"], "algorithm""#);
    let config = write_config(dir.path(), &body);
    let out = lqproj(&["run", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("M9"));

    let missing = lqproj(&["run", "--config", &dir.path().join("absent.json").display().to_string()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn regularity_and_probe_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("reg");
    let config = write_config(dir.path(), &coordinate_planes_config(&prefix));
    for sampler in ["sphere", "ball", "near"] {
        let out = lqproj(&[
            "regularity",
            "--config",
            &config,
            "--samples",
            "300",
            "--sampler",
            sampler,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(format!("{}_regularity.json", prefix.display())).unwrap())
                .unwrap();
        let kappa = report["kappa_hat"].as_f64().unwrap();
        assert!((1.0..=2.0 + 1e-9).contains(&kappa), "{sampler}: {kappa}");
        for key in ["samples", "diverging", "worst_point", "histogram"] {
            assert!(report.get(key).is_some(), "missing {key}");
        }
    }

    let probe = lqproj(&["probe", "--q", "3", "--samples", "2000"]);
    assert_eq!(
        probe.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&probe.stdout)
    );
}
