use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povm-shadows"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn octahedron_pauli_projection_norms() {
    let out = run(&[
        "shadow-norm",
        "--povm",
        "octahedron",
        "--observables",
        "pauli-eigenprojections",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "observable_id,squared_norm,worst_state_bloch_x,worst_state_bloch_y,worst_state_bloch_z"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let norm: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((norm - 1.5).abs() < 1e-9, "{row}");
    }
}

#[test]
fn unnormalized_povm_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"dim": 2, "effects": [{"dim": 2, "re": [[1, 0], [0, 1]]}, {"dim": 2, "re": [[1, 0], [0, 1]]}]}"#,
    );
    let out = run(&["povm", "validate", &bad]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "NormalizationError");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["shadow-norm", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["shadow-norm", "--povm", "octahedron"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["optimize", "--observables", "paulis", "--qubits", "3"])
            .status
            .code(),
        Some(2)
    );
    let missing = run(&["povm", "validate", "nowhere/missing.json"]);
    assert_eq!(missing.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert_eq!(err["error"], "IoError");
    assert_eq!(
        run(&["povm", "validate", "heptagon"]).status.code(),
        Some(3)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn builtin_names_resolve() {
    for name in [
        "tetrahedron",
        "octahedron",
        "cube",
        "cuboctahedron",
        "icosahedron",
        "dodecahedron",
        "icosidodecahedron",
        "sic",
        "inverted-tetrahedron",
    ] {
        let out = run(&["povm", "validate", name]);
        assert!(out.status.success(), "{name}");
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["informationally_complete"], true, "{name}");
    }
}

#[test]
fn bench_reference_suite_passes() {
    let out = run(&["bench", "paper"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.starts_with("quantity,expected,computed,abs_error,tolerance,pass\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(
        dir.path(),
        "state.json",
        r#"{"dim": 2, "re": [[0.7, 0.1], [0.1, 0.3]], "im": [[0, -0.2], [0.2, 0]]}"#,
    );
    let obs = write(
        dir.path(),
        "x.json",
        r#"{"dim": 2, "re": [[0.5, 1], [1, -0.5]]}"#,
    );
    let commands: Vec<Vec<String>> = vec![
        [
            "simulate",
            "--povm",
            "cube",
            "--state",
            &state,
            "--observable",
            &obs,
            "--shots",
            "5000",
            "--seed",
            "4",
        ]
        .map(String::from)
        .to_vec(),
        [
            "optimize",
            "--observables",
            "haar:10:3",
            "--iterations",
            "500",
            "--restarts",
            "2",
            "--seed",
            "5",
        ]
        .map(String::from)
        .to_vec(),
        ["shadows", "--povm", "icosahedron", "--method", "symmetric"]
            .map(String::from)
            .to_vec(),
        [
            "shadow-norm",
            "--povm",
            "tetrahedron",
            "--observables",
            "haar:5:1",
        ]
        .map(String::from)
        .to_vec(),
    ];
    for args in commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = run(&args);
        assert!(
            first.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&first.stderr)
        );
        assert_eq!(first.stdout, run(&args).stdout, "{args:?}");
    }
}

#[test]
fn simulate_reports_auto_seed() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(
        dir.path(),
        "s.json",
        r#"{"dim": 2, "re": [[1, 0], [0, 0]]}"#,
    );
    let obs = write(
        dir.path(),
        "z.json",
        r#"{"dim": 2, "re": [[1, 0], [0, -1]]}"#,
    );
    let out = run(&[
        "simulate",
        "--povm",
        "octahedron",
        "--state",
        &state,
        "--observable",
        &obs,
        "--shots",
        "1000",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let seed = v["seed"].as_u64().unwrap().to_string();
    let again = run(&[
        "simulate",
        "--povm",
        "octahedron",
        "--state",
        &state,
        "--observable",
        &obs,
        "--shots",
        "1000",
        "--seed",
        &seed,
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn simulate_entangled_and_product() {
    let dir = tempfile::tempdir().unwrap();
    let bell = write(
        dir.path(),
        "bell.json",
        r#"{"dim": 4, "re": [[0.5, 0, 0, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0.5, 0, 0, 0.5]]}"#,
    );
    let zz = write(
        dir.path(),
        "zz.json",
        r#"{"factors": [[{"dim": 2, "re": [[1, 0], [0, -1]]}, {"dim": 2, "re": [[1, 0], [0, -1]]}]]}"#,
    );
    let out = run(&[
        "simulate",
        "--povm",
        "octahedron",
        "--state",
        &bell,
        "--observable",
        &zz,
        "--shots",
        "50000",
        "--seed",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["estimate"].as_f64().unwrap() - 1.0).abs() < 0.07);
    assert!((v["squared_shadow_norm"].as_f64().unwrap() - 9.0).abs() < 1e-9);

    let sites = write(
        dir.path(),
        "sites.json",
        r#"{"sites": [{"dim": 2, "re": [[1, 0], [0, 0]]}, {"dim": 2, "re": [[0, 0], [0, 1]]}]}"#,
    );
    let out = run(&[
        "simulate",
        "--povm",
        "octahedron",
        "--state",
        &sites,
        "--observable",
        &zz,
        "--shots",
        "50000",
        "--seed",
        "2",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["estimate"].as_f64().unwrap() + 1.0).abs() < 0.07);
}

#[test]
fn outputs_are_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("best.json");
    let out = run(&[
        "optimize",
        "--observables",
        "tetrahedron-projections",
        "--iterations",
        "1000",
        "--restarts",
        "2",
        "--seed",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["povm"]["bloch"].as_array().unwrap().len(), 4);
    let trace = fs::read_to_string(dir.path().join("best.json.trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,objective\n"));
    // Only the two outputs remain; no temporary files are left behind.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);

    let exported = dir.path().join("tetra.json");
    assert!(run(&[
        "povm",
        "export",
        "tetrahedron",
        "--invert",
        "--out",
        exported.to_str().unwrap()
    ])
    .status
    .success());
    let check = run(&["povm", "validate", exported.to_str().unwrap()]);
    assert!(check.status.success());
}

#[test]
fn grid_and_csv_together() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("norms.csv");
    let out = run(&[
        "shadow-norm",
        "--povm",
        "octahedron",
        "--observables",
        "paulis",
        "--grid",
        "16",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["max_projection_norm"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert!((v["octahedron_bound"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 4);
}
