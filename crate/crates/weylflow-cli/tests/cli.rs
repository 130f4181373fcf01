use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylflow"))
        .args(args)
        .env("WEYLFLOW_FIXTURES", fixtures())
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(run(&["validate", "k33"]).status.code(), Some(0));
    let bad = run(&["validate", "a2_fano_corrupt"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL rank2"), "{}", stdout(&bad));
    assert!(stdout(&bad).contains("residue of chamber"));
    assert_eq!(
        run(&["validate", "/nonexistent/graph.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn malformed_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{not json").unwrap();
    assert_eq!(
        run(&["validate", junk.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["transfer", "k33", "--radius", "2", "--mu", "1,1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["spectrum", "k33", "--theta", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn transfer_budget_guard() {
    let o = run(&["transfer", "a2_fano", "--radius", "2", "--mu", "1,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("at least |mu| + 1 = 3"),
        "{}",
        stderr(&o)
    );
    let ok = run(&["transfer", "a2_fano", "--radius", "2", "--mu", "1,0"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["M_mu"], 4);
    assert_eq!(v["dim"], 63);
}

#[test]
fn transfer_csv_is_half_non_backtracking() {
    let o = run(&[
        "transfer", "k33", "--radius", "2", "--mu", "1", "--format", "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["dim"], 18);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 18);
        // q = 2 continuations per directed edge
        assert_eq!(cells.iter().filter(|c| **c == "1/2").count(), 2);
        assert_eq!(cells.iter().filter(|c| **c == "0").count(), 16);
    }
}

fn complex_list(v: &serde_json::Value) -> Vec<(f64, f64)> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
        .collect()
}

#[test]
fn spectrum_matches_ihara_bass_on_k33() {
    let o = run(&["spectrum", "k33", "--theta", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["format"], "spectrum/v1");
    assert_eq!(v["dimF1"], 18);
    // z² − λz + 2 = 0 for λ ∈ {3, −3, 0 (×4)}, plus ±1 three times each, all over q = 2
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let oracle = [
        ((1.0, 0.0), 1),
        ((-1.0, 0.0), 1),
        ((0.5, 0.0), 4),
        ((-0.5, 0.0), 4),
        ((0.0, h), 4),
        ((0.0, -h), 4),
    ];
    let joint = v["joint"].as_array().unwrap();
    assert_eq!(joint.len(), oracle.len());
    for ((re, im), mult) in oracle {
        let hit = joint
            .iter()
            .find(|j| {
                let chi = complex_list(&j["chi"]);
                (chi[0].0 - re).abs() < 1e-8 && (chi[0].1 - im).abs() < 1e-8
            })
            .unwrap_or_else(|| panic!("missing {re} {im}"));
        assert_eq!(hit["mult"], mult);
        assert_eq!(hit["taylor"], true);
    }
    assert_eq!(v["consistent"], true);
}

#[test]
fn spectrum_output_is_deterministic() {
    let a = run(&["spectrum", "a2_fano", "--samples", "5"]);
    let b = run(&["spectrum", "a2_fano", "--samples", "5", "--threads", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other_seed = run(&["spectrum", "a2_fano", "--samples", "5", "--seed", "7"]);
    assert_eq!(other_seed.status.code(), Some(0));
}

#[test]
fn koszul_reports_trivial_character() {
    let o = run(&["koszul", "k33", "--chi", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cohomology"], serde_json::json!([1, 1]));
    let far = run(&["koszul", "a2_fano", "--chi", "10,10"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&far)).unwrap();
    assert_eq!(v["cohomology"], serde_json::json!([0, 0, 0]));
}

#[test]
fn ihara_oracle() {
    let o = run(&["ihara", "k33"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 18);
    assert!(v["identity_residual"].as_f64().unwrap() <= 1e-10);
    let q3 = run(&["ihara", "q3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&q3)).unwrap();
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 24);
    let dir = tempfile::tempdir().unwrap();
    let odd = dir.path().join("pentagon.json");
    std::fs::write(
        &odd,
        r#"{"format":"graph/v1","edges":[[0,1],[1,2],[2,3],[3,4],[4,0]]}"#,
    )
    .unwrap();
    let bad = run(&["ihara", odd.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("bipartite"));
}

#[test]
fn generators_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a2 = dir.path().join("a2.json");
    assert_eq!(
        run(&["gen-a2", "--out", a2.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["validate", a2.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let chambers = dir.path().join("a2c.json");
    assert_eq!(
        run(&["gen-a2", "--chambers", "--out", chambers.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        std::fs::read(&chambers).unwrap(),
        std::fs::read(fixtures().join("a2_fano_chambers.json")).unwrap()
    );
    let g = dir.path().join("k23.json");
    assert_eq!(
        run(&[
            "gen-graph",
            "complete-bipartite",
            "2",
            "3",
            "--out",
            g.to_str().unwrap()
        ])
        .status
        .code(),
        Some(0)
    );
    let o = run(&["validate", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("BC1~"));
    assert_eq!(run(&["gen-graph", "hypercube"]).status.code(), Some(2));
}

#[test]
fn fixture_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixtures().join("k33.json"), dir.path().join("mine.json")).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_weylflow"))
        .args(["validate", "mine"])
        .env("WEYLFLOW_FIXTURES", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_all_bundled_fixtures() {
    let o = run(&["verify"]);
    let table = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{table}");
    assert!(!table.contains("FAIL"));
    for name in ["k33", "q3", "k4_subdivided", "a2_fano"] {
        assert!(table.contains(name));
    }
}

#[test]
fn verify_rejects_corrupt_fixture() {
    let o = run(&["verify", "a2_fano_corrupt"]);
    assert_eq!(o.status.code(), Some(1));
}
