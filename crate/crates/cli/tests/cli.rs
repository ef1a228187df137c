use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mlbn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlbn"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_independent_of_threads_and_output_dir() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = [
        "--seed",
        "4",
        "--set",
        "d=[4,6]",
        "--set",
        "repetitions=5",
        "--set",
        "n=200",
    ];
    let mut first = vec!["simulate", "--threads", "1", "--out", path(a.path())];
    first.extend(common);
    let mut second = vec!["simulate", "--threads", "2", "--out", path(b.path())];
    second.extend(common);
    let (ra, rb) = (mlbn(&first), mlbn(&second));
    assert!(
        ra.status.success(),
        "{}",
        String::from_utf8_lossy(&ra.stderr)
    );
    assert_eq!(ra.stdout, rb.stdout);
    for name in ["simulation.csv", "repetitions.csv"] {
        let fa = fs::read(a.path().join(name)).unwrap();
        assert_eq!(fa, fs::read(b.path().join(name)).unwrap(), "{name}");
        assert!(String::from_utf8_lossy(&fa).starts_with("# tropical-mlbn"));
    }
}

#[test]
fn census_reports_cover_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlbn(&[
        "census",
        "--seed",
        "1",
        "--out",
        path(dir.path()),
        "--set",
        "d=4",
        "--set",
        "census.samples=60",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("d=4"), "{text}");
    for name in ["census.csv", "census_summary.csv", "census_types.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn estimate_reads_csv_and_metrics_compares_graphs() {
    let dir = tempfile::tempdir().unwrap();
    // x2 = max(x1 + 1, z2) on the negative log scale: column b dominates a
    let mut csv = String::from("a,b\n");
    for k in 0..200 {
        let a = 1.0 + (k % 17) as f64;
        let b = (a * (-1.0f64).exp()).max(0.01 + (k % 5) as f64 * 0.01);
        csv.push_str(&format!("{a},{b}\n"));
    }
    let data = dir.path().join("data.csv");
    fs::write(&data, csv).unwrap();
    let out = mlbn(&[
        "estimate",
        "--seed",
        "0",
        "--out",
        path(dir.path()),
        "--set",
        &format!("data.path=\"{}\"", path(&data)),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("estimate.json")).unwrap())
            .unwrap();
    assert!(json.get("provenance").is_some());

    let truth = dir.path().join("truth.json");
    let est = dir.path().join("est.json");
    fs::write(&truth, r#"{"d": 3, "edges": [[0, 1]]}"#).unwrap();
    fs::write(&est, r#"{"d": 3, "edges": [[1, 0]]}"#).unwrap();
    let out = mlbn(&[
        "metrics",
        "--seed",
        "0",
        "--out",
        path(dir.path()),
        "--set",
        &format!("metrics.truth=\"{}\"", path(&truth)),
        "--set",
        &format!("metrics.estimate=\"{}\"", path(&est)),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(m["shd"], 1);
}

#[test]
fn exit_codes_separate_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let no_seed = mlbn(&["simulate", "--out", path(dir.path())]);
    assert_eq!(no_seed.status.code(), Some(1));
    let unknown = mlbn(&[
        "simulate",
        "--seed",
        "1",
        "--out",
        path(dir.path()),
        "--set",
        "bogus=1",
    ]);
    assert_eq!(unknown.status.code(), Some(1));
    let threads = mlbn(&[
        "census",
        "--seed",
        "1",
        "--threads",
        "0",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(threads.status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,oops\n").unwrap();
    let out = mlbn(&[
        "estimate",
        "--seed",
        "1",
        "--out",
        path(dir.path()),
        "--set",
        &format!("data.path=\"{}\"", path(&bad)),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let missing = mlbn(&[
        "estimate",
        "--seed",
        "1",
        "--out",
        path(dir.path()),
        "--set",
        "data.path=\"/nonexistent/x.csv\"",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}
