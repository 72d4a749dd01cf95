use std::path::Path;
use std::process::{Command, Output};

fn ncprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncprob")).args(args).env_remove("NCPROB_THREADS").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parses CSV output into a header and rows.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn write_file(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const BASKETBALL: &str = r#"{
  "chain": {
    "matrix": [[0.0, 0.1, 0.0, 0.0], [0.6, 0.0, 0.0, 0.0], [0.2, 0.8, 1.0, 0.0], [0.2, 0.1, 0.0, 1.0]],
    "labels": ["P1", "P2", "S", "L"]
  },
  "rewards": [0.0, 0.0, 1.0, -1.0],
  "gamma": 0.9
}"#;

#[test]
fn clt_reports_scaled_moments() {
    let out = ncprob(&["clt", "--kind", "monotone", "--n", "4096", "--order", "6"]);
    assert!(out.status.success());
    let (header, rows) = table(&stdout(&out));
    assert_eq!(header, ["k", "moment", "limit"]);
    assert_eq!(rows.len(), 6);
    let m4: f64 = rows[3][1].parse().unwrap();
    assert!((m4 - 1.5).abs() <= 2e-2);
}

#[test]
fn invert_matches_closed_form_density() {
    let out = ncprob(&["invert", "--law", "semicircle", "--sigma", "1"]);
    assert!(out.status.success());
    let (_, rows) = table(&stdout(&out));
    let mut checked = 0;
    for r in rows.iter().filter(|r| r[0] == "density") {
        let (x, got, want): (f64, f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap());
        if x.abs() < 1.8 {
            assert!((got - want).abs() < 1e-2, "{x}: {got} vs {want}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn loewner_evaluates_the_constant_slit() {
    let out = ncprob(&["loewner", "--t", "1", "--eval", "0.5,1", "--eval=-1.5,0.3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(&stdout(&out));
    for r in rows {
        let v: Vec<f64> = r.iter().map(|c| c.parse().unwrap()).collect();
        let z = num_complex::Complex64::new(v[0], v[1]);
        let mut want = (z * z - 2.0).sqrt();
        if want.im < 0.0 {
            want = -want;
        }
        assert!((want.re - v[2]).abs() < 1e-6 && (want.im - v[3]).abs() < 1e-6);
    }
}

#[test]
fn markov_mrp_reproduces_basketball_values() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_file(dir.path(), "mrp.json", BASKETBALL);
    let out = ncprob(&["markov", "mrp", "--spec", &spec]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&stdout(&out));
    assert_eq!(header, ["state", "label", "expected_reward", "value"]);
    let v: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    for (got, want) in v.iter().zip([3.97, 7.36, 10.0, -10.0]) {
        assert!((got - want).abs() <= 0.01, "{got} vs {want}");
    }
}

#[test]
fn markov_subcommands_run_on_valid_specs() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write_file(dir.path(), "p.json", r#"{"matrix": [[0.5, 0.2], [0.5, 0.8]]}"#);
    let out = ncprob(&["markov", "stationary", "--spec", &chain]);
    assert!(out.status.success());
    let (_, rows) = table(&stdout(&out));
    let pi0: f64 = rows[0][2].parse().unwrap();
    assert!((pi0 - 2.0 / 7.0).abs() < 1e-12);

    let out = ncprob(&["markov", "converge", "--spec", &chain, "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["rate"].as_f64().unwrap() - 0.3).abs() < 0.05);

    let mdp = write_file(
        dir.path(),
        "mdp.json",
        r#"{"transitions": [{"matrix": [[1.0, 1.0], [0.0, 0.0]]}, {"matrix": [[0.0, 0.0], [1.0, 1.0]]}],
            "rewards": [0.0, 1.0], "gamma": 0.5}"#,
    );
    let out = ncprob(&["markov", "mdp", "--spec", &mdp]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(&stdout(&out));
    assert!(rows.iter().all(|r| r[2] == "1"));
}

#[test]
fn invalid_specs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_file(dir.path(), "bad.json", r#"{"matrix": [[0.5, 0.2], [0.6, 0.8]]}"#);
    let out = ncprob(&["markov", "stationary", "--spec", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let reducible = write_file(dir.path(), "id.json", r#"{"matrix": [[1.0, 0.0], [0.0, 1.0]]}"#);
    assert_eq!(ncprob(&["markov", "stationary", "--spec", &reducible]).status.code(), Some(2));
    assert_eq!(ncprob(&["markov", "stationary", "--spec", "/nonexistent/p.json"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = ncprob(&["clt", "--kind", "monotone", "--n", "4", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(ncprob(&["nonsense"]).status.code(), Some(2));
    assert_eq!(ncprob(&["clt", "--kind", "free", "--n", "0"]).status.code(), Some(2));
    assert_eq!(ncprob(&["free-ar1", "--N", "10", "--steps", "3", "--c", "1.5", "--seed", "1"]).status.code(), Some(2));
    // Stochastic subcommands need a seed.
    assert_eq!(ncprob(&["gue", "--N", "10"]).status.code(), Some(2));
    let threads = Command::new(env!("CARGO_BIN_EXE_ncprob"))
        .args(["gue", "--N", "4", "--seed", "1"])
        .env("NCPROB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let out = ncprob(&["lerw", "--width", "50", "--steps-cap", "10", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_output_directory_is_a_usage_error() {
    let out = ncprob(&["lerw", "--width", "3", "--seed", "1", "--out", "/nonexistent/dir/path.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ising_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = ncprob(&[
            "ising", "--width", "12", "--beta", "0.4407", "--steps", "1e5", "--seed", "1", "--random-start", "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let (header, rows) = table(&text);
    assert_eq!(header, ["row", "col", "spin"]);
    assert_eq!(rows.len(), 144);
    assert!(rows.iter().all(|r| r[2] == "1" || r[2] == "-1"));
}

#[test]
fn lerw_path_is_simple() {
    let out = ncprob(&["lerw", "--width", "10", "--seed", "3", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let path: Vec<(i64, i64)> = serde_json::from_value(doc["path"].clone()).unwrap();
    let mut seen = std::collections::HashSet::new();
    assert!(path.iter().all(|p| seen.insert(*p)));
    assert_eq!(path[0], (0, 0));
    assert_eq!(path.last().unwrap().0.abs().max(path.last().unwrap().1.abs()), 11);
}

#[test]
fn gue_and_ar1_report_statistics() {
    let out = ncprob(&["gue", "--N", "200", "--seed", "1", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["eigenvalues"].as_array().unwrap().len(), 200);
    assert!(doc["kolmogorov_distance"].as_f64().unwrap() < 0.1);

    let out = ncprob(&["free-ar1", "--N", "100", "--steps", "20", "--c", "0.5", "--noise", "gue", "--seed", "1"]);
    assert!(out.status.success());
    let (_, rows) = table(&stdout(&out));
    let second: f64 = rows.iter().find(|r| r[0] == "last_second_moment").unwrap()[1].parse().unwrap();
    assert!((second - 4.0 / 3.0).abs() < 0.2);
}

#[test]
fn sle_and_spidernet_outputs() {
    let a = ncprob(&["sle", "--kappa", "2", "--horizon", "1", "--dt", "0.01", "--seed", "5"]);
    let b = ncprob(&["sle", "--kappa", "2", "--horizon", "1", "--dt", "0.01", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (_, rows) = table(&stdout(&a));
    assert_eq!(rows.len(), 101);

    let out = ncprob(&["spidernet-approx", "--n", "2", "--order", "4", "--horizon", "2"]);
    assert!(out.status.success());
    let (_, rows) = table(&stdout(&out));
    let second: Vec<f64> = rows.iter().filter(|r| r[4] == "2").map(|r| r[5].parse().unwrap()).collect();
    for (k, m2) in second.iter().enumerate() {
        assert!((m2 - k as f64).abs() < 1e-12);
    }
}

#[test]
fn convolve_moments_and_measures() {
    let bern = r#"{"kind":"bernoulli","p":0.5}"#;
    let out = ncprob(&["convolve", "--kind", "free", "--left", bern, "--right", bern, "--order", "4"]);
    assert!(out.status.success());
    let (_, rows) = table(&stdout(&out));
    let m: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    // The free square of a symmetric Bernoulli law is the arcsine law of variance 2.
    assert_eq!(m, vec![0.0, 2.0, 0.0, 6.0]);

    let out = ncprob(&["convolve", "--kind", "boolean", "--left", bern, "--right", bern, "--measure"]);
    assert!(out.status.success());
    let (_, rows) = table(&stdout(&out));
    let mass: f64 = rows.iter().filter(|r| r[0] == "atom").map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);
}

#[test]
fn alternate_flag_spellings_and_law_files() {
    let dir = tempfile::tempdir().unwrap();
    let bern = write_file(dir.path(), "bern.json", r#"{"kind":"bernoulli","p":0.5}"#);
    let out = ncprob(&["convolve", "--kind", "free", "--lhs", &bern, "--rhs", &bern, "--order", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(&stdout(&out));
    assert_eq!(rows[3][1], "6.0");
    assert_eq!(ncprob(&["convolve", "--kind", "free", "--lhs", "/nonexistent.json", "--rhs", &bern]).status.code(), Some(2));

    let driving = write_file(dir.path(), "u.json", r#"{"kind":"constant","value":0.0}"#);
    let out = ncprob(&["loewner", "--driving", &driving, "--t", "1", "--grid", "801"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = ncprob(&["sle", "--kappa", "2", "--T", "0.5", "--dt", "0.1", "--seed", "1"]);
    assert_eq!(table(&stdout(&out)).1.len(), 6);
}
