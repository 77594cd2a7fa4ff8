use hawkesflock::model::FlockParams;
use hawkesflock::pipeline::{export_ticks, write_day};
use hawkesflock::sim::{simulate, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hawkesflock"));
    c.env_remove("HAWKESFLOCK_SEED");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {text}"))
}

const PARAMS: &str = r#"{"mu1":0.1,"beta1":1.0,"alpha1s":0.2,"alpha1c":0.2,"alpha1n":0.2,"alpha1w":0.2,
"mu2":0.1,"beta2":1.0,"alpha2s":0.2,"alpha2c":0.2,"alpha2n":0.2,"alpha2w":0.2}"#;

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("p.json"), PARAMS).unwrap();
    for out in ["a", "b"] {
        let o = run(
            &["simulate", "--params", "p.json", "--paths", "3", "--horizon", "300", "--seed", "9", "--out", out],
            d.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for i in 0..3 {
        let f = format!("path_{i:04}.csv");
        let a = std::fs::read(d.path().join("a").join(&f)).unwrap();
        let b = std::fs::read(d.path().join("b").join(&f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 9);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 6);
}

#[test]
fn seed_from_environment_when_flag_absent() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("p.json"), PARAMS).unwrap();
    let o = bin()
        .args(["simulate", "--params", "p.json", "--horizon", "50", "--out", "e"])
        .env("HAWKESFLOCK_SEED", "77")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("e/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 77);
}

#[test]
fn zero_paths_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("p.json"), PARAMS).unwrap();
    let o = run(&["simulate", "--params", "p.json", "--paths", "0", "--horizon", "10"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn explosive_paths_exit_three() {
    let d = tempfile::tempdir().unwrap();
    let hot = PARAMS.replace("0.2", "0.6");
    std::fs::write(d.path().join("p.json"), hot).unwrap();
    let o = run(
        &["simulate", "--params", "p.json", "--horizon", "1e6", "--max-events", "20000", "--out", "x"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("x/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["records"][0]["error"], "explosive regime");
}

#[test]
fn eleven_key_params_is_a_schema_error() {
    let d = tempfile::tempdir().unwrap();
    let short = PARAMS.replace(r#""alpha2w":0.2"#, r#""extra_unused":0.2"#);
    let mut v: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&short).unwrap();
    v.remove("extra_unused");
    assert_eq!(v.len(), 11);
    std::fs::write(d.path().join("p.json"), serde_json::to_string(&v).unwrap()).unwrap();
    let o = run(&["table1", "--params", "p.json", "--paths", "1"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("alpha2w"), "{e}");
}

#[test]
fn unknown_config_key_is_rejected_before_running() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.json"), r#"{"horizon": 10, "sede": 3}"#).unwrap();
    std::fs::write(d.path().join("p.json"), PARAMS).unwrap();
    let o = run(&["simulate", "--config", "c.json", "--params", "p.json", "--out", "y"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.path().join("y").exists());
}

fn write_days(dir: &Path, n: usize) {
    let p = FlockParams {
        mu1: 0.15,
        beta1: 1.0,
        alpha1s: 0.3,
        alpha1c: 0.2,
        alpha1n: 0.1,
        alpha1w: 0.3,
        mu2: 0.15,
        beta2: 1.0,
        alpha2s: 0.3,
        alpha2c: 0.2,
        alpha2n: 0.1,
        alpha2w: 0.3,
    };
    for day in 0..n {
        let s = simulate(&SimConfig::new(p, 2000.0, 100 + day as u64)).unwrap();
        let start = 1_704_186_000_000 + day as i64 * 86_400_000;
        let pair = export_ticks(&s, start, 4.0, [50.0, 50.0], [0.01, 0.01]);
        write_day(dir, &format!("2024-01-0{}", day + 2), &pair).unwrap();
    }
}

#[test]
fn pipeline_skips_a_corrupt_day() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("in");
    std::fs::create_dir(&input).unwrap();
    write_days(&input, 5);
    std::fs::write(input.join("2024-01-04_1.csv"), "timestamp_ms,price\nnot,a number\n").unwrap();
    let o = run(&["pipeline", "--dir", "in", "--out", "out"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("out");
    let days = std::fs::read_to_string(out.join("days.jsonl")).unwrap();
    assert_eq!(days.lines().count(), 4);
    let risk = std::fs::read_to_string(out.join("risk.csv")).unwrap();
    assert_eq!(risk.lines().next().unwrap(), "date,rho,q11,q22,q12,q21,p");
    assert_eq!(risk.lines().count(), 5);
    assert!(!risk.contains("2024-01-04"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let recs = m["records"].as_array().unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["label"], "2024-01-04");
    let monthly = std::fs::read_to_string(out.join("monthly.csv")).unwrap();
    assert!(monthly.lines().nth(1).unwrap().starts_with("2024-01,"));
}

#[test]
fn pipeline_on_empty_dir_reports_no_input() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir(d.path().join("empty")).unwrap();
    let o = run(&["pipeline", "--dir", "empty", "--out", "out"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "no_input");
}

#[test]
fn covar_writes_one_row_per_window() {
    let d = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut a, mut b) = (100.0f64, 80.0f64);
    let mut csv = String::from("date,close1,close2\n");
    for i in 0..160 {
        let z: f64 = StandardNormal.sample(&mut rng);
        let e: f64 = StandardNormal.sample(&mut rng);
        a *= (0.01 * z).exp();
        b *= (0.01 * (0.6 * z + 0.8 * e)).exp();
        csv.push_str(&format!("d{i:03},{a},{b}\n"));
    }
    std::fs::write(d.path().join("close.csv"), csv).unwrap();
    let o = run(
        &["covar", "--input", "close.csv", "--window", "120", "--families", "gaussian,clayton", "--out", "c.csv"],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.path().join("c.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "date,var1,var2,covar12,covar21,dcovar12,dcovar21,family,theta,nu,aic,bic"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 159 - 120 + 1);
    assert!(rows[0].starts_with("d120,"));
    for r in &rows {
        let f: Vec<&str> = r.split(',').collect();
        let (covar, var) = (f[3].parse::<f64>().unwrap(), f[2].parse::<f64>().unwrap());
        // positively dependent: distress pushes the conditional quantile lower
        assert!(covar < var, "{r}");
    }
}

#[test]
fn ingest_then_estimate_round() {
    let d = tempfile::tempdir().unwrap();
    write_days(d.path(), 1);
    let o = run(
        &[
            "ingest", "--first", "2024-01-02_1.csv", "--second", "2024-01-02_2.csv", "--tick1", "0.01", "--tick2",
            "0.01", "--out", "ev.csv",
        ],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("ev.json").exists());
    let o = run(&["estimate", "--events", "ev.csv", "--out", "fit.json"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("fit.json")).unwrap()).unwrap();
    assert!(fit["params"]["mu1"].as_f64().unwrap() > 0.0);
    let o = run(&["risk", "--fits", "fit.json", "--out", "r.csv"], d.path());
    assert!(o.status.success());
    let r = std::fs::read_to_string(d.path().join("r.csv")).unwrap();
    assert!(r.lines().nth(1).unwrap().starts_with("fit,"));
}
