use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lumber-dol"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout {}\nstderr {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_default_design_writes_637_records() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "sim.json", "{}");
    ok(&run(
        tmp.path(),
        &[
            "simulate", "--config", "sim.json", "--out", "a", "--seed", "11",
        ],
    ));
    let csv = read(tmp.path().join("a/dataset.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("profile_id,time_hours,censored"));
    assert_eq!(lines.count(), 637);
    for id in ["constant_3000", "constant_4500", "ramp"] {
        assert!(tmp.path().join(format!("a/profiles/{id}.json")).exists());
    }
    assert!(read(tmp.path().join("a/truth.json")).contains("\"seed\": 11"));
}

#[test]
fn reruns_are_byte_identical_and_thread_independent() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "sim.json", r#"{"seed": 5}"#);
    ok(&run(
        tmp.path(),
        &["simulate", "--config", "sim.json", "--out", "a"],
    ));
    ok(&run(
        tmp.path(),
        &["simulate", "--config", "sim.json", "--out", "b"],
    ));
    ok(&run(
        tmp.path(),
        &[
            "simulate",
            "--config",
            "sim.json",
            "--out",
            "c",
            "--threads",
            "1",
        ],
    ));
    let a = read(tmp.path().join("a/dataset.csv"));
    assert_eq!(a, read(tmp.path().join("b/dataset.csv")));
    assert_eq!(a, read(tmp.path().join("c/dataset.csv")));

    write(
        tmp.path(),
        "fit.json",
        r#"{"dataset": "a/dataset.csv", "profiles_dir": "a/profiles",
            "pt": {"n_chains": 3, "burn_in": 60, "keep": 80, "init_iters": 100}, "band_draws": 10}"#,
    );
    ok(&run(
        tmp.path(),
        &["fit", "--config", "fit.json", "--out", "f1"],
    ));
    ok(&run(
        tmp.path(),
        &[
            "fit",
            "--config",
            "fit.json",
            "--out",
            "f2",
            "--threads",
            "1",
        ],
    ));
    let p1 = read(tmp.path().join("f1/posterior.csv"));
    assert_eq!(p1, read(tmp.path().join("f2/posterior.csv")));
    assert_eq!(p1.lines().count(), 81);
    for f in [
        "summary.txt",
        "diagnostics.json",
        "cdf_ramp.csv",
        "ecdf_constant_4500.csv",
    ] {
        assert!(tmp.path().join("f1").join(f).exists(), "{f}");
    }

    write(
        tmp.path(),
        "sum.json",
        r#"{"posterior": "f1/posterior.csv"}"#,
    );
    ok(&run(
        tmp.path(),
        &["summarize", "--config", "sum.json", "--out", "s"],
    ));
    assert!(read(tmp.path().join("s/summary.txt")).contains("v/u"));
}

#[test]
fn empty_design_gives_header_only_dataset() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "sim.json", r#"{"arms": []}"#);
    ok(&run(
        tmp.path(),
        &["simulate", "--config", "sim.json", "--out", "a"],
    ));
    assert_eq!(
        read(tmp.path().join("a/dataset.csv")),
        "profile_id,time_hours,censored\n"
    );
}

#[test]
fn malformed_dataset_exits_2_naming_the_row() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "data.csv",
        "profile_id,time_hours,censored\nramp,0.01,0\nramp,-3,0\n",
    );
    write(
        tmp.path(),
        "fit.json",
        r#"{"dataset": "data.csv", "profiles": {"ramp": {"kind": "ramp", "horizon": "0.1 h"}}}"#,
    );
    let out = run(tmp.path(), &["fit", "--config", "fit.json", "--out", "f"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));
}

#[test]
fn missing_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["simulate", "--config", "nope.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    write(tmp.path(), "sim.json", "{}");
    let out = run(
        tmp.path(),
        &["simulate", "--config", "sim.json", "--threads", "0"],
    );
    assert_eq!(out.status.code(), Some(2));
}

fn csv_rows(path: impl AsRef<Path>) -> Vec<Vec<f64>> {
    read(path)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn residual_curve_starts_at_one() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "res.json",
        r#"{"scenarios": [{"name": "p4500", "level": 4500, "t_prime": "1 yr",
                           "horizon": "500 yr", "curve_end": "50 yr"}]}"#,
    );
    ok(&run(
        tmp.path(),
        &["residual-life", "--config", "res.json", "--out", "r"],
    ));
    let rows = csv_rows(tmp.path().join("r/residual_p4500.csv"));
    assert_eq!(rows[0][0], 0.0);
    assert!(rows[0][1..].iter().all(|&v| v == 1.0));
    assert!(rows.windows(2).all(|w| w[1][1] <= w[0][1]));
    assert!(read(tmp.path().join("r/residual_life.txt")).contains("p4500"));
}

#[test]
fn zero_load_never_fails_in_either_model() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "adm.json",
        r#"{"profile": {"kind": "constant", "level": 0, "horizon": "50 yr"}, "n_sim": 200}"#,
    );
    ok(&run(
        tmp.path(),
        &["adm-compare", "--config", "adm.json", "--out", "c"],
    ));
    let v: serde_json::Value =
        serde_json::from_str(&read(tmp.path().join("c/adm_compare.json"))).unwrap();
    assert_eq!(v["gamma_mean"], 0.0);
    assert_eq!(v["adm_probability"], 0.0);
}

#[test]
fn load_below_threshold_gives_zero_probability() {
    let tmp = TempDir::new().unwrap();
    // threshold v/u of the default parameters is about 408 psi
    write(
        tmp.path(),
        "rel.json",
        r#"{"profile": {"kind": "constant", "level": 300, "horizon": "50 yr"}}"#,
    );
    ok(&run(
        tmp.path(),
        &["reliability", "--config", "rel.json", "--out", "r"],
    ));
    let rows = csv_rows(tmp.path().join("r/failure_probs.csv"));
    assert_eq!(rows, vec![vec![0.0, 0.0]]);
}

#[test]
fn profile_gen_writes_default_residential_history() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "pg.json",
        r#"{"profile": {"kind": "residential"}}"#,
    );
    ok(&run(
        tmp.path(),
        &["profile-gen", "--config", "pg.json", "--out", "p"],
    ));
    let profile: lumber_dol::LoadProfile =
        serde_json::from_str(&read(tmp.path().join("p/profile.json"))).unwrap();
    assert_eq!(profile.horizon(), 50.0 * lumber_dol::HOURS_PER_YEAR);
    assert!((profile.max_load() - 2102.0).abs() < 1.0);
}
