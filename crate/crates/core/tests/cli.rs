use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hjmm"));
    for var in ["HJMM_CONFIG", "HJMM_OUT", "HJMM_SEED", "HJMM_THREADS", "HJMM_JSON"] {
        c.env_remove(var);
    }
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run_config(path: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(path)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn no_arguments_lists_seven_experiments() {
    let o = bin().output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let tags: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with(' '))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(tags, ["solve", "compare", "markov", "hysteresis", "splitting", "hopf", "c0"]);
}

#[test]
fn json_listing_is_machine_readable() {
    let o = bin().arg("--json").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 7);
    assert!(entries.iter().all(|e| e["tag"].is_string() && e["fields"].is_array()));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = bin().arg("--frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--frobnicate"));
}

#[test]
fn error_categories_have_distinct_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "a.json", r#"{"experiment": "heat", "instants": [1]}"#);
    let schema = write_config(
        dir.path(),
        "b.json",
        r#"{"experiment": "solve", "hamiltonian": {"kind": "free-particle"}, "instants": [0.5]}"#,
    );
    let solver = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": "solve", "hamiltonian": {"kind": "free-particle"},
            "datum": {"kind": "shifted-abs-sine"}, "grid": {"kind": "torus", "n": 16}, "instants": [0.5]}"#,
    );
    let mut lines = Vec::new();
    for p in [&unknown, &schema, &solver] {
        let o = run_config(p, dir.path(), &[]);
        assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
        let line = stderr(&o).lines().next().unwrap().to_string();
        lines.push(line);
    }
    assert!(lines[0].contains("unknown experiment tag 'heat'"));
    assert!(lines[1].contains("config schema violation"));
    assert!(lines[2].contains("solver"));
    let missing = run_config(&dir.path().join("missing.json"), dir.path(), &[]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("cannot read config"));
}

#[test]
fn residual_over_tolerance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&configs().join("negative_tight_compare.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report_tight_compare.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn constant_datum_stays_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&configs().join("solve_constant.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("field_solve_constant.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,u,method"));
    let mut rows = 0;
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert_eq!(cols[2].parse::<f64>().unwrap(), 0.3);
        assert_eq!(cols[3], "minmax");
        rows += 1;
    }
    assert_eq!(rows, 3 * 32);
}

#[test]
fn markov_convex_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&configs().join("markov_convex.json"), dir.path(), &["--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["result"]["residual"]["residual"].as_f64().unwrap() <= 5e-3);
    assert_eq!(v["result"]["monotone"], true);
}

#[test]
fn splitting_config_reports_the_closed_form_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&configs().join("splitting.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report_splitting.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["minmax_value"].as_f64(), Some(-0.25));
    let r = v["result"]["probe_residual"].as_f64().unwrap();
    assert!((r - 0.3849).abs() < 1e-4, "{r}");
    let csv = std::fs::read_to_string(dir.path().join("field_splitting.csv")).unwrap();
    assert!(csv.lines().any(|l| l.ends_with(",viscosity")));
    assert!(csv.lines().any(|l| l.ends_with(",analytic-example")));
}

#[test]
fn same_config_and_seed_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("compare_convex.json");
    let body = std::fs::read_to_string(&cfg).unwrap().replace("\"n\": 256", "\"n\": 64").replace("\"refine\": true", "\"refine\": false").replace("[0.25, 0.5, 1.0]", "[0.25, 0.5]");
    let cfg = write_config(a.path(), "cfg.json", &body);
    let oa = run_config(&cfg, a.path(), &["--seed", "11", "--threads", "2"]);
    let ob = bin()
        .env("HJMM_CONFIG", &cfg)
        .env("HJMM_OUT", b.path())
        .env("HJMM_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(ob.status.code(), Some(0), "{}", stderr(&ob));
    let ca = std::fs::read(a.path().join("field_compare_convex.csv")).unwrap();
    let cb = std::fs::read(b.path().join("field_compare_convex.csv")).unwrap();
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
}

#[test]
fn hopf_and_c0_configs_pass() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["hopf_saddle.json", "c0_abs_sine.json", "hysteresis_cos.json"] {
        let o = run_config(&configs().join(name), dir.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
    let csv = std::fs::read_to_string(dir.path().join("field_hopf_saddle.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,u,method\n"));
    for m in ["hopf-lower", "hopf-upper", "minmax"] {
        assert!(csv.lines().any(|l| l.ends_with(m)), "{m}");
    }
}
