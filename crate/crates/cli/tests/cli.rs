//! End-to-end checks of the `nsregret` binary: artifacts, determinism and
//! exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nsregret"));
    c.env_remove("NSREGRET_WORKERS");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("spawn nsregret")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn data_rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(2).map(str::to_string).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_run_writes_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "horizon = 64\n");
    let o = run(&["run", "--config", "c.toml", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let results = tmp.path().join("o/results.csv");
    let text = std::fs::read_to_string(&results).unwrap();
    assert!(text.starts_with("# {"));
    assert!(text.contains("\"schema_version\":1"));
    let header = text.lines().nth(1).unwrap();
    assert_eq!(
        header,
        "seed,n,d,C_n,learner,meta,dynamic_regret,static_regret_best_interval,oracle_objective,lambda,wall_time_ms"
    );
    let rows = data_rows(&results);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0,64,1,1,ftl,flh,"));
}

#[test]
fn grid_is_a_cross_product_and_reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "horizon = 128\nbudgets = [0.5, 1.0, 2.0]\nseeds = [0, 1, 2, 3, 4]\n[output]\ntraces = true\n",
    );
    let a = run(&["run", "--config", "c.toml", "--out", "a", "--workers", "2"], tmp.path());
    let b = run(&["run", "--config", "c.toml", "--out", "b", "--workers", "1"], tmp.path());
    assert!(a.status.success() && b.status.success(), "{}{}", stderr(&a), stderr(&b));
    let ra = std::fs::read(tmp.path().join("a/results.csv")).unwrap();
    let rb = std::fs::read(tmp.path().join("b/results.csv")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(data_rows(&tmp.path().join("a/results.csv")).len(), 15);
    let trace = tmp.path().join("a/traces/trace_n128_C0.5_seed3.csv");
    assert_eq!(data_rows(&trace).len(), 128);
    assert!(!String::from_utf8(ra).unwrap().contains('\r'));
}

#[test]
fn seed_flag_overrides_the_seed_list() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "horizon = 64\nseeds = [0, 1, 2]\n");
    let o = run(&["run", "--config", "c.toml", "--out", "o", "--seed", "9"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&tmp.path().join("o/results.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("9,"));
}

#[test]
fn validation_errors_exit_1_with_actionable_messages() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "bad.toml", "learner = \"ftl\"\nloss = \"glm\"\n");
    let o = run(&["run", "--config", "bad.toml", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("requires loss = \"squared\""));

    write(tmp.path(), "typo.toml", "horizn = 64\n");
    let o = run(&["run", "--config", "typo.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("horizn"));
}

#[test]
fn missing_files_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["run", "--config", "nope.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["oracle", "--input", "nope.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "bad.csv", "t,k,y\n1,1,0.5\n2,1,oops\n");
    let o = run(&["oracle", "--input", "bad.csv", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn workers_env_overrides_flag() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "horizon = 32\n");
    let o = bin()
        .args(["run", "--config", "c.toml", "--out", "o", "--workers", "2"])
        .env("NSREGRET_WORKERS", "zero")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NSREGRET_WORKERS"));
    let o = bin()
        .args(["run", "--config", "c.toml", "--out", "o"])
        .env("NSREGRET_WORKERS", "3")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn paper_example_oracle_reports_half_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    for n in [6, 8, 16] {
        let out = format!("ex{n}");
        let g = run(&["gen", "--paper-example", &n.to_string(), "--out", &out], tmp.path());
        assert!(g.status.success(), "{}", stderr(&g));
        let input = format!("{out}/instance.csv");
        let o = run(&["oracle", "--input", &input, "--out", &out], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let kkt: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join(&out).join("kkt.json")).unwrap()).unwrap();
        assert!((kkt["lambda"].as_f64().unwrap() - n as f64 / 2.0).abs() < 1e-6);
        assert_eq!(kkt["bound"].as_f64(), Some(2.0));
        assert_eq!(kkt["pass"].as_bool(), Some(true));
        let rows = data_rows(&tmp.path().join(&out).join("solution.csv"));
        let u: Vec<f64> = rows.iter().map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
        // 1-based: zero before round n/2, one from it on
        let expected: Vec<f64> = (1..=n).map(|t| if t < n / 2 { 0.0 } else { 1.0 }).collect();
        for (a, b) in u.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn constant_input_with_zero_budget_returns_the_mean() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "y.csv", "t,k,y\n1,1,0.25\n2,1,0.25\n3,1,0.25\n4,1,0.25\n");
    let o = run(&["oracle", "--input", "y.csv", "--budget", "0", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for r in data_rows(&tmp.path().join("o/solution.csv")) {
        assert!(r.ends_with(",0.25"), "{r}");
    }
}

#[test]
fn labels_outside_the_box_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "y.csv", "t,k,y\n1,1,3\n2,1,0\n");
    let o = run(&["oracle", "--input", "y.csv", "--bound", "1", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--bound"));
}

#[test]
fn partition_accepts_instances_and_solutions() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "horizon = 300\nbudgets = [1.0]\nseeds = [4]\n");
    assert!(run(&["gen", "--config", "c.toml", "--out", "g"], tmp.path()).status.success());
    let a = run(&["partition", "--input", "g/instance.csv", "--out", "p1"], tmp.path());
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(run(&["oracle", "--input", "g/instance.csv", "--out", "s"], tmp.path()).status.success());
    let b = run(&["partition", "--input", "s/solution.csv", "--bound", "1", "--out", "p2"], tmp.path());
    assert!(b.status.success(), "{}", stderr(&b));
    let pa = data_rows(&tmp.path().join("p1/partition.csv"));
    let pb = data_rows(&tmp.path().join("p2/partition.csv"));
    assert_eq!(pa, pb);
    assert!(pa[0].starts_with("1,1,"));
    assert!(pa.last().unwrap().split(',').nth(2) == Some("300"));
}

#[test]
fn gen_is_deterministic_and_matches_run_data() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "horizon = 100\nseeds = [5]\n");
    assert!(run(&["gen", "--config", "c.toml", "--out", "a"], tmp.path()).status.success());
    assert!(run(&["gen", "--config", "c.toml", "--out", "b"], tmp.path()).status.success());
    let a = std::fs::read(tmp.path().join("a/instance.csv")).unwrap();
    assert_eq!(a, std::fs::read(tmp.path().join("b/instance.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().nth(1) == Some("t,k,y,w"));
    assert!(text.contains("\"realized_tv\""));
}

#[test]
fn decompose_totals_match_regret() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "horizon = 256\nseeds = [0, 1]\n");
    let o = run(&["decompose", "--config", "c.toml", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/decompose.json")).unwrap()).unwrap();
    let cells = s.as_array().unwrap();
    assert_eq!(cells.len(), 2);
    for c in cells {
        let total = c["total"].as_f64().unwrap();
        let regret = c["dynamic_regret"].as_f64().unwrap();
        assert!((total - regret).abs() <= 1e-8 * regret.abs().max(1.0));
        assert!(c["max_t2"].as_f64().unwrap() <= 1e-12);
    }
    assert!(tmp.path().join("o/decomposition_n256_C1_seed0.csv").exists());
}

#[test]
fn scaling_recovers_an_injected_power_law() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "horizons = [256, 512, 1024, 2048]\nseeds = [0, 1]\nsynthetic_regret_exponent = 0.3333333333333333\n",
    );
    let o = run(&["scaling", "--config", "c.toml", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/scaling.json")).unwrap()).unwrap();
    assert!((r["slope"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(r["table"].as_array().unwrap().len(), 4);
    assert!(tmp.path().join("o/scaling_plot.gp").exists());
    assert!(tmp.path().join("o/scaling_points.dat").exists());
}

#[test]
fn scaling_rejects_short_or_irregular_grids() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "horizons = [256, 512, 1024]\n");
    assert_eq!(run(&["scaling", "--config", "c.toml", "--out", "o"], tmp.path()).status.code(), Some(1));
}

#[test]
fn bare_ftl_regret_grows_linearly_on_a_jumping_comparator() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "meta = \"none\"\nhorizons = [256, 512, 1024, 2048]\nseeds = [0, 1]\n\
         [data]\nprofile = { kind = \"piecewise_constant\", jumps = 1 }\nnoise = { kind = \"uniform\", sigma = 0.1 }\n",
    );
    let o = run(&["scaling", "--config", "c.toml", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/scaling.json")).unwrap()).unwrap();
    assert!(r["slope"].as_f64().unwrap() >= 0.8, "{r}");
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["pass"], serde_json::json!(true));
    let suites = r["suites"].as_array().unwrap();
    assert!(suites.len() >= 6);
    assert!(suites.iter().all(|s| s["checks"].as_u64().unwrap() > 0));

    let bad = run(&["verify", "--out", "o2", "--inject-fault", "simplex"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
    let r: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    let simplex = suites_named(&r, "weight_simplex");
    assert_eq!(simplex["pass"], serde_json::json!(false));
    assert_eq!(suites_named(&r, "kkt")["pass"], serde_json::json!(true));
}

fn suites_named<'a>(r: &'a serde_json::Value, name: &str) -> &'a serde_json::Value {
    r["suites"].as_array().unwrap().iter().find(|s| s["name"] == name).unwrap()
}
