//! End-to-end runs of the command-line harness.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bandjoin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandjoin")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    p
}

fn pareto_config(dims: usize, eps: f64, workers: usize, methods: &[&str]) -> Value {
    serde_json::json!({
        "name": "cli",
        "data": {"kind": "generate", "dims": dims,
                 "s": {"distribution": {"type": "pareto", "z": 1.5}, "n": 4000, "seed": 1},
                 "t": {"distribution": {"type": "pareto", "z": 1.5}, "n": 3000, "seed": 2}},
        "eps": vec![eps; dims],
        "workers": workers,
        "methods": methods,
        "seed": 5,
        "sampling": {"input_budget": 3000, "output_cap": 20000},
        "quantile": {"size_per_block": 500}
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn single_worker_gives_a_trivial_plan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", pareto_config(2, 0.05, 1, &["recpart"]));
    let out = dir.path().join("out");
    let o = bandjoin(&["optimize", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let plan = read_json(&out.join("recpart.plan.json"));
    assert_eq!(plan["plan"]["kind"], "split-tree");
    assert_eq!(plan["plan"]["nodes"].as_array().unwrap().len(), 1);
    let trace = std::fs::read_to_string(out.join("recpart.trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2, "{trace}");
}

#[test]
fn grid_is_refused_for_zero_band() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", pareto_config(2, 0.0, 4, &["grid"]));
    let o = bandjoin(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("not defined for band width zero"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", pareto_config(1, 0.05, 4, &[]));
    let o = bandjoin(&["compare", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("methods"), "{}", stderr(&o));

    let mut body = pareto_config(1, 0.05, 4, &["recpart"]);
    body["sampling"]["inputbudget"] = 5.into();
    let cfg = write_config(dir.path(), "d.json", body);
    let o = bandjoin(&["optimize", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("inputbudget"), "{}", stderr(&o));
}

#[test]
fn plan_files_run_like_fresh_plans() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", pareto_config(2, 0.05, 6, &["recpart"]));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let c = cfg.to_str().unwrap();
    assert!(bandjoin(&["optimize", "--config", c, "--out-dir", a.to_str().unwrap()]).status.success());
    let plan = a.join("recpart.plan.json");
    let o = bandjoin(&["run", "--config", c, "--plan", plan.to_str().unwrap(), "--out-dir", b.to_str().unwrap(), "--verify-oracle"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(bandjoin(&["run", "--config", c, "--out-dir", a.to_str().unwrap()]).status.success());
    let (ma, mb) = (read_json(&a.join("recpart.metrics.json")), read_json(&b.join("recpart.metrics.json")));
    for key in ["I", "I_m", "O_m", "L_m", "L0", "output"] {
        assert_eq!(ma[key], mb[key], "{key}");
    }
    assert_eq!(mb["verified"], true);

    // A plan built for other band widths is rejected.
    let other = write_config(dir.path(), "e.json", pareto_config(2, 0.07, 6, &["recpart"]));
    let o = bandjoin(&["run", "--config", other.to_str().unwrap(), "--plan", plan.to_str().unwrap(), "--out-dir", b.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn trace_input_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", pareto_config(2, 0.05, 8, &["recpart"]));
    let out = dir.path().join("o");
    assert!(bandjoin(&["optimize", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]).status.success());
    let mut rdr = csv::Reader::from_path(out.join("recpart.trace.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["iteration", "I", "L_m", "objective", "elapsed"]);
    let inputs: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert!(inputs.len() > 2);
    assert!(inputs.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
}

#[test]
fn compare_writes_table_and_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let methods = ["recpart", "recpart-s", "one-bucket", "grid", "grid-star", "quantile"];
    let cfg = write_config(dir.path(), "c.json", pareto_config(2, 0.05, 6, &methods));
    let out = dir.path().join("o");
    let o = bandjoin(&["compare", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scatter = std::fs::read_to_string(out.join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1 + methods.len());
    let one_bucket = read_json(&out.join("one-bucket.metrics.json"));
    // w = 6 on 4000 + 3000 tuples: the 3 x 2 matrix copies each S tuple to 2
    // columns and each T tuple to 3 rows, cheaper than 2 x 3.
    assert_eq!(one_bucket["I"], 2 * 4000 + 3 * 3000);
    let md = std::fs::read_to_string(out.join("compare.md")).unwrap();
    for m in methods {
        assert!(md.contains(&format!("| {m} |")), "{md}");
    }
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + methods.len());
}

#[test]
fn generated_csv_feeds_a_csv_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.json", pareto_config(3, 0.1, 4, &["recpart"]));
    let data = dir.path().join("data");
    let o = bandjoin(&["gen", "--config", cfg.to_str().unwrap(), "--out-dir", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let body = serde_json::json!({
        "name": "from-csv",
        "data": {"kind": "csv",
                 "s": {"path": "data/s.csv", "columns": [0, 1, 2], "limit": 1500},
                 "t": {"path": "data/t.csv", "columns": [2, 1, 0]}},
        "eps": [0.1, 0.1, 0.1],
        "workers": 4,
        "methods": ["recpart", "quantile", "one-bucket"]
    });
    let csv_cfg = write_config(dir.path(), "c.json", body);
    let out = dir.path().join("o");
    let o = bandjoin(&["run", "--config", csv_cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--verify-oracle"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = read_json(&out.join("quantile.metrics.json"));
    assert_eq!(m["nS"], 1500);
    assert_eq!(m["nT"], 3000);
}
