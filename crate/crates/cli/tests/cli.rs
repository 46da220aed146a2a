use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn metacog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metacog")).args(args).output().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn small_bench(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("small.cfg");
    let mut text = String::from("benchmark.cross_count = 6\n");
    for d in ["LR", "KR", "CG", "MC", "CI"] {
        for t in ["Easy", "Medium", "Hard"] {
            text.push_str(&format!("benchmark.{d}.{t} = 2\n"));
        }
    }
    fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn run_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = metacog(&["run", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("seed 3: accuracy"));

    let again = dir.path().join("again");
    let o = metacog(&[
        "report",
        "--log",
        out.join("decisions.jsonl").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(out.join("report.json")).unwrap(),
        fs::read(again.join("report.json")).unwrap()
    );
}

#[test]
fn precedence_flag_over_param_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_bench(dir.path());
    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("policy = single_agent\nparams.theta = 0.9\n");
    fs::write(&cfg, text).unwrap();
    let c = cfg.to_str().unwrap();

    // file alone: single agent
    let a = dir.path().join("a");
    assert!(metacog(&["run", "--config", c, "--out", a.to_str().unwrap()]).status.success());
    assert_eq!(summary(&a)["delegation_rate"], 0.0);
    assert_eq!(summary(&a)["ece"], serde_json::Value::Null);

    // --param overrides the file
    let b = dir.path().join("b");
    let o = metacog(&["run", "--config", c, "--param", "policy=metacog", "--out", b.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(summary(&b)["ece"].is_number());
    // theta 0.9 from the file still applies: nearly everything leaves its assignee
    assert!(summary(&b)["delegation_rate"].as_f64().unwrap() > 0.5);

    // a dedicated flag overrides --param
    let f = dir.path().join("f");
    let o = metacog(&[
        "run", "--config", c, "--param", "policy=metacog", "--policy", "round_robin", "--out",
        f.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(summary(&f)["ece"], serde_json::Value::Null);
    assert_eq!(summary(&f)["total_api_calls"], 36);
}

#[test]
fn multi_seed_run_writes_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_bench(dir.path());
    let out = dir.path().join("multi");
    let o = metacog(&[
        "run", "--config", cfg.to_str().unwrap(), "--seed", "1", "--seed", "2,3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("seed,accuracy,delegation_rate,delegation_precision,ece,api_calls"));
    assert!(out.join("seed-2/decisions.jsonl").exists());
}

#[test]
fn sweep_and_ablate_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_bench(dir.path());
    let c = cfg.to_str().unwrap();
    let out = dir.path().join("s");
    let o = metacog(&["sweep", "--config", c, "--parameter", "alpha", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 6);
    assert!(sweep.lines().nth(1).unwrap().starts_with("alpha,0.01,"));

    let o = metacog(&["ablate", "--config", c, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let ablation = fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(ablation.lines().count(), 7);
}

#[test]
fn generate_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bench.jsonl");
    let o = metacog(&["generate", "--seed", "9", "--out", bench.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&bench).unwrap().lines().count(), 700);

    let out = dir.path().join("r");
    let o = metacog(&[
        "run", "--param", &format!("benchmark.path={}", bench.display()), "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(summary(&out)["total_tasks"], 700);
}

#[test]
fn exit_codes_by_error_category() {
    let o = metacog(&["run", "--param", "params.lambda=1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));

    assert_eq!(metacog(&["sweep", "--parameter", "theta", "--values", "0.5,2"]).status.code(), Some(2));
    assert_eq!(metacog(&["run", "--policy", "ablate", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(metacog(&["run", "--config", "/nonexistent.cfg"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.jsonl");
    fs::write(&log, "not json\n").unwrap();
    let o = metacog(&["report", "--log", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1"));

    assert_eq!(metacog(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn shipped_config_matches_defaults() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.cfg");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = metacog(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(metacog(&["run", "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(
        fs::read(a.join("decisions.jsonl")).unwrap(),
        fs::read(b.join("decisions.jsonl")).unwrap()
    );
}
