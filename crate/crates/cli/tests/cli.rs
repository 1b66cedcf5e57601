use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_approachlab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("approachlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("APPROACHLAB_THREADS", "2").output().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn zero_stages_gives_an_empty_series() {
    let dir = scratch("empty");
    let cfg = write_config(&dir, r#"{"suite": "regret", "trials": 1, "n": 0}"#);
    let out = dir.join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("metric.csv")).unwrap(), "stage,mean,std,max\n");
    assert!(summary(&out)["final"].is_null());
}

#[test]
fn regret_defaults_report_sqrt_a_over_n() {
    let dir = scratch("regret");
    let cfg = write_config(&dir, r#"{"suite": "regret"}"#);
    let out = dir.join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--n", "400", "--trials", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["player"], "regret-matching");
    assert_eq!(s["bound_formula"], "sqrt(A/n)");
    assert!((s["bound"].as_f64().unwrap() - (3.0f64 / 400.0).sqrt()).abs() < 1e-12);
    let mean = s["final"]["mean"].as_f64().unwrap();
    assert!(mean > 0.0 && mean <= s["bound"].as_f64().unwrap());
    let csv = fs::read_to_string(out.join("metric.csv")).unwrap();
    assert_eq!(csv.lines().count(), 401);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 400.0);
    assert_eq!(last[1], mean);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = scratch("rerun");
    let cfg = write_config(
        &dir,
        r#"{"suite": "approachability",
            "game": {"rows": 2, "cols": 2, "dim": 2, "payoffs": [1, 0, 0, 1, 0, 1, 1, 0]},
            "target": {"kind": "ball", "center": [0.5, 0.5], "radius": 0.05},
            "nature": {"kind": "uniform"}, "n": 300, "trials": 5, "seed": 9}"#,
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.join(format!("out{threads}"));
        let o = bin()
            .args(["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("APPROACHLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outputs.push(["metric.csv", "transcript.csv", "transcript.json", "summary.json"].map(|f| fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn unapproachable_target_exits_two() {
    let dir = scratch("violated");
    let cfg = write_config(
        &dir,
        r#"{"suite": "approachability", "game": {"rows": 2, "cols": 2, "payoffs": [1, 0, 0, 1]},
            "target": {"kind": "singleton", "point": [0.9]}, "n": 200, "trials": 4}"#,
    );
    let out = dir.join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(summary(&out)["pass"], false);
}

#[test]
fn invalid_configs_exit_one() {
    let dir = scratch("invalid");
    for json in [
        r#"{"suite": "regret", "colour": "blue"}"#,
        r#"{"suite": "approachability"}"#,
        r#"{"suite": "regret", "player": {"algorithm": "potential-linf"}}"#,
        r#"{"suite": "regret", "nature": {"kind": "fixed", "action": 3}}"#,
        r#"{"suite": "calibration", "grid": {"outcomes": 2, "resolution": 4, "extra": 1}}"#,
        "not json",
    ] {
        let cfg = write_config(&dir, json);
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{json}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"), "{json}");
    }
    let o = run(&["simulate", "--config", dir.join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn game_file_resolves_next_to_config() {
    let dir = scratch("gamefile");
    fs::write(dir.join("pennies.json"), r#"{"rows": 2, "cols": 2, "payoffs": [1, 0, 0, 1]}"#).unwrap();
    let cfg = write_config(&dir, r#"{"suite": "regret", "game": {"path": "pennies.json"}, "n": 50, "trials": 2}"#);
    let out = dir.join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!((summary(&out)["bound"].as_f64().unwrap() - (2.0f64 / 50.0).sqrt()).abs() < 1e-12);
}

#[test]
fn verify_lln_writes_a_report() {
    let dir = scratch("verify");
    let o = run(&["verify", "lln", "--trials", "400", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["suite"], "lln");
    assert_eq!(report["pass"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty() && checks.iter().all(|c| c["criterion"] == 1));
    let on_disk: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("verify-lln.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report);
}

#[test]
fn unknown_names_exit_one() {
    assert_eq!(run(&["verify", "everything"]).status.code(), Some(1));
    assert_eq!(run(&["demo", "everything"]).status.code(), Some(1));
    assert_eq!(run(&["launch"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--config", "x.json", "--trials", "many"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn last_number(line: &str) -> f64 {
    line.split(|c: char| c.is_whitespace() || c == '=' || c == ':').filter_map(|w| w.parse().ok()).last().unwrap()
}

#[test]
fn demo_weak_approach_reaches_the_target() {
    let o = run(&["demo", "weak-approach", "--n", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let headline = text.lines().find(|l| l.starts_with("terminal distance:")).unwrap();
    let d: f64 = headline.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(d <= 0.01, "{text}");
}

#[test]
fn demo_oakes_dawid_defeats_the_deterministic_forecaster() {
    let o = run(&["demo", "oakes-dawid"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(last_number(text.trim()) >= 0.05, "{text}");
}

#[test]
fn demo_foster_prints_the_trajectory_to_ten_thousand() {
    let o = run(&["demo", "foster", "--eps", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.contains("n =  10000"), "{text}");
    let nums: Vec<f64> = last.split_whitespace().filter_map(|w| w.parse().ok()).collect();
    assert_eq!(nums.len(), 3);
    assert!(nums[1] <= 0.05 && nums[2] <= 0.05, "{text}");
}

#[test]
fn summaries_match_the_published_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../summary.schema.json")).unwrap();
    let props = schema["properties"].as_object().unwrap();
    let dir = scratch("schema");
    for (i, json) in [
        r#"{"suite": "regret", "player": {"algorithm": "exp-weights"}, "n": 30, "trials": 2}"#,
        r#"{"suite": "calibration", "nature": {"kind": "iid", "probs": [0.3, 0.7]}, "n": 30, "trials": 2}"#,
        r#"{"suite": "approachability", "game": {"rows": 2, "cols": 2, "dim": 2, "payoffs": [1, 0, 0, 1, 0, 1, 1, 0]},
            "target": {"kind": "box", "lower": [0.4, 0.4], "upper": [0.6, 0.6]},
            "player": {"algorithm": "potential-linf"}, "n": 30, "trials": 2}"#,
    ]
    .into_iter()
    .enumerate()
    {
        let cfg = write_config(&dir, json);
        let out = dir.join(format!("out{i}"));
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let s = summary(&out);
        let keys: Vec<&String> = s.as_object().unwrap().keys().collect();
        let mut required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|k| k.as_str().unwrap()).collect();
        required.sort_unstable();
        assert_eq!(keys, required);
        for field in ["suite", "player", "nature", "metric"] {
            assert!(props[field]["enum"].as_array().unwrap().contains(&s[field]), "{field} = {}", s[field]);
        }
        let fin = s["final"].as_object().unwrap();
        assert_eq!(fin.len(), 3);
        assert!(["mean", "std", "max"].iter().all(|k| fin[*k].is_f64()));
    }
}
