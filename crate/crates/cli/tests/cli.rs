use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_junta-lab"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.txt"),
        "n = 10\nalpha = 0.75\nepsilon = 1\nmode = desk_scale\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("small.txt"),
        "n = 10\nalpha = 0.75\nepsilon = 0.05\nmode = desk_scale\n",
    )
    .unwrap();
    dir
}

#[test]
fn gen_then_dist_round_trip() {
    let dir = setup();
    let out = run(dir.path(), &["--params", "p.txt", "--seed", "5", "gen", "--dist", "yes", "--emit-table", "t.txt"]);
    assert_eq!(out.status.code(), Some(0));
    let g = json(&out);
    let support: Vec<u64> = serde_json::from_value(g["support"].clone()).unwrap();
    let relevant: Vec<u64> = serde_json::from_value(g["relevant"].clone()).unwrap();
    assert!(relevant.iter().all(|r| support.contains(r)));

    let k = support.len().to_string();
    let out = run(dir.path(), &["dist", "--table", "t.txt", "--k", &k]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["distance"], serde_json::json!(0.0));
}

#[test]
fn gen_is_reproducible() {
    let dir = setup();
    let args = ["--params", "p.txt", "--seed", "9", "gen", "--dist", "no"];
    assert_eq!(run(dir.path(), &args).stdout, run(dir.path(), &args).stdout);
}

#[test]
fn sparse_tables_for_d1_and_d2() {
    let dir = setup();
    for d in ["d1", "d2"] {
        let out = run(dir.path(), &["--params", "small.txt", "gen", "--dist", d]);
        assert_eq!(out.status.code(), Some(0), "{d}");
        assert!(json(&out)["ones"].as_u64().is_some());
    }
}

#[test]
fn game_modes_report_advantage_and_interval() {
    let dir = setup();
    std::fs::write(dir.path().join("e.json"), r#"{"ell":[0,0,0,0,0,0,0,0]}"#).unwrap();
    std::fs::write(dir.path().join("s.json"), r#"{"T":[[1,2],[2,3,4]]}"#).unwrap();
    std::fs::write(dir.path().join("x.json"), r#"{"X":["0000000000","1111111111"],"decider":"always_yes"}"#).unwrap();
    for (mode, plan, cost) in [("sseq", "e.json", 0), ("sssq", "s.json", 5), ("strings", "x.json", 2)] {
        let out = run(dir.path(), &["--params", "p.txt", "--trials", "400", "game", "--mode", mode, "--plan", plan]);
        assert_eq!(out.status.code(), Some(0), "{mode}");
        let v = json(&out);
        let adv = v["advantage"].as_f64().unwrap();
        assert!(v["ci_low"].as_f64().unwrap() <= adv && adv <= v["ci_high"].as_f64().unwrap());
        assert_eq!(v["trials"], serde_json::json!(400));
        assert_eq!(v["cost"], serde_json::json!(cost));
        if mode != "sssq" {
            // Empty plan and constant decider cannot distinguish.
            assert_eq!(adv, 0.0, "{mode}");
        }
    }
}

#[test]
fn dtv_subcommand() {
    let dir = setup();
    let out = run(dir.path(), &["dtv", "--c", "1", "--p", "0.5", "--q", "0.75", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["dtv"], serde_json::json!(0.25));
    assert!(v["tau"].as_f64().is_some());
}

#[test]
fn verify_writes_identical_outputs() {
    let dir = setup();
    std::fs::write(
        dir.path().join("cfg.txt"),
        "n = 12\nalpha = 0.75\nepsilon = 1\nmode = desk_scale\nexperiment = claim53\nmax_m = 2\n",
    )
    .unwrap();
    let out = run(dir.path(), &["--out", "a.csv", "verify", "--config", "cfg.txt"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("a.csv")).unwrap();
    let summary = std::fs::read(dir.path().join("a.csv.json")).unwrap();
    let out = run(dir.path(), &["--out", "a.csv", "verify", "--config", "cfg.txt"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("a.csv")).unwrap());
    assert_eq!(summary, std::fs::read(dir.path().join("a.csv.json")).unwrap());
}

#[test]
fn curve_starts_at_zero() {
    let dir = setup();
    let out = run(dir.path(), &["--params", "p.txt", "--out", "c.csv", "curve", "--budgets", "0,8,16,32"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("budget,advantage,method"));
    assert_eq!(lines.next(), Some("0,0,exact"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn failing_assertion_exits_one() {
    let dir = setup();
    // With a huge query budget the sparse game is easy and the advantage bound fails.
    let out = run(
        dir.path(),
        &["--params", "small.txt", "--trials", "200", "--out", "g.csv", "verify", "--experiment", "game", "--set", "queries=4000"],
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["passed"], serde_json::json!(false));
}

#[test]
fn usage_errors_exit_two() {
    let dir = setup();
    for args in [
        vec!["--params", "p.txt", "verify", "--experiment", "nope"],
        vec!["gen", "--dist", "yes"],
        vec!["--params", "p.txt", "gen", "--dist", "maybe"],
        vec!["--params", "missing.txt", "gen", "--dist", "yes"],
        vec!["frobnicate"],
        vec!["--params", "p.txt", "gen", "--dist", "d1"],
    ] {
        assert_eq!(run(dir.path(), &args).status.code(), Some(2), "{args:?}");
    }
}
