use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-hedge"))
}

fn run(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["--version"]), 0);
    assert_eq!(run(&["simulate", "--help"]), 0);
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(run(&[]), 1);
    assert_eq!(run(&["hedge"]), 1);
    assert_eq!(run(&["simulate", "--seed", "minus-one"]), 1);
    assert_eq!(run(&["price", "--config", "/nonexistent/run.toml", "--out", out]), 1);
    let cfg = write_config(dir.path(), "[model]\nsgima = 0.2\n");
    let o = bin().args(["price", "--config", &cfg, "--out", out]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.sgima"));
    let cfg = write_config(dir.path(), "[run]\npaths = 0\n");
    assert_eq!(run(&["simulate", "--config", &cfg, "--out", out]), 1);
    let cfg = write_config(
        dir.path(),
        "[payoff]\nkind = \"piecewise_linear\"\nknots = [[100.0, 0.0]]\nleft_slope = 0.0\nright_slope = -1.0\n[strategy]\nalpha = 1.5\n",
    );
    let o = bin().args(["simulate", "--config", &cfg, "--out", out]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha > 2"));
}

#[test]
fn coarse_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\npaths = 3\n[grid]\nsteps = 100\n");
    let out = dir.path().join("o");
    assert_eq!(run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]), 2);
    assert!(out.join("simulate.csv").exists());
}

#[test]
fn outputs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[run]\npaths = 16\nkappa_ladder = [0.04]\n[grid]\nsteps_per_unit_time = 4000\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let code = run(&["converge", "--config", &cfg, "--seed", "11", "--threads", threads, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let csv = "converge_kappa_0p04.csv";
    assert_eq!(fs::read(a.join(csv)).unwrap(), fs::read(b.join(csv)).unwrap());
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(p.join("converge.json")).unwrap()).unwrap();
        v["config"]["output"]["dir"] = serde_json::Value::Null;
        v
    };
    let (ja, jb) = (strip(&a), strip(&b));
    assert_eq!(ja, jb);
    assert_eq!(ja["config"]["run"]["master_seed"], 11);
    assert_eq!(ja["config"]["model"]["dynamics"]["sigma"], 0.2);
    assert!(ja["summary"]["report"]["cells"][0]["var_ratio_interval"].is_array());
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(a.join("converge.meta.json")).unwrap()).unwrap();
    assert!(meta["created_unix_secs"].as_u64().unwrap() > 0);
    assert!(!String::from_utf8(fs::read(a.join("converge.json")).unwrap()).unwrap().contains("created"));
}

#[test]
fn price_and_greeks_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[payoff]\nkind = \"put\"\nstrike = 95.0\n[pricing]\nmethod = \"quadrature\"\n");
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["price", "--config", &cfg, "--out", out]), 0);
    assert_eq!(run(&["greeks", "--config", &cfg, "--out", out]), 0);
    let greeks = fs::read_to_string(Path::new(out).join("greeks.csv")).unwrap();
    let mut lines = greeks.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 12);
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(row[4] < 0.0 && row[5] > 0.0);
}
