use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn teamform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamform"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = teamform(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_oracle_run_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.txt");
    let witness = dir.path().join("best.txt");
    let fin = dir.path().join("final.txt");
    ok(&["gen", "random", "--n", "6", "--m", "14", "--rho", "0.4", "--seed", "9", "--out", path(&net)]);

    let oracle = ok(&["oracle", "--network", path(&net), "--out", path(&witness)]);
    let d_star: usize = oracle
        .lines()
        .find_map(|l| l.strip_prefix("d_star "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(fs::read_to_string(&witness).unwrap().contains("match "));

    let csv = ok(&["run", "--network", path(&net), "--seed", "4", "--final-matching", path(&fin)]);
    assert_eq!(csv.lines().next().unwrap(), "round,deficit,poor_leaders,matched_followers");
    assert!(csv.trim_end().ends_with("rng=chacha8"));
    assert_eq!(csv, ok(&["run", "--network", path(&net), "--seed", "4"]));

    // Starting from the oracle witness never makes the deficit worse.
    let from_best = ok(&["run", "--network", path(&net), "--matching", path(&witness), "--stop", "fixed", "--max-rounds", "20"]);
    for line in from_best.lines().skip(1).filter(|l| !l.starts_with('#')) {
        let deficit: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(deficit, d_star);
    }
}

#[test]
fn approx_stop_rule() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("g.txt");
    ok(&["gen", "counterexample", "--n", "8", "--out", path(&net)]);
    let csv = ok(&["run", "--network", path(&net), "--stop", "approx", "--eps", "0.5", "--seed", "2"]);
    let last = csv.lines().filter(|l| !l.starts_with('#')).last().unwrap();
    let deficit: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(deficit < 4.0);
    assert!(csv.contains("stop_reason=rule_satisfied"));
}

#[test]
fn fig4_with_overrides_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4.csv");
    let svg = dir.path().join("fig4.svg");
    ok(&[
        "fig4", "--n", "4..8:2", "--runs", "4", "--seed", "7", "--out", path(&out), "--chart", path(&svg),
    ]);
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 3);
    assert!(csv.contains("seed=7"));
    assert!(fs::read_to_string(&svg).unwrap().contains("Rounds (log-scale)"));

    let again = ok(&["chart", "--input", path(&out), "--kind", "lines"]);
    assert!(again.starts_with("<svg"));
}

#[test]
fn fig5_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig5.conf");
    fs::write(&cfg, "# small sweep\npairs = 8x16\nrho = 0.3\neps = 0.9, 0.5\nnetworks = 2\nruns = 2\n").unwrap();
    let csv = ok(&["fig5", "--config", path(&cfg), "--seed", "3"]);
    assert_eq!(csv.lines().next().unwrap(), "n,m,eps,mean_rounds,replications");
    assert!(csv.contains("\n8,16,0.9,"));
    assert!(csv.contains("\n8,16,0.5,"));
}

#[test]
fn count_table() {
    let out = ok(&["count", "--n", "5", "--gamma", "0.4"]);
    assert!(out.contains("\n2,6\n"));
    assert!(out.contains("# total 31"));
    assert!(out.contains("low_height_fraction"));
}

#[test]
fn tree_samples() {
    let out = ok(&["tree", "--m", "4", "--walks", "5", "--seed", "11"]);
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert_eq!(out, ok(&["tree", "--m", "4", "--walks", "5", "--seed", "11"]));
}

#[test]
fn verify_suite_and_instance() {
    let out = ok(&["verify", "--suite", "height_counts", "--seed", "5"]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["suites"][0]["name"], "height_counts");

    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.txt");
    ok(&["gen", "planted", "--n", "4", "--m", "10", "--max-degree", "3", "--seed", "1", "--out", path(&net)]);
    let inst: serde_json::Value = serde_json::from_str(&ok(&["verify", "--network", path(&net)])).unwrap();
    assert_eq!(inst["passed"], true);
}

#[test]
fn bad_input_is_an_error() {
    let out = teamform(&["verify", "--suite", "no_such_suite"]);
    assert!(!out.status.success());
    let out = teamform(&["run", "--network", "/nonexistent/net.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let out = teamform(&["gen", "random", "--n", "3"]);
    assert!(!out.status.success());
}
