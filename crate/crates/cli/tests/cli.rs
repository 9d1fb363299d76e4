use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mac_consensus_cli::presets::preset;
use mac_consensus_cli::{parse_config, run_montecarlo};

const BIN: &str = env!("CARGO_BIN_EXE_mac-consensus");

const MINIMAL: &str = r#"
seed = 42
[topology]
kind = "complete"
n = 5
[channel]
law = { kind = "uniform", lo = 0.0, hi = 10.0 }
mode = "iid"
[protocol]
variant = "superposition"
sigma = 0.5
"#;

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_config(text: &str, out: &Path, extra: &[&str]) -> Output {
    let path = out.join("scenario.toml");
    fs::create_dir_all(out).unwrap();
    fs::write(&path, text).unwrap();
    let mut args = vec!["--config", path.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    cli(&args)
}

fn summary(dir: &Path) -> toml::Table {
    toml::from_str(&fs::read_to_string(dir.join("summary.toml")).unwrap()).unwrap()
}

fn result_f64(doc: &toml::Table, key: &str) -> f64 {
    doc["result"][key].as_float().unwrap_or_else(|| panic!("{key} missing"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_config_runs_with_defaults_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(MINIMAL, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty(), "--quiet prints nothing");
    let doc = summary(dir.path());
    assert_eq!(doc["config"]["run"]["tol"].as_float(), Some(1e-9));
    assert_eq!(doc["config"]["run"]["max_steps"].as_integer(), Some(10_000));
    assert_eq!(doc["result"]["termination"].as_str(), Some("converged"));
    assert!(doc["config"]["channel"]["seed"].as_integer().is_some());

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("step,agent,x"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..2], ["0", "1"]);
    // 17 significant digits
    let mantissa = first[2].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{}", first[2]);
}

#[test]
fn sigma_outside_unit_interval_is_rejected_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&MINIMAL.replace("sigma = 0.5", "sigma = 1.2"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0, 1)"), "{}", stderr(&o));
    assert!(!dir.path().join("trace.csv").exists());
    assert!(!dir.path().join("summary.toml").exists());
}

#[test]
fn chain_topology_is_rejected_for_superposition() {
    let chain = MINIMAL.replace(
        "kind = \"complete\"\nn = 5",
        "kind = \"custom\"\nn = 4\narcs = [[1, 2, 1.0], [2, 3, 1.0], [3, 4, 1.0]]",
    );
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&chain, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("strongly connected"), "{}", stderr(&o));
}

#[test]
fn all_problems_are_reported_together() {
    let bad = MINIMAL.replace("sigma = 0.5", "sigma = 0.0").replace("hi = 10.0", "hi = 0.0");
    let bad = format!("{bad}\n[run]\nmax_steps = 0\n");
    let o = run_config(&bad, tempfile::tempdir().unwrap().path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for field in ["protocol.sigma", "channel.law", "run.max_steps"] {
        assert!(err.contains(field), "{field} not named in: {err}");
    }
}

#[test]
fn time_invariant_presets_share_the_limit_and_differ_in_speed() {
    let root = tempfile::tempdir().unwrap();
    let mut docs = Vec::new();
    for name in ["ti-sigma02", "ti-sigma05"] {
        let out = root.path().join(name);
        let o = cli(&["--preset", name, "--out-dir", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let doc = summary(&out);
        let (x, pred) = (result_f64(&doc, "consensus_value"), result_f64(&doc, "predicted_value"));
        assert!((x - pred).abs() <= 1e-6, "{name}: x* = {x}, predicted {pred}");
        docs.push(doc);
    }
    let (a, b) = (&docs[0], &docs[1]);
    assert!((result_f64(a, "consensus_value") - result_f64(b, "consensus_value")).abs() <= 1e-8);
    assert!(b["result"]["steps"].as_integer() < a["result"]["steps"].as_integer());
}

#[test]
fn time_variant_presets_converge() {
    for name in ["tv-sigma05", "tv-complete-n30-sigma08"] {
        let out = tempfile::tempdir().unwrap();
        let o = cli(&["--preset", name, "--out-dir", out.path().to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let doc = summary(out.path());
        assert_eq!(doc["result"]["hull_respected"].as_bool(), Some(true));
    }
}

#[test]
fn naive_variant_fails_to_reach_consensus() {
    let text = MINIMAL.replace("variant = \"superposition\"\nsigma = 0.5", "variant = \"naive\"");
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&text, dir.path(), &[]);
    let doc = summary(dir.path());
    let hull = doc["result"]["hull_respected"].as_bool().unwrap();
    assert!(o.status.code() == Some(2) || !hull, "naive run converged inside the hull");
}

#[test]
fn step_limit_exits_with_two() {
    let text = format!("{MINIMAL}\n[run]\nmax_steps = 3\n");
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&text, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(summary(dir.path())["result"]["termination"].as_str(), Some("max-steps"));
}

#[test]
fn runs_must_be_at_least_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["--preset", "mc-complete-n10-sigma02", "--runs", "1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(cli(&[]).status.code(), Some(1));
    assert_eq!(cli(&["--preset", "ti-sigma02", "--bogus"]).status.code(), Some(1));
    assert_eq!(cli(&["--preset", "no-such-preset"]).status.code(), Some(1));
    assert_eq!(cli(&["--config", "/nonexistent/scenario.toml"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn io_failure_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = cli(&["--preset", "ti-sigma02", "--out-dir", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(blocker.to_str().unwrap()), "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    for d in [&a, &b] {
        let o = cli(&["--preset", "tv-sigma05", "--seed", "11", "--out-dir", d.to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(read(&a, "trace.csv"), read(&b, "trace.csv"));
    assert_eq!(read(&a, "summary.toml"), read(&b, "summary.toml"));

    let (c, d) = (root.path().join("c"), root.path().join("d"));
    for dir in [&c, &d] {
        let o = cli(&[
            "--preset",
            "mc-complete-n10-sigma08",
            "--runs",
            "50",
            "--out-dir",
            dir.to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(read(&c, "montecarlo_runs.csv"), read(&d, "montecarlo_runs.csv"));
    assert_eq!(read(&c, "montecarlo_summary.toml"), read(&d, "montecarlo_summary.toml"));
}

#[test]
fn seed_flag_changes_the_run() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    cli(&["--preset", "tv-sigma05", "--seed", "1", "--out-dir", a.to_str().unwrap(), "--quiet"]);
    cli(&["--preset", "tv-sigma05", "--seed", "2", "--out-dir", b.to_str().unwrap(), "--quiet"]);
    assert_ne!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
    assert_eq!(summary(&b)["config"]["seed"].as_integer(), Some(2));
}

#[test]
fn summary_is_a_rerunnable_config() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    cli(&["--preset", "tv-sigma05", "--seed", "5", "--out-dir", a.to_str().unwrap(), "--quiet"]);
    let o = cli(&["--config", a.join("summary.toml").to_str().unwrap(), "--out-dir", b.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
    assert_eq!(fs::read(a.join("summary.toml")).unwrap(), fs::read(b.join("summary.toml")).unwrap());
}

#[test]
fn monte_carlo_presets_order_by_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let std_of = |name: &str| {
        let cfg = parse_config(&preset(name).unwrap()).unwrap();
        let out = run_montecarlo(&cfg, 1000, &dir.path().join(name)).unwrap();
        assert_eq!(out.report.stats.non_converged, 0);
        out.report.stats.std_dev
    };
    let (low, high) = (std_of("mc-complete-n10-sigma02"), std_of("mc-complete-n10-sigma08"));
    assert!(low < high, "std at sigma 0.2 = {low}, at 0.8 = {high}");
}
