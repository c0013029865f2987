use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = r#"
[construction]
p = "1/4"
epsilons = ["3/10", "3/20"]
set_family = ["0", "1"]
reductions = ["x", "x / 2"]
stages = 2
n_horizon = 64
"#;

fn mgamma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgamma")).args(args).output().unwrap()
}

fn run_in(dir: &Path, command: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("experiment.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mgamma(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_construct_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "construct", MINIMAL, &["--raw"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["prefix.gma", "prefix.bits", "ledger.jsonl", "report.json", "report.txt", "config.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let ledger = fs::read_to_string(out.join("ledger.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 2);
    let raw = fs::read_to_string(out.join("prefix.bits")).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(raw.trim_end().len() as u64, report["prefix_length"].as_u64().unwrap());
    assert!(fs::read(out.join("prefix.gma")).unwrap().starts_with(b"GMA1"));
}

#[test]
fn non_decreasing_epsilons_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = MINIMAL.replace(r#"["3/10", "3/20"]"#, r#"["3/20", "3/10"]"#);
    let o = run_in(dir.path(), "construct", &bad, &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("decreasing"), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "construct", "[construction]\np = \n", &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let o = run_in(dir.path(), "construct", &MINIMAL.replace("\"x / 2\"", "\"x / \""), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("column"), "{}", stderr(&o));
}

#[test]
fn reference_config_matches_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.toml");
    let o = mgamma(&["construct", "--config", cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let golden = include_str!("golden/reference_report.json");
    assert_eq!(fs::read_to_string(out.join("report.json")).unwrap(), golden);
}

#[test]
fn verify_is_idempotent_and_catches_tampering() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), "construct", MINIMAL, &[])), 0);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let first = mgamma(&["verify", "--out", out_s]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let text = fs::read_to_string(out.join("verify.txt")).unwrap();
    assert!(text.contains("embedded report: identical"));
    let second = mgamma(&["verify", "--out", out_s]);
    assert_eq!(code(&second), 0);
    assert_eq!(fs::read_to_string(out.join("verify.txt")).unwrap(), text);
    assert_eq!(first.stdout, second.stdout);

    let prefix = mgamma::bitfile::load(&out.join("prefix.gma")).unwrap();
    let ledger = mgamma::harness::read_ledger(&out.join("ledger.jsonl")).unwrap();
    let mut tampered = prefix.clone();
    tampered.flip(ledger[0].s[0]);
    mgamma::bitfile::save(&out.join("prefix.gma"), &tampered).unwrap();
    let o = mgamma(&["verify", "--out", out_s]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_without_artifacts_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mgamma(&["verify", "--out", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn oversized_halfbound_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "halfbound", "[halfbound]\nn_max = 12\n", &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn halfbound_recovers_every_source() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "halfbound", "[halfbound]\nn_max = 5\ntrials = 20\n", &["--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/halfbound.json")).unwrap()).unwrap();
    assert_eq!(report["recovered"], 20);
    assert_eq!(report["seed"], 3);
}

#[test]
fn small_hypergrid_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "hypergrid", "[hypergrid]\nmax_population = 8\nq_steps = 4\n", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/hypergrid.csv")).unwrap();
    assert!(csv.starts_with("K,N,n,q,exact_tail_num,exact_tail_den,hoeffding_upper\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn gamma_on_a_fixed_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[gamma]\ntarget = \"x % 2\"\napproximators = [\"0\", \"1\"]\nlength = 200\n";
    let o = run_in(dir.path(), "gamma", cfg, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/gamma.csv")).unwrap();
    assert!(csv.starts_with("series,checkpoint,numerator,denominator\n"));
}

#[test]
fn cli_overrides_reach_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "construct", MINIMAL, &["--stages", "1", "--seed", "99", "--horizon", "40"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let resolved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/config.json")).unwrap()).unwrap();
    assert_eq!(resolved["stages"], 1);
    assert_eq!(resolved["seed"], 99);
    assert_eq!(resolved["n_horizon"], 40);
}
