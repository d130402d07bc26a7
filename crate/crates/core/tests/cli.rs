use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_riskenv");

fn run(args: &[&str], model: Option<&Path>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args);
    if let Some(m) = model {
        c.arg("--model").arg(m);
    }
    c.output().expect("binary runs")
}

fn write_model(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("model.json");
    std::fs::write(&p, text).unwrap();
    p
}

const TWO_PERIOD: &str = r#"{
  "tree": {"binomial": {"steps": 2, "horizon": 1.0}},
  "payoffs": {"x": {"leaf_values": [-2.0, 1.0, -1.0, 1.0]}},
  "measures": {"var": {"type": "conditional_var", "lambda": 0.3}, "lin": {"type": "linear"}},
  "generators": {"abs": {"name": "abs", "kappa": 0.5}}
}"#;

#[test]
fn eval_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path(), TWO_PERIOD);
    let out = run(&["eval", "--format", "csv", "--t", "1"], Some(&m));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("measure,payoff,t,node,value"));
    assert!(text.contains("var,x,1,0,2\n"));
    assert!(text.contains("lin,x,1,1,-0\n") || text.contains("lin,x,1,1,0\n"));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path(), TWO_PERIOD);
    let out = run(&["consistency", "--measure", "var", "--grid-search"], Some(&m));
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    assert!(report["results"][0]["grid_witness"].is_object());
    assert_eq!(run(&["consistency", "--measure", "lin"], Some(&m)).status.code(), Some(0));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_model(dir.path(), r#"{"tree": {"binomial": {"steps": 2, "horizon": 1.0}}, "measures": {"v": {"type": "entropic"}}}"#);
    let out = run(&["eval"], Some(&bad));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measures.v"));
    let m = write_model(dir.path(), TWO_PERIOD);
    assert_eq!(run(&["eval", "--t", "7"], Some(&m)).status.code(), Some(2));
    assert_eq!(run(&["eval", "--measure", "nope"], Some(&m)).status.code(), Some(2));
    assert_eq!(run(&["eval"], None).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(
        dir.path(),
        r#"{"tree": {"binomial": {"steps": 1, "horizon": 1.0}},
            "payoffs": {"x": {"leaf_values": [0.0, -1e308]}},
            "measures": {"ent": {"type": "entropic", "gamma": 10.0}}}"#,
    );
    let out = run(&["eval"], Some(&m));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bsde_and_convergence_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(
        dir.path(),
        r#"{"tree": {"binomial": {"steps": 1, "horizon": 0.04}},
            "payoffs": {"xi": {"leaf_values": [1.0, -1.0]}, "sum": {"functional": "of_terminal_sum"}},
            "generators": {"abs": {"name": "abs", "kappa": 0.5}}}"#,
    );
    let out = run(&["bsde", "--payoff", "xi"], Some(&m));
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["results"][0]["value"][0].as_f64().unwrap() - 0.1).abs() < 1e-12);

    let csv = dir.path().join("conv.csv");
    let out = Command::new(BIN)
        .args(["convergence", "--payoff", "sum", "--n-list", "4,8,16", "--horizon", "1", "--csv"])
        .arg(&csv)
        .arg("--model")
        .arg(&m)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(csv).unwrap();
    assert!(table.contains("N,value,abs_error,ratio"));
    assert_eq!(table.lines().filter(|l| l.starts_with(['4', '8', '1'])).count(), 3);
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path(), TWO_PERIOD);
    let a = run(&["sensitivity", "--seed", "9", "--budget", "30"], Some(&m));
    let b = run(&["sensitivity", "--seed", "9", "--budget", "30"], Some(&m));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["sensitivity", "--seed", "10", "--budget", "30"], Some(&m));
    let digest = |o: &Output| serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["inputs_digest"].clone();
    assert_ne!(digest(&a), digest(&c));
}

#[test]
fn thread_setting_is_validated() {
    let out = Command::new(BIN).arg("--selftest").env("RISKENV_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(BIN).args(["--selftest", "--format", "csv"]).env("RISKENV_THREADS", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("id,passed\n"));
}
