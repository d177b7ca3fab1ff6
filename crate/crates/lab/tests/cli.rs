use std::path::{Path, PathBuf};
use std::process::Command;

use ergokit_lab::cli::run;

fn cfg(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).to_string_lossy().into_owned()
}

fn small_suite(dir: &Path, suites: &str, ramp: f64) -> PathBuf {
    let text = format!(
        "experiment = \"suite\"\nseed = 5\nout = \"{}\"\n[system]\nkind = \"doubling\"\n[measure]\nkind = \"uniform-empirical\"\nlength = 8\n\
         [suite]\nsuites = [{suites}]\nmollifier_cases = 300\nbeta_gamma_cases = 20\ncover_cases = 20\neta_theta_cases = 20\n\
         q_monotone_cases = 10\nperiodic_cases = 6\nmollifier_ramp = {ramp:?}\n",
        dir.join("out").display()
    );
    let p = dir.join("suite.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn summary(dir: &Path, exp: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("out").join(exp).join("fixed").join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(run(["ergokit", "bogus"]), 1);
    assert_eq!(run(["ergokit"]), 1);
    assert_eq!(run(["ergokit", "--help"]), 0);
    assert_eq!(run(["ergokit", "--version"]), 0);
    assert_eq!(run(["ergokit", "entropy"]), 1);
    assert_eq!(run(["ergokit", "suite", "--format", "xml"]), 1);
    assert_eq!(run(["ergokit", "suite", "--config", "/definitely/missing.toml"]), 1);
    assert_eq!(run(["ergokit", "suite", "--seed", "9223372036854775808"]), 1);
}

#[test]
fn suite_writes_artifacts_and_counts() {
    let d = tempfile::tempdir().unwrap();
    let all = "\"mollifier\", \"beta-gamma\", \"cover-chain\", \"eta-theta\", \"q-monotone\", \"periodic-zero\"";
    let p = small_suite(d.path(), all, 1.0);
    assert_eq!(run(["ergokit", "suite", "--config", p.to_str().unwrap()]), 0);
    let s = summary(d.path(), "suite");
    assert_eq!(s["summary"]["total_failed"], 0);
    for t in s["tables"].as_array().unwrap() {
        let f = d.path().join("out/suite/fixed").join(t.as_str().unwrap());
        assert!(std::fs::metadata(&f).unwrap().len() > 0, "{}", f.display());
    }
}

#[test]
fn halved_ramp_is_caught() {
    let d = tempfile::tempdir().unwrap();
    let p = small_suite(d.path(), "\"mollifier\"", 0.5);
    assert_eq!(run(["ergokit", "suite", "--config", p.to_str().unwrap()]), 0);
    let s = summary(d.path(), "suite");
    let failed = s["summary"]["total_failed"].as_u64().unwrap();
    assert!(failed > 0);
    let dumps = s["summary"]["failures"]["mollifier"].as_array().unwrap();
    assert!(!dumps.is_empty() && dumps.len() as u64 <= failed.min(20));
    let o = &dumps[0]["observed"];
    assert!(o["mollified"].as_f64().unwrap() > o["double_ball"].as_f64().unwrap() || o["mollified"].as_f64() < o["ball"].as_f64());
}

#[test]
fn empty_selection_is_success() {
    let d = tempfile::tempdir().unwrap();
    let p = small_suite(d.path(), "", 1.0);
    assert_eq!(run(["ergokit", "suite", "--config", p.to_str().unwrap()]), 0);
    let s = summary(d.path(), "suite");
    assert_eq!(s["summary"]["suites"].as_array().unwrap().len(), 0);
    let csv = std::fs::read_to_string(d.path().join("out/suite/fixed/suites.csv")).unwrap();
    assert_eq!(csv, "suite,cases,passed,failed\n");
}

#[test]
fn unknown_suite_is_config_error() {
    let d = tempfile::tempdir().unwrap();
    let p = small_suite(d.path(), "\"nope\"", 1.0);
    assert_eq!(run(["ergokit", "suite", "--config", p.to_str().unwrap()]), 1);
}

#[test]
fn spectrum_csv_on_stdout() {
    let d = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ergokit"))
        .args(["entropy", "spectrum", "--config", &cfg("bernoulli_q.toml"), "--format", "csv", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("q,H_lower,H_upper,converged\n"), "{text}");
    assert_eq!(text.lines().count(), 8);
    let file = std::fs::read_to_string(d.path().join("entropy-spectrum/fixed/spectrum.csv")).unwrap();
    assert_eq!(file, text);
}

#[test]
fn binary_exit_codes() {
    let st = Command::new(env!("CARGO_BIN_EXE_ergokit")).arg("frobnicate").output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("Usage"));
}

#[test]
fn numerical_failure_exits_two() {
    // approx on a non-shift system is a config error; a non-dyadic spectrum
    // radius is an unsupported numerical query
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.toml");
    std::fs::write(
        &p,
        "experiment = \"entropy-spectrum\"\nseed = 0\nout = \"o\"\n[system]\nkind = \"shift\"\nalphabet = 2\nsided = \"one\"\n\
         [measure]\nkind = \"bernoulli\"\np = [0.5, 0.5]\n[grid]\nepsilons = [0.3, 0.2]\nn_min = 1\nn_max = 6\ns = 2\nq_values = [2.0]\n",
    )
    .unwrap();
    let out = d.path().join("o");
    assert_eq!(run(["ergokit", "entropy", "spectrum", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    let q = d.path().join("q.toml");
    std::fs::write(&q, std::fs::read_to_string(cfg("approx.toml")).unwrap().replace("kind = \"shift\"\nalphabet = 2\nsided = \"one\"", "kind = \"doubling\"")).unwrap();
    assert_eq!(run(["ergokit", "approx", "--config", q.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
}

#[test]
fn strict_promotes_non_convergence() {
    // local dimensions on a short empirical orbit do not settle across the ladder
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("nc.toml");
    std::fs::write(
        &p,
        "experiment = \"dimension\"\nseed = 0\nout = \"o\"\n[system]\nkind = \"doubling\"\n[measure]\nkind = \"uniform-empirical\"\nlength = 64\n\
         [sample]\npoints = 16\n",
    )
    .unwrap();
    let out = d.path().join("o");
    let args = ["ergokit", "dimension", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(run(args), 0);
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("dimension/fixed/summary.json")).unwrap()).unwrap();
    assert_eq!(s["converged"], false);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(strict), 2);
}

#[test]
fn plot_subcommand() {
    let d = tempfile::tempdir().unwrap();
    let csv = d.path().join("t.csv");
    std::fs::write(&csv, "x,y,g\n1,2,a\n2,4,a\n3,9,b\n").unwrap();
    assert_eq!(run(["ergokit", "plot", csv.to_str().unwrap(), "--x", "x", "--y", "y", "--group", "g", "--log-y"]), 0);
    let svg = std::fs::read_to_string(d.path().join("t.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 3);
    assert_eq!(run(["ergokit", "plot", csv.to_str().unwrap(), "--x", "x", "--y", "zz"]), 1);
}
