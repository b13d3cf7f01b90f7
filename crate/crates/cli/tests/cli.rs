use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn nplcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nplcs")).args(args).output().expect("binary runs")
}

fn fixture(dir: &Path, name: &str, params: &[&str]) -> PathBuf {
    let mut args = vec!["fixtures", name];
    args.extend(params);
    let out = nplcs(&args);
    assert!(out.status.success());
    let path = dir.join(format!("{name}.lcs"));
    std::fs::write(&path, &out.stdout).unwrap();
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let run6 = fixture(dir.path(), "run6", &[]);
    let m = run6.to_str().unwrap();

    let out = nplcs(&["check", m, "BUCHI{=1}[all] from 1 {6}"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["answer"], "Yes");

    let out = nplcs(&["check", m, "BUCHI{>0}[all] from 1 {6}"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["citation"].as_str().unwrap().starts_with("undecidable"));

    let out = nplcs(&["check", m, "EV{=1}[fm] from 1 {3}"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["witness_id"].is_string());

    let out = nplcs(&["check", m, "EV{=1}[fm] from 4 {3}"]);
    assert_eq!(out.status.code(), Some(1));

    for bad in ["EV{=2}[fm] from 1 {3}", "EV{=1}[fm] from 9 {3}", "WHEN{=1} from 1 {3}"] {
        let out = nplcs(&["check", m, bad]);
        assert_eq!(out.status.code(), Some(3), "{bad}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(nplcs(&["check", "/nonexistent.lcs", "EV{=1} from 1 {3}"]).status.code(), Some(3));
    assert_eq!(nplcs(&["check"]).status.code(), Some(3));
}

#[test]
fn check_output_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run6 = fixture(dir.path(), "run6", &[]);
    let m = run6.to_str().unwrap();
    let a = nplcs(&["check", m, "STREETT-FM{=1}[fm] from 1 ({6},{})"]);
    let b = nplcs(&["check", m, "STREETT-FM{=1}[fm] from 1 ({6},{})"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    for key in ["answer", "threshold", "scheduler_class", "certificate", "citation"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn omega_query_reads_automaton() {
    let dir = tempfile::tempdir().unwrap();
    let run6 = fixture(dir.path(), "run6", &[]);
    let mut dsa = String::from("dsa\nstates miss hit\ninitial miss\n");
    for z in ["miss", "hit"] {
        for l in 1..=6 {
            dsa.push_str(&format!("trans {z} --{l}--> {}\n", if l == 6 { "hit" } else { "miss" }));
        }
    }
    dsa.push_str("pair A={miss,hit} B={hit}\n");
    std::fs::write(dir.path().join("inf6.dsa"), dsa).unwrap();
    let m = run6.to_str().unwrap();
    let out = nplcs(&["check", m, "OMEGA-FM{=1}[fm] from 1 dsa=inf6.dsa"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = nplcs(&["check", m, "OMEGA-FM{=1}[fm] from 3 dsa=inf6.dsa"]);
    assert_eq!(out.status.code(), Some(1));
    let out = nplcs(&["check", m, "OMEGA{=1}[all] from 1 dsa=inf6.dsa"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let run6 = fixture(dir.path(), "run6", &[]);
    let m = run6.to_str().unwrap();

    let out = nplcs(&["synth", m, "safe", "{1,2,3}"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["recovery"].as_array().unwrap().len(), 3);

    let out = nplcs(&["synth", m, "roundrobin", "{2};{6}"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("core is empty"));

    let sched = dir.path().join("s6.sched.json");
    let out = nplcs(&["synth", m, "stubborn", "{6}", "--out", sched.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(json(&out)["id"].as_str().unwrap().starts_with("stubborn-"));

    let args = ["simulate", m, "--scheduler", sched.to_str().unwrap(), "--start", "4", "--event", "reach {6}", "--trials", "500", "--seed", "11"];
    let a = nplcs(&args);
    let b = nplcs(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(json(&a)["point"].as_f64().unwrap() > 0.99);

    let out = nplcs(&["simulate", m, "--scheduler", "safe:{4,5}", "--start", "4", "--event", "stay {4,5}", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn gadget_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let g = fixture(dir.path(), "gadget", &["a,b"]);
    let m = g.to_str().unwrap();
    let out = nplcs(&["simulate", m, "--scheduler", "stubborn:{out}", "--start", "in : \"abba\"", "--event", "reach {out}", "--trials", "10000", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["point"].as_f64().unwrap() >= 0.99);
    let out = nplcs(&["simulate", m, "--scheduler", "stubborn:{out}", "--start", "in : \"abba\"", "--event", "reach-nonempty {out}", "--trials", "2000", "--horizon", "200"]);
    assert_eq!(json(&out)["successes"], 0);
}

#[test]
fn fixtures_and_info() {
    let out = nplcs(&["fixtures", "run6"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("rule ")).count(), 12);
    let out = nplcs(&["fixtures", "gadget", "a,b"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("messages $ a b"));
    assert_eq!(nplcs(&["fixtures", "gadget"]).status.code(), Some(3));
    assert_eq!(nplcs(&["fixtures", "fig9"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let run6 = fixture(dir.path(), "run6", &[]);
    let v = json(&nplcs(&["info", run6.to_str().unwrap()]));
    assert_eq!(v["rules"], 12);
    assert_eq!(v["fault_rate"], "1/2");
}

#[test]
fn model_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.lcs");
    std::fs::write(&path, "lcs\nchannels c\nmessages a\nlocations p\nrule p -> p : c ! a\nrule p -> q ; nop\n").unwrap();
    let out = nplcs(&["info", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));
}
