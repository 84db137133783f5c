//! End-to-end runs of the command-line binary.

use std::io::{BufRead, BufReader};
use std::process::{Command, Stdio};

use hardy_ot::harness::Transcript;
use hardy_ot::protocol::rng::session_id;
use hardy_ot::protocol::{run_session, HonestAlice, HonestBob, PartyReport, ProtocolConfig, SessionResult};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hardy-ot"));
    c.env_remove("HARDY_OT_SEED");
    c
}

fn stdout_of(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn sample_size_table() {
    let out = stdout_of(&["sample-size", "--eta", "1", "0.97", "0.5"]);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "eta,n_runs");
    assert_eq!(rows[1], "1,4428");
    assert_eq!(rows[2], "0.97,6856");
    assert!(rows[3].starts_with("0.5,infeasible"));
}

#[test]
fn hardy_test_prints_the_zero_cells() {
    let out = stdout_of(&["hardy-test"]);
    assert!(out.contains("q = 0.09016994"));
    assert_eq!(out.matches("0.00000000").count(), 3);
}

#[test]
fn figure1_is_monotone() {
    let out = stdout_of(&["figure1", "--n", "4428:1e8", "--steps", "20"]);
    let etas: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(etas.len(), 20);
    assert!(etas.windows(2).all(|w| w[1] <= w[0]));
    assert!(etas.iter().all(|&e| e > 0.847213 && e <= 1.0));
}

#[test]
fn exit_codes() {
    assert_eq!(bin().arg("no-such-command").output().unwrap().status.code(), Some(2));
    assert_eq!(
        bin().args(["simulate", "--frac-s2a", "1.5"]).output().unwrap().status.code(),
        Some(2)
    );
    let refused = bin()
        .args(["serve-bob", "--connect", "127.0.0.1:1", "--n-runs", "3000"])
        .output()
        .unwrap();
    assert_eq!(refused.status.code(), Some(3));
}

#[test]
fn seed_environment_variable_wins() {
    let args = ["simulate", "--sessions", "3", "--n-runs", "3000", "--seed", "1"];
    let from_env = bin().args(args).env("HARDY_OT_SEED", "9").output().unwrap();
    let from_flag = stdout_of(&["simulate", "--sessions", "3", "--n-runs", "3000", "--seed", "9"]);
    let plain = stdout_of(&args);
    let strip = |s: &str| s.lines().filter(|l| !l.contains("wall_clock")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&String::from_utf8(from_env.stdout).unwrap()), strip(&from_flag));
    assert_ne!(strip(&plain), strip(&from_flag));
}

#[test]
fn two_processes_match_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let common = ["--n-runs", "4000", "--seed", "12", "--bit", "1"];

    let mut alice = bin()
        .arg("serve-alice")
        .args(common)
        .args(["--listen", "127.0.0.1:0", "--transcript", &path("a.jsonl"), "--report", &path("a.json")])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(alice.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().rsplit(' ').next().unwrap().to_string();

    let bob = bin()
        .arg("serve-bob")
        .args(common)
        .args(["--connect", &addr, "--transcript", &path("b.jsonl"), "--report", &path("b.json")])
        .status()
        .unwrap();
    assert!(alice.wait().unwrap().success());
    assert!(bob.success());

    let cfg = ProtocolConfig { seed: 12, n_runs: 4000, bit: Some(1), ..Default::default() };
    let local = run_session(&cfg, Box::new(HonestAlice), Box::new(HonestBob)).unwrap();
    let ta = Transcript::load(dir.path().join("a.jsonl").as_path()).unwrap();
    let tb = Transcript::load(dir.path().join("b.jsonl").as_path()).unwrap();
    assert_eq!(ta.messages, local.transcript);
    assert_eq!(tb.messages, local.transcript);

    let read = |name: &str| -> PartyReport {
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap()
    };
    let merged = SessionResult::merge(&session_id(12), &read("a.json"), &read("b.json"));
    assert_eq!(merged, local.result);

    let replay = bin().args(["replay", &path("a.jsonl")]).output().unwrap();
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
}
