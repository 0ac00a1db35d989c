//! Exit codes and outputs of the command-line tool.

use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn waiterplan(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waiterplan")).arg("--quiet").args(args).output().expect("run waiterplan")
}

macro_rules! run {
    ($($a:expr),* $(,)?) => { waiterplan(&[$(std::ffi::OsStr::new(&$a)),*]) };
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn plan_and_verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("scripted.log");
    let scn = scenario("scripted_obstacle.json");
    let o = run!("plan", scn.clone(), "--output", log.clone());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&log).unwrap();
    assert!(text.ends_with("outcome safe_stop\n"));

    let o = run!("verify", scn.clone(), log.clone(), "--samples", "500");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("violations=0"));

    // tamper with the committed plan: the certificate and chaining break
    let bad = dir.path().join("bad.log");
    std::fs::write(&bad, text.replacen("k=1,0,0", "k=-1,1,1", 1)).unwrap();
    let o = run!("verify", scn.clone(), bad, "--samples", "500");
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));

    let o = run!("verify", scn, log, "--samples", "0");
    assert_eq!(code(&o), 1);
}

#[test]
fn slippery_tray_is_a_safe_stop() {
    let o = run!("plan", scenario("slippery_tray.json"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("iter 0 braking"));
}

#[test]
fn malformed_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"version\": 1,\n  \"name\": \"x\",\n  \"robot\": [\n").unwrap();
    let o = run!("plan", bad);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    assert_eq!(code(&run!("plan", dir.path().join("missing.json"))), 1);
    assert_eq!(code(&run!("frobnicate")), 1);
    assert_eq!(code(&run!("plan", scenario("desk_tray.json"), "--max-iters", "0")), 1);
}

#[test]
fn bounds_report_estimates_and_zero_storage() {
    let o = run!("bounds", scenario("desk_tray.json"));
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout).to_string();
    assert!(out.contains("estimated from 2000 samples"), "{out}");

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("bound_constants.json")).unwrap();
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, text.replace("\"v_m\": 0.02", "\"v_m\": 0.0")).unwrap();
    let o = run!("bounds", zero);
    let out = String::from_utf8_lossy(&o.stdout).to_string();
    assert_eq!(code(&o), 0);
    assert!(out.contains("|r| bound    0.0000") && out.contains("eps_v [rad/s] 0.0000"), "{out}");
}

#[test]
fn reach_dumps_reload_and_reject_bad_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.wpz");
    let b = dir.path().join("b.wpz");
    let scn = scenario("desk_tray.json");
    assert_eq!(code(&run!("reach", scn.clone(), "--interval", "3", "--dump-reach", a.clone())), 0);
    assert_eq!(code(&run!("reach", scn.clone(), "--interval", "3", "--dump-reach", b.clone())), 0);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let sets = waiterplan::dump::decode(&bytes).unwrap();
    assert_eq!(waiterplan::dump::encode(&sets).unwrap(), bytes);
    assert!(sets.iter().any(|s| s.name == "slip"));
    assert_eq!(code(&run!("reach", scn, "--interval", "20")), 1);
}
