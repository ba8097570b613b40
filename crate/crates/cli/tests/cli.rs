use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use chrono::Utc;
use nun_cli::DeploymentConfig;
use nun_core::{Clock, SystemClock, Timestamp};
use nun_netd::Loopback;

fn nun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nun")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn running() -> (Loopback, tempfile::TempDir) {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let now = clock.now();
    let lb = Loopback::start(clock, now).unwrap();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("nun.toml"), DeploymentConfig::from_fixture(&lb.fixture).to_toml()).unwrap();
    (lb, dir)
}

fn config(dir: &Path) -> String {
    dir.join("nun.toml").display().to_string()
}

#[test]
fn resolves_the_three_scenarios() {
    let (_lb, dir) = running();
    let cfg = config(dir.path());
    let o = nun(&["resolve", "--config", &cfg, "--initial", "calendar", "(today meeting moderator email)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("pretty  string: alice@example.org"), "{}", stdout(&o));

    let o = nun(&["resolve", "--config", &cfg, "--initial", "calendar", "(today meeting location occupant)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("(user)"));

    let o = nun(&["resolve", "--config", &cfg, "--initial", "location", "--cache", "(occupant files naming.ppt)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("file: http://files.example.org/~bob/naming.ppt"));
}

#[test]
fn resolution_errors_exit_1() {
    let (_lb, dir) = running();
    let o = nun(&["resolve", "--config", &config(dir.path()), "--initial", "location", "(occupant fax)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NOTBOUND"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let (_lb, dir) = running();
    let cfg = config(dir.path());
    assert_eq!(nun(&["resolve", "--config", &cfg, "--initial", "nowhere", "(a)"]).status.code(), Some(2));
    assert_eq!(nun(&["resolve", "--config", &cfg, "--initial", "calendar", "(a"]).status.code(), Some(2));
    assert_eq!(nun(&["serve", "--role", "printer", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(nun(&["bench", "--config", &cfg, "--scenario", "4"]).status.code(), Some(2));
    assert_eq!(nun(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = commands_fixture();
    let broken = text.replacen("email = \"bob@example.org\"", "email = \"bob at example.org\"", 1);
    let line = broken.lines().position(|l| l.contains("bob at")).unwrap() + 1;
    std::fs::write(&path, broken).unwrap();
    let o = nun(&["serve", "--role", "userdb", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("line {line}:")), "{}", stderr(&o));
}

fn commands_fixture() -> String {
    nun_cli::commands::fixture_config(Utc::now().date_naive(), 7401).unwrap()
}

#[test]
fn fixture_writes_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.toml");
    let o = nun(&["fixture", "--out", path.to_str().unwrap(), "--day", "2007-05-03", "--base-port", "9100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = nun_cli::Deployment::load(&path).unwrap();
    assert_eq!(d.addrs.calendar.as_str(), "127.0.0.1:9102");
    assert_eq!(d.events[0].1.start, Timestamp(1_178_182_800_000));
}

#[test]
fn bench_single_iteration() {
    let (_lb, dir) = running();
    let o = nun(&["bench", "--config", &config(dir.path()), "--scenario", "2", "--iterations", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("± 0.00 ms (n=1)"), "{out}");
    assert!(out.contains("overhead ratio nun/manual"));
}

#[test]
fn serve_starts_and_answers() {
    let (lb, dir) = running();
    let cfg = config(dir.path());
    drop(lb);
    let mut child = Command::new(env!("CARGO_BIN_EXE_nun"))
        .args(["serve", "--role", "userdb", "--config", &cfg, "--listen", "127.0.0.1:0"])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    std::io::BufRead::read_line(&mut std::io::BufReader::new(child.stdout.take().unwrap()), &mut line).unwrap();
    assert!(line.starts_with("userdb listening on 127.0.0.1:"), "{line}");
    child.kill().unwrap();
    child.wait().unwrap();
}
