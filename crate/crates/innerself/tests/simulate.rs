mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixtures;

fn innerself(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_innerself"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .unwrap()
}

fn config_in(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("innerself.toml");
    let data = dir.join("data").display().to_string();
    std::fs::write(&path, format!("data_dir = {data:?}\n")).unwrap();
    path
}

fn demo() -> String {
    fixtures().join("demo.script").display().to_string()
}

fn lines(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn demo_script_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = innerself(&config_in(dir.path()), &["simulate", &demo()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let turns = lines(&out);
    assert_eq!(turns.len(), 10);
    for (i, t) in turns.iter().enumerate() {
        assert_eq!(t["turn_index"], 2 * i as u64);
        let report = t["constraint_report"].as_object().unwrap();
        assert!(report.values().all(|v| v == true), "{t}");
        assert!(t["response_audio_ref"].is_string());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = innerself(&config_in(a.path()), &["simulate", &demo(), "--seed", "7"]);
    let second = innerself(&config_in(b.path()), &["simulate", &demo(), "--seed", "7"]);
    let again = innerself(&config_in(a.path()), &["simulate", &demo(), "--seed", "7"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, again.stdout);
}

#[test]
fn missing_wav_is_a_parse_error_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("bad.script");
    std::fs::write(&script, "user Sam\nturn nowhere/ghost.wav | hello\n").unwrap();
    let out = innerself(&config_in(dir.path()), &["simulate", script.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("ghost.wav"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn empty_script_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("empty.script");
    std::fs::write(&script, "# nothing yet\n").unwrap();
    let out = innerself(&config_in(dir.path()), &["simulate", script.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}

#[test]
fn failed_turns_make_the_run_fail() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("silent.script");
    let silence = fixtures().join("silence.wav");
    let calm = fixtures().join("neutral_calm.wav");
    std::fs::write(
        &script,
        format!("user Sam\nturn {} | \nturn {}\n", silence.display(), calm.display()),
    )
    .unwrap();
    let out = innerself(&config_in(dir.path()), &["simulate", script.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let turns = lines(&out);
    assert_eq!(turns.len(), 2);
    assert_eq!(turns[0]["code"], "EMPTY_UTTERANCE");
    assert_eq!(turns[0]["line"], 2);
    assert_eq!(turns[1]["turn_index"], 0);
}

#[test]
fn simulated_session_exports() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path());
    let sim = innerself(&config, &["simulate", &demo(), "--seed", "3"]);
    assert!(sim.status.success());
    let target = dir.path().join("export.json");
    let out = innerself(
        &config,
        &["export", "sim-0000000000000003", "--out", target.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    assert_eq!(doc["turns"].as_array().unwrap().len(), 20);
    assert_eq!(doc["has_voice_profile"], true);

    let missing = innerself(&config, &["export", "sim-ffffffffffffffff"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("sim-ffffffffffffffff"));
}
