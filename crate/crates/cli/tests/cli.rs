use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn ibn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ibn"))
}

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/models")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = "variable x { yes no }\nvariable y { yes no }\n\
prior x=yes : [0.6, 0.6]\nconditional y=yes | x=yes : [0.5, 0.5]\n\
conditional y=yes | x=no : [0.25, 0.25]\n";

#[test]
fn bundled_script_passes() {
    let out = ibn().arg("run").arg(models_dir().join("fire_example.ibn")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("ok ")).count(), 36);
    assert!(!text.contains("FAIL"));
}

#[test]
fn failed_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let script = format!("{SMALL}expect y=yes : [0.9, 0.9] tol 1e-6\n");
    let p = write(dir.path(), "s.ibn", &script);
    let out = ibn().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn passing_expectation_on_small_model() {
    let dir = tempfile::tempdir().unwrap();
    // 0.6*0.5 + 0.4*0.25
    let script = format!("{SMALL}expect y=yes : [0.4, 0.4] tol 1e-9\n");
    let p = write(dir.path(), "s.ibn", &script);
    let out = ibn().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn contradiction_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let script = "variable x { yes no maybe }\nprior x=yes : [0.7, 0.7]\nprior x=no : [0.6, 0.6]\ncheck\n";
    let p = write(dir.path(), "c.ibn", script);
    let out = ibn().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("CONTRADICTION"));
    assert!(text.contains("x:yes") && text.contains("x:no"));
}

#[test]
fn parse_error_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.ibn", "variable x { yes no }\nprior x=yes : [0.9, 0.1]\n");
    let out = ibn().arg("check").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn missing_file_exits_three() {
    let out = ibn().arg("run").arg("/nonexistent/file.ibn").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn model_rejects_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "m.ibn", &format!("{SMALL}show\n"));
    let out = ibn().arg("check").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_reports_consistent_model() {
    let out = ibn().arg("check").arg(models_dir().join("fire.ibn")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("fire:yes"));
    assert!(text.contains("OK"), "{text}");
}

#[test]
fn export_dot_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.ibn", SMALL);
    let dot = dir.path().join("m.dot");
    let out = ibn()
        .args(["export"])
        .arg(&model)
        .args(["--format", "dot", "--out"])
        .arg(&dot)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("graph ibn {"));
    assert!(text.contains("x:yes"));

    let json = dir.path().join("m.json");
    let out = ibn()
        .args(["export"])
        .arg(&model)
        .args(["--format", "json", "--out"])
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(value.is_object());
}

#[test]
fn oracle_on_fire_model_and_random_batch() {
    let out = ibn()
        .arg("oracle")
        .arg(models_dir().join("fire.ibn"))
        .args(["--seed", "5", "--count", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("0 violations"), "{text}");

    let out = ibn().arg("oracle").arg(models_dir().join("fire.ibn")).arg("--json").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["violations"], 0);
}

#[test]
fn repl_reads_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.ibn", SMALL);
    let mut child = ibn()
        .arg("repl")
        .arg("--load")
        .arg(&model)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"show y\nbogus\nprior x=yes : [0.2, 0.2]\nexpect y=yes : [0.3, 0.3] tol 1e-9\nquit\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("y:yes [0.400000 0.400000]"), "{text}");
    assert!(text.contains("error"), "{text}");
    assert!(text.contains("ok "), "{text}");
}

#[test]
fn transcripts_are_deterministic() {
    let path = models_dir().join("fire_example.ibn");
    let a = ibn().arg("run").arg(&path).output().unwrap();
    let b = ibn().arg("run").arg(&path).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}
