use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
name = "small"
learner = "mt-ogd"
environment = "synthetic"
n_tasks = 4
dim = 3
sigma = 0.3
horizon = 200
seed = 2
"#;

fn mtomd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtomd"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn run_writes_report_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), CONFIG).unwrap();
    let out = mtomd(dir.path(), &["run", "small.toml"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("small.csv")).unwrap();
    assert!(csv.starts_with("t,cumulative_loss,regret,bound\n"));
    assert_eq!(csv.lines().count(), 201);
    let meta = fs::read_to_string(dir.path().join("small.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 2") || meta.contains("\"seed\":2"));

    let out = mtomd(dir.path(), &["run", "small.toml", "-o", "elsewhere.csv"]);
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("elsewhere.meta.json").exists());
    assert_eq!(
        fs::read_to_string(dir.path().join("elsewhere.csv")).unwrap(),
        csv
    );
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        format!("{CONFIG}colour = \"red\"\n"),
    )
    .unwrap();
    let out = mtomd(dir.path(), &["run", "bad.toml"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert_eq!(code(&mtomd(dir.path(), &["run", "missing.toml"])), 1);
    assert_eq!(code(&mtomd(dir.path(), &["validate", "bad.toml"])), 1);
    assert_eq!(code(&mtomd(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&mtomd(dir.path(), &["--help"])), 0);
    assert_eq!(code(&mtomd(dir.path(), &["--version"])), 0);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "task,x,y\na,1,0.5\nb,zero,1\n").unwrap();
    fs::write(
        dir.path().join("csv.toml"),
        "learner = \"mt-ogd\"\nenvironment = \"csv\"\ncsv_path = \"d.csv\"\ntask_col = \"task\"\n\
         label_col = \"y\"\nfeature_cols = [\"x\"]\nloss = \"square\"\n",
    )
    .unwrap();
    let out = mtomd(dir.path(), &["run", "csv.toml"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("d.csv:3:"));
}

#[test]
fn validate_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), CONFIG).unwrap();
    let out = mtomd(dir.path(), &["validate", "small.toml"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("ok: 200 rounds, 4 tasks, dim 3"), "{text}");
    assert!(!dir.path().join("small.csv").exists());

    fs::write(
        dir.path().join("grid.toml"),
        format!("{CONFIG}repetitions = 2\nsweep_b = [0.0, 4.0]\n"),
    )
    .unwrap();
    let out = mtomd(dir.path(), &["sweep", "grid.toml"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("small_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n_tasks,sigma,b,eta,repetitions,mean_regret,std_regret"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = mtomd(dir.path(), &["selftest"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 7);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
