use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_MLP: &str = r#"
iterations = 40
batch_size = 64
eval_every = 10
seed = 3
optimizer = "sofim"

[problem]
kind = "mlp"
hidden = 8
activation = "tanh"

[problem.data]
kind = "blobs"
n = 300
features = 6
classes = 3
spread = 2.0
seed = 5
"#;

fn sofim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sofim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SOFIM_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(suffix))
        .collect();
    names.sort();
    names
}

fn without_wall(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn missing_config_argument_is_a_config_error() {
    let cwd = tempfile::tempdir().unwrap();
    let out = sofim(&["run"], cwd.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("<CONFIG>"), "{}", stderr(&out));
}

#[test]
fn unreadable_or_invalid_configs_exit_1() {
    let cwd = tempfile::tempdir().unwrap();
    let out = sofim(&["run", "nope.toml"], cwd.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.toml"));

    let path = write_config(cwd.path(), &format!("learning_rate = 1\n{SMALL_MLP}"));
    let out = sofim(&["run", &path], cwd.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("learning_rate"), "{}", stderr(&out));

    let out = sofim(
        &["run", &path, "--set", "hyperparameters.rho=-1"],
        cwd.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        fs::read_dir(cwd.path()).unwrap().count() == 1,
        "nothing but the config was written"
    );
}

#[test]
fn runtime_failures_exit_2() {
    let cwd = tempfile::tempdir().unwrap();
    let text = SMALL_MLP.replace(
        "kind = \"blobs\"\nn = 300\nfeatures = 6\nclasses = 3\nspread = 2.0\nseed = 5",
        "kind = \"csv\"\npath = \"missing.csv\"\nlabel_column = \"label\"\nsplit_fraction = 0.8\nseed = 1",
    );
    let path = write_config(cwd.path(), &text);
    let out_dir = cwd.path().join("out");
    let out = sofim(
        &["run", &path, "--output-dir", out_dir.to_str().unwrap()],
        cwd.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("missing.csv"));
}

#[test]
fn gradcheck_reports_every_problem() {
    let cwd = tempfile::tempdir().unwrap();
    let out = sofim(&["gradcheck", "--points", "5"], cwd.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for name in ["quadratic", "logistic", "softmax", "mlp_tanh"] {
        let line = text.lines().find(|l| l.starts_with(name)).expect(name);
        assert!(line.ends_with("ok"), "{line}");
    }
}

#[test]
fn rho_sweep_writes_three_runs_and_names_best_rho() {
    let cwd = tempfile::tempdir().unwrap();
    let path = write_config(cwd.path(), SMALL_MLP);
    let out_dir = cwd.path().join("rho");
    let out = sofim(
        &[
            "rho-sweep",
            &path,
            "--output-dir",
            out_dir.to_str().unwrap(),
        ],
        cwd.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files_with_suffix(&out_dir, ".csv").len(), 3);
    let summary = fs::read_to_string(out_dir.join("rho_sweep_summary.txt")).unwrap();
    let best = summary
        .lines()
        .find_map(|l| l.strip_prefix("best_rho = "))
        .expect("best_rho line");
    assert!(["1", "0.5", "0.1"].contains(&best), "{best}");
}

#[test]
fn echoed_config_reproduces_the_run() {
    let cwd = tempfile::tempdir().unwrap();
    let path = write_config(cwd.path(), SMALL_MLP);
    let first = cwd.path().join("first");
    let out = sofim(
        &[
            "run",
            &path,
            "--set",
            "hyperparameters.eta=0.05",
            "--output-dir",
            first.to_str().unwrap(),
        ],
        cwd.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let second = cwd.path().join("second");
    let echoed = first.join("effective_config.toml");
    let out = sofim(
        &[
            "run",
            echoed.to_str().unwrap(),
            "--output-dir",
            second.to_str().unwrap(),
        ],
        cwd.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let a = files_with_suffix(&first, ".csv");
    assert_eq!(a, files_with_suffix(&second, ".csv"));
    assert_eq!(a.len(), 1);
    let read = |dir: &Path| fs::read_to_string(dir.join(&a[0])).unwrap();
    assert_eq!(without_wall(&read(&first)), without_wall(&read(&second)));
}

#[test]
fn output_dir_comes_from_environment_when_unset_elsewhere() {
    let cwd = tempfile::tempdir().unwrap();
    let path = write_config(cwd.path(), SMALL_MLP);
    let env_dir = cwd.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_sofim"))
        .args(["run", &path])
        .current_dir(cwd.path())
        .env("SOFIM_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files_with_suffix(&env_dir, ".csv").len(), 1);
    // Only the config and the output directory exist under the working directory.
    let mut entries: Vec<String> = fs::read_dir(cwd.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    entries.sort();
    assert_eq!(entries, vec!["exp.toml", "from_env"]);
}

#[test]
fn sweep_covers_the_eta_grid() {
    let cwd = tempfile::tempdir().unwrap();
    let path = write_config(
        cwd.path(),
        &format!("{SMALL_MLP}\n[grid]\neta = [0.1, 0.01]\n"),
    );
    let out_dir = cwd.path().join("sweep");
    let out = sofim(
        &["sweep", &path, "--output-dir", out_dir.to_str().unwrap()],
        cwd.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(files_with_suffix(&out_dir, ".csv").len(), 2);
    let summary = fs::read_to_string(out_dir.join("sweep_summary.txt")).unwrap();
    assert!(summary.contains("best_eta = "));
}

#[test]
fn scaling_writes_one_csv_per_optimizer() {
    let cwd = tempfile::tempdir().unwrap();
    let out_dir = cwd.path().join("scaling");
    let out = sofim(
        &[
            "scaling",
            "--optimizer",
            "sofim",
            "--optimizer",
            "adam",
            "--min-dim",
            "100",
            "--doublings",
            "2",
            "--repeats",
            "3",
            "--output-dir",
            out_dir.to_str().unwrap(),
        ],
        cwd.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        files_with_suffix(&out_dir, ".csv"),
        vec!["scaling_adam.csv", "scaling_sofim.csv"]
    );
    let text = fs::read_to_string(out_dir.join("scaling_sofim.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);

    let out = sofim(&["scaling", "--optimizer", "lbfgs"], cwd.path());
    assert_eq!(out.status.code(), Some(1));
}
