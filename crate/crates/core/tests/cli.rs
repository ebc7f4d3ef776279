use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbf_lagrange::discretization::elements_for_length;

const BIN: &str = env!("CARGO_BIN_EXE_rbf-lagrange");

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rbf-lagrange-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SWEEP: &str = "kernel = \"wendland_c2\"\nr = 0.4\ngrids = [5, 7, 9]\n";

/// CSV lines without the trailing wall-clock column.
fn csv_without_runtime(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn sweep_reruns_are_identical() {
    let dir = workdir("rerun");
    let cfg = write_config(&dir, SWEEP);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(
        csv_without_runtime(&a.join("convergence.csv")),
        csv_without_runtime(&b.join("convergence.csv"))
    );
    for f in ["summary.json", "convergence.dat", "h1_error.dat"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert!(summary["h1_rate"].is_f64() && summary["l2_lambda_rate"].is_f64());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn written_k_follows_the_rule() {
    let dir = workdir("krule");
    let cfg = write_config(&dir, SWEEP);
    let out = dir.join("out");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let h: f64 = f[col("h_X")].parse().unwrap();
        let r: f64 = f[col("r")].parse().unwrap();
        let k: f64 = f[col("k")].parse().unwrap();
        // unit square: every side has length 1
        assert_eq!(k, 1.0 / elements_for_length(1.0, h, r) as f64, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 3);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn invalid_kernel_is_a_config_error() {
    let dir = workdir("badkernel");
    let out = dir.join("out");
    let cfg = write_config(&dir, &SWEEP.replace("wendland_c2", "multiquadric"));
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("multiquadric"));
    assert!(!out.exists(), "nothing is computed or written");

    let o = run(&["sweep", "--config", dir.join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(code(&o), 2);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn single_grid_sweep_has_no_rate() {
    let dir = workdir("single");
    let cfg = write_config(&dir, &SWEEP.replace("[5, 7, 9]", "[7]"));
    let out = dir.join("out");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(!summary.contains("rate"), "{summary}");
    assert_eq!(
        fs::read_to_string(out.join("convergence.csv")).unwrap().lines().count(),
        2
    );
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failing_rows_set_the_exit_code() {
    let dir = workdir("failing");
    // elements of size 0.01 are not reached by kernels of radius 0.1 on a
    // 3x3 grid, so that row is singular
    let partial = "kernel = \"wendland_c2\"\nr = 0.1\ngrids = [3, 5, 7]\nk_rule = [0.01, 0.5, 0.5]\n";
    let cfg = write_config(&dir, partial);
    let out = dir.join("partial");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failed"].as_array().unwrap().len(), 1);
    assert_eq!(summary["failed"][0]["n_per_side"], 3);

    let all = "kernel = \"wendland_c2\"\nr = 0.1\ngrids = [3, 4]\nk_rule = [0.01, 0.01]\n";
    let cfg = write_config(&dir, all);
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("all").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn solve_then_evaluate_the_dump() {
    let dir = workdir("solve");
    let cfg = write_config(&dir, "kernel = \"wendland_c2\"\nr = 0.3\ngrids = [7]\n");
    let out = dir.join("out");
    let o = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(out.join("convergence.csv")).unwrap().lines().count(),
        2
    );
    let dump = out.join("solution.dump");
    let o = run(&[
        "evaluate",
        "--dump",
        dump.to_str().unwrap(),
        "--point",
        "0.5,0.5",
        "--arc",
        "1.5",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let u_line = text.lines().find(|l| l.starts_with("u ")).unwrap();
    let u: f64 = u_line.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!(u.is_finite());
    assert!(text.lines().any(|l| l.starts_with("lambda ")));

    // a sweep config cannot drive a single solve
    let cfg = write_config(&dir, SWEEP);
    assert_eq!(code(&run(&["solve", "--config", cfg.to_str().unwrap()])), 2);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn study_and_probe_write_their_files() {
    let dir = workdir("studies");
    let cfg = write_config(&dir, "kernel = \"wendland_c0\"\nr = 0.3\ngrids = [5, 9, 17]\n");
    let out = dir.join("interp");
    assert_eq!(
        code(&run(&[
            "interp-study",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])),
        0
    );
    let json = fs::read_to_string(out.join("interpolation.json")).unwrap();
    assert!(json.contains("\"rate\""));
    let out = dir.join("infsup");
    assert_eq!(
        code(&run(&[
            "infsup",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(fs::read_to_string(out.join("infsup.csv")).unwrap().lines().count(), 4);
    fs::remove_dir_all(dir).unwrap();
}
