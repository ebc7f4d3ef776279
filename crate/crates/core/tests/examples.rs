//! Runs the shipped examples and configs.

use std::path::PathBuf;
use std::process::Command;

use rbf_lagrange::config::RunConfig;

fn example(name: &str) -> PathBuf {
    // target/<profile>/deps/<this test> -> target/<profile>/examples/<name>
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().unwrap().parent().unwrap().join("examples");
    dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

#[test]
fn examples_run() {
    for name in [
        "kernels",
        "quadrature",
        "poisson_solve",
        "solution_dump",
        "infsup_probe",
        "interpolation_study",
        "l_shape",
        "convergence_sweep",
    ] {
        let path = example(name);
        assert!(path.exists(), "{} not built", path.display());
        let out = Command::new(&path).output().unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mode = cfg.mode.expect("shipped configs name their mode");
        cfg.check_mode(mode).unwrap();
        count += 1;
    }
    assert!(count >= 7);
}
