#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

/// Runs the binary in `cwd` with the bundled config dir.
pub fn mlmkit(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlmkit"))
        .args(args)
        .current_dir(cwd)
        .env("MLMKIT_CONFIG_DIR", assets().join("configs"))
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = mlmkit(cwd, args);
    assert!(
        out.status.success(),
        "{args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(cwd: &Path, args: &[&str]) -> i32 {
    mlmkit(cwd, args).status.code().expect("exited normally")
}

/// Desk config with short training, seeded and deterministic.
pub const QUICK: &[&str] = &[
    "--config",
    "desk.json",
    "--seed",
    "42",
    "--deterministic",
    "--set",
    "train.phase1.epochs=2",
    "--set",
    "train.phase2.epochs=1",
];

pub fn quick(extra: &[&str]) -> Vec<String> {
    QUICK.iter().chain(extra).map(|s| s.to_string()).collect()
}

pub fn ok_quick(cwd: &Path, extra: &[&str]) -> String {
    let args = quick(extra);
    ok(cwd, &args.iter().map(String::as_str).collect::<Vec<_>>())
}

pub fn code_quick(cwd: &Path, extra: &[&str]) -> i32 {
    let args = quick(extra);
    code(cwd, &args.iter().map(String::as_str).collect::<Vec<_>>())
}

/// Every file under `dir`, as (relative path, bytes), sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
