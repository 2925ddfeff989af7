#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

/// Runs the binary in `dir` with a fixed environment.
pub fn punn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_punn"))
        .args(args)
        .current_dir(dir)
        .env_remove("PUNN_SEED")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

/// Like [`punn`] but panics with stderr on a nonzero exit.
pub fn punn_ok(dir: &Path, args: &[&str]) -> String {
    let out = punn(dir, args);
    assert!(
        out.status.success(),
        "punn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Text after the `#` provenance lines.
pub fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// `(run, best_fitness, best_mse)` rows of a training history file.
pub fn history(path: &Path) -> Vec<(usize, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    body(&text)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap())
        })
        .collect()
}
