#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spnplan_cli::artifacts::stable_contents;

pub fn spnplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spnplan"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn spnplan")
}

/// Runs and insists on `code`, echoing stderr on mismatch.
pub fn expect(dir: &Path, args: &[&str], code: i32) -> Output {
    let out = spnplan(dir, args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "spnplan {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .collect();
    v.sort();
    v
}

/// Names of files whose stable contents differ between two output trees,
/// plus files present in only one of them.
pub fn differing(a: &Path, b: &Path) -> Vec<String> {
    let names = |d: &Path| -> Vec<String> {
        files(d)
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect()
    };
    let (na, nb) = (names(a), names(b));
    let mut bad: Vec<String> = na.iter().filter(|n| !nb.contains(n)).cloned().collect();
    bad.extend(nb.iter().filter(|n| !na.contains(n)).cloned());
    for n in na.iter().filter(|n| nb.contains(n)) {
        if stable_contents(&a.join(n)).unwrap() != stable_contents(&b.join(n)).unwrap() {
            bad.push(n.clone());
        }
    }
    bad
}
