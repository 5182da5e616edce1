#![allow(dead_code)]

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fmp() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fmp"));
    c.env_remove("FMP_LOG");
    c
}

pub fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Runs `fmp` with `args` from `dir`, returning the exit code and output.
pub fn run_in(dir: &Path, args: &[&str]) -> (i32, Output) {
    let out = fmp().current_dir(dir).args(args).output().expect("fmp runs");
    (out.status.code().unwrap_or(-1), out)
}

pub fn ok(dir: &Path, args: &[&str]) {
    let (code, out) = run_in(dir, args);
    assert_eq!(code, 0, "fmp {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Copies the small test config into `dir` and runs every subcommand on it.
pub fn small_pipeline(dir: &Path, jobs: &str) {
    std::fs::copy(data("small.toml"), dir.join("small.toml")).unwrap();
    let c = ["--config", "small.toml", "--jobs", jobs];
    let with = |cmd: &str, out: &str| {
        let mut v = vec![cmd];
        v.extend(c);
        v.extend(["--out", out]);
        ok(dir, &v);
    };
    with("simulate", "out");
    with("train", "out");
    with("parse", "out/parsed");
    with("eval", "out/eval");
    with("keyframes", "out/keyframes");
}

/// Relative path to SHA-256 hex digest for every file under `root`.
pub fn digests(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let bytes = std::fs::read(&p).unwrap();
                let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Compares `actual` with the committed golden file, rewriting it instead
/// when `FMP_BLESS` is set.
pub fn golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("FMP_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {}; rerun with FMP_BLESS=1", path.display()));
    assert!(expected == actual, "{name} differs from its golden file");
}

/// `sha256  path` lines for every artifact under `root` except the copied config.
pub fn digest_listing(root: &Path) -> String {
    digests(root)
        .into_iter()
        .filter(|(path, _)| path != "small.toml")
        .map(|(path, hex)| format!("{hex}  {path}\n"))
        .collect()
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}
