#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// A self-contained project directory holding the fixture mirror, the data
/// tables and a config with relative paths, so two copies share a config
/// digest.
pub struct Project {
    pub dir: tempfile::TempDir,
}

impl Project {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let fx = fixtures();
        copy_tree(&fx.join("mirror"), &root.join("mirror"));
        for f in ["fraud_list.csv", "comparison.jsonl"] {
            fs::copy(fx.join(f), root.join(f)).unwrap();
        }
        let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
        fs::create_dir_all(root.join("data")).unwrap();
        for f in ["lexicon.csv", "ff48.csv"] {
            fs::copy(data.join(f), root.join("data").join(f)).unwrap();
        }
        let config = fs::read_to_string(fx.join("pipeline.toml"))
            .unwrap()
            .replace("../../../../data/", "data/");
        fs::write(root.join("filing-corpus.toml"), config).unwrap();
        Self { dir }
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_filing-corpus"))
            .current_dir(self.root())
            .env("RUST_LOG", "warn")
            .args(args)
            .output()
            .unwrap()
    }

    /// Runs and requires success; returns the stage summaries.
    pub fn ok(&self, args: &[&str]) -> Vec<serde_json::Value> {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    /// Every file under `sub`, keyed by relative path.
    pub fn files(&self, sub: &str) -> Vec<(String, Vec<u8>)> {
        let base = self.root().join(sub);
        let mut out = Vec::new();
        collect(&base, &base, &mut out);
        out.sort();
        out
    }
}

fn collect(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(base, &path, out);
        } else {
            let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
            out.push((rel, fs::read(&path).unwrap()));
        }
    }
}

pub fn error_kind(out: &Output) -> String {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error line on stderr");
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    v["error"].as_str().unwrap().to_string()
}
