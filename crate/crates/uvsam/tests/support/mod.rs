//! Shared helpers for the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use uvsam::fixture::{make_fixture, manifest_path, FixtureConfig, FixtureInfo};
use uvsam::pfm;

pub struct FixtureProject {
    pub dir: TempDir,
    pub info: FixtureInfo,
}

impl FixtureProject {
    pub fn new(size: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let info = make_fixture(dir.path(), &FixtureConfig { size, ..Default::default() }).unwrap();
        Self { dir, info }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn manifest(&self) -> PathBuf {
        manifest_path(self.dir.path())
    }

    pub fn latest(&self) -> PathBuf {
        self.dir.path().join("out/latest")
    }

    /// Runs the CLI with `--manifest` appended after `args`.
    pub fn run(&self, args: &[&str]) -> Output {
        let manifest = self.manifest();
        let mut all: Vec<&str> = args.to_vec();
        all.extend(["--manifest", manifest.to_str().unwrap()]);
        uvsam(&all)
    }

    pub fn build(&self) {
        for verb in ["calibrate", "build-cube"] {
            let out = self.run(&[verb]);
            assert!(out.status.success(), "{verb}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }

    /// Ground-truth labels, row 0 at the top.
    pub fn truth(&self) -> Vec<u8> {
        read_plane(&self.path().join("ground_truth.pfm")).iter().map(|&v| v as u8).collect()
    }
}

pub fn uvsam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uvsam"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn read_plane(path: &Path) -> Vec<f32> {
    let p = pfm::decode(&std::fs::read(path).unwrap()).unwrap();
    assert_eq!(p.channels, 1);
    p.data
}

pub fn read_mask(path: &Path) -> Vec<bool> {
    read_plane(path).iter().map(|&v| v == 1.0).collect()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Every regular file under `dir`, relative path and bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
