//! Helpers for driving the `ivsurv` binary.
#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ivsurv::rng::stream;
use ivsurv::sim::{sample, DgpConfig};
use ivsurv::SurvivalDataset;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_ivsurv"))
}

/// Runs `ivsurv <cmd> --config <dir>/<name>.toml --out <out>` plus extra
/// flags, with `body` written as the config.
pub fn run(dir: &Path, cmd: &str, body: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!(
        "{cmd}-{}.toml",
        out.file_name().unwrap().to_string_lossy()
    ));
    std::fs::write(&cfg, body).unwrap();
    Command::new(bin())
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

pub fn write_dataset(path: &Path, d: &SurvivalDataset) {
    d.write_csv(File::create(path).unwrap()).unwrap();
}

/// A sample from the default Cox design.
pub fn cox_dataset(n: usize, seed: u64) -> SurvivalDataset {
    let cfg = DgpConfig {
        n,
        ..DgpConfig::cox_binary()
    };
    sample(&cfg, &mut stream(seed, &[0xC11])).unwrap().0
}

/// Every file in `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

pub fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}
