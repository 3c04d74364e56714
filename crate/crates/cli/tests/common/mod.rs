#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plfam_simbench::{generate_design, Design, DesignConfig, SimulatedSample};

pub struct Files {
    pub scalars: PathBuf,
    pub curves: PathBuf,
    pub response: PathBuf,
}

pub fn write_sample(dir: &Path, prefix: &str, s: &SimulatedSample, n_scalars: usize) -> Files {
    let mut x = String::from("id");
    for j in 0..n_scalars {
        write!(x, ",X{}", j + 1).unwrap();
    }
    x.push('\n');
    let mut u = String::from("id");
    for t in s.curves.grid() {
        write!(u, ",{t}").unwrap();
    }
    u.push('\n');
    let mut y = String::from("id,Y\n");
    for i in 0..s.response.len() {
        write!(x, "s{i}").unwrap();
        for j in 0..n_scalars {
            write!(x, ",{}", s.scalars[[i, j]]).unwrap();
        }
        x.push('\n');
        write!(u, "s{i}").unwrap();
        for v in s.curves.values().row(i) {
            write!(u, ",{v}").unwrap();
        }
        u.push('\n');
        writeln!(y, "s{i},{}", s.response[i]).unwrap();
    }
    let files = Files {
        scalars: dir.join(format!("{prefix}_x.csv")),
        curves: dir.join(format!("{prefix}_u.csv")),
        response: dir.join(format!("{prefix}_y.csv")),
    };
    fs::write(&files.scalars, x).unwrap();
    fs::write(&files.curves, u).unwrap();
    fs::write(&files.response, y).unwrap();
    files
}

/// Design-1 train/test CSVs with `n` training and `n_test` test rows.
pub fn design_files(dir: &Path, n: usize, n_test: usize, seed: u64) -> (Files, Files) {
    let mut c = DesignConfig::new(Design::One, n, 0.6);
    c.n_test = n_test;
    let (train, test) = generate_design(&c, seed).unwrap();
    (
        write_sample(dir, "train", &train, 5),
        write_sample(dir, "test", &test, 5),
    )
}

pub fn write_candidates(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("candidates.json");
    fs::write(&p, json).unwrap();
    p
}

pub fn plfam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plfam"))
        .args(args)
        .output()
        .unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
