//! Helpers shared by the CLI test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_shapekit"))
}

pub fn shapekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).current_dir(dir).args(args).output().expect("binary runs")
}

/// Runs a command that must succeed and returns its stdout.
pub fn ok(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = shapekit(dir, args);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "`shapekit {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Files compared against the committed goldens, relative to the run directory.
pub const GOLDEN_FILES: [&str; 9] = [
    "fx/population.csv",
    "measure.csv",
    "maps/ahc2s/fit_report.json",
    "maps/s2a/fit_report.json",
    "predict.csv",
    "predict_s2a.csv",
    "fit_shape.csv",
    "eval.csv",
    "eval.json",
];

/// fixture → measure → fit-mapper → predict → fit-shape → eval, all deterministic.
pub fn golden_pipeline(dir: &Path) -> Result<(), String> {
    let d = ["--deterministic"];
    let run = |args: &[&str]| ok(dir, &[&d[..], args].concat()).map(|_| ());
    run(&["--seed", "7", "fixture", "--out", "fx", "--count", "120"])?;
    run(&["measure", "--model", "fx/model", "--betas", "fx/betas.csv", "--out", "measure.csv"])?;
    run(&["fit-mapper", "--data", "fx/population.csv", "--variant", "AHC2S", "--out", "maps/ahc2s"])?;
    run(&["--seed", "3", "fit-mapper", "--data", "fx/population.csv", "--variant", "S2A", "--holdout", "0.25", "--out", "maps/s2a"])?;
    run(&["predict", "--mapper", "maps/ahc2s", "--data", "fx/population.csv", "--out", "predict.csv"])?;
    run(&["predict", "--mapper", "maps/s2a", "--data", "fx/betas.csv", "--out", "predict_s2a.csv"])?;
    run(&[
        "--jobs", "3", "fit-shape", "--model", "fx/model", "--targets", "fx/population.csv", "--s2a", "maps/s2a",
        "--a2s", "maps/ahc2s", "--out", "fit_shape.csv",
    ])?;
    run(&[
        "eval", "--model", "fx/model", "--pred", "fit_shape.csv", "--gt", "fx/betas.csv", "--pred-attributes",
        "predict_s2a.csv", "--gt-attributes", "fx/population.csv", "--out", "eval.csv", "--report", "eval.json",
    ])
}

/// Names of golden files whose bytes differ from the run in `dir`.
pub fn golden_mismatches(dir: &Path) -> Vec<String> {
    GOLDEN_FILES
        .iter()
        .filter(|f| {
            let golden = golden_dir().join(f.replace('/', "__"));
            std::fs::read(dir.join(f)).ok() != std::fs::read(golden).ok()
        })
        .map(|f| f.to_string())
        .collect()
}

/// Copies the run's outputs over the committed goldens.
pub fn bless(dir: &Path) {
    std::fs::create_dir_all(golden_dir()).unwrap();
    for f in GOLDEN_FILES {
        std::fs::copy(dir.join(f), golden_dir().join(f.replace('/', "__"))).unwrap();
    }
}
