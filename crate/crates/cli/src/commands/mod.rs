pub mod curation;
pub mod eval;
pub mod fit;
pub mod fixture;
pub mod mapper;
pub mod measure;
pub mod report;

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::Value;
use shapekit::body_model::{BodyModel, ShapeVector};
use shapekit::fixture::default_fixture;

use crate::error::{CliError, CliResult};
use crate::table::Table;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub seed: u64,
    pub deterministic: bool,
    pub jobs: usize,
}

impl Globals {
    /// Adds a `created_at` field (Unix seconds) unless running deterministically.
    pub fn stamp(&self, value: &mut Value) {
        if self.deterministic {
            return;
        }
        if let Value::Object(map) = value {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            map.insert("created_at".into(), secs.into());
        }
    }

    /// Maps `f` over `items` on `jobs` threads. Output order follows input
    /// order, and the reported error is the first failing item's.
    pub fn par_map<T, R, F>(&self, items: &[T], f: F) -> CliResult<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> CliResult<R> + Sync + Send,
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::invalid(format!("cannot start {} worker threads: {e}", self.jobs)))?;
        let results: Vec<CliResult<R>> = pool.install(|| items.par_iter().map(&f).collect());
        results.into_iter().collect()
    }
}

/// The literal `fixture` names the built-in synthetic model.
pub const FIXTURE_MODEL: &str = "fixture";

pub fn load_model(spec: &str) -> CliResult<BodyModel> {
    if spec == FIXTURE_MODEL {
        Ok(default_fixture()?)
    } else {
        Ok(BodyModel::load(Path::new(spec))?)
    }
}

/// Reads `beta_<k>` columns, padding missing trailing coefficients with zeros.
pub fn read_betas(table: &Table, num_betas: usize) -> CliResult<Vec<ShapeVector>> {
    let cols = table.indexed_columns("beta_")?;
    if cols.len() > num_betas {
        return Err(CliError::from(shapekit::Error::DimensionMismatch {
            field: format!("{} beta columns", table.path.display()),
            expected: num_betas,
            actual: cols.len(),
        }));
    }
    (0..table.len())
        .map(|r| {
            let mut beta = table.vector(r, &cols)?;
            beta.resize(num_betas, 0.0);
            Ok(ShapeVector(beta))
        })
        .collect()
}

pub fn beta_headers(count: usize) -> Vec<String> {
    (0..count).map(|k| format!("beta_{k}")).collect()
}
