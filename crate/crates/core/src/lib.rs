//! Anthropometry, attribute/measurement/shape mappers, shape-fitting losses and
//! shape-error metrics for linear blend-shape body models.

pub mod anthropometry;
pub mod body_model;
pub mod curation;
pub mod error;
pub mod eval_metrics;
pub mod fixture;
pub mod mesh;
pub mod rng;
pub mod shape_fitter;
pub mod shape_mappers;

pub use error::{Error, Result};
