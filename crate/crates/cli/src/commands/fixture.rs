//! `fixture`: writes the synthetic body model and a rated population.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use shapekit::body_model::ShapeVector;
use shapekit::fixture::{default_fixture, reference_measurements, synthetic_population, POPULATION_RATERS};

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::population::{population_headers, population_row};
use crate::table::{fmt_f64, snake, write_csv, write_json};

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of subjects in the synthetic population.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
}

pub fn run(args: &FixtureArgs, g: &Globals) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::invalid("--count must be positive"));
    }
    let model = default_fixture()?;
    model.save(&args.out.join("model"))?;
    let pop = synthetic_population(&model, args.count, g.seed)?;
    let b = model.num_betas();

    let headers = population_headers(&pop.attribute_names, b);
    let rows: Vec<Vec<String>> = pop
        .records
        .iter()
        .map(|r| {
            population_row(
                &r.subject_id,
                r.gender,
                Some(&r.measurements),
                &r.attributes,
                &r.beta,
            )
        })
        .collect();
    write_csv(Some(&args.out.join("population.csv")), &headers, &rows)?;

    let mut beta_headers = vec!["subject_id".to_string()];
    beta_headers.extend(super::beta_headers(b));
    let beta_rows: Vec<Vec<String>> = pop
        .records
        .iter()
        .map(|r| std::iter::once(r.subject_id.clone()).chain(r.beta.iter().map(|x| fmt_f64(*x))).collect())
        .collect();
    write_csv(Some(&args.out.join("betas.csv")), &beta_headers, &beta_rows)?;

    let mut rating_headers = vec!["subject_id".to_string(), "attribute".to_string()];
    rating_headers.extend((0..POPULATION_RATERS).map(|k| format!("rater_{k}")));
    let mut rating_rows = Vec::new();
    for (i, r) in pop.records.iter().enumerate() {
        for (j, name) in pop.attribute_names.iter().enumerate() {
            let mut row = vec![r.subject_id.clone(), snake(name)];
            row.extend((0..pop.ratings.raters()).map(|k| pop.ratings.get(i, j, k).to_string()));
            rating_rows.push(row);
        }
    }
    write_csv(Some(&args.out.join("ratings.csv")), &rating_headers, &rating_rows)?;

    let zeros = vec![vec!["zero".to_string()].into_iter().chain((0..b).map(|_| "0".to_string())).collect()];
    write_csv(Some(&args.out.join("zeros.csv")), &beta_headers, &zeros)?;

    let mut summary = json!({
        "model": "model",
        "subjects": args.count,
        "seed": g.seed,
        "num_betas": b,
        "gender": model.gender().to_string(),
        "attributes": pop.attribute_names.iter().map(|n| snake(n)).collect::<Vec<_>>(),
        "raters": POPULATION_RATERS,
        "reference_measurements": reference_measurements(&model),
        "mean_shape_measurements": shapekit::anthropometry::measure(
            &model,
            &ShapeVector::zeros(b),
            &Default::default(),
        )?,
    });
    g.stamp(&mut summary);
    write_json(Some(&args.out.join("fixture.json")), &summary)
}
