//! `fit-mapper` and `predict`.

use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use shapekit::body_model::Gender;
use shapekit::shape_mappers::{fit_variant, s2a, OutputKind, PolyMapper, TrainingRow, Variant, DEFAULT_RIDGE};

use super::{beta_headers, Globals};
use crate::error::{CliError, CliResult};
use crate::population::{attributes_for, read_population, Population};
use crate::table::{fmt_f64, snake, write_csv, write_json, Table};

#[derive(Debug, Args)]
pub struct FitMapperArgs {
    /// Subject table with measurements, `a_<attribute>` and `beta_<k>` columns.
    #[arg(long)]
    pub data: PathBuf,
    /// One of A2S, S2A, H2S, HW2S, C2S, HC2S, HWC2S and the A-prefixed forms.
    #[arg(long)]
    pub variant: Variant,
    /// Fit only rows of this gender; required when the table mixes genders.
    #[arg(long)]
    pub gender: Option<Gender>,
    /// Polynomial degree (1 or 2).
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Ridge penalty; 0 solves the plain least-squares problem by QR.
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    pub ridge: f64,
    /// Fraction of rows held out for evaluation, chosen with `--seed`.
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
    /// Output directory for the mapper.
    #[arg(long)]
    pub out: PathBuf,
}

fn choose_gender(pop: &Population, requested: Option<Gender>) -> CliResult<Gender> {
    if let Some(g) = requested {
        return Ok(g);
    }
    let mut seen: Vec<Gender> = Vec::new();
    for r in &pop.rows {
        if !seen.contains(&r.gender) {
            seen.push(r.gender);
        }
    }
    match seen.as_slice() {
        [g] => Ok(*g),
        [] => Err(CliError::invalid("the subject table is empty")),
        _ => Err(CliError::invalid("the table mixes genders; pass --gender")),
    }
}

fn target(variant: Variant, row: &TrainingRow) -> &[f64] {
    match variant.output() {
        OutputKind::Betas => &row.beta,
        OutputKind::AttributeScores => &row.attributes,
    }
}

fn rmse(mapper: &PolyMapper, variant: Variant, rows: &[TrainingRow]) -> CliResult<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in rows {
        let Some(x) = r.raw_input(&mapper.spec) else { continue };
        let p = mapper.apply(&x)?;
        for (a, b) in p.iter().zip(target(variant, r)) {
            sum += (a - b).powi(2);
            count += 1;
        }
    }
    Ok((count > 0).then(|| (sum / count as f64).sqrt()))
}

pub fn fit(args: &FitMapperArgs, g: &Globals) -> CliResult<()> {
    if !(0.0..1.0).contains(&args.holdout) {
        return Err(CliError::invalid("--holdout must lie in [0, 1)"));
    }
    let table = Table::read(&args.data)?;
    let pop = read_population(&table, args.gender.unwrap_or(Gender::Neutral))?;
    let gender = choose_gender(&pop, args.gender)?;
    let variant = args.variant;
    if (variant.uses_attributes() || variant.output() == OutputKind::AttributeScores) && pop.attribute_names.is_empty() {
        return Err(CliError::format(format!("{}:a_*", args.data.display()), "no attribute columns"));
    }
    let rows: Vec<TrainingRow> = pop.rows.iter().filter(|r| r.gender == gender).cloned().collect();
    let held = (rows.len() as f64 * args.holdout).floor() as usize;
    let mut is_held = vec![false; rows.len()];
    if held > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
        for i in rand::seq::index::sample(&mut rng, rows.len(), held) {
            is_held[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = rows.into_iter().zip(&is_held).partition(|(_, h)| !**h);
    let train: Vec<TrainingRow> = train.into_iter().map(|(r, _)| r).collect();
    let test: Vec<TrainingRow> = test.into_iter().map(|(r, _)| r).collect();

    let report = fit_variant(variant, &train, gender, &pop.attribute_names, args.degree, args.ridge)?;
    let mapper = report.mapper;
    let used = train.iter().filter(|r| r.raw_input(&mapper.spec).is_some()).count();
    mapper.save(&args.out)?;

    let mut summary = json!({
        "variant": variant.name(),
        "gender": gender.to_string(),
        "degree": args.degree,
        "ridge": args.ridge,
        "features": mapper.spec.num_features(),
        "inputs": mapper.input_dim(),
        "outputs": mapper.output_dim(),
        "train_rows": used,
        "skipped_rows": train.len() - used,
        "residual": report.residual,
        "train_rmse": rmse(&mapper, variant, &train)?,
        "holdout_rows": test.len(),
        "holdout_rmse": rmse(&mapper, variant, &test)?,
    });
    g.stamp(&mut summary);
    write_json(Some(&args.out.join("fit_report.json")), &summary)?;
    write_json(None, &summary)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Mapper directory written by `fit-mapper`.
    #[arg(long)]
    pub mapper: PathBuf,
    /// Subject table holding the mapper's input columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn predict(args: &PredictArgs, g: &Globals) -> CliResult<()> {
    let mapper = PolyMapper::load(&args.mapper)?;
    let table = Table::read(&args.data)?;
    let pop = read_population(&table, mapper.gender)?;
    let idx: Vec<usize> = (0..pop.rows.len()).collect();
    let outputs = g.par_map(&idx, |&i| {
        let mut row = pop.rows[i].clone();
        if !mapper.attribute_names.is_empty() {
            row.attributes = attributes_for(&pop, i, &mapper.attribute_names).unwrap_or_default();
        }
        let x = row.raw_input(&mapper.spec).ok_or_else(|| {
            CliError::format(
                format!("{}:{}", args.data.display(), i + 2),
                "row lacks an input the mapper needs",
            )
        })?;
        match mapper.output_kind {
            OutputKind::Betas => Ok((mapper.apply(&x)?, 0)),
            OutputKind::AttributeScores => {
                let p = s2a(&mapper, &x)?;
                let clamped = p.clamped.iter().filter(|c| **c).count();
                Ok((p.scores, clamped))
            }
        }
    })?;

    let mut headers = vec!["subject_id".to_string()];
    match mapper.output_kind {
        OutputKind::Betas => headers.extend(beta_headers(mapper.output_dim())),
        OutputKind::AttributeScores => {
            headers.extend(mapper.attribute_names.iter().map(|n| format!("a_{}", snake(n))));
            headers.push("clamped".into());
        }
    }
    let rows: Vec<Vec<String>> = outputs
        .iter()
        .zip(&pop.ids)
        .map(|((values, clamped), id)| {
            let mut row = vec![id.clone()];
            row.extend(values.iter().map(|x| fmt_f64(*x)));
            if mapper.output_kind == OutputKind::AttributeScores {
                row.push(clamped.to_string());
            }
            row
        })
        .collect();
    write_csv(args.out.as_deref(), &headers, &rows)
}
