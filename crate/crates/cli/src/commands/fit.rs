//! `fit-shape`: recovers β from attribute and measurement targets.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;
use shapekit::anthropometry::{measure, MeasureConfig};
use shapekit::shape_fitter::{fit_shape, FitConfig, FitMappers, FitTargets, LossWeights, Method, StopReason};
use shapekit::shape_mappers::{OutputKind, PolyMapper};

use super::{beta_headers, load_model, Globals};
use crate::error::{CliError, CliResult};
use crate::population::{attributes_for, read_population};
use crate::table::{fmt_f64, fmt_opt, write_csv, write_json, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    GaussNewton,
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Term {
    Attr,
    Height,
    Circ,
}

#[derive(Debug, Args)]
pub struct FitShapeArgs {
    /// Body model archive (directory or zip), or `fixture`.
    #[arg(long)]
    pub model: String,
    /// Subject table with target columns (`h_m`, `c_m`, `w_m`, `hip_m`, `a_<attribute>`).
    #[arg(long)]
    pub targets: PathBuf,
    /// S2A mapper; enables the attribute term.
    #[arg(long)]
    pub s2a: Option<PathBuf>,
    /// A*2S mappers offered as initializers.
    #[arg(long, num_args = 1..)]
    pub a2s: Vec<PathBuf>,
    /// Loss terms to use when their targets are present.
    #[arg(long = "use", value_enum, value_delimiter = ',', default_values_t = [Term::Attr, Term::Height, Term::Circ])]
    pub terms: Vec<Term>,
    #[arg(long, default_value_t = LossWeights::default().attr)]
    pub lambda_attr: f64,
    #[arg(long, default_value_t = LossWeights::default().height)]
    pub lambda_height: f64,
    #[arg(long, default_value_t = LossWeights::default().circ)]
    pub lambda_circ: f64,
    #[arg(long, default_value_t = LossWeights::default().reg)]
    pub lambda_reg: f64,
    #[arg(long, default_value_t = FitConfig::default().max_iters)]
    pub max_iters: usize,
    /// Stop when an accepted step changes the loss by less than this.
    #[arg(long, default_value_t = FitConfig::default().tolerance)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::GaussNewton)]
    pub method: MethodArg,
    /// Accept every step even if the loss rises.
    #[arg(long)]
    pub no_backtracking: bool,
    #[arg(long)]
    pub torso_only: bool,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional JSON summary.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Tolerance => "tolerance",
        StopReason::NoDescent => "no_descent",
        StopReason::MaxIterations => "max_iterations",
    }
}

pub fn run(args: &FitShapeArgs, g: &Globals) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let s2a = args.s2a.as_deref().map(PolyMapper::load).transpose()?;
    if let Some(m) = &s2a {
        if m.output_kind != OutputKind::AttributeScores {
            return Err(CliError::invalid("--s2a mapper does not predict attribute scores"));
        }
    }
    let a2s = args
        .a2s
        .iter()
        .map(|p| PolyMapper::load(p))
        .collect::<shapekit::Result<Vec<_>>>()?;
    let attr_names: Vec<String> = s2a.as_ref().map(|m| m.attribute_names.clone()).unwrap_or_default();
    for (m, p) in a2s.iter().zip(&args.a2s) {
        if m.variant.is_some_and(|v| v.uses_attributes()) && m.attribute_names != attr_names {
            return Err(CliError::invalid(format!(
                "initializer {} was fitted on different attributes than the S2A mapper",
                p.display()
            )));
        }
    }
    let mappers = FitMappers { s2a, a2s };

    let table = Table::read(&args.targets)?;
    let pop = read_population(&table, model.gender())?;
    let uses = |t: Term| args.terms.contains(&t);
    let weights = LossWeights {
        attr: args.lambda_attr,
        height: args.lambda_height,
        circ: args.lambda_circ,
        reg: args.lambda_reg,
    };
    let measure_config = MeasureConfig {
        torso_only: args.torso_only,
        ..MeasureConfig::default()
    };
    let config = FitConfig {
        max_iters: args.max_iters,
        tolerance: args.tolerance,
        method: match args.method {
            MethodArg::GaussNewton => Method::GaussNewton,
            MethodArg::GradientDescent => Method::GradientDescent,
        },
        backtracking: !args.no_backtracking,
        measure: measure_config,
        ..FitConfig::default()
    };

    let idx: Vec<usize> = (0..pop.rows.len()).collect();
    let results = g.par_map(&idx, |&i| {
        let row = &pop.rows[i];
        let attributes = if uses(Term::Attr) && mappers.s2a.is_some() {
            attributes_for(&pop, i, &attr_names)
        } else {
            None
        };
        let circ = uses(Term::Circ);
        let targets = FitTargets {
            attributes,
            height: row.height.filter(|_| uses(Term::Height)),
            chest: row.chest.filter(|_| circ),
            waist: row.waist.filter(|_| circ),
            hip: row.hip.filter(|_| circ),
            weights,
        };
        let fit = fit_shape(&model, &mappers, &targets, &config)
            .map_err(|e| CliError::from(e).with("subject_id", pop.ids[i].as_str()))?;
        let m = match fit.measurements {
            Some(m) => Some(m),
            None => measure(&model, &fit.beta, &measure_config).ok(),
        };
        Ok((fit, m))
    })?;

    let mut headers = vec!["subject_id".to_string()];
    headers.extend(beta_headers(model.num_betas()));
    headers.extend(
        [
            "loss", "loss_attr", "loss_height", "loss_circ", "loss_reg", "iterations", "converged", "stop_reason",
            "non_smooth", "init", "height_m", "weight_kg", "chest_m", "waist_m", "hip_m",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let rows: Vec<Vec<String>> = results
        .iter()
        .zip(&pop.ids)
        .map(|((fit, m), id)| {
            let mut row = vec![id.clone()];
            row.extend(fit.beta.as_slice().iter().map(|x| fmt_f64(*x)));
            row.extend([fit.loss, fit.terms.attr, fit.terms.height, fit.terms.circ, fit.terms.reg].map(fmt_f64));
            row.push(fit.iterations.to_string());
            row.push(fit.converged.to_string());
            row.push(stop_name(fit.stop_reason).into());
            row.push(fit.non_smooth_encounters.to_string());
            row.push(fit.initialized_from.map_or_else(|| "zeros".to_string(), |v| v.name().to_string()));
            match m {
                Some(m) => row.extend(m.to_array().map(fmt_f64)),
                None => row.extend(std::iter::repeat_n(fmt_opt(None), 5)),
            }
            row
        })
        .collect();
    write_csv(args.out.as_deref(), &headers, &rows)?;

    if let Some(path) = &args.report {
        let mut stops: BTreeMap<&str, usize> = BTreeMap::new();
        for (fit, _) in &results {
            *stops.entry(stop_name(fit.stop_reason)).or_default() += 1;
        }
        let n = results.len().max(1) as f64;
        let mut summary = json!({
            "subjects": results.len(),
            "converged": results.iter().filter(|(f, _)| f.converged).count(),
            "mean_loss": results.iter().map(|(f, _)| f.loss).sum::<f64>() / n,
            "mean_iterations": results.iter().map(|(f, _)| f.iterations as f64).sum::<f64>() / n,
            "non_smooth_encounters": results.iter().map(|(f, _)| f.non_smooth_encounters).sum::<usize>(),
            "stop_reasons": stops,
            "weights": weights,
            "config": config,
        });
        g.stamp(&mut summary);
        write_json(Some(path), &summary)?;
    }
    Ok(())
}
