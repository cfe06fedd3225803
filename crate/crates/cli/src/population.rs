//! Subject-table CSV: `subject_id, gender, h_m, w_kg, c_m, w_m, hip_m`,
//! then `a_<attribute>` columns, then `beta_<k>` columns. Measurement,
//! attribute and beta columns are each optional; empty cells are missing.

use shapekit::anthropometry::MeasurementSet;
use shapekit::body_model::Gender;
use shapekit::shape_mappers::TrainingRow;

use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, snake, Table};

pub const MEASUREMENT_COLUMNS: [&str; 5] = ["h_m", "w_kg", "c_m", "w_m", "hip_m"];

pub fn population_headers(attributes: &[String], num_betas: usize) -> Vec<String> {
    let mut h: Vec<String> = ["subject_id", "gender"].iter().map(|s| s.to_string()).collect();
    h.extend(MEASUREMENT_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(attributes.iter().map(|a| format!("a_{}", snake(a))));
    h.extend((0..num_betas).map(|k| format!("beta_{k}")));
    h
}

pub fn population_row(
    id: &str,
    gender: Gender,
    m: Option<&MeasurementSet>,
    attributes: &[f64],
    beta: &[f64],
) -> Vec<String> {
    let mut row = vec![id.to_string(), gender.to_string()];
    match m {
        Some(m) => row.extend(m.to_array().iter().map(|x| fmt_f64(*x))),
        None => row.extend(std::iter::repeat_n(String::new(), 5)),
    }
    row.extend(attributes.iter().map(|x| fmt_f64(*x)));
    row.extend(beta.iter().map(|x| fmt_f64(*x)));
    row
}

/// Parsed subject table.
#[derive(Debug, Clone)]
pub struct Population {
    pub ids: Vec<String>,
    /// Attribute names as they appear after the `a_` prefix.
    pub attribute_names: Vec<String>,
    pub rows: Vec<TrainingRow>,
    /// Which rows carry a complete attribute vector.
    pub has_attributes: Vec<bool>,
}

pub fn read_population(table: &Table, default_gender: Gender) -> CliResult<Population> {
    let gender_col = table.column("gender");
    let meas: Vec<Option<usize>> = MEASUREMENT_COLUMNS.iter().map(|c| table.column(c)).collect();
    let attr_cols: Vec<(usize, String)> = table
        .headers
        .iter()
        .enumerate()
        .filter_map(|(c, h)| h.strip_prefix("a_").map(|n| (c, n.to_string())))
        .collect();
    let beta_cols = table.indexed_columns("beta_")?;
    let mut rows = Vec::with_capacity(table.len());
    let mut has_attributes = Vec::with_capacity(table.len());
    for r in 0..table.len() {
        let gender = match gender_col {
            Some(c) if !table.text(r, c).is_empty() => table
                .text(r, c)
                .parse()
                .map_err(|e: shapekit::Error| CliError::from(e).with("row", r + 2))?,
            _ => default_gender,
        };
        let m = |i: usize| -> CliResult<Option<f64>> {
            match meas[i] {
                Some(c) => table.opt_f64(r, c),
                None => Ok(None),
            }
        };
        let attrs: Vec<Option<f64>> = attr_cols
            .iter()
            .map(|(c, _)| table.opt_f64(r, *c))
            .collect::<CliResult<_>>()?;
        let complete = !attrs.is_empty() && attrs.iter().all(Option::is_some);
        has_attributes.push(complete);
        let beta = if beta_cols.is_empty() { Vec::new() } else { table.vector(r, &beta_cols)? };
        rows.push(TrainingRow {
            gender,
            attributes: if complete { attrs.into_iter().flatten().collect() } else { Vec::new() },
            beta,
            height: m(0)?,
            weight: m(1)?,
            chest: m(2)?,
            waist: m(3)?,
            hip: m(4)?,
        });
    }
    Ok(Population {
        ids: table.ids(),
        attribute_names: attr_cols.into_iter().map(|(_, n)| n).collect(),
        rows,
        has_attributes,
    })
}

/// Attribute vector of one row reordered to `names` (snake-cased).
pub fn attributes_for(
    pop: &Population,
    row: usize,
    names: &[String],
) -> Option<Vec<f64>> {
    if !pop.has_attributes[row] {
        return None;
    }
    names
        .iter()
        .map(|n| {
            let key = snake(n);
            pop.attribute_names
                .iter()
                .position(|a| *a == key)
                .map(|i| pop.rows[row].attributes[i])
        })
        .collect()
}
