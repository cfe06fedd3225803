//! `measure`: anthropometric measurements for β rows or mesh files.

use std::path::PathBuf;

use clap::Args;
use shapekit::anthropometry::{measure, measure_mesh, MeasureConfig, DEFAULT_DENSITY};
use shapekit::mesh::io::read_mesh;

use super::{load_model, read_betas, Globals};
use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, write_csv, Table};

pub const OUTPUT_COLUMNS: [&str; 5] = ["height_m", "weight_kg", "chest_m", "waist_m", "hip_m"];

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Body model archive (directory or zip), or `fixture`.
    #[arg(long)]
    pub model: String,
    /// CSV with `beta_<k>` columns, one body per row.
    #[arg(long, conflicts_with = "mesh", required_unless_present = "mesh")]
    pub betas: Option<PathBuf>,
    /// OBJ or PLY meshes in the model's topology (landmarks come from the model).
    #[arg(long, num_args = 1..)]
    pub mesh: Vec<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict each circumference to the section loop containing its landmark.
    #[arg(long)]
    pub torso_only: bool,
    /// Body density in kg/m³.
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    pub density: f64,
    /// Upper bound on any circumference, in meters.
    #[arg(long, default_value_t = MeasureConfig::default().max_circumference)]
    pub max_circumference: f64,
}

pub fn run(args: &MeasureArgs, g: &Globals) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let config = MeasureConfig {
        density: args.density,
        max_circumference: args.max_circumference,
        torso_only: args.torso_only,
    };
    let (ids, sets) = if let Some(path) = &args.betas {
        let table = Table::read(path)?;
        let betas = read_betas(&table, model.num_betas())?;
        let idx: Vec<usize> = (0..betas.len()).collect();
        let sets = g.par_map(&idx, |&i| {
            measure(&model, &betas[i], &config).map_err(|e| CliError::from(e).with("row", i + 2))
        })?;
        let ids = table.column("subject_id").map(|_| table.ids());
        (ids, sets)
    } else {
        let sets = g.par_map(&args.mesh, |p| {
            let mesh = read_mesh(p)?;
            if mesh.num_vertices() != model.num_vertices() {
                return Err(CliError::from(shapekit::Error::DimensionMismatch {
                    field: format!("{} vertices", p.display()),
                    expected: model.num_vertices(),
                    actual: mesh.num_vertices(),
                }));
            }
            measure_mesh(&mesh, model.landmarks(), &config)
                .map_err(|e| CliError::from(e).with("mesh", p.display().to_string()))
        })?;
        let ids = args
            .mesh
            .iter()
            .map(|p| p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()))
            .collect();
        (Some(ids), sets)
    };

    let mut headers: Vec<String> = Vec::new();
    if ids.is_some() {
        headers.push("subject_id".into());
    }
    headers.extend(OUTPUT_COLUMNS.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = sets
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut row: Vec<String> = ids.as_ref().map(|v| vec![v[i].clone()]).unwrap_or_default();
            row.extend(m.to_array().iter().map(|x| fmt_f64(*x)));
            row
        })
        .collect();
    write_csv(args.out.as_deref(), &headers, &rows)
}
