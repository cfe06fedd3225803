//! `eval`: P2P20K, V2V, measurement MAE and attribute accuracy.

use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};
use shapekit::anthropometry::{measure, measure_mesh, MeasureConfig, MeasurementSet};
use shapekit::body_model::BodyModel;
use shapekit::eval_metrics::{
    build_point_regressor, measurement_mae, p2p20k, s2a_accuracy, topology_hash, transfer_point_regressor, v2v,
    PointRegressor, ShapeErrorReport, DEFAULT_POINTS,
};
use shapekit::mesh::io::read_mesh;
use shapekit::mesh::TriangleMesh;

use super::{load_model, read_betas, Globals, FIXTURE_MODEL};
use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, fmt_opt, write_csv, write_json, Table};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Body model archive (directory or zip), or `fixture`. Required with
    /// β tables; with meshes it enables measurement errors.
    #[arg(long)]
    pub model: Option<String>,
    /// Predicted β table.
    #[arg(long, requires_all = ["gt", "model"], conflicts_with_all = ["pred_mesh", "gt_mesh"])]
    pub pred: Option<PathBuf>,
    /// Ground-truth β table, paired with `--pred` by row.
    #[arg(long, requires = "pred")]
    pub gt: Option<PathBuf>,
    /// Predicted meshes (OBJ or PLY).
    #[arg(long, num_args = 1.., requires = "gt_mesh")]
    pub pred_mesh: Vec<PathBuf>,
    /// Ground-truth meshes, paired with `--pred-mesh` by position.
    #[arg(long, num_args = 1.., requires = "pred_mesh")]
    pub gt_mesh: Vec<PathBuf>,
    /// Predicted attribute scores (`a_<attribute>` columns).
    #[arg(long, requires = "gt_attributes")]
    pub pred_attributes: Option<PathBuf>,
    /// Ground-truth attribute scores, paired by row.
    #[arg(long, requires = "pred_attributes")]
    pub gt_attributes: Option<PathBuf>,
    /// Surface points per regressor.
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    /// Regressor cache directory; defaults to `<model>.regressors` beside the model.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Always rebuild regressors.
    #[arg(long)]
    pub no_cache: bool,
    /// Per-item CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Aggregate JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// `<parent>/<archive name>.regressors`, beside the model archive.
pub fn default_cache_dir(model: &str) -> Option<PathBuf> {
    if model == FIXTURE_MODEL {
        return None;
    }
    let p = Path::new(model);
    let name = p.file_name()?.to_string_lossy().into_owned();
    Some(p.parent().unwrap_or(Path::new("")).join(format!("{name}.regressors")))
}

pub fn cache_file(dir: &Path, topology: &str, points: usize, seed: u64) -> PathBuf {
    dir.join(format!("{}-p{points}-s{seed}.bin", &topology[..16]))
}

/// Builds the regressor, reusing a cached copy whose header matches.
pub fn cached_regressor(template: &TriangleMesh, points: usize, seed: u64, cache: Option<&Path>) -> CliResult<PointRegressor> {
    let topology = topology_hash(template);
    let file = cache.map(|d| cache_file(d, &topology, points, seed));
    if let Some(f) = file.as_deref().filter(|f| f.exists()) {
        if let Ok(r) = PointRegressor::load(f) {
            if r.topology == topology && r.num_points() == points && r.num_vertices == template.num_vertices() {
                return Ok(r);
            }
        }
    }
    let reg = build_point_regressor(template, points, seed)?;
    if let Some(f) = file {
        if let Some(dir) = f.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        reg.save(&f)?;
    }
    Ok(reg)
}

struct Item {
    id: String,
    p2p: f64,
    v2v: Option<f64>,
    pred_m: Option<MeasurementSet>,
    gt_m: Option<MeasurementSet>,
}

fn eval_betas(args: &EvalArgs, g: &Globals, model: &BodyModel, cache: Option<&Path>) -> CliResult<Vec<Item>> {
    let (pred_path, gt_path) = (args.pred.as_ref().unwrap(), args.gt.as_ref().unwrap());
    let (pt, gtab) = (Table::read(pred_path)?, Table::read(gt_path)?);
    if pt.len() != gtab.len() {
        return Err(CliError::from(shapekit::Error::DimensionMismatch {
            field: "predicted rows".into(),
            expected: gtab.len(),
            actual: pt.len(),
        }));
    }
    let pred = read_betas(&pt, model.num_betas())?;
    let gt = read_betas(&gtab, model.num_betas())?;
    let ids = gtab.ids();
    if pt.column("subject_id").is_some() && gtab.column("subject_id").is_some() {
        for (r, (a, b)) in pt.ids().iter().zip(&ids).enumerate() {
            if a != b {
                return Err(CliError::format(
                    format!("{}:{}:subject_id", pred_path.display(), r + 2),
                    format!("expected {b:?}, got {a:?}"),
                ));
            }
        }
    }
    let reg = cached_regressor(model.template(), args.points, g.seed, cache)?;
    let config = MeasureConfig::default();
    let idx: Vec<usize> = (0..pred.len()).collect();
    g.par_map(&idx, |&i| {
        let vp = model.shaped_vertices(&pred[i])?;
        let vg = model.shaped_vertices(&gt[i])?;
        let ctx = |e: shapekit::Error| CliError::from(e).with("subject_id", ids[i].as_str());
        Ok(Item {
            id: ids[i].clone(),
            p2p: p2p20k(&reg, &vp, &reg, &vg)?,
            v2v: Some(v2v(&vp, &vg)?),
            pred_m: Some(measure(model, &pred[i], &config).map_err(ctx)?),
            gt_m: Some(measure(model, &gt[i], &config).map_err(ctx)?),
        })
    })
}

fn eval_meshes(args: &EvalArgs, g: &Globals, model: Option<&BodyModel>, cache: Option<&Path>) -> CliResult<Vec<Item>> {
    if args.pred_mesh.len() != args.gt_mesh.len() {
        return Err(CliError::from(shapekit::Error::DimensionMismatch {
            field: "predicted meshes".into(),
            expected: args.gt_mesh.len(),
            actual: args.pred_mesh.len(),
        }));
    }
    let config = MeasureConfig::default();
    let pairs: Vec<(&PathBuf, &PathBuf)> = args.pred_mesh.iter().zip(&args.gt_mesh).collect();
    g.par_map(&pairs, |(pp, gp)| {
        let pm = read_mesh(pp)?;
        let gm = read_mesh(gp)?;
        let reg = cached_regressor(&gm, args.points, g.seed, cache)?;
        let pred_reg = if topology_hash(&pm) == reg.topology {
            reg.clone()
        } else {
            transfer_point_regressor(&gm, &pm, &reg)?.regressor
        };
        let same = pm.num_vertices() == gm.num_vertices();
        let measured = |m: &TriangleMesh| -> CliResult<Option<MeasurementSet>> {
            match model {
                Some(model) if m.num_vertices() == model.num_vertices() => {
                    Ok(Some(measure_mesh(m, model.landmarks(), &config)?))
                }
                _ => Ok(None),
            }
        };
        Ok(Item {
            id: gp.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
            p2p: p2p20k(&pred_reg, pm.vertices(), &reg, gm.vertices())?,
            v2v: if same { Some(v2v(pm.vertices(), gm.vertices())?) } else { None },
            pred_m: measured(&pm)?,
            gt_m: measured(&gm)?,
        })
    })
}

fn attribute_report(pred: &Path, gt: &Path) -> CliResult<Value> {
    let (pt, gtab) = (Table::read(pred)?, Table::read(gt)?);
    let names: Vec<String> = gtab
        .headers
        .iter()
        .filter_map(|h| h.strip_prefix("a_").map(str::to_string))
        .collect();
    let gcols: Vec<usize> = names.iter().map(|n| gtab.require(&format!("a_{n}"))).collect::<CliResult<_>>()?;
    let pcols: Vec<usize> = names.iter().map(|n| pt.require(&format!("a_{n}"))).collect::<CliResult<_>>()?;
    let p: Vec<Vec<f64>> = (0..pt.len()).map(|r| pt.vector(r, &pcols)).collect::<CliResult<_>>()?;
    let t: Vec<Vec<f64>> = (0..gtab.len()).map(|r| gtab.vector(r, &gcols)).collect::<CliResult<_>>()?;
    let acc = s2a_accuracy(&p, &t)?;
    let per: Vec<Value> = names
        .iter()
        .zip(&acc.per_attribute)
        .map(|(n, a)| json!({ "attribute": n, "accuracy": a.accuracy, "mae": a.mae, "sd": a.sd }))
        .collect();
    Ok(json!({ "subjects": p.len(), "overall": acc.overall, "per_attribute": per }))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn run(args: &EvalArgs, g: &Globals) -> CliResult<()> {
    let model = args.model.as_deref().map(load_model).transpose()?;
    let cache = if args.no_cache {
        None
    } else {
        args.cache_dir.clone().or_else(|| args.model.as_deref().and_then(default_cache_dir))
    };
    let items = if args.pred.is_some() {
        eval_betas(args, g, model.as_ref().expect("clap requires --model"), cache.as_deref())?
    } else if !args.pred_mesh.is_empty() {
        eval_meshes(args, g, model.as_ref(), cache.as_deref())?
    } else if args.pred_attributes.is_none() {
        return Err(CliError::invalid("nothing to evaluate: pass --pred/--gt, --pred-mesh/--gt-mesh or attribute tables"));
    } else {
        Vec::new()
    };

    let headers: Vec<String> = [
        "subject_id", "p2p20k_mm", "v2v_mm", "height_mm", "weight_kg", "chest_mm", "waist_mm", "hip_mm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::with_capacity(items.len());
    for it in &items {
        let mut row = vec![it.id.clone(), fmt_f64(it.p2p), fmt_opt(it.v2v)];
        match (&it.pred_m, &it.gt_m) {
            (Some(p), Some(t)) => {
                let e = measurement_mae(std::slice::from_ref(p), std::slice::from_ref(t))?;
                row.extend([e.height_mm, e.weight_kg, e.chest_mm, e.waist_mm, e.hip_mm].map(fmt_f64));
            }
            _ => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        rows.push(row);
    }
    if !items.is_empty() {
        write_csv(args.out.as_deref(), &headers, &rows)?;
    }

    if let Some(path) = &args.report {
        let with_m: Vec<&Item> = items.iter().filter(|i| i.pred_m.is_some() && i.gt_m.is_some()).collect();
        let mae = if with_m.is_empty() {
            None
        } else {
            let p: Vec<MeasurementSet> = with_m.iter().map(|i| i.pred_m.unwrap()).collect();
            let t: Vec<MeasurementSet> = with_m.iter().map(|i| i.gt_m.unwrap()).collect();
            Some(measurement_mae(&p, &t)?)
        };
        let shape = ShapeErrorReport {
            p2p20k_mm: mean(items.iter().map(|i| i.p2p)).unwrap_or(0.0),
            v2v_mm: if items.iter().all(|i| i.v2v.is_some()) { mean(items.iter().filter_map(|i| i.v2v)) } else { None },
            mae,
        };
        let attributes = match (&args.pred_attributes, &args.gt_attributes) {
            (Some(p), Some(t)) => attribute_report(p, t)?,
            _ => Value::Null,
        };
        let mut summary = json!({
            "items": items.len(),
            "points": args.points,
            "seed": g.seed,
            "p2p20k_mm": shape.p2p20k_mm,
            "v2v_mm": shape.v2v_mm,
            "mae": shape.mae,
            "attributes": attributes,
        });
        g.stamp(&mut summary);
        write_json(Some(path), &summary)?;
    }
    Ok(())
}
