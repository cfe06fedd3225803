//! `dedup` and `curate`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;
use shapekit::body_model::Gender;
use shapekit::curation::{
    balance_sample, bmi_weighted_pick, candidate_pairs, collect_report, decide_pair, BalanceConfig, EmbeddingSet,
    SubjectRecord, DEFAULT_TAU,
};

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, write_csv, write_json, Table};

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// Embedding set directory of the first source.
    #[arg(long)]
    pub a: PathBuf,
    /// Embedding set directory of the second source.
    #[arg(long)]
    pub b: PathBuf,
    /// Similarity threshold.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Drop a pair when either S or its column means lack an entry above tau.
    #[arg(long)]
    pub strict: bool,
    /// Matched pairs as CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full JSON report including rejected pairs.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn dedup(args: &DedupArgs, g: &Globals) -> CliResult<()> {
    if !(args.tau > 0.0 && args.tau < 1.0) {
        return Err(CliError::invalid(format!("--tau must lie in (0, 1), got {}", args.tau)));
    }
    let a = EmbeddingSet::load(&args.a)?;
    let b = EmbeddingSet::load(&args.b)?;
    a.validate()?;
    b.validate()?;
    if a.dim != b.dim {
        return Err(CliError::from(shapekit::Error::DimensionMismatch {
            field: "embedding dim".into(),
            expected: a.dim,
            actual: b.dim,
        }));
    }
    let pairs = candidate_pairs(&a, &b);
    let decisions = g.par_map(&pairs, |&(i, j)| {
        Ok(decide_pair(&a.subjects[i], &b.subjects[j], args.tau, args.strict)?)
    })?;
    let report = collect_report(&a, &b, &pairs, &decisions, args.tau, args.strict);

    let headers: Vec<String> = ["a", "b", "s_tq"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = report
        .matched
        .iter()
        .map(|m| vec![m.a.clone(), m.b.clone(), fmt_f64(m.s_tq)])
        .collect();
    write_csv(args.out.as_deref(), &headers, &rows)?;

    if let Some(path) = &args.report {
        let mut value = json!({
            "source_a": a.source,
            "source_b": b.source,
            "pairs": pairs.len(),
            "matched_count": report.matched.len(),
            "report": report,
        });
        g.stamp(&mut value);
        write_json(Some(path), &value)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurateMode {
    /// At most `--cap` subjects per (height, weight) bin.
    Balance,
    /// `--count` subjects drawn without replacement with probability ∝ BMI.
    Bmi,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// Subject table: `subject_id`, `gender`, `h_m`, `w_kg`, optional `bmi` and `images`.
    #[arg(long)]
    pub subjects: PathBuf,
    #[arg(long, value_enum, default_value_t = CurateMode::Balance)]
    pub mode: CurateMode,
    /// Height bin width in meters.
    #[arg(long, default_value_t = BalanceConfig::default().bin_h)]
    pub bin_h: f64,
    /// Weight bin width in kilograms.
    #[arg(long, default_value_t = BalanceConfig::default().bin_w)]
    pub bin_w: f64,
    /// Subjects kept per bin.
    #[arg(long, default_value_t = BalanceConfig::default().cap)]
    pub cap: usize,
    /// Number of subjects to draw in `bmi` mode.
    #[arg(long, required_if_eq("mode", "bmi"))]
    pub count: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn read_subjects(table: &Table) -> CliResult<Vec<SubjectRecord>> {
    let id = table.require("subject_id")?;
    let gender = table.column("gender");
    let (h, w) = (table.column("h_m"), table.column("w_kg"));
    let bmi = table.column("bmi");
    let images = table.column("images");
    let opt = |r: usize, c: Option<usize>| c.map_or(Ok(None), |c| table.opt_f64(r, c));
    (0..table.len())
        .map(|r| {
            Ok(SubjectRecord {
                subject_id: table.text(r, id).to_string(),
                gender: match gender {
                    Some(c) if !table.text(r, c).is_empty() => table.text(r, c).parse().map_err(CliError::from)?,
                    _ => Gender::Neutral,
                },
                height: opt(r, h)?,
                weight: opt(r, w)?,
                image_count: opt(r, images)?.map_or(0, |v| v as usize),
                bmi: opt(r, bmi)?,
            })
        })
        .collect()
}

pub fn curate(args: &CurateArgs, g: &Globals) -> CliResult<()> {
    let table = Table::read(&args.subjects)?;
    let subjects = read_subjects(&table)?;
    let mut summary = match args.mode {
        CurateMode::Balance => {
            let config = BalanceConfig {
                bin_h: args.bin_h,
                bin_w: args.bin_w,
                cap: args.cap,
            };
            let res = balance_sample(&subjects, &config, g.seed)?;
            let headers: Vec<String> = ["subject_id", "h_bin", "w_bin"].iter().map(|s| s.to_string()).collect();
            let rows: Vec<Vec<String>> = res
                .selected
                .iter()
                .zip(&res.bins)
                .map(|(id, (hb, wb))| vec![id.clone(), hb.to_string(), wb.to_string()])
                .collect();
            write_csv(args.out.as_deref(), &headers, &rows)?;
            let mut bins = res.bins.clone();
            bins.sort_unstable();
            bins.dedup();
            json!({
                "mode": "balance",
                "subjects": subjects.len(),
                "selected": res.selected.len(),
                "bins": bins.len(),
                "skipped": res.skipped,
                "config": config,
                "seed": g.seed,
            })
        }
        CurateMode::Bmi => {
            let count = args.count.expect("clap requires --count in bmi mode");
            let picks = bmi_weighted_pick(&subjects, count, g.seed)?;
            let headers: Vec<String> = ["subject_id", "draw"].iter().map(|s| s.to_string()).collect();
            let rows: Vec<Vec<String>> = picks
                .iter()
                .enumerate()
                .map(|(k, id)| vec![id.clone(), k.to_string()])
                .collect();
            write_csv(args.out.as_deref(), &headers, &rows)?;
            json!({ "mode": "bmi", "subjects": subjects.len(), "selected": picks.len(), "seed": g.seed })
        }
    };
    if let Some(path) = &args.report {
        g.stamp(&mut summary);
        write_json(Some(path), &summary)?;
    }
    Ok(())
}
