//! `report`: renders `eval` JSON reports as one table.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::Value;

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::table::{write_bytes, write_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Reports written by `eval --report`.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Row labels, one per input; file stems when omitted.
    #[arg(long, num_args = 1..)]
    pub label: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
    /// Decimal places.
    #[arg(long, default_value_t = 2)]
    pub precision: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const COLUMNS: [(&str, &str); 9] = [
    ("items", "/items"),
    ("p2p20k_mm", "/p2p20k_mm"),
    ("v2v_mm", "/v2v_mm"),
    ("height_mm", "/mae/height_mm"),
    ("weight_kg", "/mae/weight_kg"),
    ("chest_mm", "/mae/chest_mm"),
    ("waist_mm", "/mae/waist_mm"),
    ("hip_mm", "/mae/hip_mm"),
    ("attr_accuracy_pct", "/attributes/overall"),
];

fn cell(v: Option<&Value>, column: &str, precision: usize) -> String {
    match v {
        Some(Value::Number(n)) if column == "items" => n.to_string(),
        Some(Value::Number(n)) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let x = if column == "attr_accuracy_pct" { 100.0 * x } else { x };
            format!("{x:.precision$}")
        }
        _ => String::new(),
    }
}

pub fn run(args: &ReportArgs, _g: &Globals) -> CliResult<()> {
    if !args.label.is_empty() && args.label.len() != args.input.len() {
        return Err(CliError::invalid("give one --label per --input"));
    }
    let mut headers = vec!["model".to_string()];
    headers.extend(COLUMNS.iter().map(|(h, _)| h.to_string()));
    let mut rows = Vec::new();
    for (k, path) in args.input.iter().enumerate() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::format(path.display().to_string(), e.to_string()))?;
        let label = args.label.get(k).cloned().unwrap_or_else(|| {
            path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
        });
        let mut row = vec![label];
        row.extend(COLUMNS.iter().map(|(h, ptr)| cell(doc.pointer(ptr), h, args.precision)));
        rows.push(row);
    }
    match args.format {
        Format::Csv => write_csv(args.out.as_deref(), &headers, &rows),
        Format::Markdown => {
            let mut s = format!("| {} |\n", headers.join(" | "));
            s.push_str(&format!("|{}\n", headers.iter().map(|_| "---|").collect::<String>()));
            for r in &rows {
                s.push_str(&format!("| {} |\n", r.join(" | ")));
            }
            write_bytes(args.out.as_deref(), s.as_bytes())
        }
    }
}
