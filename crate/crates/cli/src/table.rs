//! CSV tables with named columns.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// A fully-read CSV file.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::io(path, e))?;
        let headers = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::format(path.display().to_string(), e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn require(&self, name: &str) -> CliResult<usize> {
        self.column(name)
            .ok_or_else(|| CliError::format(self.field(None, name), "missing column"))
    }

    fn field(&self, row: Option<usize>, column: &str) -> String {
        let file = self.path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned());
        match row {
            Some(r) => format!("{file}:{}:{column}", r + 2),
            None => format!("{file}:{column}"),
        }
    }

    pub fn text(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).map_or("", String::as_str)
    }

    /// Parsed value, `None` for an empty cell.
    pub fn opt_f64(&self, row: usize, col: usize) -> CliResult<Option<f64>> {
        let s = self.text(row, col);
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Some)
            .ok_or_else(|| CliError::format(self.field(Some(row), &self.headers[col]), format!("not a number: {s:?}")))
    }

    pub fn f64(&self, row: usize, col: usize) -> CliResult<f64> {
        self.opt_f64(row, col)?
            .ok_or_else(|| CliError::format(self.field(Some(row), &self.headers[col]), "empty cell"))
    }

    /// Columns named `{prefix}{k}` for k = 0, 1, ... in index order.
    pub fn indexed_columns(&self, prefix: &str) -> CliResult<Vec<usize>> {
        let mut found: Vec<(usize, usize)> = Vec::new();
        for (c, h) in self.headers.iter().enumerate() {
            if let Some(k) = h.strip_prefix(prefix).and_then(|k| k.parse::<usize>().ok()) {
                found.push((k, c));
            }
        }
        found.sort_unstable();
        for (i, (k, _)) in found.iter().enumerate() {
            if *k != i {
                return Err(CliError::format(self.field(None, &format!("{prefix}{i}")), "missing column"));
            }
        }
        Ok(found.into_iter().map(|(_, c)| c).collect())
    }

    /// Row `row` of the given columns, all required.
    pub fn vector(&self, row: usize, cols: &[usize]) -> CliResult<Vec<f64>> {
        cols.iter().map(|&c| self.f64(row, c)).collect()
    }

    /// Subject ids, or `row<k>` when the file has no `subject_id` column.
    pub fn ids(&self) -> Vec<String> {
        match self.column("subject_id") {
            Some(c) => (0..self.len()).map(|r| self.text(r, c).to_string()).collect(),
            None => (0..self.len()).map(|r| format!("row{r}")).collect(),
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Snake-case column suffix for an attribute name.
pub fn snake(name: &str) -> String {
    name.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Writes rows to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_csv(path: Option<&Path>, headers: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(headers)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::new("io", e.to_string()))?;
    }
    write_bytes(path, &buf)
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::write(p, bytes).map_err(|e| CliError::io(p, e))
        }
        _ => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::new("io", e.to_string())),
    }
}

pub fn write_json(path: Option<&Path>, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}
