//! File formats: history CSV, matrix dumps, dataset CSV and run metadata.

use std::fs;
use std::io::Write;
use std::path::Path;

use grokbench_core::{Dataset, Mat, MetricsRecord};

use crate::error::CliError;

pub const HISTORY_COLUMNS: [&str; 8] = [
    "iter",
    "train_loss",
    "train_acc",
    "test_loss",
    "test_acc",
    "correct_class_test_loss",
    "circulant_deviation",
    "agop_alignment",
];

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e6)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

const TASK_COLUMNS: [&str; 4] = ["task0_loss", "task0_acc", "task1_loss", "task1_acc"];

pub fn write_history(path: &Path, history: &[MetricsRecord]) -> Result<(), CliError> {
    let multitask = history.first().is_some_and(|r| !r.tasks.is_empty());
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = HISTORY_COLUMNS.to_vec();
    if multitask {
        header.extend(TASK_COLUMNS);
    }
    w.write_record(&header)?;
    for r in history {
        let mut row = vec![
            r.iter.to_string(),
            fmt_f64(r.train_loss),
            fmt_f64(r.train_acc),
            fmt_f64(r.test_loss),
            fmt_f64(r.test_acc),
            fmt_f64(r.correct_class_test_loss),
            fmt_f64(r.circulant_deviation),
            fmt_f64(r.agop_alignment),
        ];
        if multitask {
            for t in &r.tasks {
                row.push(fmt_f64(t.loss));
                row.push(fmt_f64(t.acc));
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}

/// A numeric CSV table: header plus one `Vec<f64>` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| CliError::Format {
                    path: path.to_path_buf(),
                    reason: format!("non-numeric value {v:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if columns.is_empty() || rows.is_empty() {
        return Err(CliError::EmptyCsv {
            path: path.to_path_buf(),
        });
    }
    Ok(Table { columns, rows })
}

/// `# rows=R cols=C`, then one comma-separated line per row.
pub fn format_matrix(m: &Mat) -> String {
    let mut s = format!("# rows={} cols={}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn write_matrix(path: &Path, m: &Mat) -> Result<(), CliError> {
    fs::write(path, format_matrix(m)).map_err(CliError::io(path))
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Mat, CliError> {
    let bad = |reason: String| CliError::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let dims = header
        .trim()
        .strip_prefix('#')
        .and_then(|h| {
            let mut rows = None;
            let mut cols = None;
            for tok in h.split_whitespace() {
                if let Some(v) = tok.strip_prefix("rows=") {
                    rows = v.parse::<usize>().ok();
                } else if let Some(v) = tok.strip_prefix("cols=") {
                    cols = v.parse::<usize>().ok();
                }
            }
            rows.zip(cols)
        })
        .ok_or_else(|| bad(format!("expected `# rows=R cols=C`, got {header:?}")))?;
    let mut data = Vec::with_capacity(dims.0 * dims.1);
    let mut count = 0;
    for line in lines {
        count += 1;
        let before = data.len();
        for tok in line.split(',') {
            data.push(tok.trim().parse::<f64>().map_err(|_| bad(format!("bad number {tok:?}")))?);
        }
        if data.len() - before != dims.1 {
            return Err(bad(format!("row {count} has {} values, expected {}", data.len() - before, dims.1)));
        }
    }
    if count != dims.0 {
        return Err(bad(format!("found {count} rows, header says {}", dims.0)));
    }
    Mat::from_vec(dims.0, dims.1, data).map_err(|e| bad(e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<Mat, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_matrix(&text, path)
}

/// `a,b,label,split`, plus a `task` column for two-task data.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<(), CliError> {
    let mut split = vec!["test"; data.len()];
    for &i in data.train_idx() {
        split[i] = "train";
    }
    let mut w = csv::Writer::from_path(path)?;
    if data.is_multitask() {
        w.write_record(["a", "b", "label", "split", "task"])?;
    } else {
        w.write_record(["a", "b", "label", "split"])?;
    }
    for (i, row) in data.rows().iter().enumerate() {
        let mut rec = vec![row.a.to_string(), row.b.to_string(), row.label.to_string(), split[i].to_string()];
        if data.is_multitask() {
            rec.push(data.task_of(i).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(CliError::io(path))?;
    f.write_all(text.as_bytes()).map_err(CliError::io(path))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}
