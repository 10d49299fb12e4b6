//! CSV tables (RFC 4180, CRLF line ends, 17 significant digits) and the
//! single writer that puts tables, reports and charts on disk.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hypharm::transforms::csv_number;
use hypharm::ExperimentReport;

use crate::svg::{line_chart, Series};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let line = |fields: Vec<String>| fields.join(",") + "\r\n";
        out.push_str(&line(self.header.iter().map(|h| quote(h)).collect()));
        for row in &self.rows {
            out.push_str(&line(
                row.iter()
                    .map(|c| match c {
                        Cell::Num(x) => csv_number(*x),
                        Cell::Text(s) => quote(s),
                    })
                    .collect(),
            ));
        }
        out
    }

    /// Numeric column `name`, when present.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        self.rows
            .iter()
            .map(|r| match &r[j] {
                Cell::Num(x) => Some(*x),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

/// A line chart of columns of one table.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub name: String,
    pub title: String,
    pub table: String,
    pub x: String,
    pub ys: Vec<String>,
    pub log_y: bool,
}

impl Chart {
    pub fn new(name: &str, title: &str, table: &str, x: &str, ys: &[&str]) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            table: table.into(),
            x: x.into(),
            ys: ys.iter().map(|s| s.to_string()).collect(),
            log_y: false,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    /// Renders from the table's own columns.
    pub fn render(&self, tables: &[Table]) -> anyhow::Result<String> {
        let t = tables
            .iter()
            .find(|t| t.name == self.table)
            .with_context(|| {
                format!("chart {} refers to missing table {}", self.name, self.table)
            })?;
        let col = |c: &str| {
            t.column(c)
                .with_context(|| format!("chart {} refers to missing column {c}", self.name))
        };
        let x = col(&self.x)?;
        let series = self
            .ys
            .iter()
            .map(|y| {
                Ok(Series {
                    label: y.clone(),
                    y: col(y)?,
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(line_chart(&self.title, &self.x, &x, &series, self.log_y))
    }
}

/// Everything one command produced, before anything is written.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub reports: Vec<ExperimentReport>,
    pub charts: Vec<Chart>,
    /// Human-readable reasons for failure; empty on success.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

pub struct WriteOptions {
    pub json: bool,
    pub svg: bool,
    pub config_hash: Option<String>,
}

fn timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("{secs}")
}

/// Writes CSV tables always, JSON reports and SVG charts on request.
/// Returns the written paths.
pub fn write_outcome(
    stem: &str,
    outcome: &Outcome,
    dir: &Path,
    opts: &WriteOptions,
) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    for t in &outcome.tables {
        put(format!("{}.csv", t.name), t.to_csv())?;
    }
    if opts.json {
        let stamp = timestamp();
        let reports: Vec<ExperimentReport> = outcome
            .reports
            .iter()
            .cloned()
            .map(|mut r| {
                r.config_hash = opts.config_hash.clone();
                r.timestamp = Some(stamp.clone());
                r
            })
            .collect();
        put(
            format!("{stem}_reports.json"),
            serde_json::to_string_pretty(&reports)?,
        )?;
    }
    if opts.svg {
        for c in &outcome.charts {
            put(format!("{}.svg", c.name), c.render(&outcome.tables)?)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_precision() {
        let mut t = Table::new("t", &["id", "x"]);
        t.push(vec!["a,\"b\"".into(), 0.1.into()]);
        let csv = t.to_csv();
        assert_eq!(csv, "id,x\r\n\"a,\"\"b\"\"\",1.0000000000000001e-1\r\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn charts_only_use_table_columns() {
        let mut t = Table::new("t", &["x", "y"]);
        t.push(vec![0.0.into(), 1.0.into()]);
        t.push(vec![1.0.into(), 2.0.into()]);
        let tables = vec![t];
        assert!(Chart::new("c", "c", "t", "x", &["y"])
            .render(&tables)
            .unwrap()
            .starts_with("<svg"));
        assert!(Chart::new("c", "c", "t", "x", &["z"])
            .render(&tables)
            .is_err());
        assert!(Chart::new("c", "c", "u", "x", &["y"])
            .render(&tables)
            .is_err());
    }
}
