//! Run artifacts: CSV tables, SVG plots and a JSON summary that lists them.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::svg::Plot;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Parse a CSV written by `to_csv` (or any headed CSV).
    pub fn from_csv(name: &str, text: &str) -> Result<Self, LabError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let bad = |e: csv::Error| LabError::Config(format!("{name}: {e}"));
        let header = r.headers().map_err(bad)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()).map_err(bad))
            .collect::<Result<_, _>>()?;
        Ok(Table { name: name.into(), header, rows })
    }

    /// Numeric column by header name.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.header.iter().position(|h| h == name) else {
            return Vec::new();
        };
        self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub experiment: String,
    pub summary: Value,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// False when some reported estimate failed its convergence check.
    pub converged: bool,
}

impl RunArtifact {
    pub fn new(experiment: &str, summary: Value) -> Self {
        RunArtifact { experiment: experiment.into(), summary, tables: Vec::new(), plots: Vec::new(), converged: true }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// `out/<experiment>/fixed`.
    pub fn dir(&self, out: &Path) -> PathBuf {
        out.join(&self.experiment).join("fixed")
    }

    /// The summary as written: the run summary plus relative paths of every
    /// table and plot.
    pub fn full_summary(&self) -> Value {
        json!({
            "experiment": self.experiment,
            "converged": self.converged,
            "summary": self.summary,
            "tables": self.tables.iter().map(|t| t.file_name()).collect::<Vec<_>>(),
            "plots": self.plots.iter().map(|p| p.file_name()).collect::<Vec<_>>(),
        })
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf, LabError> {
        let dir = self.dir(out);
        fs::create_dir_all(&dir)?;
        for t in &self.tables {
            fs::write(dir.join(t.file_name()), t.to_csv())?;
        }
        for p in &self.plots {
            fs::write(dir.join(p.file_name()), p.render())?;
        }
        let mut text = serde_json::to_string_pretty(&self.full_summary())?;
        text.push('\n');
        fs::write(dir.join("summary.json"), text)?;
        Ok(dir)
    }
}

/// Shortest round-trip float text; non-finite values as `nan`, `inf`, `-inf`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}
