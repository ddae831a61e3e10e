//! Experiment reports: one CSV per experiment with a fixed header row,
//! deterministic row order, and trailing `PASS|FAIL <criterion> <measured>
//! <bound>` summary lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct SummaryLine {
    pub pass: bool,
    pub criterion: String,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summaries: Vec<SummaryLine>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summaries: Vec::new(),
        }
    }

    pub fn push_row(&mut self, values: Vec<String>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn summary(&mut self, pass: bool, criterion: impl Into<String>, measured: f64, bound: f64) {
        self.summaries.push(SummaryLine {
            pass,
            criterion: criterion.into(),
            measured,
            bound,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.summaries.iter().all(|s| s.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                if s.pass { "PASS" } else { "FAIL" },
                s.criterion,
                s.measured,
                s.bound
            );
        }
        out
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join(format!("{}.csv", self.name));
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}
