use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Outcome of one configured check: the largest value of a residual column
/// compared against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub fatal: bool,
}

impl CheckOutcome {
    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Tabulated samples of a run, its check outcomes and diagnostics.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub name: String,
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub checks: Vec<CheckOutcome>,
    /// Extreme value of every residual column (minimum for `*min_eigenvalue`
    /// columns, maximum otherwise).
    pub diagnostics: Vec<(String, f64)>,
    pub csv_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.fatal || c.passed())
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Writes `<name>.csv` and `<name>_summary.csv` into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        write_table(
            &csv_path,
            &self.columns,
            self.rows
                .iter()
                .map(|r| r.iter().map(|&x| fmt(x)).collect()),
        )?;

        let summary_path = dir.join(format!("{}_summary.csv", self.name));
        let header: Vec<String> = ["name", "kind", "value", "tolerance", "fatal", "status"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let checks = self.checks.iter().map(|c| {
            vec![
                c.name.clone(),
                "check".into(),
                fmt(c.value),
                fmt(c.tolerance),
                c.fatal.to_string(),
                if c.passed() { "pass" } else { "fail" }.into(),
            ]
        });
        let diagnostics = self.diagnostics.iter().map(|(n, v)| {
            vec![
                n.clone(),
                "diagnostic".into(),
                fmt(*v),
                String::new(),
                String::new(),
                String::new(),
            ]
        });
        write_table(&summary_path, &header, checks.chain(diagnostics))?;
        self.csv_path = Some(csv_path);
        self.summary_path = Some(summary_path);
        Ok(())
    }
}

/// Seventeen significant digits in scientific notation.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_table(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
