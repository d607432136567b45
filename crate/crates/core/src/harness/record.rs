use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Fit, HarnessError, Scenario};

/// One line of a scenario table. A failed row keeps its place with `NaN`
/// values and the failure reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub values: Vec<f64>,
    pub failure: Option<String>,
    /// Wall-clock cost; reported in the JSON summary only.
    pub runtime_seconds: f64,
}

impl Row {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// A named pass/fail test on a scenario's results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            passed,
            detail: detail.into(),
        }
    }
}

/// Which columns the plot script draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub x: usize,
    pub ys: Vec<usize>,
    pub log_x: bool,
    pub log_y: bool,
    pub y_label: String,
}

/// Results of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub scenario: Scenario,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub fits: BTreeMap<String, Fit>,
    pub checks: Vec<Check>,
    /// Scalar facts about the model, e.g. the critical energy.
    pub info: BTreeMap<String, f64>,
    /// Auxiliary `(x, y)` series that do not fit the row table.
    pub series: BTreeMap<String, Vec<(f64, f64)>>,
    pub plot: PlotSpec,
}

impl SweepRecord {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of column `name`, `NaN` for failed rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    /// Every row completed and every check passed.
    pub fn passed(&self) -> bool {
        self.failed_rows() == 0 && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// CSV text: the columns plus a trailing `status`, floats in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        header.push("status");
        writer.write_record(&header)?;
        for row in &self.rows {
            let mut fields: Vec<String> = row.values.iter().map(|v| format!("{v:?}")).collect();
            fields.push(row.failure.clone().unwrap_or_else(|| "ok".into()));
            writer.write_record(&fields)?;
        }
        let bytes = writer.into_inner().map_err(|e| HarnessError::Io(e.into_error().to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        let summary = Summary {
            scenario: self.scenario,
            passed: self.passed(),
            failed_rows: self.failed_rows(),
            checks: &self.checks,
            fits: &self.fits,
            info: &self.info,
            series: &self.series,
            columns: &self.columns,
            rows: &self.rows,
            runtime_seconds: self.rows.iter().map(|r| r.runtime_seconds).sum(),
        };
        serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Io(e.to_string()))
    }

    /// Gnuplot script reading `csv_name` from its own directory.
    pub fn to_gnuplot(&self, csv_name: &str, png_name: &str) -> String {
        let p = &self.plot;
        let mut s = String::new();
        let _ = writeln!(s, "# {} results", self.scenario);
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set terminal pngcairo size 900,600");
        let _ = writeln!(s, "set output '{png_name}'");
        if p.log_x {
            let _ = writeln!(s, "set logscale x");
        }
        if p.log_y {
            let _ = writeln!(s, "set logscale y");
        }
        let _ = writeln!(s, "set xlabel '{}'", self.columns[p.x].replace('_', " "));
        let _ = writeln!(s, "set ylabel '{}'", p.y_label);
        let curves: Vec<String> = p
            .ys
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let file = if i == 0 { format!("'{csv_name}'") } else { "''".into() };
                format!("{file} using {}:{} with linespoints", p.x + 1, y + 1)
            })
            .collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
        s
    }

    /// Writes `<stem>.csv`, `<stem>.json` and `<stem>.gp` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<OutputPaths, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
        let paths = OutputPaths {
            csv: dir.join(format!("{stem}.csv")),
            json: dir.join(format!("{stem}.json")),
            plot: dir.join(format!("{stem}.gp")),
        };
        let write = |path: &PathBuf, text: String| {
            fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
        };
        write(&paths.csv, self.to_csv()?)?;
        write(&paths.json, self.to_json()?)?;
        write(&paths.plot, self.to_gnuplot(&format!("{stem}.csv"), &format!("{stem}.png")))?;
        Ok(paths)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plot: PathBuf,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: Scenario,
    passed: bool,
    failed_rows: usize,
    checks: &'a [Check],
    fits: &'a BTreeMap<String, Fit>,
    info: &'a BTreeMap<String, f64>,
    series: &'a BTreeMap<String, Vec<(f64, f64)>>,
    columns: &'a [String],
    rows: &'a [Row],
    runtime_seconds: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> SweepRecord {
        SweepRecord {
            scenario: Scenario::Breakdown,
            columns: vec!["eta".into(), "survival".into()],
            rows: vec![
                Row {
                    values: vec![0.2, 0.1 + 0.2],
                    failure: None,
                    runtime_seconds: 1.5,
                },
                Row {
                    values: vec![0.1, f64::NAN],
                    failure: Some("integrator failure, step 0.02".into()),
                    runtime_seconds: 0.5,
                },
            ],
            fits: BTreeMap::new(),
            checks: vec![Check::new("monotone", 1.0, true, "")],
            info: BTreeMap::new(),
            series: BTreeMap::new(),
            plot: PlotSpec {
                x: 0,
                ys: vec![1],
                log_x: true,
                log_y: false,
                y_label: "survival".into(),
            },
        }
    }

    #[test]
    fn csv_round_trips_floats_and_quotes_reasons() {
        let r = record();
        let text = r.to_csv().unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap(), vec!["eta", "survival", "status"]);
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert!(rows[1][1].parse::<f64>().unwrap().is_nan());
        assert_eq!(&rows[1][2], "integrator failure, step 0.02");
        assert!(!text.contains("1.5"), "runtime leaked into CSV");
    }

    #[test]
    fn failed_rows_fail_the_record() {
        let r = record();
        assert_eq!(r.failed_rows(), 1);
        assert!(!r.passed());
    }

    #[test]
    fn json_reports_runtime_and_status() {
        let v: serde_json::Value = serde_json::from_str(&record().to_json().unwrap()).unwrap();
        assert_eq!(v["scenario"], "breakdown");
        assert_eq!(v["passed"], false);
        assert_eq!(v["runtime_seconds"], 2.0);
    }
}
