//! CSV and JSON artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::run::{dimensional, MonteCarloResult, SimulationRun};
use super::truth::TruthTrajectory;
use crate::dynamics::CrtbpParams;
use crate::error::{NavError, Result};
use crate::observability::{EffectivenessSeries, STATE_LABELS};
use crate::radiometrics::ObservableKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Column-oriented series, epoch first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

fn nums(v: impl IntoIterator<Item = f64>) -> Vec<Cell> {
    v.into_iter().map(Cell::Num).collect()
}

fn io_err(path: &Path, source: std::io::Error) -> NavError {
    NavError::Io { path: path.to_path_buf(), source }
}

/// Files produced by one command.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
}

impl RunArtifacts {
    /// Every listed file exists and parses as its extension says.
    pub fn verify(&self) -> Result<()> {
        for f in &self.files {
            let text = fs::read_to_string(f).map_err(|e| io_err(f, e))?;
            match f.extension().and_then(|e| e.to_str()) {
                Some("json") => {
                    serde_json::from_str::<serde_json::Value>(&text)
                        .map_err(|source| NavError::Json { path: f.clone(), source })?;
                }
                _ => {
                    let mut rdr = csv::Reader::from_reader(text.as_bytes());
                    for rec in rdr.records() {
                        rec.map_err(|source| NavError::Csv { path: f.clone(), source })?;
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn write_table(dir: &Path, stem: &str, table: &Table, format: OutputFormat) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        OutputFormat::Csv => {
            let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
            let csv_err = |source| NavError::Csv { path: path.clone(), source };
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
            }
            w.flush().map_err(|e| io_err(&path, e))?;
        }
        OutputFormat::Json => write_json_file(&path, table)?,
    }
    Ok(path)
}

fn write_json_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| NavError::Json { path: path.to_path_buf(), source })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    write_json_file(&path, value)?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Truth in the barycentric rotating frame, km and km/s.
pub fn truth_table(truth: &TruthTrajectory, units: &CrtbpParams) -> Table {
    let mut columns = vec!["epoch_days".to_string()];
    for (i, l) in STATE_LABELS.iter().enumerate() {
        columns.push(format!("{l}_{}", if i % 6 < 3 { "km" } else { "km_s" }));
    }
    let rows = truth
        .epochs
        .iter()
        .zip(&truth.states)
        .map(|(&t, [a, b])| {
            let mut row = vec![Cell::Num(units.nd_to_days(t))];
            row.extend(nums(dimensional(a, units).iter().copied()));
            row.extend(nums(dimensional(b, units).iter().copied()));
            row
        })
        .collect();
    Table { columns, rows }
}

fn state_unit(i: usize) -> (&'static str, fn(&CrtbpParams) -> f64) {
    if i % 6 < 3 {
        ("m", |u| u.l_star_km * 1e3)
    } else {
        ("mm_s", |u| u.v_star_km_s() * 1e6)
    }
}

fn residual_scale(kind: ObservableKind, units: &CrtbpParams) -> f64 {
    match kind {
        ObservableKind::Range => units.l_star_km * 1e3,
        ObservableKind::RangeRate => units.v_star_km_s() * 1e6,
    }
}

/// Estimation errors, 1σ and residuals of one run. Errors and sigmas are in m
/// and mm/s, residuals in m (range) or mm/s (range-rate).
pub fn estimates_table(run: &SimulationRun, cfg: &ScenarioConfig) -> Table {
    let units = cfg.units();
    let mut columns = vec!["epoch_days".to_string()];
    for (i, l) in STATE_LABELS.iter().enumerate() {
        columns.push(format!("err_{l}_{}", state_unit(i).0));
    }
    for (i, l) in STATE_LABELS.iter().enumerate() {
        columns.push(format!("sigma_{l}_{}", state_unit(i).0));
    }
    let kinds = &cfg.link.measurements;
    if kinds.len() == 1 {
        columns.push("residual".into());
    } else {
        columns.extend(kinds.iter().map(|k| format!("residual_{}", k.name())));
    }
    let f = &run.filter.final_state;
    let bias = f.bias_index;
    let drift = f.drift_index;
    if bias.is_some() {
        columns.extend(["bias_m".to_string(), "sigma_bias_m".to_string()]);
    }
    if drift.is_some() {
        columns.extend(["drift_m_s".to_string(), "sigma_drift_m_s".to_string()]);
    }
    let scales: Vec<f64> = (0..12).map(|i| state_unit(i).1(&units)).collect();
    let m = units.l_star_km * 1e3;
    let ms = units.v_star_km_s() * 1e3;
    let rows = run
        .filter
        .records
        .iter()
        .map(|r| {
            let mut row = vec![Cell::Num(units.nd_to_days(r.epoch))];
            let e = r.error.unwrap_or_default();
            row.extend(nums((0..12).map(|i| e[i] * scales[i])));
            row.extend(nums((0..12).map(|i| r.sigma[i] * scales[i])));
            for (i, k) in kinds.iter().enumerate() {
                let v = r.residuals.get(i).map_or(f64::NAN, |x| x * residual_scale(k.observable(), &units));
                row.push(Cell::Num(v));
            }
            if let Some(b) = bias {
                row.extend(nums([r.x[b] * m, r.sigma[b] * m]));
            }
            if let Some(d) = drift {
                row.extend(nums([r.x[d] * ms, r.sigma[d] * ms]));
            }
            row
        })
        .collect();
    Table { columns, rows }
}

pub fn measurements_table(run: &SimulationRun, units: &CrtbpParams) -> Table {
    let columns = ["epoch_days", "type", "value", "sigma", "bias_truth", "unit"].map(String::from).to_vec();
    let rows = run
        .measurements
        .iter()
        .map(|m| {
            let unit = match m.kind.observable() {
                ObservableKind::Range => "m",
                ObservableKind::RangeRate => "mm/s",
            };
            vec![
                Cell::Num(units.nd_to_days(m.epoch)),
                Cell::Text(m.kind.name().into()),
                Cell::Num(m.value),
                Cell::Num(m.sigma),
                Cell::Num(m.bias_truth),
                Cell::Text(unit.into()),
            ]
        })
        .collect();
    Table { columns, rows }
}

pub fn effectiveness_table(series: &EffectivenessSeries, units: &CrtbpParams) -> Table {
    let columns = ["epoch_days", "effectiveness_lumio", "effectiveness_lpf"].map(String::from).to_vec();
    let rows = series
        .epochs
        .iter()
        .enumerate()
        .map(|(k, &t)| nums([units.nd_to_days(t), series.values[0][k], series.values[1][k]]))
        .collect();
    Table { columns, rows }
}

/// Cross-run RMSE and RMS 1σ per epoch.
pub fn rmse_table(result: &MonteCarloResult) -> Table {
    let mut columns = vec!["epoch_days".to_string()];
    for sc in ["lumio", "lpf"] {
        for q in ["rmse_pos_m", "sigma_pos_m", "rmse_vel_mm_s", "sigma_vel_mm_s"] {
            columns.push(format!("{q}_{sc}"));
        }
    }
    let rows = result
        .epochs
        .iter()
        .map(|s| {
            let mut row = vec![Cell::Num(s.epoch_days)];
            for j in 0..2 {
                row.extend(nums([s.rmse_pos_m[j], s.sigma_pos_m[j], s.rmse_vel_mm_s[j], s.sigma_vel_mm_s[j]]));
            }
            row
        })
        .collect();
    Table { columns, rows }
}
