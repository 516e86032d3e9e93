//! Per-step aggregate metrics and their CSV/JSON export.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{Firm, Household, LimitingFactor, Sector};
use crate::error::{Error, Result};

/// One row of the metrics time series. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFrame {
    pub step: u32,
    pub year: f64,
    pub mean_production: f64,
    pub mean_production_commodity: f64,
    pub mean_production_manufacturer: f64,
    pub mean_firm_money: f64,
    pub mean_firm_money_commodity: f64,
    pub mean_firm_money_manufacturer: f64,
    pub mean_household_money: f64,
    pub mean_labor_supplied: f64,
    pub mean_price: f64,
    pub mean_price_commodity: f64,
    pub mean_price_manufacturer: f64,
    pub mean_wage: f64,
    pub mean_wage_commodity: f64,
    pub mean_wage_manufacturer: f64,
    pub unemployment_rate: f64,
    pub share_labor_limited: f64,
    pub share_capital_limited: f64,
    pub share_input_limited: f64,
    pub producing_firms: usize,
    pub damaged_firms: usize,
    pub relocated_households: usize,
    pub failed_firms: usize,
    pub replaced_firms: usize,
    pub entry_endowments: f64,
    pub capital_purchases: f64,
    pub removed_money: f64,
    pub total_money: f64,
    pub ledger_imbalance: f64,
}

/// Step-level counts and flows the engine hands to [`MetricsFrame::collect`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepFlows {
    pub damaged_firms: usize,
    pub relocated_households: usize,
    pub failed_firms: usize,
    pub replaced_firms: usize,
    pub unemployment: f64,
    pub entry_endowments: f64,
    pub capital_purchases: f64,
    pub removed_money: f64,
    pub total_money: f64,
    pub ledger_imbalance: f64,
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl MetricsFrame {
    pub fn collect(
        step: u32,
        year: f64,
        firms: &[Firm],
        households: &[Household],
        flows: &StepFlows,
    ) -> Self {
        let by = |sector: Sector, pick: fn(&Firm) -> f64| {
            mean(firms.iter().filter(|f| f.sector == sector).map(pick))
        };
        let producing: Vec<&Firm> = firms
            .iter()
            .filter(|f| f.limiting_factor != LimitingFactor::None)
            .collect();
        let share = |lf: LimitingFactor| {
            if producing.is_empty() {
                0.0
            } else {
                producing.iter().filter(|f| f.limiting_factor == lf).count() as f64
                    / producing.len() as f64
            }
        };
        MetricsFrame {
            step,
            year,
            mean_production: mean(firms.iter().map(|f| f.production)),
            mean_production_commodity: by(Sector::Commodity, |f| f.production),
            mean_production_manufacturer: by(Sector::Manufacturer, |f| f.production),
            mean_firm_money: mean(firms.iter().map(|f| f.money)),
            mean_firm_money_commodity: by(Sector::Commodity, |f| f.money),
            mean_firm_money_manufacturer: by(Sector::Manufacturer, |f| f.money),
            mean_household_money: mean(households.iter().map(|h| h.money)),
            mean_labor_supplied: mean(households.iter().map(|h| h.labor_supplied)),
            mean_price: mean(firms.iter().map(|f| f.price)),
            mean_price_commodity: by(Sector::Commodity, |f| f.price),
            mean_price_manufacturer: by(Sector::Manufacturer, |f| f.price),
            mean_wage: mean(firms.iter().map(|f| f.wage)),
            mean_wage_commodity: by(Sector::Commodity, |f| f.wage),
            mean_wage_manufacturer: by(Sector::Manufacturer, |f| f.wage),
            unemployment_rate: flows.unemployment,
            share_labor_limited: share(LimitingFactor::Labor),
            share_capital_limited: share(LimitingFactor::Capital),
            share_input_limited: share(LimitingFactor::Input),
            producing_firms: producing.len(),
            damaged_firms: flows.damaged_firms,
            relocated_households: flows.relocated_households,
            failed_firms: flows.failed_firms,
            replaced_firms: flows.replaced_firms,
            entry_endowments: flows.entry_endowments,
            capital_purchases: flows.capital_purchases,
            removed_money: flows.removed_money,
            total_money: flows.total_money,
            ledger_imbalance: flows.ledger_imbalance,
        }
    }
}

/// The CSV header, in column order.
pub const CSV_COLUMNS: &[&str] = &[
    "step",
    "year",
    "mean_production",
    "mean_production_commodity",
    "mean_production_manufacturer",
    "mean_firm_money",
    "mean_firm_money_commodity",
    "mean_firm_money_manufacturer",
    "mean_household_money",
    "mean_labor_supplied",
    "mean_price",
    "mean_price_commodity",
    "mean_price_manufacturer",
    "mean_wage",
    "mean_wage_commodity",
    "mean_wage_manufacturer",
    "unemployment_rate",
    "share_labor_limited",
    "share_capital_limited",
    "share_input_limited",
    "producing_firms",
    "damaged_firms",
    "relocated_households",
    "failed_firms",
    "replaced_firms",
    "entry_endowments",
    "capital_purchases",
    "removed_money",
    "total_money",
    "ledger_imbalance",
];

/// End-of-run aggregates written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_frame: Option<MetricsFrame>,
    pub mean_final_price: Option<f64>,
    pub mean_final_production: Option<f64>,
    pub total_replaced_firms: usize,
    pub total_entry_endowments: f64,
    pub total_capital_purchases: f64,
    pub total_removed_money: f64,
    pub max_abs_ledger_imbalance: f64,
}

impl RunSummary {
    pub fn from_series(series: &[MetricsFrame]) -> Self {
        let last = series.last();
        RunSummary {
            steps: series.len(),
            final_frame: last.cloned(),
            mean_final_price: last.map(|f| f.mean_price),
            mean_final_production: last.map(|f| f.mean_production),
            total_replaced_firms: series.iter().map(|f| f.replaced_firms).sum(),
            total_entry_endowments: series.iter().map(|f| f.entry_endowments).sum(),
            total_capital_purchases: series.iter().map(|f| f.capital_purchases).sum(),
            total_removed_money: series.iter().map(|f| f.removed_money).sum(),
            max_abs_ledger_imbalance: series
                .iter()
                .map(|f| f.ledger_imbalance.abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Step-wise mean over several runs of equal length. Count columns are
/// rounded to the nearest integer.
pub fn average_series(runs: &[Vec<MetricsFrame>]) -> Result<Vec<MetricsFrame>> {
    let Some(first) = runs.first() else {
        return Err(Error::EmptySeries);
    };
    let len = first.len();
    if runs.iter().any(|r| r.len() != len) {
        return Err(Error::InvalidConfig("cannot average runs of different lengths".into()));
    }
    let n = runs.len() as f64;
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let rows = runs
            .iter()
            .map(|r| serde_json::to_value(&r[t]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut mean = serde_json::Map::new();
        for (key, v0) in rows[0].as_object().expect("frames serialize as objects") {
            let sum: f64 = rows.iter().map(|r| r[key].as_f64().unwrap_or(f64::NAN)).sum();
            let value = if v0.is_u64() {
                serde_json::Value::from((sum / n).round() as u64)
            } else {
                serde_json::Value::from(sum / n)
            };
            mean.insert(key.clone(), value);
        }
        out.push(serde_json::from_value(serde_json::Value::Object(mean))?);
    }
    Ok(out)
}

pub fn metrics_csv_string(series: &[MetricsFrame]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for frame in series {
        w.serialize(frame)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("metrics.csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `metrics.csv` (one row per step) and `summary.json` into `dir`.
pub fn write_metrics(series: &[MetricsFrame], dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("metrics.csv");
    fs::write(&csv_path, metrics_csv_string(series)?).map_err(|e| Error::io(&csv_path, e))?;
    let json_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&RunSummary::from_series(series))?;
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_path, json_path))
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsFrame>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(step: u32) -> MetricsFrame {
        MetricsFrame::collect(step, 2020.0 + step as f64 / 4.0, &[], &[], &StepFlows::default())
    }

    #[test]
    fn header_matches_struct_fields() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(frame(1)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        assert_eq!(header, CSV_COLUMNS);
    }

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, json_path) = write_metrics(&[], dir.path()).unwrap();
        let text = fs::read_to_string(csv_path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end(), CSV_COLUMNS.join(","));
        let summary: RunSummary = serde_json::from_str(&fs::read_to_string(json_path).unwrap()).unwrap();
        assert_eq!(summary.steps, 0);
        assert!(summary.final_frame.is_none());
    }

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let series: Vec<_> = (1..=5).map(frame).collect();
        let (csv_path, _) = write_metrics(&series, dir.path()).unwrap();
        assert_eq!(read_metrics(csv_path).unwrap(), series);
    }

    #[test]
    fn averaging_runs() {
        let mut a: Vec<_> = (1..=3).map(frame).collect();
        let mut b = a.clone();
        a[2].mean_price = 1.0;
        b[2].mean_price = 3.0;
        a[2].damaged_firms = 1;
        b[2].damaged_firms = 4;
        let m = average_series(&[a, b]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[2].mean_price, 2.0);
        assert_eq!(m[2].damaged_firms, 3);
        assert_eq!(m[0].step, 1);
        assert!(average_series(&[]).is_err());
        assert!(average_series(&[vec![frame(1)], vec![]]).is_err());
    }

    #[test]
    fn unwritable_dir() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        assert!(write_metrics(&[], blocker.join("sub")).is_err());
    }
}
