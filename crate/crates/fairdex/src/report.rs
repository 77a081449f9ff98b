//! CSV and JSON report files.
//!
//! Every CSV has a header row. Leading key columns hold text; the remaining
//! columns hold numbers written with the shortest representation that reads
//! back to the same `f64`. [`read_table`] parses any of them.

use std::io::{Read, Write};

use fairdex_core::{BatchReport, BiasConfig, BiasReport, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::FormatError;

/// A parsed report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub key_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub rows: Vec<(Vec<String>, Vec<f64>)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.value_columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, v)| v[i]).collect())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = self.key_columns.iter().chain(&self.value_columns);
        w.write_record(header).map_err(csv_err)?;
        for (keys, values) in &self.rows {
            let mut record: Vec<String> = keys.clone();
            record.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(e.to_string())
}

/// Reads a report CSV whose first `keys` columns are text.
pub fn read_table<R: Read>(input: R, keys: usize) -> Result<Table, FormatError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| FormatError {
        line: Some(1),
        message: e.to_string(),
    })?;
    if header.len() < keys {
        return Err(FormatError {
            line: Some(1),
            message: format!("expected at least {keys} columns, found {}", header.len()),
        });
    }
    let key_columns: Vec<String> = header.iter().take(keys).map(String::from).collect();
    let value_columns: Vec<String> = header.iter().skip(keys).map(String::from).collect();
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| FormatError {
            line: Some(line),
            message: e.to_string(),
        })?;
        let mut values = Vec::with_capacity(value_columns.len());
        for cell in record.iter().skip(keys) {
            values.push(cell.parse::<f64>().map_err(|_| FormatError {
                line: Some(line),
                message: format!("`{cell}` is not a number"),
            })?);
        }
        rows.push((record.iter().take(keys).map(String::from).collect(), values));
    }
    Ok(Table {
        key_columns,
        value_columns,
        rows,
    })
}

/// One row per system: `tag` then the report columns.
pub fn leaderboard_table(report: &BatchReport) -> Table {
    Table {
        key_columns: vec!["tag".into()],
        value_columns: report.columns.clone(),
        rows: report
            .systems
            .iter()
            .map(|s| {
                let values = report
                    .columns
                    .iter()
                    .map(|c| s.metric(c).unwrap_or(f64::NAN))
                    .collect();
                (vec![s.system_tag.clone()], values)
            })
            .collect(),
    }
}

/// One row per evaluated (system, topic): R-Precision, cutoff depth,
/// divergences and category counts.
pub fn topics_table(report: &BatchReport) -> Table {
    let targets: Vec<&String> = report.targets.keys().collect();
    let mut value_columns = vec!["r_prec".to_string(), "depth".into(), "unknown".into()];
    value_columns.extend(targets.iter().map(|t| format!("kl_{t}")));
    value_columns.extend(report.categories.iter().map(|c| format!("count_{c}")));
    let mut rows = Vec::new();
    for s in &report.systems {
        for t in &s.topics {
            let mut values = vec![t.r_precision, t.depth as f64, t.unknown_documents as f64];
            values.extend(targets.iter().map(|name| t.kl_by_target[*name]));
            values.extend(report.categories.iter().map(|c| t.result_counts[c] as f64));
            rows.push((vec![s.system_tag.clone(), t.topic_id.clone()], values));
        }
    }
    Table {
        key_columns: vec!["tag".into(), "topic".into()],
        value_columns,
        rows,
    }
}

/// Topic by category matrix of relevant-document counts, with the row total
/// and a 0/1 flag for topics without relevant documents.
pub fn bias_topics_table(report: &BiasReport) -> Table {
    let mut value_columns = report.categories.clone();
    value_columns.push("total".into());
    value_columns.push("empty".into());
    let rows = report
        .per_topic_counts
        .iter()
        .map(|(topic, counts)| {
            let mut values: Vec<f64> = report.categories.iter().map(|c| counts[c] as f64).collect();
            let total: u64 = counts.values().sum();
            values.push(total as f64);
            values.push(if total == 0 { 1.0 } else { 0.0 });
            (vec![topic.clone()], values)
        })
        .collect();
    Table {
        key_columns: vec!["topic".into()],
        value_columns,
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub schema: String,
    pub config: BiasConfig,
    #[serde(flatten)]
    pub report: BiasReport,
}

impl BiasSummary {
    pub fn new(config: BiasConfig, report: BiasReport) -> Self {
        Self {
            schema: SCHEMA_VERSION.into(),
            config,
            report,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub metric_a: String,
    pub metric_b: String,
    /// NaN when a ranking is constant.
    pub tau: f64,
    pub n_systems: usize,
}

/// `pair,metric_a,metric_b,tau,n_systems`.
pub fn tau_table(rows: &[TauRow]) -> Table {
    Table {
        key_columns: vec!["pair".into(), "metric_a".into(), "metric_b".into()],
        value_columns: vec!["tau".into(), "n_systems".into()],
        rows: rows
            .iter()
            .map(|r| {
                (
                    vec![
                        format!("{}~{}", r.metric_a, r.metric_b),
                        r.metric_a.clone(),
                        r.metric_b.clone(),
                    ],
                    vec![r.tau, r.n_systems as f64],
                )
            })
            .collect(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}
