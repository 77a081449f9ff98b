use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distribution::CategoricalDistribution;
use crate::engine::{EvalConfig, SystemScore, Warning};
use crate::error::{Error, Result};
use crate::kendall::kendall_tau;
use crate::metrics::{fairness_scores, minmax_normalize};

/// Version tag written into every JSON report.
pub const SCHEMA_VERSION: &str = "fairdex/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub tag: String,
    pub score: f64,
}

/// Kendall's tau-b between the orderings induced by two report columns.
/// `tau` is `None` when one of the columns is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub baseline: String,
    pub metric: String,
    pub tau: Option<f64>,
    pub n_systems: usize,
}

/// Result of evaluating a batch of systems.
///
/// Normalized columns are relative to exactly the systems listed in
/// `systems_in_batch`; `batch_hash` is the SHA-256 of those tags, sorted and
/// newline-joined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema: String,
    pub batch_hash: String,
    pub systems_in_batch: Vec<String>,
    pub raw_only: bool,
    pub config: EvalConfig,
    pub categories: Vec<String>,
    pub targets: BTreeMap<String, CategoricalDistribution>,
    /// Metric columns in report order, `tag` excluded.
    pub columns: Vec<String>,
    /// Ordered by raw R-Precision descending, then tag.
    pub systems: Vec<SystemScore>,
    pub leaderboards: BTreeMap<String, Vec<LeaderboardEntry>>,
    pub correlations: Vec<Correlation>,
    pub warnings: Vec<Warning>,
}

impl BatchReport {
    pub fn system(&self, tag: &str) -> Option<&SystemScore> {
        self.systems.iter().find(|s| s.system_tag == tag)
    }

    /// `(tag, value)` for every system, in report order.
    pub fn column(&self, name: &str) -> Option<Vec<(&str, f64)>> {
        self.systems
            .iter()
            .map(|s| s.metric(name).map(|v| (s.system_tag.as_str(), v)))
            .collect()
    }

    /// Tau-b between the rankings induced by two columns.
    pub fn correlate(&self, baseline: &str, metric: &str) -> Result<f64> {
        let a = self
            .column(baseline)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{baseline}`")))?;
        let b = self
            .column(metric)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{metric}`")))?;
        kendall_tau(&a, &b)
    }
}

pub(crate) fn batch_hash(tags: &[String]) -> String {
    let mut hasher = Sha256::new();
    for (i, t) in tags.iter().enumerate() {
        if i > 0 {
            hasher.update(b"\n");
        }
        hasher.update(t.as_bytes());
    }
    let mut hex = String::with_capacity(64);
    for b in hasher.finalize() {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

pub(crate) fn assemble(
    config: &EvalConfig,
    categories: &[String],
    targets: &[(String, CategoricalDistribution)],
    mut systems: Vec<SystemScore>,
) -> Result<BatchReport> {
    let mut seen = BTreeSet::new();
    for s in &systems {
        if !seen.insert(s.system_tag.clone()) {
            return Err(Error::DuplicateSystem(s.system_tag.clone()));
        }
    }
    if systems.is_empty() {
        return Err(Error::TooFewRuns(0));
    }
    if systems.len() < 2 && !config.raw_only {
        return Err(Error::TooFewRuns(systems.len()));
    }
    systems.sort_by(|a, b| a.system_tag.cmp(&b.system_tag));
    let tags: Vec<String> = systems.iter().map(|s| s.system_tag.clone()).collect();

    let mut warnings = Vec::new();
    for s in &systems {
        if !s.skipped_topics.is_empty() {
            warnings.push(Warning::SkippedTopics {
                system: s.system_tag.clone(),
                topics: s.skipped_topics.clone(),
            });
        }
        if !s.missing_topics.is_empty() {
            warnings.push(Warning::MissingTopics {
                system: s.system_tag.clone(),
                topics: s.missing_topics.clone(),
            });
        }
        if s.unknown_documents > 0 {
            warnings.push(Warning::UnknownDocuments {
                system: s.system_tag.clone(),
                count: s.unknown_documents,
            });
        }
    }

    let mut columns = Vec::new();
    columns.push("r_prec".to_string());
    let mut ranked_columns = Vec::new();

    if config.raw_only {
        for (name, _) in targets {
            columns.push(format!("kl_{name}"));
        }
    } else {
        let raw: Vec<f64> = systems.iter().map(|s| s.mean_r_precision).collect();
        let n_rel = minmax_normalize(&raw)?;
        if n_rel.degenerate {
            warnings.push(Warning::DegenerateNormalization {
                column: "n_r_prec".into(),
            });
        }
        for (s, v) in systems.iter_mut().zip(&n_rel.values) {
            s.normalized.insert("n_r_prec".into(), *v);
        }
        columns.push("n_r_prec".into());
        ranked_columns.push("n_r_prec".to_string());

        for (name, _) in targets {
            let kl_col = format!("kl_{name}");
            let fair_col = format!("fair_{name}");
            let kl: Vec<f64> = systems.iter().map(|s| s.mean_kl_by_target[name]).collect();
            let fair = fairness_scores(&kl)?;
            if fair.degenerate {
                warnings.push(Warning::DegenerateNormalization {
                    column: fair_col.clone(),
                });
            }
            for (s, f) in systems.iter_mut().zip(&fair.values) {
                s.normalized.insert(fair_col.clone(), *f);
            }
            columns.push(kl_col);
            columns.push(fair_col.clone());
            ranked_columns.push(fair_col.clone());

            for interp in &config.interpolations {
                let col = format!("{}_{name}", interp.column_prefix());
                for s in systems.iter_mut() {
                    let v = interp.apply(s.normalized["n_r_prec"], s.normalized[&fair_col])?;
                    s.combined.insert(col.clone(), v);
                }
                columns.push(col.clone());
                ranked_columns.push(col);
            }
        }
    }

    let mut leaderboards = BTreeMap::new();
    for col in &ranked_columns {
        let mut board: Vec<LeaderboardEntry> = systems
            .iter()
            .map(|s| LeaderboardEntry {
                tag: s.system_tag.clone(),
                score: s.metric(col).unwrap_or(f64::NAN),
            })
            .collect();
        board.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tag.cmp(&b.tag)));
        board.truncate(config.leaderboard_size);
        leaderboards.insert(col.clone(), board);
    }

    let mut correlations = Vec::new();
    if systems.len() >= 2 {
        let baseline: Vec<(&str, f64)> = systems
            .iter()
            .map(|s| (s.system_tag.as_str(), s.mean_r_precision))
            .collect();
        for col in ranked_columns.iter().filter(|c| *c != "n_r_prec") {
            let other: Vec<(&str, f64)> = systems
                .iter()
                .map(|s| (s.system_tag.as_str(), s.metric(col).unwrap_or(f64::NAN)))
                .collect();
            let tau = match kendall_tau(&baseline, &other) {
                Ok(t) => Some(t),
                Err(Error::ConstantRanking) => {
                    warnings.push(Warning::UndefinedCorrelation {
                        metric: col.clone(),
                    });
                    None
                }
                Err(e) => return Err(e),
            };
            correlations.push(Correlation {
                baseline: "r_prec".into(),
                metric: col.clone(),
                tau,
                n_systems: systems.len(),
            });
        }
    }

    systems.sort_by(|a, b| {
        b.mean_r_precision
            .total_cmp(&a.mean_r_precision)
            .then_with(|| a.system_tag.cmp(&b.system_tag))
    });

    Ok(BatchReport {
        schema: SCHEMA_VERSION.into(),
        batch_hash: batch_hash(&tags),
        systems_in_batch: tags,
        raw_only: config.raw_only,
        config: config.clone(),
        categories: categories.to_vec(),
        targets: targets.iter().cloned().collect(),
        columns,
        systems,
        leaderboards,
        correlations,
        warnings,
    })
}
