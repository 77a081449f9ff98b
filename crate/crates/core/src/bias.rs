//! Test-collection bias audit: how relevant documents spread over categories.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::distribution::CategoricalDistribution;
use crate::engine::tally_relevant;
use crate::error::{Error, Result};
use crate::model::{CategorySource, Qrels, Strictness, UNKNOWN_CATEGORY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    pub relevance_threshold: u32,
    /// Categories whose global share falls below this are flagged scarce.
    pub scarcity_threshold: f64,
    pub strictness: Strictness,
    pub include_unknown: bool,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            relevance_threshold: 1,
            scarcity_threshold: 0.05,
            strictness: Strictness::Strict,
            include_unknown: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub categories: Vec<String>,
    /// topic -> category -> number of relevant documents
    pub per_topic_counts: BTreeMap<String, BTreeMap<String, u64>>,
    pub global_counts: BTreeMap<String, u64>,
    /// Relative frequencies; absent when the qrels hold no relevant document.
    pub global_proportions: Option<CategoricalDistribution>,
    /// Add-one smoothed variant, the shape a population target takes.
    pub smoothed_proportions: CategoricalDistribution,
    pub scarce_categories: Vec<String>,
    /// Topics without any relevant document.
    pub empty_topics: Vec<String>,
    pub unknown_documents: u64,
}

pub fn bias_report(
    qrels: &Qrels,
    source: &CategorySource,
    config: &BiasConfig,
) -> Result<BiasReport> {
    if !(0.0..=1.0).contains(&config.scarcity_threshold) {
        return Err(Error::OutOfUnitRange(config.scarcity_threshold));
    }
    let categories = source.evaluation_categories(config.include_unknown);
    let (dense, unknown_documents) = tally_relevant(
        qrels,
        source,
        &categories,
        config.relevance_threshold,
        config.strictness,
    )?;

    let mut totals = vec![0u64; categories.len()];
    let mut per_topic_counts = BTreeMap::new();
    let mut empty_topics = Vec::new();
    for (topic, counts) in dense {
        for (t, c) in totals.iter_mut().zip(&counts) {
            *t += c;
        }
        if counts.iter().all(|&c| c == 0) {
            empty_topics.push(topic.clone());
        }
        per_topic_counts.insert(topic, categories.iter().cloned().zip(counts).collect());
    }

    let global_proportions = if totals.iter().any(|&c| c > 0) {
        Some(CategoricalDistribution::from_counts(
            categories.clone(),
            &totals,
        )?)
    } else {
        None
    };
    let smoothed_proportions = CategoricalDistribution::smoothed(categories.clone(), &totals)?;

    let scarce_categories = categories
        .iter()
        .enumerate()
        .filter(|(_, c)| c.as_str() != UNKNOWN_CATEGORY)
        .filter(|(i, _)| {
            global_proportions
                .as_ref()
                .is_none_or(|g| g.mass()[*i] < config.scarcity_threshold)
        })
        .map(|(_, c)| c.clone())
        .collect();

    Ok(BiasReport {
        global_counts: categories.iter().cloned().zip(totals).collect(),
        categories,
        per_topic_counts,
        global_proportions,
        smoothed_proportions,
        scarce_categories,
        empty_topics,
        unknown_documents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source() -> CategorySource {
        CategorySource::explicit([
            ("a1", "a"),
            ("a2", "a"),
            ("b1", "b"),
            ("b2", "b"),
            ("c1", "c"),
        ])
        .unwrap()
    }

    #[test]
    fn tallies_relevant_docs() {
        let qrels = Qrels::from_judgments([
            ("t1", "a1", 1),
            ("t1", "a2", 1),
            ("t1", "b1", 1),
            ("t1", "c1", 0),
            ("t2", "b2", 2),
        ])
        .unwrap();
        let src =
            CategorySource::explicit([("a1", "a"), ("a2", "a"), ("b1", "b"), ("b2", "b")]).unwrap();
        let r = bias_report(&qrels, &src, &BiasConfig::default()).unwrap();
        assert_eq!(r.per_topic_counts["t1"]["a"], 2);
        assert_eq!(r.per_topic_counts["t1"]["b"], 1);
        assert_eq!(r.per_topic_counts["t2"]["a"], 0);
        assert_eq!(r.per_topic_counts["t2"]["b"], 1);
        assert_eq!(r.global_counts["a"], 2);
        assert_eq!(r.global_counts["b"], 2);
        assert!(r.scarce_categories.is_empty());
        assert_eq!(r.global_proportions.unwrap().mass(), &[0.5, 0.5]);
    }

    #[test]
    fn single_category_flags_the_rest() {
        let qrels = Qrels::from_judgments([("t1", "a1", 1), ("t2", "a2", 1)]).unwrap();
        let r = bias_report(&qrels, &source(), &BiasConfig::default()).unwrap();
        assert_eq!(r.scarce_categories, ["b", "c"]);
    }

    #[test]
    fn empty_topic_row() {
        let qrels = Qrels::from_judgments([("t1", "a1", 1), ("t2", "b1", 0)]).unwrap();
        let r = bias_report(&qrels, &source(), &BiasConfig::default()).unwrap();
        assert_eq!(r.empty_topics, ["t2"]);
        assert!(r.per_topic_counts["t2"].values().all(|&c| c == 0));
    }

    #[test]
    fn no_relevant_documents_at_all() {
        let qrels = Qrels::from_judgments([("t1", "a1", 0)]).unwrap();
        let r = bias_report(&qrels, &source(), &BiasConfig::default()).unwrap();
        assert!(r.global_proportions.is_none());
        assert_eq!(r.scarce_categories, ["a", "b", "c"]);
    }

    #[test]
    fn unmapped_relevant_doc_strict_vs_lenient() {
        let qrels = Qrels::from_judgments([("t1", "zz", 1), ("t1", "a1", 1)]).unwrap();
        assert_eq!(
            bias_report(&qrels, &source(), &BiasConfig::default()).unwrap_err(),
            Error::UnmappedDocuments(vec!["zz".into()])
        );
        let cfg = BiasConfig {
            strictness: Strictness::Lenient,
            ..BiasConfig::default()
        };
        let r = bias_report(&qrels, &source(), &cfg).unwrap();
        assert_eq!(r.unknown_documents, 1);
    }
}
