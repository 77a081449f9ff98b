//! Per-topic and per-system scoring, and batch evaluation.
//!
//! An [`Evaluator`] binds qrels, a category source and an [`EvalConfig`],
//! resolves the target distributions once, and then scores runs. Scoring a
//! system only reads shared state, so callers may score systems in parallel
//! and hand the results to [`Evaluator::assemble`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::batch::{self, BatchReport};
use crate::distribution::{check_categories, kl_divergence, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::metrics::{r_precision, Interpolation};
use crate::model::{
    CategorySource, NamedTarget, Qrels, Run, SourceMode, Strictness, UNKNOWN_CATEGORY,
};

/// How deep into each ranking the results distribution looks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    Depth(usize),
    /// k = number of relevant documents of the topic
    TopicR,
    /// the whole ranking
    Full,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::Depth(100)
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" | "topic_r" => Ok(Cutoff::TopicR),
            "full" | "all" => Ok(Cutoff::Full),
            other => match other.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(Cutoff::Depth(k)),
                _ => Err(Error::InvalidConfig(format!(
                    "cutoff must be a positive integer, `R` or `full`, got `{other}`"
                ))),
            },
        }
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Depth(k) => write!(f, "{k}"),
            Cutoff::TopicR => f.write_str("R"),
            Cutoff::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultsScope {
    #[default]
    AllRetrieved,
    RelevantRetrievedOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// mean of per-topic divergences
    #[default]
    PerTopicMeanKl,
    /// divergence of the distribution pooled over topics, each topic keeping
    /// its own add-one pseudo-counts
    PooledCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub cutoff: Cutoff,
    pub relevance_threshold: u32,
    pub results_scope: ResultsScope,
    pub targets: Vec<NamedTarget>,
    pub interpolations: Vec<Interpolation>,
    pub aggregation: Aggregation,
    pub strictness: Strictness,
    /// Count lenient-mode unknown documents in a `__unknown__` category.
    pub include_unknown: bool,
    /// Skip cross-system normalization; required for a single run.
    pub raw_only: bool,
    pub leaderboard_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            cutoff: Cutoff::default(),
            relevance_threshold: 1,
            results_scope: ResultsScope::default(),
            targets: vec![NamedTarget::uniform()],
            interpolations: vec![Interpolation::mean(), Interpolation::gmean()],
            aggregation: Aggregation::default(),
            strictness: Strictness::default(),
            include_unknown: false,
            raw_only: false,
            leaderboard_size: 3,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff == Cutoff::Depth(0) {
            return Err(Error::InvalidConfig("cutoff must be at least 1".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one target is required".into(),
            ));
        }
        let mut names = BTreeSet::new();
        for t in &self.targets {
            NamedTarget::new(t.name.clone(), t.spec.clone())?;
            if !names.insert(t.name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate target `{}`",
                    t.name
                )));
            }
        }
        let mut prefixes = BTreeSet::new();
        for i in &self.interpolations {
            Interpolation::new(i.kind, i.weight)?;
            if !prefixes.insert(i.column_prefix()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate interpolation `{}`",
                    i.column_prefix()
                )));
            }
        }
        if self.leaderboard_size == 0 {
            return Err(Error::InvalidConfig(
                "leaderboard size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Non-fatal conditions collected while evaluating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Every system tied on a column; values were set to 0.5.
    DegenerateNormalization { column: String },
    /// Lenient mode: documents without a category were left out.
    UnknownDocuments { system: String, count: u64 },
    /// Run topics with no relevant documents in the qrels.
    SkippedTopics { system: String, topics: Vec<String> },
    /// Topics with relevant documents that the run does not cover.
    MissingTopics { system: String, topics: Vec<String> },
    /// A correlation could not be computed because a column is constant.
    UndefinedCorrelation { metric: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DegenerateNormalization { column } => {
                write!(f, "all systems tie on `{column}`; normalized to 0.5")
            }
            Warning::UnknownDocuments { system, count } => {
                write!(f, "{system}: {count} retrieved documents have no category")
            }
            Warning::SkippedTopics { system, topics } => write!(
                f,
                "{system}: {} topics without relevant documents skipped ({})",
                topics.len(),
                topics.join(", ")
            ),
            Warning::MissingTopics { system, topics } => write!(
                f,
                "{system}: no ranking for {} judged topics ({})",
                topics.len(),
                topics.join(", ")
            ),
            Warning::UndefinedCorrelation { metric } => {
                write!(f, "tau against `{metric}` is undefined (constant ranking)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScore {
    pub topic_id: String,
    pub r_precision: f64,
    pub kl_by_target: BTreeMap<String, f64>,
    /// Counts over the cutoff for every evaluation category, zeros included.
    pub result_counts: BTreeMap<String, u64>,
    pub unknown_documents: u64,
    /// Cutoff applied to this topic.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScore {
    pub system_tag: String,
    pub mean_r_precision: f64,
    pub mean_kl_by_target: BTreeMap<String, f64>,
    /// `n_r_prec` and `fair_<target>`, filled in by batch normalization.
    pub normalized: BTreeMap<String, f64>,
    /// `<interpolation>_<target>`, filled in by batch normalization.
    pub combined: BTreeMap<String, f64>,
    pub topics: Vec<TopicScore>,
    pub skipped_topics: Vec<String>,
    pub missing_topics: Vec<String>,
    pub unknown_documents: u64,
}

impl SystemScore {
    /// Looks up a report column: `r_prec`, `n_r_prec`, `kl_<t>`, `fair_<t>`
    /// or an interpolated column.
    pub fn metric(&self, name: &str) -> Option<f64> {
        if name == "r_prec" {
            return Some(self.mean_r_precision);
        }
        if let Some(v) = self
            .normalized
            .get(name)
            .or_else(|| self.combined.get(name))
        {
            return Some(*v);
        }
        name.strip_prefix("kl_")
            .and_then(|t| self.mean_kl_by_target.get(t))
            .copied()
    }
}

enum Slot {
    Index(usize),
    Unknown,
    Unmapped,
}

/// Maps category labels to positions of an evaluation category set.
struct CategoryIndex {
    index: BTreeMap<String, usize>,
    unknown: Option<usize>,
}

impl CategoryIndex {
    fn new(source: &CategorySource, categories: &[String]) -> Result<Self> {
        check_categories(categories)?;
        if let Some(missing) = source.categories().iter().find(|c| !categories.contains(c)) {
            return Err(Error::UnknownCategory(missing.clone()));
        }
        let index: BTreeMap<String, usize> = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let unknown = index.get(UNKNOWN_CATEGORY).copied();
        Ok(Self { index, unknown })
    }

    fn classify(
        &self,
        source: &CategorySource,
        qrels: &Qrels,
        topic: &str,
        doc: &str,
        strictness: Strictness,
    ) -> Result<Slot> {
        match source.lookup(topic, doc, qrels) {
            Some(cat) => self
                .index
                .get(cat)
                .map(|&i| Slot::Index(i))
                .ok_or_else(|| Error::UnknownCategory(cat.into())),
            None if strictness.is_strict() => Ok(Slot::Unmapped),
            None => Ok(self.unknown.map_or(Slot::Unknown, Slot::Index)),
        }
    }
}

/// Tallies the categories of all relevant documents per topic.
///
/// Returns dense per-topic counts (every qrels topic, possibly all zero) and
/// the number of lenient-mode unknown documents.
pub(crate) fn tally_relevant(
    qrels: &Qrels,
    source: &CategorySource,
    categories: &[String],
    threshold: u32,
    strictness: Strictness,
) -> Result<(BTreeMap<String, Vec<u64>>, u64)> {
    source.validate(qrels, threshold)?;
    let index = CategoryIndex::new(source, categories)?;
    let mut per_topic = BTreeMap::new();
    let mut unknown = 0;
    let mut unmapped = Vec::new();
    for topic in qrels.topics() {
        let mut counts = vec![0u64; categories.len()];
        for doc in qrels.relevant(topic, threshold) {
            match index.classify(source, qrels, topic, &doc, strictness)? {
                Slot::Index(i) => counts[i] += 1,
                Slot::Unknown => unknown += 1,
                Slot::Unmapped => unmapped.push(doc),
            }
        }
        per_topic.insert(topic.to_string(), counts);
    }
    if !unmapped.is_empty() {
        return Err(Error::UnmappedDocuments(unmapped));
    }
    Ok((per_topic, unknown))
}

/// Add-one smoothed category distribution of all relevant documents, pooled
/// over every topic. One distribution serves all topics.
pub fn derive_population_target(
    qrels: &Qrels,
    source: &CategorySource,
    categories: &[String],
    relevance_threshold: u32,
    strictness: Strictness,
) -> Result<CategoricalDistribution> {
    let (per_topic, _) =
        tally_relevant(qrels, source, categories, relevance_threshold, strictness)?;
    let mut totals = vec![0u64; categories.len()];
    for counts in per_topic.values() {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    if totals.iter().all(|&c| c == 0) {
        return Err(Error::NoRelevantDocuments);
    }
    CategoricalDistribution::smoothed(categories.to_vec(), &totals)
}

pub struct Evaluator<'a> {
    qrels: &'a Qrels,
    source: &'a CategorySource,
    config: EvalConfig,
    categories: Vec<String>,
    index: CategoryIndex,
    relevant: BTreeMap<String, BTreeSet<String>>,
    targets: Vec<(String, CategoricalDistribution)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(qrels: &'a Qrels, source: &'a CategorySource, config: EvalConfig) -> Result<Self> {
        config.validate()?;
        source.validate(qrels, config.relevance_threshold)?;
        let categories = source.evaluation_categories(config.include_unknown);
        let index = CategoryIndex::new(source, &categories)?;

        let relevant: BTreeMap<String, BTreeSet<String>> = qrels
            .topics()
            .map(|t| (t.to_string(), qrels.relevant(t, config.relevance_threshold)))
            .filter(|(_, rel)| !rel.is_empty())
            .collect();

        let mut targets = Vec::with_capacity(config.targets.len());
        for t in &config.targets {
            let dist = match t.spec.fixed_distribution(&categories)? {
                Some(d) => d,
                None => derive_population_target(
                    qrels,
                    source,
                    &categories,
                    config.relevance_threshold,
                    config.strictness,
                )?,
            };
            targets.push((t.name.clone(), dist));
        }
        Ok(Self {
            qrels,
            source,
            config,
            categories,
            index,
            relevant,
            targets,
        })
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn targets(&self) -> &[(String, CategoricalDistribution)] {
        &self.targets
    }

    /// Topics that have at least one relevant document.
    pub fn evaluable_topics(&self) -> impl Iterator<Item = &str> + '_ {
        self.relevant.keys().map(String::as_str)
    }

    /// Scores one topic of a ranking. `None` when the topic has no relevant
    /// documents and is therefore excluded.
    ///
    /// In grade-map mode, documents whose grade has no category (typically the
    /// non-relevant and unjudged ones) sit outside the category scheme and are
    /// not counted.
    pub fn score_topic<S: AsRef<str>>(
        &self,
        topic_id: &str,
        ranked: &[S],
    ) -> Result<Option<TopicScore>> {
        let Some(relevant) = self.relevant.get(topic_id) else {
            return Ok(None);
        };
        let r_prec = r_precision(ranked, relevant)?;
        let depth = match self.config.cutoff {
            Cutoff::Depth(k) => k,
            Cutoff::TopicR => relevant.len(),
            Cutoff::Full => ranked.len(),
        }
        .min(ranked.len());

        let grade_mode = self.source.mode() == SourceMode::QrelsGradeMap;
        let mut counts = vec![0u64; self.categories.len()];
        let mut unknown = 0;
        let mut unmapped = Vec::new();
        for doc in &ranked[..depth] {
            let doc = doc.as_ref();
            let is_relevant = relevant.contains(doc);
            if self.config.results_scope == ResultsScope::RelevantRetrievedOnly && !is_relevant {
                continue;
            }
            if grade_mode && self.source.lookup(topic_id, doc, self.qrels).is_none() && !is_relevant
            {
                continue;
            }
            match self.index.classify(
                self.source,
                self.qrels,
                topic_id,
                doc,
                self.config.strictness,
            )? {
                Slot::Index(i) => counts[i] += 1,
                Slot::Unknown => unknown += 1,
                Slot::Unmapped => unmapped.push(doc.to_string()),
            }
        }
        if !unmapped.is_empty() {
            return Err(Error::UnmappedDocuments(unmapped));
        }

        let results = CategoricalDistribution::smoothed(self.categories.clone(), &counts)?;
        let mut kl_by_target = BTreeMap::new();
        for (name, target) in &self.targets {
            kl_by_target.insert(name.clone(), kl_divergence(&results, target)?);
        }
        Ok(Some(TopicScore {
            topic_id: topic_id.to_string(),
            r_precision: r_prec,
            kl_by_target,
            result_counts: self.categories.iter().cloned().zip(counts).collect(),
            unknown_documents: unknown,
            depth,
        }))
    }

    /// Scores every topic of a run and aggregates. Normalized and combined
    /// columns stay empty until the batch is assembled.
    pub fn score_system(&self, run: &Run) -> Result<SystemScore> {
        let mut topics = Vec::new();
        let mut skipped = Vec::new();
        for topic_id in run.topics().keys() {
            let docs = run.ranked_docs(topic_id);
            match self.score_topic(topic_id, &docs)? {
                Some(score) => topics.push(score),
                None => skipped.push(topic_id.clone()),
            }
        }
        let missing: Vec<String> = self
            .relevant
            .keys()
            .filter(|t| run.topic(t).is_none())
            .cloned()
            .collect();
        if topics.is_empty() {
            return Err(Error::NoEvaluableTopics(run.system_tag().into()));
        }

        let n = topics.len() as f64;
        let mean_r_precision = topics.iter().map(|t| t.r_precision).sum::<f64>() / n;
        let mut mean_kl_by_target = BTreeMap::new();
        match self.config.aggregation {
            Aggregation::PerTopicMeanKl => {
                for (name, _) in &self.targets {
                    let sum: f64 = topics.iter().map(|t| t.kl_by_target[name]).sum();
                    mean_kl_by_target.insert(name.clone(), sum / n);
                }
            }
            Aggregation::PooledCounts => {
                let pooled = self.pooled_distribution(&topics)?;
                for (name, target) in &self.targets {
                    mean_kl_by_target.insert(name.clone(), kl_divergence(&pooled, target)?);
                }
            }
        }
        Ok(SystemScore {
            system_tag: run.system_tag().into(),
            mean_r_precision,
            mean_kl_by_target,
            normalized: BTreeMap::new(),
            combined: BTreeMap::new(),
            unknown_documents: topics.iter().map(|t| t.unknown_documents).sum(),
            topics,
            skipped_topics: skipped,
            missing_topics: missing,
        })
    }

    /// `p_i = sum_t (c_ti + 1) / sum_t (n_t + |C|)`.
    fn pooled_distribution(&self, topics: &[TopicScore]) -> Result<CategoricalDistribution> {
        let pseudo = topics.len() as f64;
        let weights: Vec<f64> = self
            .categories
            .iter()
            .map(|c| topics.iter().map(|t| t.result_counts[c]).sum::<u64>() as f64 + pseudo)
            .collect();
        CategoricalDistribution::from_weights(self.categories.clone(), &weights)
    }

    /// Scores every run and builds the batch report.
    pub fn evaluate_batch(&self, runs: &[Run]) -> Result<BatchReport> {
        let systems = runs
            .iter()
            .map(|r| self.score_system(r))
            .collect::<Result<Vec<_>>>()?;
        self.assemble(systems)
    }

    /// Normalizes, interpolates and ranks already scored systems.
    pub fn assemble(&self, systems: Vec<SystemScore>) -> Result<BatchReport> {
        batch::assemble(&self.config, &self.categories, &self.targets, systems)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RunEntry;
    use approx::assert_abs_diff_eq;

    fn source_abcd() -> CategorySource {
        CategorySource::prefix_rules([("A", "A"), ("B", "B"), ("C", "C"), ("D", "D")]).unwrap()
    }

    fn run(tag: &str, topics: &[(&str, &[&str])]) -> Run {
        let mut entries = Vec::new();
        for (topic, docs) in topics {
            for (i, d) in docs.iter().enumerate() {
                entries.push(RunEntry {
                    topic_id: (*topic).into(),
                    doc_id: (*d).into(),
                    rank: i as u32 + 1,
                    score: (docs.len() - i) as f64,
                    system_tag: tag.into(),
                });
            }
        }
        Run::from_entries(tag, entries).unwrap()
    }

    fn config(k: usize) -> EvalConfig {
        EvalConfig {
            cutoff: Cutoff::Depth(k),
            ..EvalConfig::default()
        }
    }

    #[test]
    fn cutoff_parsing() {
        assert_eq!("100".parse::<Cutoff>().unwrap(), Cutoff::Depth(100));
        assert_eq!("R".parse::<Cutoff>().unwrap(), Cutoff::TopicR);
        assert_eq!("full".parse::<Cutoff>().unwrap(), Cutoff::Full);
        assert!("0".parse::<Cutoff>().is_err());
        assert!("ten".parse::<Cutoff>().is_err());
    }

    #[test]
    fn topic_kl_against_uniform() {
        let qrels = Qrels::from_judgments([("1", "A1", 1)]).unwrap();
        let src = source_abcd();
        let ev = Evaluator::new(&qrels, &src, config(3)).unwrap();
        let ts = ev
            .score_topic("1", &["A1", "A2", "B1", "C9"])
            .unwrap()
            .unwrap();
        assert_eq!(ts.result_counts["A"], 2);
        assert_eq!(ts.result_counts["B"], 1);
        assert_eq!(ts.result_counts["C"], 0);
        // oracle: sum over (3/7, 2/7, 1/7, 1/7) of p ln(4p), by direct summation
        assert_abs_diff_eq!(
            ts.kl_by_target["uniform"],
            0.10926010165375145,
            epsilon = 1e-12
        );
    }

    #[test]
    fn balanced_results_have_zero_divergence() {
        let qrels = Qrels::from_judgments([("1", "A0", 1)]).unwrap();
        let src = source_abcd();
        let docs: Vec<String> = (0..5)
            .flat_map(|i| ["A", "B", "C", "D"].map(|c| alloc::format!("{c}{i}")))
            .collect();
        let ev = Evaluator::new(&qrels, &src, config(20)).unwrap();
        let ts = ev.score_topic("1", &docs).unwrap().unwrap();
        assert_eq!(ts.kl_by_target["uniform"], 0.0);
    }

    #[test]
    fn topic_without_relevant_docs_is_skipped() {
        let qrels = Qrels::from_judgments([("1", "A1", 1), ("2", "A2", 0)]).unwrap();
        let src = source_abcd();
        let ev = Evaluator::new(&qrels, &src, config(10)).unwrap();
        assert!(ev.score_topic("2", &["A2"]).unwrap().is_none());
        let sys = ev
            .score_system(&run("s", &[("1", &["A1"]), ("2", &["A2"])]))
            .unwrap();
        assert_eq!(sys.topics.len(), 1);
        assert_eq!(sys.skipped_topics, ["2"]);
    }

    #[test]
    fn population_target_counts() {
        let mut judgments = Vec::new();
        for i in 0..30 {
            judgments.push(("1", alloc::format!("A{i}"), 1));
        }
        for i in 0..10 {
            judgments.push(("2", alloc::format!("B{i}"), 2));
        }
        judgments.push(("2", "C0".into(), 0));
        let qrels = Qrels::from_judgments(judgments).unwrap();
        let src = source_abcd();
        let cats = src.evaluation_categories(false);
        let pop = derive_population_target(&qrels, &src, &cats, 1, Strictness::Strict).unwrap();
        let expect = [31.0 / 44.0, 11.0 / 44.0, 1.0 / 44.0, 1.0 / 44.0];
        for (p, e) in pop.mass().iter().zip(expect) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-15);
        }

        let qrels = Qrels::from_judgments([("1", "A1", 1), ("1", "B1", 1)]).unwrap();
        let two = CategorySource::prefix_rules([("A", "a"), ("B", "b")]).unwrap();
        let pop = derive_population_target(&qrels, &two, two.categories(), 1, Strictness::Strict)
            .unwrap();
        assert_eq!(pop.mass(), &[0.5, 0.5]);

        assert_eq!(
            derive_population_target(&Qrels::default(), &src, &cats, 1, Strictness::Strict)
                .unwrap_err(),
            Error::NoRelevantDocuments
        );
    }

    #[test]
    fn system_means() {
        let qrels = Qrels::from_judgments([
            ("1", "A1", 1),
            ("1", "A2", 1),
            ("2", "B1", 1),
            ("2", "B2", 1),
        ])
        .unwrap();
        let src = source_abcd();
        let ev = Evaluator::new(&qrels, &src, config(10)).unwrap();
        // topic 1: R = 2, one hit in top 2; topic 2: both hits
        let sys = ev
            .score_system(&run("s", &[("1", &["A1", "C1"]), ("2", &["B2", "B1"])]))
            .unwrap();
        assert_abs_diff_eq!(sys.mean_r_precision, 0.75);
        let kl_mean =
            (sys.topics[0].kl_by_target["uniform"] + sys.topics[1].kl_by_target["uniform"]) / 2.0;
        assert_abs_diff_eq!(sys.mean_kl_by_target["uniform"], kl_mean);
    }

    #[test]
    fn pooled_equals_per_topic_when_topics_identical() {
        let qrels =
            Qrels::from_judgments([("1", "A1", 1), ("2", "A1", 1), ("3", "A1", 1)]).unwrap();
        let src = source_abcd();
        let docs: &[&str] = &["A1", "A2", "B1", "C1", "A3"];
        let r = run("s", &[("1", docs), ("2", docs), ("3", docs)]);
        let mut cfg = config(5);
        cfg.targets = vec![NamedTarget::uniform(), NamedTarget::population()];
        let per_topic = Evaluator::new(&qrels, &src, cfg.clone())
            .unwrap()
            .score_system(&r)
            .unwrap();
        cfg.aggregation = Aggregation::PooledCounts;
        let pooled = Evaluator::new(&qrels, &src, cfg)
            .unwrap()
            .score_system(&r)
            .unwrap();
        for t in ["uniform", "population"] {
            assert_abs_diff_eq!(
                per_topic.mean_kl_by_target[t],
                pooled.mean_kl_by_target[t],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn strict_mode_lists_unmapped_docs() {
        let qrels = Qrels::from_judgments([("1", "A1", 1)]).unwrap();
        let src = source_abcd();
        let ev = Evaluator::new(&qrels, &src, config(10)).unwrap();
        assert_eq!(
            ev.score_topic("1", &["A1", "X1", "Y2"]).unwrap_err(),
            Error::UnmappedDocuments(vec!["X1".into(), "Y2".into()])
        );
    }

    #[test]
    fn lenient_mode_unknown_bucket() {
        let qrels = Qrels::from_judgments([("1", "A1", 1)]).unwrap();
        let src = source_abcd();
        let mut cfg = config(10);
        cfg.strictness = Strictness::Lenient;
        let ev = Evaluator::new(&qrels, &src, cfg.clone()).unwrap();
        let ts = ev.score_topic("1", &["A1", "X1"]).unwrap().unwrap();
        assert_eq!(ts.unknown_documents, 1);
        assert!(!ts.result_counts.contains_key(UNKNOWN_CATEGORY));

        cfg.include_unknown = true;
        let ev = Evaluator::new(&qrels, &src, cfg).unwrap();
        let ts = ev.score_topic("1", &["A1", "X1"]).unwrap().unwrap();
        assert_eq!(ts.unknown_documents, 0);
        assert_eq!(ts.result_counts[UNKNOWN_CATEGORY], 1);
    }

    #[test]
    fn relevant_only_scope_and_topic_r_cutoff() {
        let qrels =
            Qrels::from_judgments([("1", "A1", 1), ("1", "B1", 1), ("1", "C1", 0)]).unwrap();
        let src = source_abcd();
        let mut cfg = config(10);
        cfg.results_scope = ResultsScope::RelevantRetrievedOnly;
        let ev = Evaluator::new(&qrels, &src, cfg.clone()).unwrap();
        let ts = ev
            .score_topic("1", &["C1", "A1", "D5", "B1"])
            .unwrap()
            .unwrap();
        assert_eq!(ts.result_counts["A"] + ts.result_counts["B"], 2);
        assert_eq!(ts.result_counts["C"] + ts.result_counts["D"], 0);

        cfg.results_scope = ResultsScope::AllRetrieved;
        cfg.cutoff = Cutoff::TopicR;
        let ev = Evaluator::new(&qrels, &src, cfg).unwrap();
        let ts = ev
            .score_topic("1", &["C1", "A1", "D5", "B1"])
            .unwrap()
            .unwrap();
        assert_eq!(ts.depth, 2);
        assert_eq!(ts.result_counts.values().sum::<u64>(), 2);
    }

    #[test]
    fn grade_map_skips_uncategorized_documents() {
        let qrels =
            Qrels::from_judgments([("1", "d1", 4), ("1", "d2", 2), ("1", "d3", 0)]).unwrap();
        let src =
            CategorySource::grade_map([(1, "none"), (2, "neg"), (3, "mixed"), (4, "pos")]).unwrap();
        let ev = Evaluator::new(&qrels, &src, config(10)).unwrap();
        let ts = ev
            .score_topic("1", &["d3", "d1", "zz", "d2"])
            .unwrap()
            .unwrap();
        assert_eq!(ts.result_counts["pos"], 1);
        assert_eq!(ts.result_counts["neg"], 1);
        assert_eq!(ts.result_counts.values().sum::<u64>(), 2);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EvalConfig::default();
        cfg.targets.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = EvalConfig::default();
        cfg.targets.push(NamedTarget::uniform());
        assert!(cfg.validate().is_err());
        let mut cfg = EvalConfig::default();
        cfg.interpolations.push(Interpolation::mean());
        assert!(cfg.validate().is_err());
        let cfg = EvalConfig {
            cutoff: Cutoff::Depth(0),
            ..EvalConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
