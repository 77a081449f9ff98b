//! Runs, relevance judgments, document categories and target specifications.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::distribution::{check_categories, CategoricalDistribution};
use crate::error::{Error, Result};

/// Reserved bucket for documents without a category in lenient mode.
pub const UNKNOWN_CATEGORY: &str = "__unknown__";

/// Tolerance on the total of a custom target table.
pub const TARGET_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

impl Strictness {
    pub fn is_strict(self) -> bool {
        self == Strictness::Strict
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub topic_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub system_tag: String,
}

/// One system's ranked output, keyed by topic.
///
/// Entries are held in canonical order: score descending, ties broken by
/// doc id ascending, with ranks rewritten to `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    system_tag: String,
    topics: BTreeMap<String, Vec<RunEntry>>,
}

impl Run {
    /// Groups entries by topic and puts each topic into canonical order.
    ///
    /// The rank field of the input is ignored for ordering; scores decide.
    pub fn from_entries(system_tag: impl Into<String>, entries: Vec<RunEntry>) -> Result<Self> {
        let system_tag = system_tag.into();
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut topics: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for e in entries {
            if e.system_tag != system_tag {
                return Err(Error::InconsistentTag {
                    expected: system_tag,
                    found: e.system_tag,
                });
            }
            if e.rank == 0 {
                return Err(Error::InvalidRank(0));
            }
            if !e.score.is_finite() {
                return Err(Error::NonFinite(e.score));
            }
            if !seen.insert((e.topic_id.clone(), e.doc_id.clone())) {
                return Err(Error::DuplicateEntry {
                    topic: e.topic_id,
                    doc: e.doc_id,
                });
            }
            topics.entry(e.topic_id.clone()).or_default().push(e);
        }
        for list in topics.values_mut() {
            list.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            });
            for (i, e) in list.iter_mut().enumerate() {
                e.rank = i as u32 + 1;
            }
        }
        Ok(Self { system_tag, topics })
    }

    pub fn system_tag(&self) -> &str {
        &self.system_tag
    }

    pub fn topics(&self) -> &BTreeMap<String, Vec<RunEntry>> {
        &self.topics
    }

    pub fn topic(&self, topic_id: &str) -> Option<&[RunEntry]> {
        self.topics.get(topic_id).map(Vec::as_slice)
    }

    /// Document ids of one topic in rank order.
    pub fn ranked_docs(&self, topic_id: &str) -> Vec<&str> {
        self.topic(topic_id)
            .map(|l| l.iter().map(|e| e.doc_id.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = &RunEntry> + '_ {
        self.topics.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.topics.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }
}

/// Relevance grades keyed by topic, then document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    /// Fails on a repeated `(topic, doc)` pair.
    pub fn from_judgments<I, T, D>(judgments: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, D, u32)>,
        T: Into<String>,
        D: Into<String>,
    {
        let mut q = Qrels::default();
        for (topic, doc, grade) in judgments {
            let (topic, doc) = (topic.into(), doc.into());
            let docs = q.judgments.entry(topic.clone()).or_default();
            if docs.contains_key(&doc) {
                return Err(Error::DuplicateEntry { topic, doc });
            }
            docs.insert(doc, grade);
        }
        Ok(q)
    }

    pub fn grade(&self, topic_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(topic_id)?.get(doc_id).copied()
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> + '_ {
        self.judgments.keys().map(String::as_str)
    }

    pub fn topic(&self, topic_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(topic_id)
    }

    /// Documents judged at or above `threshold` for one topic.
    pub fn relevant(&self, topic_id: &str, threshold: u32) -> BTreeSet<String> {
        self.judgments
            .get(topic_id)
            .map(|docs| {
                docs.iter()
                    .filter(|(_, &g)| g >= threshold)
                    .map(|(d, _)| d.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// All `(topic, doc, grade)` triples in topic, then doc order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u32)> + '_ {
        self.judgments
            .iter()
            .flat_map(|(t, docs)| docs.iter().map(move |(d, &g)| (t.as_str(), d.as_str(), g)))
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    ExplicitFile,
    QrelsGradeMap,
    DocIdPrefixRules,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryMapping {
    /// doc id -> category
    Explicit(BTreeMap<String, String>),
    /// relevance grade -> category; the category of a document is looked up
    /// through its grade for the topic being scored
    GradeMap(BTreeMap<u32, String>),
    /// ordered `(prefix, category)` rules on the doc id
    PrefixRules(Vec<(String, String)>),
}

/// Where document categories come from, plus the category set it defines.
///
/// The category set is the distinct categories of the mapping in order of
/// first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySource {
    mapping: CategoryMapping,
    categories: Vec<String>,
}

impl CategorySource {
    pub fn explicit<I, D, C>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (D, C)>,
        D: Into<String>,
        C: Into<String>,
    {
        let mut map = BTreeMap::new();
        let mut order = Vec::new();
        for (doc, cat) in pairs {
            let (doc, cat) = (doc.into(), cat.into());
            check_label(&cat)?;
            if map.contains_key(&doc) {
                return Err(Error::InvalidSource(format!(
                    "document `{doc}` mapped twice"
                )));
            }
            push_unique(&mut order, &cat);
            map.insert(doc, cat);
        }
        Self::build(CategoryMapping::Explicit(map), order)
    }

    pub fn grade_map<I, C>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, C)>,
        C: Into<String>,
    {
        let mut map = BTreeMap::new();
        let mut order = Vec::new();
        for (grade, cat) in pairs {
            let cat = cat.into();
            check_label(&cat)?;
            if map.contains_key(&grade) {
                return Err(Error::InvalidSource(format!("grade {grade} mapped twice")));
            }
            push_unique(&mut order, &cat);
            map.insert(grade, cat);
        }
        Self::build(CategoryMapping::GradeMap(map), order)
    }

    /// Rules are tried in order. No prefix may be a prefix of another, so at
    /// most one rule can ever match a doc id.
    pub fn prefix_rules<I, P, C>(rules: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, C)>,
        P: Into<String>,
        C: Into<String>,
    {
        let rules: Vec<(String, String)> = rules
            .into_iter()
            .map(|(p, c)| (p.into(), c.into()))
            .collect();
        let mut order = Vec::new();
        for (i, (prefix, cat)) in rules.iter().enumerate() {
            check_label(cat)?;
            if prefix.is_empty() {
                return Err(Error::InvalidSource("empty prefix".into()));
            }
            for (other, _) in &rules[..i] {
                if prefix.starts_with(other.as_str()) || other.starts_with(prefix.as_str()) {
                    return Err(Error::InvalidSource(format!(
                        "prefixes `{other}` and `{prefix}` overlap"
                    )));
                }
            }
            push_unique(&mut order, cat);
        }
        Self::build(CategoryMapping::PrefixRules(rules), order)
    }

    fn build(mapping: CategoryMapping, categories: Vec<String>) -> Result<Self> {
        check_categories(&categories)?;
        Ok(Self {
            mapping,
            categories,
        })
    }

    pub fn mode(&self) -> SourceMode {
        match self.mapping {
            CategoryMapping::Explicit(_) => SourceMode::ExplicitFile,
            CategoryMapping::GradeMap(_) => SourceMode::QrelsGradeMap,
            CategoryMapping::PrefixRules(_) => SourceMode::DocIdPrefixRules,
        }
    }

    pub fn mapping(&self) -> &CategoryMapping {
        &self.mapping
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Category set used for distributions, with the unknown bucket appended
    /// when requested.
    pub fn evaluation_categories(&self, include_unknown: bool) -> Vec<String> {
        let mut c = self.categories.clone();
        if include_unknown {
            c.push(UNKNOWN_CATEGORY.into());
        }
        c
    }

    /// In grade-map mode every grade at or above the relevance threshold that
    /// occurs in the qrels must be mapped.
    pub fn validate(&self, qrels: &Qrels, threshold: u32) -> Result<()> {
        if let CategoryMapping::GradeMap(map) = &self.mapping {
            let missing: BTreeSet<u32> = qrels
                .iter()
                .map(|(_, _, g)| g)
                .filter(|g| *g >= threshold && !map.contains_key(g))
                .collect();
            if !missing.is_empty() {
                let list: Vec<String> = missing.iter().map(|g| format!("{g}")).collect();
                return Err(Error::InvalidSource(format!(
                    "relevant grades without a category: {}",
                    list.join(", ")
                )));
            }
        }
        Ok(())
    }

    /// Raw lookup, `None` when the document has no mapping.
    pub fn lookup(&self, topic_id: &str, doc_id: &str, qrels: &Qrels) -> Option<&str> {
        match &self.mapping {
            CategoryMapping::Explicit(map) => map.get(doc_id).map(String::as_str),
            CategoryMapping::GradeMap(map) => qrels
                .grade(topic_id, doc_id)
                .and_then(|g| map.get(&g))
                .map(String::as_str),
            CategoryMapping::PrefixRules(rules) => rules
                .iter()
                .find(|(p, _)| doc_id.starts_with(p.as_str()))
                .map(|(_, c)| c.as_str()),
        }
    }
}

fn check_label(cat: &str) -> Result<()> {
    if cat.is_empty() {
        return Err(Error::InvalidSource("empty category label".into()));
    }
    if cat == UNKNOWN_CATEGORY {
        return Err(Error::InvalidSource(format!(
            "`{UNKNOWN_CATEGORY}` is reserved"
        )));
    }
    Ok(())
}

fn push_unique(order: &mut Vec<String>, cat: &str) {
    if !order.iter().any(|c| c == cat) {
        order.push(cat.into());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolved<'a> {
    Category(&'a str),
    Unknown,
}

/// Category of `doc_id` within `topic_id`.
///
/// An unmapped document is an error in strict mode and `Unknown` in lenient mode.
pub fn resolve_category<'a>(
    doc_id: &str,
    topic_id: &str,
    source: &'a CategorySource,
    qrels: &Qrels,
    strictness: Strictness,
) -> Result<Resolved<'a>> {
    match source.lookup(topic_id, doc_id, qrels) {
        Some(c) => Ok(Resolved::Category(c)),
        None if strictness.is_strict() => Err(Error::UnmappedDocuments(vec![doc_id.into()])),
        None => Ok(Resolved::Unknown),
    }
}

/// Which target distribution fairness is measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    /// Equal share for every category.
    Uniform,
    /// Smoothed category distribution of all relevant documents in the qrels.
    Population,
    Custom(BTreeMap<String, f64>),
}

impl TargetSpec {
    pub fn custom(table: BTreeMap<String, f64>, categories: &[String]) -> Result<Self> {
        let spec = TargetSpec::Custom(table);
        spec.validate(categories)?;
        Ok(spec)
    }

    /// A custom table must cover exactly `categories` and sum to 1 within 1e-9.
    pub fn validate(&self, categories: &[String]) -> Result<()> {
        let TargetSpec::Custom(table) = self else {
            return Ok(());
        };
        for (cat, &p) in table {
            if !categories.contains(cat) {
                return Err(Error::InvalidTarget(format!(
                    "category `{cat}` is not in the category set"
                )));
            }
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidTarget(format!(
                    "probability {p} for `{cat}` is outside [0, 1]"
                )));
            }
        }
        if let Some(missing) = categories.iter().find(|c| !table.contains_key(*c)) {
            return Err(Error::InvalidTarget(format!(
                "no probability for category `{missing}`"
            )));
        }
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > TARGET_SUM_TOLERANCE {
            return Err(Error::InvalidTarget(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// Distribution for uniform and custom targets. Population targets need
    /// the qrels and are built by `derive_population_target`.
    pub fn fixed_distribution(
        &self,
        categories: &[String],
    ) -> Result<Option<CategoricalDistribution>> {
        match self {
            TargetSpec::Uniform => Ok(Some(CategoricalDistribution::uniform(categories.to_vec())?)),
            TargetSpec::Population => Ok(None),
            TargetSpec::Custom(table) => {
                self.validate(categories)?;
                let weights: Vec<f64> = categories.iter().map(|c| table[c]).collect();
                // Absorbs the up-to-1e-9 slack of the table into an exact unit total.
                Ok(Some(CategoricalDistribution::from_weights(
                    categories.to_vec(),
                    &weights,
                )?))
            }
        }
    }
}

/// A target plus the name used in report columns (`kl_<name>`, `fair_<name>`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTarget {
    pub name: String,
    pub spec: TargetSpec,
}

impl NamedTarget {
    pub fn new(name: impl Into<String>, spec: TargetSpec) -> Result<Self> {
        let name = name.into();
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "invalid target name `{name}`"
            )));
        }
        Ok(Self { name, spec })
    }

    pub fn uniform() -> Self {
        Self {
            name: "uniform".into(),
            spec: TargetSpec::Uniform,
        }
    }

    pub fn population() -> Self {
        Self {
            name: "population".into(),
            spec: TargetSpec::Population,
        }
    }
}
