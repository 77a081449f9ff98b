//! Seeded synthetic test collections and runs.
//!
//! Every random draw comes from ChaCha8 seeded with `seed_from_u64`, so the
//! same spec and seed produce the same bytes on every platform. The collection
//! uses stream 0 of the seed and system `i` uses stream `i + 1`; a `random`
//! profile uses its own seed instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use fairdex_core::{
    derive_population_target, CategoricalDistribution, CategorySource, Qrels, Run, RunEntry,
    Strictness, TargetSpec,
};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;

/// Non-relevant documents generated per relevant document of a topic.
pub const NON_RELEVANT_FACTOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_topics: usize,
    pub categories: Vec<String>,
    /// Inclusive range the per-topic relevant count is drawn from.
    pub relevant_per_topic: [usize; 2],
    /// Unnormalized weights, one per category.
    pub category_skew: BTreeMap<String, f64>,
    pub n_systems: usize,
    pub system_profiles: Vec<SystemProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemProfile {
    /// Every relevant document first, in collection order.
    RelevanceOptimal,
    /// Category shares in the ranking follow `target`, relevance ignored.
    FairnessOptimal {
        #[serde(default = "uniform_target")]
        target: TargetSpec,
    },
    Random {
        seed: u64,
    },
    /// Relevance-optimal, then each relevant document trades places with a
    /// random non-relevant one with probability `relevance_noise`.
    Noisy {
        relevance_noise: f64,
    },
}

fn uniform_target() -> TargetSpec {
    TargetSpec::Uniform
}

impl SystemProfile {
    fn short_name(&self) -> &'static str {
        match self {
            SystemProfile::RelevanceOptimal => "relopt",
            SystemProfile::FairnessOptimal { .. } => "fairopt",
            SystemProfile::Random { .. } => "random",
            SystemProfile::Noisy { .. } => "noisy",
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_topics == 0 {
            return Err(Error::invalid("n_topics must be at least 1"));
        }
        if self.categories.is_empty() {
            return Err(Error::invalid("at least one category is required"));
        }
        let mut seen = BTreeSet::new();
        for c in &self.categories {
            if c.is_empty() || !c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                return Err(Error::invalid(format!(
                    "category `{c}` must be non-empty and use only letters, digits and `_`"
                )));
            }
            if !seen.insert(c.as_str()) {
                return Err(Error::invalid(format!("duplicate category `{c}`")));
            }
        }
        for c in &self.categories {
            match self.category_skew.get(c) {
                Some(w) if w.is_finite() && *w > 0.0 => {}
                Some(w) => return Err(Error::invalid(format!("weight {w} for `{c}` must be > 0"))),
                None => return Err(Error::invalid(format!("no weight for category `{c}`"))),
            }
        }
        if let Some(extra) = self
            .category_skew
            .keys()
            .find(|k| !seen.contains(k.as_str()))
        {
            return Err(Error::invalid(format!(
                "weight given for unknown category `{extra}`"
            )));
        }
        let [lo, hi] = self.relevant_per_topic;
        if lo == 0 || lo > hi {
            return Err(Error::invalid(format!(
                "relevant_per_topic must satisfy 1 <= lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if self.system_profiles.is_empty() || self.n_systems != self.system_profiles.len() {
            return Err(Error::invalid(format!(
                "n_systems is {} but {} system profiles are listed",
                self.n_systems,
                self.system_profiles.len()
            )));
        }
        for p in &self.system_profiles {
            match p {
                SystemProfile::Noisy { relevance_noise }
                    if !(0.0..=1.0).contains(relevance_noise) =>
                {
                    return Err(Error::invalid(format!(
                        "relevance_noise {relevance_noise} is outside [0, 1]"
                    )))
                }
                SystemProfile::FairnessOptimal { target } => target.validate(&self.categories)?,
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthDoc {
    pub id: String,
    /// Index into the collection's categories.
    pub category: usize,
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthTopic {
    pub id: String,
    /// Relevant documents first, each group in generation order.
    pub docs: Vec<SynthDoc>,
}

impl SynthTopic {
    pub fn relevant_count(&self) -> usize {
        self.docs.iter().filter(|d| d.relevant).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub categories: Vec<String>,
    pub topics: Vec<SynthTopic>,
    pub qrels: Qrels,
    /// `<category>-` prefix rules matching the generated doc ids.
    pub source: CategorySource,
}

impl Collection {
    /// Every generated document as `(topic, doc)`.
    pub fn documents(&self) -> impl Iterator<Item = (&str, &SynthDoc)> + '_ {
        self.topics
            .iter()
            .flat_map(|t| t.docs.iter().map(move |d| (t.id.as_str(), d)))
    }

    /// The same categories as an explicit doc id map.
    pub fn category_map(&self) -> Result<CategorySource> {
        Ok(CategorySource::explicit(self.documents().map(|(_, d)| {
            (d.id.clone(), self.categories[d.category].clone())
        }))?)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws a collection. Doc ids are `<category>-<topic>-<serial>`.
pub fn gen_collection(spec: &SynthSpec, seed: u64) -> Result<Collection> {
    spec.validate()?;
    let mut rng = stream_rng(seed, 0);
    let weights: Vec<f64> = spec
        .categories
        .iter()
        .map(|c| spec.category_skew[c])
        .collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;
    let [lo, hi] = spec.relevant_per_topic;

    let mut topics = Vec::with_capacity(spec.n_topics);
    let mut judgments = Vec::new();
    for t in 0..spec.n_topics {
        let id = format!("{:03}", t + 1);
        let r = rng.gen_range(lo as u64..=hi as u64) as usize;
        let total = r * (1 + NON_RELEVANT_FACTOR);
        let docs: Vec<SynthDoc> = (0..total)
            .map(|serial| {
                let category = pick.sample(&mut rng);
                SynthDoc {
                    id: format!("{}-{id}-{serial:05}", spec.categories[category]),
                    category,
                    relevant: serial < r,
                }
            })
            .collect();
        for d in &docs {
            judgments.push((id.clone(), d.id.clone(), u32::from(d.relevant)));
        }
        topics.push(SynthTopic { id, docs });
    }
    let source =
        CategorySource::prefix_rules(spec.categories.iter().map(|c| (format!("{c}-"), c.clone())))?;
    Ok(Collection {
        categories: spec.categories.clone(),
        topics,
        qrels: Qrels::from_judgments(judgments)?,
        source,
    })
}

/// Ranks every document of every topic according to `profile`.
pub fn gen_run(
    profile: &SystemProfile,
    collection: &Collection,
    seed: u64,
    tag: &str,
) -> Result<Run> {
    let mut rng = match profile {
        SystemProfile::Random { seed } => ChaCha8Rng::seed_from_u64(*seed),
        _ => ChaCha8Rng::seed_from_u64(seed),
    };
    let fair_target = match profile {
        SystemProfile::FairnessOptimal { target } => Some(target_distribution(target, collection)?),
        _ => None,
    };

    let mut entries = Vec::new();
    for topic in &collection.topics {
        let order: Vec<&SynthDoc> = match profile {
            SystemProfile::RelevanceOptimal => relevance_order(topic),
            SystemProfile::Noisy { relevance_noise } => {
                let mut order = relevance_order(topic);
                let r = topic.relevant_count();
                let mut free: Vec<usize> = (r..order.len()).collect();
                for i in 0..r {
                    if free.is_empty() {
                        break;
                    }
                    if rng.gen_bool(*relevance_noise) {
                        let slot = free.swap_remove(rng.gen_range(0..free.len() as u64) as usize);
                        order.swap(i, slot);
                    }
                }
                order
            }
            SystemProfile::Random { .. } => {
                let mut order: Vec<&SynthDoc> = topic.docs.iter().collect();
                order.shuffle(&mut rng);
                order
            }
            SystemProfile::FairnessOptimal { .. } => {
                let target = fair_target.as_ref().expect("target resolved above");
                fairness_order(topic, target, collection.categories.len(), &mut rng)
            }
        };
        let n = order.len();
        for (i, d) in order.into_iter().enumerate() {
            entries.push(RunEntry {
                topic_id: topic.id.clone(),
                doc_id: d.id.clone(),
                rank: i as u32 + 1,
                score: (n - i) as f64,
                system_tag: tag.into(),
            });
        }
    }
    Ok(Run::from_entries(tag, entries)?)
}

fn target_distribution(
    target: &TargetSpec,
    collection: &Collection,
) -> Result<CategoricalDistribution> {
    Ok(match target.fixed_distribution(&collection.categories)? {
        Some(d) => d,
        None => derive_population_target(
            &collection.qrels,
            &collection.source,
            &collection.categories,
            1,
            Strictness::Strict,
        )?,
    })
}

fn relevance_order(topic: &SynthTopic) -> Vec<&SynthDoc> {
    let (mut rel, non): (Vec<&SynthDoc>, Vec<&SynthDoc>) =
        topic.docs.iter().partition(|d| d.relevant);
    rel.extend(non);
    rel
}

/// At each position takes the category furthest below its target share,
/// the earliest category on ties; empty categories drop out.
fn fairness_order<'a>(
    topic: &'a SynthTopic,
    target: &CategoricalDistribution,
    n_categories: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a SynthDoc> {
    let mut queues: Vec<Vec<&SynthDoc>> = vec![Vec::new(); n_categories];
    for d in &topic.docs {
        queues[d.category].push(d);
    }
    for q in &mut queues {
        q.shuffle(rng);
        q.reverse();
    }
    let mut placed = vec![0usize; n_categories];
    let mut order = Vec::with_capacity(topic.docs.len());
    for i in 0..topic.docs.len() {
        let mut best: Option<(usize, f64)> = None;
        for (c, q) in queues.iter().enumerate() {
            if q.is_empty() {
                continue;
            }
            let deficit = target.mass()[c] * (i + 1) as f64 - placed[c] as f64;
            if best.is_none_or(|(_, b)| deficit > b) {
                best = Some((c, deficit));
            }
        }
        let (c, _) = best.expect("documents remain");
        order.push(queues[c].pop().expect("non-empty queue"));
        placed[c] += 1;
    }
    order
}

/// A generated collection plus one run per system profile.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub seed: u64,
    pub collection: Collection,
    pub runs: Vec<Run>,
}

pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<Synthesis> {
    let collection = gen_collection(spec, seed)?;
    let mut runs = Vec::with_capacity(spec.system_profiles.len());
    for (i, profile) in spec.system_profiles.iter().enumerate() {
        let tag = format!("sys{:02}_{}", i + 1, profile.short_name());
        let mut rng = stream_rng(seed, i as u64 + 1);
        runs.push(gen_run(profile, &collection, rng.gen(), &tag)?);
    }
    Ok(Synthesis {
        seed,
        collection,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub seed: u64,
    pub spec: SynthSpec,
    pub systems: Vec<String>,
    pub files: Vec<String>,
}

/// File contents of a synthesis, keyed by path relative to the output
/// directory.
pub fn render(spec: &SynthSpec, synth: &Synthesis) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    let mut buf = Vec::new();
    formats::write_qrels(&synth.collection.qrels, &mut buf).map_err(internal)?;
    files.insert("qrels.txt".to_string(), std::mem::take(&mut buf));
    formats::write_category_source(&synth.collection.category_map()?, &mut buf)
        .map_err(internal)?;
    files.insert("categories.tsv".to_string(), std::mem::take(&mut buf));
    formats::write_category_source(&synth.collection.source, &mut buf).map_err(internal)?;
    files.insert("prefix_rules.tsv".to_string(), std::mem::take(&mut buf));
    for run in &synth.runs {
        formats::write_run(run, &mut buf).map_err(internal)?;
        files.insert(
            format!("runs/{}.run", run.system_tag()),
            std::mem::take(&mut buf),
        );
    }
    let mut listed: Vec<String> = files.keys().cloned().collect();
    listed.push("manifest.json".into());
    listed.sort();
    let manifest = Manifest {
        schema: fairdex_core::SCHEMA_VERSION.into(),
        seed: synth.seed,
        spec: spec.clone(),
        systems: synth
            .runs
            .iter()
            .map(|r| r.system_tag().to_string())
            .collect(),
        files: listed,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(internal)?;
    json.push(b'\n');
    files.insert("manifest.json".to_string(), json);
    Ok(files)
}

/// Writes rendered files under `dir`, creating `dir/runs`.
pub fn write_files(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    for (name, bytes) in files {
        let path = dir.join(name);
        let write_err = |source| Error::Write {
            path: path.display().to_string(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(write_err)?;
        }
        fs::write(&path, bytes).map_err(write_err)?;
    }
    Ok(())
}

fn internal(e: impl std::fmt::Display) -> Error {
    Error::Internal(e.to_string())
}
