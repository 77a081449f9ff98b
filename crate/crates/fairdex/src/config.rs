//! Optional TOML configuration file. Command-line flags override its values,
//! which override the built-in defaults. Relative paths are resolved against
//! the directory holding the file.
//!
//! ```toml
//! qrels = "qrels.txt"
//! prefix_rules = "prefix_rules.tsv"
//! targets = ["uniform", "population"]
//! cutoff = 100
//! scope = "relevant"
//! interp = ["mean", "gmean"]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fairdex_core::{Aggregation, ResultsScope};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// every retrieved document in the cutoff
    All,
    /// only relevant retrieved documents
    Relevant,
}

impl From<Scope> for ResultsScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::All => ResultsScope::AllRetrieved,
            Scope::Relevant => ResultsScope::RelevantRetrievedOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationArg {
    /// mean of per-topic divergences
    Mean,
    /// divergence of counts pooled over topics
    Pooled,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Mean => Aggregation::PerTopicMeanKl,
            AggregationArg::Pooled => Aggregation::PooledCounts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpArg {
    Mean,
    Gmean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        self != OutputFormat::Json
    }

    pub fn json(self) -> bool {
        self != OutputFormat::Csv
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CutoffValue {
    Depth(usize),
    Text(String),
}

impl CutoffValue {
    pub fn as_text(&self) -> String {
        match self {
            CutoffValue::Depth(k) => k.to_string(),
            CutoffValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub qrels: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub prefix_rules: Option<PathBuf>,
    pub grade_map: Option<PathBuf>,
    pub runs_dir: Option<PathBuf>,
    pub targets: Option<Vec<String>>,
    pub cutoff: Option<CutoffValue>,
    pub threshold: Option<u32>,
    pub scope: Option<Scope>,
    pub aggregation: Option<AggregationArg>,
    pub interp: Option<Vec<InterpArg>>,
    pub weight: Option<f64>,
    pub lenient: Option<bool>,
    pub include_unknown: Option<bool>,
    pub raw_only: Option<bool>,
    pub leaderboard_size: Option<usize>,
    pub q0: Option<String>,
    pub scarcity: Option<f64>,
    pub format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.qrels,
            &mut cfg.categories,
            &mut cfg.prefix_rules,
            &mut cfg.grade_map,
            &mut cfg.runs_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(targets) = &mut cfg.targets {
            for t in targets {
                *t = resolve_target(t, base);
            }
        }
        Ok(cfg)
    }
}

/// Keywords stay as they are; file targets become relative to `base`.
fn resolve_target(arg: &str, base: &Path) -> String {
    let (name, path) = match arg.split_once('=') {
        Some((n, p)) => (Some(n), p),
        None => (None, arg),
    };
    if name.is_none() && matches!(path, "uniform" | "population") {
        return arg.to_string();
    }
    let p = Path::new(path);
    let full = if p.is_relative() {
        base.join(p)
    } else {
        p.to_path_buf()
    };
    match name {
        Some(n) => format!("{n}={}", full.display()),
        None => full.display().to_string(),
    }
}
