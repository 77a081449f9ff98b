use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fairdex_core::{
    bias_report, kendall_tau, BatchReport, BiasConfig, CategorySource, Cutoff, EvalConfig,
    Evaluator, Interpolation, InterpolationKind, NamedTarget, Qrels, Run, Strictness,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{AggregationArg, FileConfig, InterpArg, OutputFormat, Scope};
use crate::error::{Error, Result};
use crate::formats::{self, FormatError, ParseOptions, Parsed};
use crate::report::{self, BiasSummary, TauRow};
use crate::synth::{self, SynthSpec};

/// Environment variable holding the log filter, e.g. `info` or `debug`.
pub const LOG_ENV: &str = "FAIRDEX_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "fairdex",
    version,
    about = "Relevance and distributional fairness evaluation for ranked retrieval runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score runs and write leaderboard.csv, leaderboard.json and topics.csv
    Eval(EvalArgs),
    /// Audit how relevant documents spread over categories
    Bias(BiasArgs),
    /// Kendall's tau between leaderboard columns, written to tau.csv
    Correlate(CorrelateArgs),
    /// Generate a synthetic collection with runs
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CategoryArgs {
    /// doc_id<TAB>category file
    #[arg(long)]
    pub categories: Option<PathBuf>,
    /// ordered prefix<TAB>category rules on doc ids
    #[arg(long)]
    pub prefix_rules: Option<PathBuf>,
    /// grade<TAB>category file; categories come from the qrels grades
    #[arg(long)]
    pub grade_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// run files
    pub runs: Vec<PathBuf>,
    /// directory whose files are all runs
    #[arg(long)]
    pub runs_dir: Option<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[command(flatten)]
    pub categories: CategoryArgs,
    /// `uniform`, `population`, a target file, or NAME=FILE; repeatable
    #[arg(long = "target")]
    pub targets: Vec<String>,
    /// depth k, `R` for the topic's relevant count, or `full`
    #[arg(long)]
    pub cutoff: Option<String>,
    /// minimum grade counted as relevant
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long, value_enum)]
    pub scope: Option<Scope>,
    #[arg(long, value_enum)]
    pub aggregation: Option<AggregationArg>,
    /// interpolations to report; repeatable
    #[arg(long = "interp", value_enum)]
    pub interps: Vec<InterpArg>,
    /// fairness weight of every interpolation
    #[arg(long)]
    pub weight: Option<f64>,
    /// tolerate duplicates, odd Q0 columns and unmapped documents
    #[arg(long)]
    pub lenient: bool,
    /// count unmapped documents in an `__unknown__` category (lenient mode)
    #[arg(long)]
    pub include_unknown: bool,
    /// skip normalization; allows a single run
    #[arg(long)]
    pub raw_only: bool,
    #[arg(long)]
    pub leaderboard_size: Option<usize>,
    /// expected second column of run lines
    #[arg(long)]
    pub q0: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[command(flatten)]
    pub categories: CategoryArgs,
    #[arg(long)]
    pub threshold: Option<u32>,
    /// global share below which a category is flagged
    #[arg(long)]
    pub scarcity: Option<f64>,
    #[arg(long)]
    pub lenient: bool,
    #[arg(long)]
    pub include_unknown: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// leaderboard.json or leaderboard.csv
    #[arg(long)]
    pub leaderboard: PathBuf,
    #[arg(long, default_value = "r_prec")]
    pub baseline: String,
    /// column compared with the baseline; repeatable, default every fairness
    /// and interpolated column
    #[arg(long = "metric")]
    pub metrics: Vec<String>,
    /// explicit A:B column pair; repeatable
    #[arg(long = "pair")]
    pub pairs: Vec<String>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON synthesis spec
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::new()
        .parse_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Bias(a) => cmd_bias(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Read {
        path: path.display().to_string(),
        source,
    })
}

fn parse_file<T>(path: &Path, parse: impl FnOnce(&[u8]) -> Result<T, FormatError>) -> Result<T> {
    let bytes = read_bytes(path)?;
    parse(&bytes).map_err(|source| Error::Input {
        path: path.display().to_string(),
        source,
    })
}

fn report_warnings<T>(path: &Path, parsed: Parsed<T>) -> T {
    for w in &parsed.warnings {
        warn!("{}: {w}", path.display());
    }
    parsed.value
}

fn load_qrels(path: &Path, strictness: Strictness) -> Result<Qrels> {
    let parsed = parse_file(path, |b| formats::parse_qrels(b, strictness))?;
    Ok(report_warnings(path, parsed))
}

fn load_source(
    args: &CategoryArgs,
    file: &FileConfig,
    strictness: Strictness,
) -> Result<CategorySource> {
    let flags = [&args.categories, &args.prefix_rules, &args.grade_map];
    let given = flags.iter().filter(|f| f.is_some()).count();
    if given > 1 {
        return Err(Error::invalid(
            "give only one of --categories, --prefix-rules and --grade-map",
        ));
    }
    let (categories, prefix_rules, grade_map) = if given == 1 {
        (&args.categories, &args.prefix_rules, &args.grade_map)
    } else {
        (&file.categories, &file.prefix_rules, &file.grade_map)
    };
    if let Some(p) = categories {
        let parsed = parse_file(p, |b| formats::parse_category_map(b, strictness))?;
        return Ok(report_warnings(p, parsed));
    }
    if let Some(p) = prefix_rules {
        return parse_file(p, |b| formats::parse_prefix_rules(b));
    }
    if let Some(p) = grade_map {
        return parse_file(p, |b| formats::parse_grade_map(b));
    }
    Err(Error::invalid(
        "a category source is required: --categories, --prefix-rules or --grade-map",
    ))
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn require<'a>(
    flag: &'a Option<PathBuf>,
    file: &'a Option<PathBuf>,
    name: &str,
) -> Result<&'a Path> {
    flag.as_deref()
        .or(file.as_deref())
        .ok_or_else(|| Error::invalid(format!("--{name} is required")))
}

fn parse_target_arg(arg: &str, categories: &[String]) -> Result<NamedTarget> {
    match arg {
        "uniform" => return Ok(NamedTarget::uniform()),
        "population" => return Ok(NamedTarget::population()),
        _ => {}
    }
    let (name, path) = match arg.split_once('=') {
        Some((n, p)) => (n.to_string(), PathBuf::from(p)),
        None => {
            let path = PathBuf::from(arg);
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (stem, path)
        }
    };
    let spec = parse_file(&path, |b| formats::parse_target(b, categories))?;
    Ok(NamedTarget::new(name, spec)?)
}

fn run_paths(args: &EvalArgs, file: &FileConfig) -> Result<Vec<PathBuf>> {
    let mut paths = args.runs.clone();
    let dir = args.runs_dir.as_ref().or(file.runs_dir.as_ref());
    if let Some(dir) = dir {
        let read_err = |source| Error::Read {
            path: dir.display().to_string(),
            source,
        };
        let mut found = Vec::new();
        for entry in fs::read_dir(dir).map_err(read_err)? {
            let entry = entry.map_err(read_err)?;
            let hidden = entry.file_name().to_string_lossy().starts_with('.');
            if entry.path().is_file() && !hidden {
                found.push(entry.path());
            }
        }
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(Error::invalid("no run files given"));
    }
    Ok(paths)
}

/// Builds the evaluation config from flags, then the config file, then defaults.
pub fn eval_config(
    args: &EvalArgs,
    file: &FileConfig,
    categories: &[String],
) -> Result<EvalConfig> {
    let mut cfg = EvalConfig::default();
    let cutoff = args
        .cutoff
        .clone()
        .or_else(|| file.cutoff.as_ref().map(|c| c.as_text()));
    if let Some(c) = cutoff {
        cfg.cutoff = c.parse::<Cutoff>()?;
    }
    if let Some(t) = args.threshold.or(file.threshold) {
        cfg.relevance_threshold = t;
    }
    if let Some(s) = args.scope.or(file.scope) {
        cfg.results_scope = s.into();
    }
    if let Some(a) = args.aggregation.or(file.aggregation) {
        cfg.aggregation = a.into();
    }
    if args.lenient || file.lenient == Some(true) {
        cfg.strictness = Strictness::Lenient;
    }
    cfg.include_unknown = args.include_unknown || file.include_unknown == Some(true);
    if cfg.include_unknown && cfg.strictness.is_strict() {
        return Err(Error::invalid("--include-unknown needs --lenient"));
    }
    cfg.raw_only = args.raw_only || file.raw_only == Some(true);
    if let Some(n) = args.leaderboard_size.or(file.leaderboard_size) {
        cfg.leaderboard_size = n;
    }

    let interps: Vec<InterpArg> = if !args.interps.is_empty() {
        args.interps.clone()
    } else if let Some(i) = &file.interp {
        i.clone()
    } else {
        vec![InterpArg::Mean, InterpArg::Gmean]
    };
    let weight = args
        .weight
        .or(file.weight)
        .unwrap_or(Interpolation::DEFAULT_WEIGHT);
    cfg.interpolations = interps
        .into_iter()
        .map(|i| {
            let kind = match i {
                InterpArg::Mean => InterpolationKind::ArithmeticMean,
                InterpArg::Gmean => InterpolationKind::GeometricMean,
            };
            Interpolation::new(kind, weight)
        })
        .collect::<fairdex_core::Result<_>>()?;

    let target_args: Vec<String> = if !args.targets.is_empty() {
        args.targets.clone()
    } else {
        file.targets.clone().unwrap_or_default()
    };
    if !target_args.is_empty() {
        cfg.targets = target_args
            .iter()
            .map(|t| parse_target_arg(t, categories))
            .collect::<Result<_>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let format = args.format.or(file.format).unwrap_or_default();
    let lenient = args.lenient || file.lenient == Some(true);
    let strictness = if lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let opts = ParseOptions {
        strictness,
        q0: args
            .q0
            .clone()
            .or_else(|| file.q0.clone())
            .unwrap_or_else(|| "Q0".into()),
    };

    let qrels = load_qrels(require(&args.qrels, &file.qrels, "qrels")?, strictness)?;
    let source = load_source(&args.categories, &file, strictness)?;
    let include_unknown = args.include_unknown || file.include_unknown == Some(true);
    let config = eval_config(&args, &file, &source.evaluation_categories(include_unknown))?;

    let paths = run_paths(&args, &file)?;
    let runs: Vec<Run> = paths
        .par_iter()
        .map(|p| {
            let parsed = parse_file(p, |b| formats::parse_run(b, &opts))?;
            Ok(report_warnings(p, parsed))
        })
        .collect::<Result<_>>()?;
    info!("parsed {} runs", runs.len());

    let evaluator = Evaluator::new(&qrels, &source, config)?;
    let systems = runs
        .par_iter()
        .map(|r| evaluator.score_system(r))
        .collect::<fairdex_core::Result<Vec<_>>>()?;
    let report = evaluator.assemble(systems)?;
    for w in &report.warnings {
        warn!("{w}");
    }

    let mut files = BTreeMap::new();
    if format.csv() {
        files.insert(
            "leaderboard.csv",
            report::leaderboard_table(&report).to_bytes()?,
        );
        files.insert("topics.csv", report::topics_table(&report).to_bytes()?);
    }
    if format.json() {
        files.insert("leaderboard.json", report::to_json(&report)?);
    }
    write_outputs(&args.out, &files)
}

fn cmd_bias(args: BiasArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let format = args.format.or(file.format).unwrap_or_default();
    let lenient = args.lenient || file.lenient == Some(true);
    let strictness = if lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let include_unknown = args.include_unknown || file.include_unknown == Some(true);
    if include_unknown && !lenient {
        return Err(Error::invalid("--include-unknown needs --lenient"));
    }
    let qrels = load_qrels(require(&args.qrels, &file.qrels, "qrels")?, strictness)?;
    let source = load_source(&args.categories, &file, strictness)?;
    let defaults = BiasConfig::default();
    let config = BiasConfig {
        relevance_threshold: args
            .threshold
            .or(file.threshold)
            .unwrap_or(defaults.relevance_threshold),
        scarcity_threshold: args
            .scarcity
            .or(file.scarcity)
            .unwrap_or(defaults.scarcity_threshold),
        strictness,
        include_unknown,
    };
    source.validate(&qrels, config.relevance_threshold)?;
    let bias = bias_report(&qrels, &source, &config)?;
    if !bias.scarce_categories.is_empty() {
        info!("scarce categories: {}", bias.scarce_categories.join(", "));
    }
    let mut files = BTreeMap::new();
    if format.csv() {
        files.insert(
            "bias_topics.csv",
            report::bias_topics_table(&bias).to_bytes()?,
        );
    }
    if format.json() {
        files.insert(
            "bias_summary.json",
            report::to_json(&BiasSummary::new(config, bias))?,
        );
    }
    write_outputs(&args.out, &files)
}

/// Leaderboard columns as `(tag, value)` pairs, from either report format.
enum Leaderboard {
    Json(Box<BatchReport>),
    Csv(report::Table),
}

impl Leaderboard {
    fn load(path: &Path) -> Result<Self> {
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv {
            return parse_file(path, |b| report::read_table(b, 1)).map(Leaderboard::Csv);
        }
        let bytes = read_bytes(path)?;
        serde_json::from_slice(&bytes)
            .map(|r| Leaderboard::Json(Box::new(r)))
            .map_err(|e| Error::Input {
                path: path.display().to_string(),
                source: FormatError {
                    line: Some(e.line()),
                    message: e.to_string(),
                },
            })
    }

    fn columns(&self) -> Vec<String> {
        match self {
            Leaderboard::Json(r) => r.columns.clone(),
            Leaderboard::Csv(t) => t.value_columns.clone(),
        }
    }

    fn column(&self, name: &str) -> Result<Vec<(String, f64)>> {
        let col = match self {
            Leaderboard::Json(r) => r
                .column(name)
                .map(|c| c.into_iter().map(|(t, v)| (t.to_string(), v)).collect()),
            Leaderboard::Csv(t) => t
                .column(name)
                .map(|c| t.rows.iter().map(|(k, _)| k[0].clone()).zip(c).collect()),
        };
        col.ok_or_else(|| Error::invalid(format!("unknown metric `{name}`")))
    }
}

fn cmd_correlate(args: CorrelateArgs) -> Result<()> {
    let board = Leaderboard::load(&args.leaderboard)?;
    let mut pairs: Vec<(String, String)> = Vec::new();
    let metrics: Vec<String> = if args.metrics.is_empty() && args.pairs.is_empty() {
        board
            .columns()
            .into_iter()
            .filter(|c| c != "r_prec" && c != "n_r_prec" && !c.starts_with("kl_"))
            .collect()
    } else {
        args.metrics.clone()
    };
    for m in metrics {
        pairs.push((args.baseline.clone(), m));
    }
    for p in &args.pairs {
        let (a, b) = p
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("pair `{p}` is not of the form A:B")))?;
        pairs.push((a.into(), b.into()));
    }
    if pairs.is_empty() {
        return Err(Error::invalid("no metric pairs to correlate"));
    }

    let mut rows = Vec::new();
    for (a, b) in pairs {
        let xs = board.column(&a)?;
        let ys = board.column(&b)?;
        let tau = match kendall_tau(&xs, &ys) {
            Ok(t) => t,
            Err(fairdex_core::Error::ConstantRanking) => {
                warn!("tau between `{a}` and `{b}` is undefined (constant ranking)");
                f64::NAN
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(TauRow {
            metric_a: a,
            metric_b: b,
            tau,
            n_systems: xs.len(),
        });
    }
    let table = report::tau_table(&rows);
    let bytes = table.to_bytes()?;
    print!("{}", String::from_utf8_lossy(&bytes));
    write_outputs(&args.out, &BTreeMap::from([("tau.csv", bytes)]))
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let bytes = read_bytes(&args.spec)?;
    let spec: SynthSpec = serde_json::from_slice(&bytes).map_err(|e| Error::Input {
        path: args.spec.display().to_string(),
        source: FormatError {
            line: Some(e.line()),
            message: e.to_string(),
        },
    })?;
    let synthesis = synth::synthesize(&spec, args.seed)?;
    let files = synth::render(&spec, &synthesis)?;
    synth::write_files(&args.out, &files)?;
    info!("wrote {} files to {}", files.len(), args.out.display());
    Ok(())
}

fn write_outputs(dir: &Path, files: &BTreeMap<&str, Vec<u8>>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.display().to_string(),
        source,
    })?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|source| Error::Write {
            path: path.display().to_string(),
            source,
        })?;
    }
    info!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}
