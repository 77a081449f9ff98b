//! Text formats: TREC runs and qrels, category maps, prefix rules, grade maps
//! and target tables.
//!
//! Runs and qrels are whitespace separated. The table formats are
//! `key<TAB>value`; a line without a tab is split on whitespace instead, and
//! blank lines and `#` comments are skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use fairdex_core::{CategoryMapping, CategorySource, Qrels, Run, RunEntry, Strictness, TargetSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct FormatError {
    pub line: Option<usize>,
    pub message: String,
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn whole(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<fairdex_core::Error> for FormatError {
    fn from(e: fairdex_core::Error) -> Self {
        FormatError::whole(e.to_string())
    }
}

/// A parsed value plus the problems lenient mode chose to tolerate.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    pub strictness: Strictness,
    /// Expected second column of a run line, compared case-insensitively.
    pub q0: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            strictness: Strictness::Strict,
            q0: "Q0".into(),
        }
    }
}

impl ParseOptions {
    pub fn lenient() -> Self {
        Self {
            strictness: Strictness::Lenient,
            ..Self::default()
        }
    }
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    reader.lines().enumerate().map(|(i, l)| {
        l.map(|l| (i + 1, l))
            .map_err(|e| FormatError::at(i + 1, format!("read failed: {e}")))
    })
}

fn table_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Non-blank, non-comment lines of a table file, split into fields.
fn table_rows<R: BufRead>(reader: R) -> Result<Vec<(usize, Vec<String>)>, FormatError> {
    let mut rows = Vec::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        rows.push((n, table_fields(t).into_iter().map(String::from).collect()));
    }
    Ok(rows)
}

fn expect_fields(n: usize, fields: &[String], want: usize) -> Result<(), FormatError> {
    if fields.len() != want {
        return Err(FormatError::at(
            n,
            format!("expected {want} fields, found {}", fields.len()),
        ));
    }
    Ok(())
}

/// Parses a TREC run: `topic Q0 doc_id rank score tag`.
pub fn parse_run<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Parsed<Run>, FormatError> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut tag: Option<String> = None;
    for item in lines(reader) {
        let (n, line) = item?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 6 {
            return Err(FormatError::at(
                n,
                format!("expected 6 fields, found {}", f.len()),
            ));
        }
        if opts.strictness.is_strict() && !f[1].eq_ignore_ascii_case(&opts.q0) {
            return Err(FormatError::at(
                n,
                format!("expected `{}` in column 2, found `{}`", opts.q0, f[1]),
            ));
        }
        let rank: u32 = f[3].parse().map_err(|_| {
            FormatError::at(n, format!("rank `{}` is not a non-negative integer", f[3]))
        })?;
        if rank == 0 {
            return Err(FormatError::at(n, "rank must be at least 1"));
        }
        let score: f64 = f[4]
            .parse()
            .map_err(|_| FormatError::at(n, format!("score `{}` is not a number", f[4])))?;
        if !score.is_finite() {
            return Err(FormatError::at(
                n,
                format!("score `{}` is not finite", f[4]),
            ));
        }
        match &tag {
            None => tag = Some(f[5].to_string()),
            Some(t) if t != f[5] => {
                return Err(FormatError::at(
                    n,
                    format!("tag `{}` differs from `{t}` on earlier lines", f[5]),
                ))
            }
            Some(_) => {}
        }
        if !seen.insert((f[0].to_string(), f[2].to_string())) {
            if opts.strictness.is_strict() {
                return Err(FormatError::at(
                    n,
                    format!("duplicate entry for topic {} document {}", f[0], f[2]),
                ));
            }
            warnings.push(format!(
                "line {n}: duplicate entry for topic {} document {}, keeping the first",
                f[0], f[2]
            ));
            continue;
        }
        entries.push(RunEntry {
            topic_id: f[0].into(),
            doc_id: f[2].into(),
            rank,
            score,
            system_tag: f[5].into(),
        });
    }
    let Some(tag) = tag else {
        return Err(FormatError::whole("no entries"));
    };
    Ok(Parsed {
        value: Run::from_entries(tag, entries)?,
        warnings,
    })
}

/// Writes a run in canonical order.
pub fn write_run<W: Write>(run: &Run, mut out: W) -> io::Result<()> {
    for e in run.entries() {
        writeln!(
            out,
            "{} Q0 {} {} {} {}",
            e.topic_id, e.doc_id, e.rank, e.score, e.system_tag
        )?;
    }
    Ok(())
}

/// Parses qrels: `topic iteration doc_id grade`.
pub fn parse_qrels<R: BufRead>(
    reader: R,
    strictness: Strictness,
) -> Result<Parsed<Qrels>, FormatError> {
    let mut judgments: Vec<(String, String, u32)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut warnings = Vec::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 4 {
            return Err(FormatError::at(
                n,
                format!("expected 4 fields, found {}", f.len()),
            ));
        }
        let grade: i64 = f[3]
            .parse()
            .map_err(|_| FormatError::at(n, format!("grade `{}` is not an integer", f[3])))?;
        let grade = u32::try_from(grade)
            .map_err(|_| FormatError::at(n, format!("grade {grade} is negative or too large")))?;
        if !seen.insert((f[0].to_string(), f[2].to_string())) {
            if strictness.is_strict() {
                return Err(FormatError::at(
                    n,
                    format!("duplicate judgment for topic {} document {}", f[0], f[2]),
                ));
            }
            warnings.push(format!(
                "line {n}: duplicate judgment for topic {} document {}, keeping the first",
                f[0], f[2]
            ));
            continue;
        }
        judgments.push((f[0].into(), f[2].into(), grade));
    }
    if judgments.is_empty() {
        return Err(FormatError::whole("no judgments"));
    }
    Ok(Parsed {
        value: Qrels::from_judgments(judgments)?,
        warnings,
    })
}

pub fn write_qrels<W: Write>(qrels: &Qrels, mut out: W) -> io::Result<()> {
    for (topic, doc, grade) in qrels.iter() {
        writeln!(out, "{topic} 0 {doc} {grade}")?;
    }
    Ok(())
}

/// Parses an explicit `doc_id<TAB>category` map.
pub fn parse_category_map<R: BufRead>(
    reader: R,
    strictness: Strictness,
) -> Result<Parsed<CategorySource>, FormatError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut warnings = Vec::new();
    for (n, f) in table_rows(reader)? {
        expect_fields(n, &f, 2)?;
        let [doc, cat]: [String; 2] = f.try_into().expect("two fields");
        if !seen.insert(doc.clone()) {
            if strictness.is_strict() {
                return Err(FormatError::at(n, format!("document {doc} mapped twice")));
            }
            warnings.push(format!(
                "line {n}: document {doc} mapped twice, keeping the first"
            ));
            continue;
        }
        pairs.push((doc, cat));
    }
    if pairs.is_empty() {
        return Err(FormatError::whole("no category assignments"));
    }
    Ok(Parsed {
        value: CategorySource::explicit(pairs)?,
        warnings,
    })
}

/// Parses ordered `prefix<TAB>category` rules.
pub fn parse_prefix_rules<R: BufRead>(reader: R) -> Result<CategorySource, FormatError> {
    let mut rules = Vec::new();
    for (n, f) in table_rows(reader)? {
        expect_fields(n, &f, 2)?;
        rules.push((f[0].clone(), f[1].clone()));
    }
    if rules.is_empty() {
        return Err(FormatError::whole("no prefix rules"));
    }
    Ok(CategorySource::prefix_rules(rules)?)
}

/// Parses `grade<TAB>category` lines.
pub fn parse_grade_map<R: BufRead>(reader: R) -> Result<CategorySource, FormatError> {
    let mut pairs = Vec::new();
    for (n, f) in table_rows(reader)? {
        expect_fields(n, &f, 2)?;
        let grade: u32 = f[0].parse().map_err(|_| {
            FormatError::at(n, format!("grade `{}` is not a non-negative integer", f[0]))
        })?;
        pairs.push((grade, f[1].clone()));
    }
    if pairs.is_empty() {
        return Err(FormatError::whole("no grade mappings"));
    }
    Ok(CategorySource::grade_map(pairs)?)
}

/// Writes a category source in the file format matching its mode.
pub fn write_category_source<W: Write>(source: &CategorySource, mut out: W) -> io::Result<()> {
    match source.mapping() {
        CategoryMapping::Explicit(map) => {
            for (doc, cat) in map {
                writeln!(out, "{doc}\t{cat}")?;
            }
        }
        CategoryMapping::GradeMap(map) => {
            for (grade, cat) in map {
                writeln!(out, "{grade}\t{cat}")?;
            }
        }
        CategoryMapping::PrefixRules(rules) => {
            for (prefix, cat) in rules {
                writeln!(out, "{prefix}\t{cat}")?;
            }
        }
    }
    Ok(())
}

/// Parses a target file: the keyword `uniform` or `population`, or
/// `category<TAB>probability` lines covering exactly `categories`.
pub fn parse_target<R: BufRead>(
    reader: R,
    categories: &[String],
) -> Result<TargetSpec, FormatError> {
    let rows = table_rows(reader)?;
    if let [(_, f)] = rows.as_slice() {
        if f.len() == 1 {
            match f[0].to_ascii_lowercase().as_str() {
                "uniform" => return Ok(TargetSpec::Uniform),
                "population" => return Ok(TargetSpec::Population),
                _ => {}
            }
        }
    }
    if rows.is_empty() {
        return Err(FormatError::whole("empty target file"));
    }
    let mut table = BTreeMap::new();
    for (n, f) in rows {
        expect_fields(n, &f, 2)?;
        let p: f64 = f[1]
            .parse()
            .map_err(|_| FormatError::at(n, format!("probability `{}` is not a number", f[1])))?;
        if table.insert(f[0].clone(), p).is_some() {
            return Err(FormatError::at(
                n,
                format!("category {} listed twice", f[0]),
            ));
        }
    }
    Ok(TargetSpec::custom(table, categories)?)
}

pub fn write_target<W: Write>(target: &TargetSpec, mut out: W) -> io::Result<()> {
    match target {
        TargetSpec::Uniform => writeln!(out, "uniform"),
        TargetSpec::Population => writeln!(out, "population"),
        TargetSpec::Custom(table) => {
            for (cat, p) in table {
                writeln!(out, "{cat}\t{p}")?;
            }
            Ok(())
        }
    }
}
