//! Corpus ingestion: turn raw text plus label annotations into integer
//! co-occurrence counts, and counts into the analytic model.
//!
//! Counts are the only stored state — probabilities are always derived — so
//! merging shard counts is exact integer addition and the result of a build
//! is bit-for-bit reproducible. Shards of a corpus may be counted
//! concurrently and merged; with `min_count = 1` (no per-shard filtering)
//! the merged model equals the sequential one exactly.

mod io;

pub use io::{export_tsv, load_model, model_from_json, model_to_json, save_model};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouping::GroupKey;
use crate::model::{AnalyticModel, FeatureColumn, TaskColumn};
use crate::real::Real;

/// Errors from corpus ingestion and model (de)serialization.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("corpus contains no usable tokens after filtering")]
    EmptyCorpus,
    #[error("models disagree in schema: {0}")]
    SchemaMismatch(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported model file version {found} (expected 1)")]
    VersionMismatch { found: u64 },
    #[error("invalid context spec: {0}")]
    InvalidSpec(&'static str),
    #[error("io error: {0}")]
    Io(String),
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// How context windows are formed around each token occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpec {
    /// Tokens taken on each side of the center token (center excluded).
    pub window: usize,
    /// Lowercase tokens (and feature/lexicon words) before matching.
    pub lowercase: bool,
    /// Words occurring fewer times than this are dropped from the model.
    pub min_count: u64,
    /// When true, windows do not cross newline boundaries.
    pub boundary: bool,
}

impl Default for ContextSpec {
    fn default() -> Self {
        ContextSpec {
            window: 2,
            lowercase: false,
            min_count: 1,
            boundary: true,
        }
    }
}

impl ContextSpec {
    fn check(&self) -> Result<(), ModelError> {
        if self.window < 1 {
            return Err(ModelError::InvalidSpec("window must be at least 1"));
        }
        if self.min_count < 1 {
            return Err(ModelError::InvalidSpec("min_count must be at least 1"));
        }
        Ok(())
    }
}

/// Per-task binary labels for the corpus.
///
/// Text form (see [`LabelSource::parse`]): a lexicon file starts with a
/// header line `word<TAB>task…` and lists one `word<TAB>0/1…` row per word;
/// a per-occurrence file starts with `occurrence<TAB>task…` and then has one
/// line per corpus line, each carrying one comma-separated 0/1 group per
/// token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSource {
    Lexicon {
        tasks: Vec<String>,
        words: HashMap<String, Vec<u8>>,
    },
    PerOccurrence {
        tasks: Vec<String>,
        rows: Vec<Vec<Vec<u8>>>,
    },
}

impl LabelSource {
    pub fn tasks(&self) -> &[String] {
        match self {
            LabelSource::Lexicon { tasks, .. } => tasks,
            LabelSource::PerOccurrence { tasks, .. } => tasks,
        }
    }

    /// Parse either label format, distinguished by the header's first field.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, 1, "empty label file"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        let tasks: Vec<String> = fields[1..].iter().map(|s| s.to_string()).collect();
        if tasks.is_empty() || tasks.iter().any(|t| t.is_empty()) {
            return Err(parse_err(1, 1, "label header must name at least one task"));
        }
        match fields[0] {
            "word" => {
                let mut words = HashMap::new();
                for (i, line) in lines.enumerate() {
                    let row = i + 2;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let cols: Vec<&str> = line.split('\t').collect();
                    if cols.len() != tasks.len() + 1 {
                        return Err(parse_err(row, 1, "lexicon row has wrong field count"));
                    }
                    let bits = cols[1..]
                        .iter()
                        .map(|c| {
                            parse_bit(c).ok_or_else(|| parse_err(row, 1, "label must be 0 or 1"))
                        })
                        .collect::<Result<Vec<u8>, _>>()?;
                    if words.insert(cols[0].to_string(), bits).is_some() {
                        return Err(parse_err(
                            row,
                            1,
                            format!("duplicate lexicon word {}", cols[0]),
                        ));
                    }
                }
                Ok(LabelSource::Lexicon { tasks, words })
            }
            "occurrence" => {
                let mut rows = Vec::new();
                for (i, line) in lines.enumerate() {
                    let row = i + 2;
                    let mut groups = Vec::new();
                    for group in line.split_whitespace() {
                        let bits = group
                            .split(',')
                            .map(|c| {
                                parse_bit(c)
                                    .ok_or_else(|| parse_err(row, 1, "label must be 0 or 1"))
                            })
                            .collect::<Result<Vec<u8>, _>>()?;
                        if bits.len() != tasks.len() {
                            return Err(parse_err(row, 1, "label group has wrong task count"));
                        }
                        groups.push(bits);
                    }
                    rows.push(groups);
                }
                Ok(LabelSource::PerOccurrence { tasks, rows })
            }
            other => Err(parse_err(
                1,
                1,
                format!("unknown label header kind {other:?}"),
            )),
        }
    }

    fn lowercased(self) -> Self {
        match self {
            LabelSource::Lexicon { tasks, words } => LabelSource::Lexicon {
                tasks,
                words: words
                    .into_iter()
                    .map(|(w, b)| (w.to_lowercase(), b))
                    .collect(),
            },
            other => other,
        }
    }
}

fn parse_bit(s: &str) -> Option<u8> {
    match s {
        "0" => Some(0),
        "1" => Some(1),
        _ => None,
    }
}

/// Integer counts for one vocabulary word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordCounts {
    pub word: String,
    /// Occurrences of the word.
    pub n: u64,
    /// Occurrences in whose window each feature appeared at least once.
    pub c: Vec<u64>,
    /// Occurrences labeled positive per task.
    pub y: Vec<u64>,
}

/// Counts over a vocabulary, with the context settings that produced them.
///
/// Vocabulary is kept sorted by word (strictly ascending); `total_tokens` is
/// always the sum of the per-word occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalModel {
    spec: ContextSpec,
    features: Vec<String>,
    tasks: Vec<String>,
    total_tokens: u64,
    words: Vec<WordCounts>,
}

/// What a build dropped on the floor, for reporting beside the model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    /// Distinct words excluded because the lexicon had no entry for them.
    pub unknown_label_words: usize,
    /// Distinct words excluded by the `min_count` cutoff.
    pub below_min_count: usize,
}

impl EmpiricalModel {
    /// Assemble a model from per-word count rows, validating every invariant
    /// (sorted unique vocabulary, `c ≤ n`, `y ≤ n`, counts meeting
    /// `min_count`, consistent column widths).
    pub fn from_rows(
        spec: ContextSpec,
        features: Vec<String>,
        tasks: Vec<String>,
        words: Vec<WordCounts>,
    ) -> Result<Self, ModelError> {
        spec.check()?;
        if words.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let mut total: u64 = 0;
        for (i, row) in words.iter().enumerate() {
            if i > 0 && words[i - 1].word >= row.word {
                return Err(parse_err(
                    0,
                    0,
                    "vocabulary must be strictly ascending by word",
                ));
            }
            if row.n == 0 || row.n < spec.min_count {
                return Err(parse_err(
                    0,
                    0,
                    format!("word {} falls below min_count", row.word),
                ));
            }
            if row.c.len() != features.len() || row.y.len() != tasks.len() {
                return Err(parse_err(
                    0,
                    0,
                    format!("word {} has wrong column count", row.word),
                ));
            }
            if row.c.iter().any(|&c| c > row.n) || row.y.iter().any(|&y| y > row.n) {
                return Err(parse_err(
                    0,
                    0,
                    format!("word {} has a count exceeding n", row.word),
                ));
            }
            total = total
                .checked_add(row.n)
                .ok_or_else(|| parse_err(0, 0, "token count overflow"))?;
        }
        Ok(EmpiricalModel {
            spec,
            features,
            tasks,
            total_tokens: total,
            words,
        })
    }

    pub fn spec(&self) -> &ContextSpec {
        &self.spec
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[WordCounts] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &WordCounts {
        &self.words[i]
    }

    pub fn word_index(&self, w: &str) -> Option<usize> {
        self.words
            .binary_search_by(|row| row.word.as_str().cmp(w))
            .ok()
    }

    /// Lower the counts into probability space.
    ///
    /// Weights are `n / total`, profiles `c / n`, posteriors `y / n`;
    /// feature grouping keys are the exact reduced fractions `c / n`, so
    /// grouping never depends on float rounding.
    pub fn analytic<F: Real>(&self) -> AnalyticModel<F> {
        let from = |x: u64| F::from_u64(x).expect("count fits the scalar type");
        let total = from(self.total_tokens);
        let weights: Vec<F> = self.words.iter().map(|r| from(r.n) / total).collect();
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let values: Vec<F> = self
                    .words
                    .iter()
                    .map(|r| from(r.c[k]) / from(r.n))
                    .collect();
                let keys: Vec<GroupKey> = self
                    .words
                    .iter()
                    .map(|r| GroupKey::from_count_ratio(r.c[k], r.n))
                    .collect();
                FeatureColumn::with_exact_keys(name.clone(), values, keys)
                    .expect("count-derived column lengths agree")
            })
            .collect();
        let tasks = self
            .tasks
            .iter()
            .enumerate()
            .map(|(t, name)| {
                let values: Vec<F> = self
                    .words
                    .iter()
                    .map(|r| from(r.y[t]) / from(r.n))
                    .collect();
                TaskColumn::new(name.clone(), values)
            })
            .collect();
        AnalyticModel::new(weights, features, tasks).expect("count-derived model is valid")
    }
}

/// Tokenized corpus: one vector of tokens per input line.
fn tokenize(corpus: &str, lowercase: bool) -> Vec<Vec<String>> {
    corpus
        .lines()
        .map(|line| {
            line.split_whitespace()
                .map(|t| {
                    if lowercase {
                        t.to_lowercase()
                    } else {
                        t.to_string()
                    }
                })
                .collect()
        })
        .collect()
}

/// Count a corpus into a model.
///
/// One example per token occurrence: the occurrence's word is the row, each
/// feature's count increments when the feature word appears at least once in
/// the surrounding window (center token excluded), and the task counts
/// accumulate the occurrence's labels. Lexicon-mode words without a lexicon
/// entry are excluded (tallied in the report), then words below `min_count`
/// are dropped, then the vocabulary is sorted. Deterministic in its inputs.
pub fn build_model(
    corpus: &str,
    spec: &ContextSpec,
    features: &[String],
    labels: &LabelSource,
) -> Result<(EmpiricalModel, BuildReport), ModelError> {
    spec.check()?;
    let lines = tokenize(corpus, spec.lowercase);
    if lines.iter().all(|l| l.is_empty()) {
        return Err(ModelError::EmptyCorpus);
    }
    let features: Vec<String> = if spec.lowercase {
        features.iter().map(|f| f.to_lowercase()).collect()
    } else {
        features.to_vec()
    };
    let labels = if spec.lowercase {
        labels.clone().lowercased()
    } else {
        labels.clone()
    };

    if let LabelSource::PerOccurrence { rows, .. } = &labels {
        if rows.len() != lines.len() {
            return Err(parse_err(
                rows.len().min(lines.len()) + 1,
                1,
                "per-occurrence labels must have one line per corpus line",
            ));
        }
        for (i, (row, line)) in rows.iter().zip(&lines).enumerate() {
            if row.len() != line.len() {
                return Err(parse_err(
                    i + 1,
                    1,
                    "label groups do not match corpus tokens",
                ));
            }
        }
    }

    let mut feature_of: HashMap<&str, Vec<usize>> = HashMap::new();
    for (k, f) in features.iter().enumerate() {
        feature_of.entry(f.as_str()).or_default().push(k);
    }

    let task_count = labels.tasks().len();
    let mut counts: BTreeMap<String, WordCounts> = BTreeMap::new();
    let mut unknown: BTreeMap<&str, ()> = BTreeMap::new();
    let mut present = vec![false; features.len()];

    // With boundaries on, each line is its own window context; with them
    // off, the corpus is one token stream.
    let flat: Vec<&[String]> = if spec.boundary {
        lines.iter().map(|l| l.as_slice()).collect()
    } else {
        Vec::new()
    };
    let joined: Vec<String>;
    let all_lines: Vec<&[String]> = if spec.boundary {
        flat
    } else {
        joined = lines.iter().flatten().cloned().collect();
        vec![joined.as_slice()]
    };

    // (line, pos) of every occurrence in window order, for label lookup.
    let mut positions: Vec<(usize, usize)> = Vec::new();
    for (li, line) in lines.iter().enumerate() {
        for pos in 0..line.len() {
            positions.push((li, pos));
        }
    }

    let mut occurrence = 0usize;
    for tokens in &all_lines {
        for j in 0..tokens.len() {
            let word = tokens[j].as_str();
            let (orig_line, orig_pos) = positions[occurrence];
            occurrence += 1;

            let row_labels: Option<Vec<u8>> = match &labels {
                LabelSource::Lexicon { words, .. } => match words.get(word) {
                    Some(bits) => Some(bits.clone()),
                    None => {
                        unknown.entry(tokens[j].as_str()).or_insert(());
                        None
                    }
                },
                LabelSource::PerOccurrence { rows, .. } => Some(rows[orig_line][orig_pos].clone()),
            };
            let Some(row_labels) = row_labels else {
                continue;
            };

            let lo = j.saturating_sub(spec.window);
            let hi = (j + spec.window).min(tokens.len().saturating_sub(1));
            present.iter_mut().for_each(|p| *p = false);
            for (t, tok) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
                if t == j {
                    continue;
                }
                if let Some(ks) = feature_of.get(tok.as_str()) {
                    for &k in ks {
                        present[k] = true;
                    }
                }
            }

            let entry = counts
                .entry(word.to_string())
                .or_insert_with(|| WordCounts {
                    word: word.to_string(),
                    n: 0,
                    c: vec![0; features.len()],
                    y: vec![0; task_count],
                });
            entry.n += 1;
            for (k, &p) in present.iter().enumerate() {
                if p {
                    entry.c[k] += 1;
                }
            }
            for (t, &bit) in row_labels.iter().enumerate() {
                entry.y[t] += u64::from(bit);
            }
        }
    }

    let mut report = BuildReport {
        unknown_label_words: unknown.len(),
        below_min_count: 0,
    };
    let kept: Vec<WordCounts> = counts
        .into_values()
        .filter(|row| {
            let keep = row.n >= spec.min_count;
            if !keep {
                report.below_min_count += 1;
            }
            keep
        })
        .collect();
    if kept.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let model = EmpiricalModel::from_rows(spec.clone(), features, labels.tasks().to_vec(), kept)?;
    Ok((model, report))
}

/// Add two count models over the same schema (spec, features, tasks).
///
/// Pure integer addition per (word, column): associative and commutative, so
/// any shard split of a corpus merges to the sequential count bit-exactly
/// provided no shard filtered a word out (`min_count = 1` guarantees that).
pub fn merge_counts(a: &EmpiricalModel, b: &EmpiricalModel) -> Result<EmpiricalModel, ModelError> {
    if a.spec != b.spec {
        return Err(ModelError::SchemaMismatch("context specs differ".into()));
    }
    if a.features != b.features {
        return Err(ModelError::SchemaMismatch("feature lists differ".into()));
    }
    if a.tasks != b.tasks {
        return Err(ModelError::SchemaMismatch("task lists differ".into()));
    }
    let mut merged: BTreeMap<String, WordCounts> = BTreeMap::new();
    for row in a.words.iter().chain(&b.words) {
        match merged.get_mut(&row.word) {
            None => {
                merged.insert(row.word.clone(), row.clone());
            }
            Some(acc) => {
                acc.n += row.n;
                for (dst, src) in acc.c.iter_mut().zip(&row.c) {
                    *dst += src;
                }
                for (dst, src) in acc.y.iter_mut().zip(&row.y) {
                    *dst += src;
                }
            }
        }
    }
    EmpiricalModel::from_rows(
        a.spec.clone(),
        a.features.clone(),
        a.tasks.clone(),
        merged.into_values().collect(),
    )
}
