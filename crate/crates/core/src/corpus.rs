//! Corpus construction: canonical hashing, cross-split deduplication,
//! verdict partitioning and summary statistics.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rules::{Analyzer, Verdict};
use crate::syntax::{strip_comments, tokenize, SourceScript};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("walking {path}: {source}")]
    Walk {
        path: String,
        #[source]
        source: walkdir::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub canonical: String,
    /// Lowercase hex SHA-256 of `canonical`.
    pub digest: String,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Collapses whitespace runs to one space, trims, and applies simple
/// lowercase mapping.
fn canonicalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        // Simple case mapping keeps one char; full mapping only differs
        // for U+0130, whose simple lowercase is the first char.
        out.push(c.to_lowercase().next().unwrap_or(c));
    }
    out
}

pub fn normalize(script: &SourceScript) -> CanonicalForm {
    let canonical = canonicalize(&strip_comments(script));
    let digest = sha256_hex(&canonical);
    CanonicalForm { canonical, digest }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub path: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub digest: String,
    pub paths: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub train_in: usize,
    pub eval_in: usize,
    pub train_out: usize,
    /// Train scripts whose digest also occurs in the eval split.
    pub removed: Vec<Removal>,
    /// Digests shared by more than one train script.
    pub intra_split_duplicates: Vec<DuplicateGroup>,
    /// Train scripts dropped as intra-split duplicates (only when enabled).
    pub intra_split_removed: Vec<Removal>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DedupOptions {
    /// Also drop all but the first of each intra-split duplicate group.
    pub remove_intra_split: bool,
}

#[derive(Debug, Clone)]
pub struct DedupOutcome {
    pub train: Vec<SourceScript>,
    pub report: DedupReport,
}

fn digests(scripts: &[SourceScript]) -> Vec<String> {
    scripts.par_iter().map(|s| normalize(s).digest).collect()
}

/// Removes train scripts whose canonical digest also appears in `eval`.
pub fn dedup_splits(
    train: &[SourceScript],
    eval: &[SourceScript],
    opts: DedupOptions,
) -> DedupOutcome {
    let train_digests = digests(train);
    let eval_set: HashSet<String> = digests(eval).into_iter().collect();

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, d) in train_digests.iter().enumerate() {
        groups.entry(d).or_default().push(i);
    }
    let intra_split_duplicates = groups
        .iter()
        .filter(|(_, ix)| ix.len() > 1)
        .map(|(d, ix)| DuplicateGroup {
            digest: d.to_string(),
            paths: ix.iter().map(|&i| train[i].path().to_owned()).collect(),
        })
        .collect();

    let mut report = DedupReport {
        train_in: train.len(),
        eval_in: eval.len(),
        intra_split_duplicates,
        ..Default::default()
    };
    let mut kept = Vec::new();
    let mut seen = HashSet::new();
    for (s, d) in train.iter().zip(&train_digests) {
        let removal = || Removal {
            path: s.path().to_owned(),
            digest: d.clone(),
        };
        if eval_set.contains(d) {
            report.removed.push(removal());
        } else if opts.remove_intra_split && !seen.insert(d.as_str()) {
            report.intra_split_removed.push(removal());
        } else {
            kept.push(s.clone());
        }
    }
    report.train_out = kept.len();
    DedupOutcome {
        train: kept,
        report,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Partition {
    pub secure: Vec<SourceScript>,
    pub insecure: Vec<SourceScript>,
    pub invalid: Vec<SourceScript>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.secure.len() + self.insecure.len() + self.invalid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Buckets every script by its verdict, preserving input order within each
/// bucket.
pub fn partition(analyzer: &Analyzer, corpus: &[SourceScript]) -> Partition {
    let verdicts: Vec<Verdict> = corpus
        .par_iter()
        .map(|s| analyzer.classify(s).verdict)
        .collect();
    let mut p = Partition::default();
    for (s, v) in corpus.iter().zip(verdicts) {
        match v {
            Verdict::Secure => p.secure.push(s.clone()),
            Verdict::Insecure => p.insecure.push(s.clone()),
            Verdict::Invalid => p.invalid.push(s.clone()),
        }
    }
    p
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_total: usize,
    pub n_secure: usize,
    pub n_insecure: usize,
    pub n_invalid: usize,
    /// Lexer tokens per script.
    pub mean_tokens: f64,
    pub max_tokens: usize,
    /// Distinct rule ids per insecure script.
    pub mean_rule_types: f64,
    /// Diagnostics per insecure script.
    pub mean_violations: f64,
}

struct ScriptFacts {
    verdict: Verdict,
    tokens: usize,
    rule_types: usize,
    violations: usize,
}

pub fn corpus_stats(analyzer: &Analyzer, corpus: &[SourceScript]) -> CorpusStats {
    let facts: Vec<ScriptFacts> = corpus
        .par_iter()
        .map(|s| {
            let v = analyzer.classify(s);
            let rules: HashSet<&str> = v.diagnostics.iter().map(|d| d.rule_id.as_str()).collect();
            ScriptFacts {
                verdict: v.verdict,
                tokens: tokenize(s).len(),
                rule_types: rules.len(),
                violations: v.diagnostics.len(),
            }
        })
        .collect();
    let mean = |sum: usize, n: usize| if n == 0 { 0.0 } else { sum as f64 / n as f64 };
    let count = |v: Verdict| facts.iter().filter(|f| f.verdict == v).count();
    let insecure: Vec<_> = facts
        .iter()
        .filter(|f| f.verdict == Verdict::Insecure)
        .collect();
    CorpusStats {
        n_total: facts.len(),
        n_secure: count(Verdict::Secure),
        n_insecure: insecure.len(),
        n_invalid: count(Verdict::Invalid),
        mean_tokens: mean(facts.iter().map(|f| f.tokens).sum(), facts.len()),
        max_tokens: facts.iter().map(|f| f.tokens).max().unwrap_or(0),
        mean_rule_types: mean(insecure.iter().map(|f| f.rule_types).sum(), insecure.len()),
        mean_violations: mean(insecure.iter().map(|f| f.violations).sum(), insecure.len()),
    }
}

/// One manifest line per script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub path: String,
    pub digest: String,
    pub verdict: Verdict,
    pub n_diagnostics: usize,
}

pub fn manifest(analyzer: &Analyzer, corpus: &[SourceScript]) -> Vec<ManifestRecord> {
    corpus
        .par_iter()
        .map(|s| {
            let v = analyzer.classify(s);
            ManifestRecord {
                path: s.path().to_owned(),
                digest: normalize(s).digest,
                verdict: v.verdict,
                n_diagnostics: v.diagnostics.len(),
            }
        })
        .collect()
}

fn is_script(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| ["ps1", "psm1"].iter().any(|x| e.eq_ignore_ascii_case(x)))
}

pub fn read_script(path: &Path) -> Result<SourceScript, CorpusError> {
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(SourceScript::from_bytes(path.display().to_string(), &bytes))
}

/// Loads a single script, or every `.ps1`/`.psm1` file under a directory,
/// ordered by path.
pub fn load_scripts(path: &Path) -> Result<Vec<SourceScript>, CorpusError> {
    if path.is_file() {
        return Ok(vec![read_script(path)?]);
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|source| CorpusError::Walk {
            path: path.display().to_string(),
            source,
        })?;
        if entry.file_type().is_file() && is_script(entry.path()) {
            files.push(entry.into_path());
        }
    }
    files.sort();
    files.par_iter().map(|p| read_script(p)).collect()
}
