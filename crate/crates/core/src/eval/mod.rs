//! Benchmark metrics for analysis, repair and generation outputs.

mod matching;
mod similarity;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::SimplifiedAnalysis;
use crate::rules::{Analyzer, Verdict};
use crate::syntax::SourceScript;

pub use matching::{match_issues, prf, MatchResult, MatchedPair, TEXT_MATCH_THRESHOLD};
pub use similarity::{matched_chars, similarity};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("{pred} predictions for {gt} ground-truth analyses")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("empty batch")]
    EmptyBatch,
}

/// How per-script counts are combined into one F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum F1Aggregation {
    /// F1 per script, then the mean over scripts.
    PerScript,
    /// F1 of the summed counts.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub rule_f1: F1Aggregation,
    pub issue_f1: F1Aggregation,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            rule_f1: F1Aggregation::PerScript,
            issue_f1: F1Aggregation::Pooled,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }

    /// F1, or 1 when there was nothing to find and nothing was predicted.
    pub fn f1(&self) -> f64 {
        if self.tp + self.fp + self.fn_ == 0 {
            1.0
        } else {
            prf(self.tp, self.fp, self.fn_).2
        }
    }
}

/// Set comparison of rule names.
pub fn rule_counts(pred: &SimplifiedAnalysis, gt: &SimplifiedAnalysis) -> Counts {
    let p: HashSet<&str> = pred.analysis.iter().map(|r| r.rule_name.as_str()).collect();
    let g: HashSet<&str> = gt.analysis.iter().map(|r| r.rule_name.as_str()).collect();
    let tp = p.intersection(&g).count();
    Counts {
        tp,
        fp: p.len() - tp,
        fn_: g.len() - tp,
    }
}

/// CodeAnalysis scores. Rates are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisScores {
    pub n_scripts: usize,
    pub n_insecure: usize,
    pub is_secure_accuracy: f64,
    /// Over insecure ground truths only; 0 when there are none.
    pub succ1_rule: f64,
    pub succ1_issue: f64,
    pub rule_f1: f64,
    pub issue_f1: f64,
    pub rule_counts: Counts,
    pub issue_counts: Counts,
    /// Percentage of ground-truth issues matched, per rule.
    pub per_rule: BTreeMap<String, f64>,
    pub options: ScoreOptions,
}

struct PerScript {
    secure_agrees: bool,
    insecure: bool,
    rule_hit: bool,
    rules: Counts,
    issues: Counts,
    per_rule: BTreeMap<String, (usize, usize)>,
}

fn score_one(pred: &SimplifiedAnalysis, gt: &SimplifiedAnalysis) -> PerScript {
    let rules = rule_counts(pred, gt);
    let m = match_issues(pred, gt);
    let mut per_rule: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let gt_rules: Vec<&str> = gt.issues().map(|(r, _)| r.rule_name.as_str()).collect();
    for r in &gt_rules {
        per_rule.entry((*r).to_owned()).or_default().1 += 1;
    }
    for pair in &m.matched_pairs {
        per_rule.entry(gt_rules[pair.gt].to_owned()).or_default().0 += 1;
    }
    PerScript {
        secure_agrees: pred.is_secure() == gt.is_secure(),
        insecure: !gt.is_secure(),
        rule_hit: rules.tp > 0,
        rules,
        issues: Counts {
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
        },
        per_rule,
    }
}

fn pct(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

fn aggregate(items: &[Counts], how: F1Aggregation) -> f64 {
    match how {
        F1Aggregation::PerScript => {
            100.0 * items.iter().map(Counts::f1).sum::<f64>() / items.len() as f64
        }
        F1Aggregation::Pooled => {
            100.0 * items.iter().fold(Counts::default(), |a, c| a.add(*c)).f1()
        }
    }
}

pub fn score_analysis(
    preds: &[SimplifiedAnalysis],
    gts: &[SimplifiedAnalysis],
) -> Result<AnalysisScores, EvalError> {
    score_analysis_with(preds, gts, ScoreOptions::default())
}

/// Scores predictions against ground truths paired by position.
pub fn score_analysis_with(
    preds: &[SimplifiedAnalysis],
    gts: &[SimplifiedAnalysis],
    options: ScoreOptions,
) -> Result<AnalysisScores, EvalError> {
    if preds.len() != gts.len() {
        return Err(EvalError::LengthMismatch {
            pred: preds.len(),
            gt: gts.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let scored: Vec<PerScript> = preds
        .par_iter()
        .zip(gts.par_iter())
        .map(|(p, g)| score_one(p, g))
        .collect();

    let n = scored.len();
    let insecure: Vec<&PerScript> = scored.iter().filter(|s| s.insecure).collect();
    let rules: Vec<Counts> = scored.iter().map(|s| s.rules).collect();
    let issues: Vec<Counts> = scored.iter().map(|s| s.issues).collect();
    let mut per_rule_counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in &scored {
        for (r, (hit, total)) in &s.per_rule {
            let e = per_rule_counts.entry(r.clone()).or_default();
            e.0 += hit;
            e.1 += total;
        }
    }
    Ok(AnalysisScores {
        n_scripts: n,
        n_insecure: insecure.len(),
        is_secure_accuracy: pct(scored.iter().filter(|s| s.secure_agrees).count(), n),
        succ1_rule: pct(
            insecure.iter().filter(|s| s.rule_hit).count(),
            insecure.len(),
        ),
        succ1_issue: pct(
            insecure.iter().filter(|s| s.issues.tp > 0).count(),
            insecure.len(),
        ),
        rule_f1: aggregate(&rules, options.rule_f1),
        issue_f1: aggregate(&issues, options.issue_f1),
        rule_counts: rules.iter().fold(Counts::default(), |a, c| a.add(*c)),
        issue_counts: issues.iter().fold(Counts::default(), |a, c| a.add(*c)),
        per_rule: per_rule_counts
            .into_iter()
            .map(|(r, (hit, total))| (r, pct(hit, total)))
            .collect(),
        options,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptOutcome {
    pub id: String,
    pub verdict: Verdict,
    pub passed: bool,
    /// Findings of severity 1 or above, parse failures included.
    pub violations: usize,
}

/// Share of scripts with no Warning- or Error-level finding and no parse error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub passed: usize,
    pub total: usize,
    pub rate: f64,
    pub outcomes: Vec<ScriptOutcome>,
}

impl RateReport {
    /// `rate` rounded to two decimals.
    pub fn rate_2dp(&self) -> f64 {
        (self.rate * 100.0).round() / 100.0
    }
}

fn pass_rate(analyzer: &Analyzer, scripts: &[(String, String)]) -> Result<RateReport, EvalError> {
    if scripts.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let outcomes: Vec<ScriptOutcome> = scripts
        .par_iter()
        .map(|(id, text)| {
            let v = analyzer.classify(&SourceScript::new(id.as_str(), text.as_str()));
            ScriptOutcome {
                id: id.clone(),
                verdict: v.verdict,
                passed: v.passes(),
                violations: v.diagnostics.iter().filter(|d| d.severity >= 1).count(),
            }
        })
        .collect();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    Ok(RateReport {
        passed,
        total: outcomes.len(),
        rate: pct(passed, outcomes.len()),
        outcomes,
    })
}

/// FSucRate over `(script_id, fixed_text)` pairs.
pub fn fsuc_rate(
    analyzer: &Analyzer,
    fixed_scripts: &[(String, String)],
) -> Result<RateReport, EvalError> {
    pass_rate(analyzer, fixed_scripts)
}

/// SRate over generated scripts; ids are their positions.
pub fn s_rate(analyzer: &Analyzer, generated: &[String]) -> Result<RateReport, EvalError> {
    let items: Vec<(String, String)> = generated
        .iter()
        .enumerate()
        .map(|(i, t)| (i.to_string(), t.clone()))
        .collect();
    pass_rate(analyzer, &items)
}

/// Combined benchmark report. Absent metrics were not computed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub is_secure_accuracy: Option<f64>,
    pub succ1_rule: Option<f64>,
    pub succ1_issue: Option<f64>,
    pub rule_f1: Option<f64>,
    pub issue_f1: Option<f64>,
    pub fsuc_rate: Option<f64>,
    pub s_rate: Option<f64>,
    pub per_rule: BTreeMap<String, f64>,
}

impl EvalReport {
    pub fn with_analysis(mut self, s: &AnalysisScores) -> Self {
        self.is_secure_accuracy = Some(s.is_secure_accuracy);
        self.succ1_rule = Some(s.succ1_rule);
        self.succ1_issue = Some(s.succ1_issue);
        self.rule_f1 = Some(s.rule_f1);
        self.issue_f1 = Some(s.issue_f1);
        self.per_rule = s.per_rule.clone();
        self
    }

    pub fn with_fsuc(mut self, r: &RateReport) -> Self {
        self.fsuc_rate = Some(r.rate);
        self
    }

    pub fn with_srate(mut self, r: &RateReport) -> Self {
        self.s_rate = Some(r.rate);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned two-column table; one row per computed metric, then per-rule rates.
    pub fn to_table(&self) -> String {
        let rows: Vec<(String, f64)> = [
            ("IsSecure Accuracy", self.is_secure_accuracy),
            ("Succ@1 (Rule)", self.succ1_rule),
            ("Succ@1 (Issue)", self.succ1_issue),
            ("Rule F1", self.rule_f1),
            ("Issue F1", self.issue_f1),
            ("FSucRate", self.fsuc_rate),
            ("SRate", self.s_rate),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_owned(), v)))
        .chain(self.per_rule.iter().map(|(r, v)| (format!("  {r}"), *v)))
        .collect();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>7}\n", "Metric", "Value (%)");
        let _ = writeln!(out, "{}", "-".repeat(width + 11));
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>9.2}");
        }
        out
    }
}
