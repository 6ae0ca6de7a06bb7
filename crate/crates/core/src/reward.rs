//! Layered reward for two-section model outputs: schema gate, analysis
//! reward and fix reward.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{match_issues, similarity, MatchResult};
use crate::io::{parse_model_output, ModelOutput, SchemaError, SimplifiedAnalysis};
use crate::rules::{Analyzer, Verdict};
use crate::syntax::SourceScript;

#[derive(Debug, thiserror::Error)]
pub enum RewardError {
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
    #[error("malformed request: {0}")]
    Request(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub gate_penalty: f64,
    pub fix_parse_penalty: f64,
    pub analysis_max: f64,
    pub fix_max: f64,
    pub dup_line_penalty_per_extra: f64,
    pub dup_text_threshold: f64,
    /// Deduction per residual finding. `None` uses `fix_max / (K + 1)`
    /// where `K` is the ground-truth issue count.
    pub residual_decay: Option<f64>,
    pub similarity_guard_weight: f64,
    pub similarity_floor: f64,
    /// Lowest analysis score for fabricated issues on a secure script.
    pub fabrication_floor: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            gate_penalty: -20.0,
            fix_parse_penalty: -10.0,
            analysis_max: 20.0,
            fix_max: 10.0,
            dup_line_penalty_per_extra: 0.5,
            dup_text_threshold: 0.9,
            residual_decay: None,
            similarity_guard_weight: 0.4,
            similarity_floor: 0.2,
            fabrication_floor: -5.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |m: &str| Err(RewardError::InvalidConfig(m.to_owned()));
        let finite = [
            self.gate_penalty,
            self.fix_parse_penalty,
            self.analysis_max,
            self.fix_max,
            self.dup_line_penalty_per_extra,
            self.dup_text_threshold,
            self.residual_decay.unwrap_or(0.0),
            self.similarity_guard_weight,
            self.similarity_floor,
            self.fabrication_floor,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite");
        }
        if self.analysis_max <= 0.0 || self.fix_max <= 0.0 {
            return bad("analysis_max and fix_max must be positive");
        }
        if self.gate_penalty >= 0.0 || self.fix_parse_penalty >= 0.0 || self.fabrication_floor > 0.0
        {
            return bad("penalties must be negative");
        }
        if self.dup_line_penalty_per_extra < 0.0 || self.residual_decay.is_some_and(|d| d < 0.0) {
            return bad("deductions must be non-negative");
        }
        for (name, v) in [
            ("dup_text_threshold", self.dup_text_threshold),
            ("similarity_guard_weight", self.similarity_guard_weight),
            ("similarity_floor", self.similarity_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(RewardError::InvalidConfig(format!(
                    "{name} must be in [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Applies the keys of a JSON object on top of `self`.
    pub fn overlay(&self, overrides: &serde_json::Value) -> Result<Self, RewardError> {
        let mut base = serde_json::to_value(self)?;
        if let (Some(b), Some(o)) = (base.as_object_mut(), overrides.as_object()) {
            for (k, v) in o {
                b.insert(k.clone(), v.clone());
            }
        } else if !overrides.is_null() {
            return Err(RewardError::InvalidConfig(
                "config must be an object".into(),
            ));
        }
        let cfg: RewardConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Gate {
    Pass,
    Fail { reason: String },
}

impl Gate {
    pub fn passed(&self) -> bool {
        matches!(self, Gate::Pass)
    }

    /// `pass` or `fail:<reason>`.
    pub fn label(&self) -> String {
        match self {
            Gate::Pass => "pass".to_owned(),
            Gate::Fail { reason } => format!("fail:{reason}"),
        }
    }
}

pub fn schema_gate(raw_output: &str) -> Result<ModelOutput, SchemaError> {
    parse_model_output(raw_output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReward {
    pub score: f64,
    pub base: f64,
    pub duplicates: usize,
    pub dup_penalty: f64,
    pub issue_match: MatchResult,
}

/// Repeated lines beyond the first plus near-identical text pairs, per rule.
fn duplicate_counts(a: &SimplifiedAnalysis, threshold: f64) -> BTreeMap<&str, usize> {
    let mut out = BTreeMap::new();
    for r in &a.analysis {
        let mut lines: BTreeMap<usize, usize> = BTreeMap::new();
        let mut texts: BTreeMap<&str, usize> = BTreeMap::new();
        for i in &r.issues {
            *lines.entry(i.start_line).or_default() += 1;
            *texts.entry(i.text.as_str()).or_default() += 1;
        }
        let mut n: usize = lines.values().map(|c| c - 1).sum();
        let groups: Vec<(&str, usize)> = texts.into_iter().collect();
        for (x, (tx, cx)) in groups.iter().enumerate() {
            n += cx * (cx - 1) / 2;
            for (ty, cy) in &groups[x + 1..] {
                if similarity(tx, ty) >= threshold {
                    n += cx * cy;
                }
            }
        }
        *out.entry(r.rule_name.as_str()).or_default() += n;
    }
    out
}

/// Duplicates in `pred` beyond those already present in `gt`, per rule.
fn excess_duplicates(pred: &SimplifiedAnalysis, gt: &SimplifiedAnalysis, threshold: f64) -> usize {
    let allowed = duplicate_counts(gt, threshold);
    duplicate_counts(pred, threshold)
        .into_iter()
        .map(|(rule, n)| n.saturating_sub(allowed.get(rule).copied().unwrap_or(0)))
        .sum()
}

pub fn analysis_reward(
    pred: &SimplifiedAnalysis,
    gt: &SimplifiedAnalysis,
    cfg: &RewardConfig,
) -> AnalysisReward {
    let issue_match = match_issues(pred, gt);
    let duplicates = excess_duplicates(pred, gt, cfg.dup_text_threshold);
    let dup_penalty = duplicates as f64 * cfg.dup_line_penalty_per_extra;
    let (base, score) = if gt.is_secure() {
        if pred.is_secure() {
            (cfg.analysis_max, cfg.analysis_max)
        } else {
            (0.0, (-dup_penalty).max(cfg.fabrication_floor))
        }
    } else {
        let base = issue_match.f1 * cfg.analysis_max;
        (base, (base - dup_penalty).max(0.0))
    };
    AnalysisReward {
        score,
        base,
        duplicates,
        dup_penalty,
        issue_match,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub rule_id: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixReward {
    pub score: f64,
    pub parse_failed: bool,
    pub residuals: Vec<Residual>,
    pub residual_component: f64,
    pub similarity: f64,
}

pub fn fix_reward(
    analyzer: &Analyzer,
    fixed: &str,
    gt_fixed: &str,
    gt_analysis: &SimplifiedAnalysis,
    cfg: &RewardConfig,
) -> FixReward {
    let parse_failed = |residuals| FixReward {
        score: cfg.fix_parse_penalty,
        parse_failed: true,
        residuals,
        residual_component: 0.0,
        similarity: 0.0,
    };
    if fixed.trim().is_empty() {
        return parse_failed(Vec::new());
    }
    let verdict = analyzer.classify(&SourceScript::new("fixed.ps1", fixed));
    if verdict.verdict == Verdict::Invalid {
        return parse_failed(Vec::new());
    }
    let residuals: Vec<Residual> = verdict
        .diagnostics
        .iter()
        .filter(|d| matches!(d.severity, 1 | 2))
        .map(|d| Residual {
            rule_id: d.rule_id.clone(),
            line: d.line_span.start_line,
        })
        .collect();
    let decay = cfg
        .residual_decay
        .unwrap_or(cfg.fix_max / (gt_analysis.issue_count() as f64 + 1.0));
    let residual_component = (cfg.fix_max - residuals.len() as f64 * decay).max(0.0);
    let s = similarity(fixed, gt_fixed);
    let w = cfg.similarity_guard_weight;
    let mut score = residual_component * ((1.0 - w) + w * s);
    if s < cfg.similarity_floor {
        score /= 2.0;
    }
    FixReward {
        score,
        parse_failed: false,
        residuals,
        residual_component,
        similarity: s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub analysis: AnalysisReward,
    pub fix: FixReward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub total: f64,
    pub gate: Gate,
    pub analysis_score: Option<f64>,
    pub fix_score: Option<f64>,
    pub evidence: Option<Evidence>,
}

/// Reward scorer bound to a config and rule set.
#[derive(Debug, Clone, Default)]
pub struct RewardEngine {
    cfg: RewardConfig,
    analyzer: Analyzer,
}

impl RewardEngine {
    pub fn new(cfg: RewardConfig, analyzer: Analyzer) -> Result<Self, RewardError> {
        cfg.validate()?;
        Ok(Self { cfg, analyzer })
    }

    pub fn config(&self) -> &RewardConfig {
        &self.cfg
    }

    pub fn total_reward(
        &self,
        raw_output: &str,
        gt_analysis: &SimplifiedAnalysis,
        gt_fixed: &str,
    ) -> RewardBreakdown {
        total_with(&self.analyzer, raw_output, gt_analysis, gt_fixed, &self.cfg)
    }

    fn with_overrides(&self, overrides: Option<&serde_json::Value>) -> Result<Self, RewardError> {
        Ok(match overrides {
            Some(o) => Self {
                cfg: self.cfg.overlay(o)?,
                analyzer: self.analyzer.clone(),
            },
            None => self.clone(),
        })
    }
}

fn total_with(
    analyzer: &Analyzer,
    raw_output: &str,
    gt_analysis: &SimplifiedAnalysis,
    gt_fixed: &str,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let out = match schema_gate(raw_output) {
        Ok(o) => o,
        Err(e) => {
            return RewardBreakdown {
                total: cfg.gate_penalty,
                gate: Gate::Fail { reason: e.reason() },
                analysis_score: None,
                fix_score: None,
                evidence: None,
            }
        }
    };
    let analysis = analysis_reward(&out.analysis, gt_analysis, cfg);
    let fix = fix_reward(analyzer, &out.fixed_script, gt_fixed, gt_analysis, cfg);
    RewardBreakdown {
        total: analysis.score + fix.score,
        gate: Gate::Pass,
        analysis_score: Some(analysis.score),
        fix_score: Some(fix.score),
        evidence: Some(Evidence { analysis, fix }),
    }
}

/// Scores with the embedded rule set.
pub fn total_reward(
    raw_output: &str,
    gt_analysis: &SimplifiedAnalysis,
    gt_fixed: &str,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    total_with(
        crate::rules::default_analyzer(),
        raw_output,
        gt_analysis,
        gt_fixed,
        cfg,
    )
}

/// One scoring request, for both batch files and serve mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardRequest {
    pub id: serde_json::Value,
    pub output: String,
    pub gt_analysis: SimplifiedAnalysis,
    pub gt_fixed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRecord {
    pub id: serde_json::Value,
    #[serde(flatten)]
    pub breakdown: RewardBreakdown,
}

/// Compact serve-mode reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeResponse {
    pub id: serde_json::Value,
    pub total: f64,
    pub gate: String,
    pub analysis_score: Option<f64>,
    pub fix_score: Option<f64>,
}

impl ServeResponse {
    pub fn new(id: serde_json::Value, b: &RewardBreakdown) -> Self {
        Self {
            id,
            total: b.total,
            gate: b.gate.label(),
            analysis_score: b.analysis_score,
            fix_score: b.fix_score,
        }
    }
}

impl RewardEngine {
    pub fn score_request(&self, req: &RewardRequest) -> Result<RewardBreakdown, RewardError> {
        let engine = self.with_overrides(req.config.as_ref())?;
        Ok(engine.total_reward(&req.output, &req.gt_analysis, &req.gt_fixed))
    }

    /// Scores JSON Lines requests in parallel; results keep input order.
    /// Blank lines are skipped.
    pub fn score_batch(&self, input: &str) -> Vec<Result<BatchRecord, RewardError>> {
        let lines: Vec<&str> = input.lines().filter(|l| !l.trim().is_empty()).collect();
        lines
            .par_iter()
            .map(|line| {
                let req: RewardRequest = serde_json::from_str(line)?;
                let breakdown = self.score_request(&req)?;
                Ok(BatchRecord {
                    id: req.id,
                    breakdown,
                })
            })
            .collect()
    }

    /// Answers one request line per input line until EOF, flushing each reply.
    /// Malformed requests get `{"id": ..., "error": ...}` and the loop continues.
    pub fn serve<R: BufRead, W: Write>(
        &self,
        input: R,
        mut output: W,
    ) -> Result<usize, RewardError> {
        let mut served = 0;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let reply = match serde_json::from_str::<RewardRequest>(&line) {
                Ok(req) => match self.score_request(&req) {
                    Ok(b) => serde_json::to_value(ServeResponse::new(req.id, &b))?,
                    Err(e) => error_reply(req.id, &e),
                },
                Err(e) => {
                    let id = serde_json::from_str::<serde_json::Value>(&line)
                        .ok()
                        .and_then(|v| v.get("id").cloned())
                        .unwrap_or(serde_json::Value::Null);
                    error_reply(id, &RewardError::Request(e))
                }
            };
            serde_json::to_writer(&mut output, &reply)?;
            output.write_all(b"\n")?;
            output.flush()?;
            served += 1;
        }
        Ok(served)
    }
}

fn error_reply(id: serde_json::Value, e: &RewardError) -> serde_json::Value {
    serde_json::json!({ "id": id, "error": e.to_string() })
}
