use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::rules::Diagnostic;

use super::SchemaError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    #[serde(rename = "Message")]
    pub message: String,
    #[serde(rename = "StartLineNumber")]
    pub start_line: usize,
    #[serde(rename = "StartColumnNumber")]
    pub start_column: usize,
    #[serde(rename = "Text")]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEntry {
    #[serde(rename = "RuleName")]
    pub rule_name: String,
    #[serde(rename = "Severity")]
    pub severity: i64,
    #[serde(rename = "Script Repair Suggestion")]
    pub suggestion: String,
    #[serde(rename = "Issues")]
    pub issues: Vec<Issue>,
}

/// Per-script analysis in the compact schema used for prompting, training
/// and scoring.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplifiedAnalysis {
    #[serde(rename = "FileName")]
    pub file_name: String,
    #[serde(rename = "Analysis")]
    pub analysis: Vec<RuleEntry>,
}

impl SimplifiedAnalysis {
    pub fn is_secure(&self) -> bool {
        self.analysis.is_empty()
    }

    pub fn issue_count(&self) -> usize {
        self.analysis.iter().map(|r| r.issues.len()).sum()
    }

    /// `(rule, issue)` pairs in entry order.
    pub fn issues(&self) -> impl Iterator<Item = (&RuleEntry, &Issue)> {
        self.analysis
            .iter()
            .flat_map(|r| r.issues.iter().map(move |i| (r, i)))
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen = HashSet::new();
        for r in &self.analysis {
            if r.issues.is_empty() {
                return Err(SchemaError::EmptyIssuesList(r.rule_name.clone()));
            }
            if !seen.insert(r.rule_name.as_str()) {
                return Err(SchemaError::DuplicateRule(r.rule_name.clone()));
            }
            if let Some(i) = r
                .issues
                .iter()
                .find(|i| i.start_line == 0 || i.start_column == 0)
            {
                return Err(SchemaError::InvalidField(format!(
                    "{}: issue at {}:{} is not 1-based",
                    r.rule_name, i.start_line, i.start_column
                )));
            }
        }
        Ok(())
    }

    /// Drops every "Script Repair Suggestion".
    pub fn without_suggestions(&self) -> SimplifiedAnalysis {
        let mut out = self.clone();
        for r in &mut out.analysis {
            r.suggestion.clear();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis serializes")
    }
}

/// Groups diagnostics by rule, in order of each rule's first issue.
pub fn to_simplified(diags: &[Diagnostic], file_name: &str) -> SimplifiedAnalysis {
    let mut sorted: Vec<&Diagnostic> = diags.iter().collect();
    sorted.sort_by_key(|d| (d.line_span.start_line, d.line_span.start_column));
    let mut analysis: Vec<RuleEntry> = Vec::new();
    for d in sorted {
        let issue = Issue {
            message: d.description.clone(),
            start_line: d.line_span.start_line,
            start_column: d.line_span.start_column,
            text: d.code_snippet.clone(),
        };
        match analysis.iter_mut().find(|r| r.rule_name == d.rule_id) {
            Some(r) => r.issues.push(issue),
            None => analysis.push(RuleEntry {
                rule_name: d.rule_id.clone(),
                severity: i64::from(d.severity),
                suggestion: d.suggested_fix.clone(),
                issues: vec![issue],
            }),
        }
    }
    SimplifiedAnalysis {
        file_name: file_name.to_owned(),
        analysis,
    }
}
