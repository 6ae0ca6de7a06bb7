//! Serialized formats: diagnostic export, simplified analyses, two-section
//! model output, prompt templates and training triplets.

mod output;
mod prompt;
mod simplified;
mod triplet;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rules::Diagnostic;

pub use output::{
    parse_model_output, render_model_output, strip_fences, MarkersFound, ModelOutput,
    ANALYSIS_MARKER, ANALYSIS_RESULT_MARKER, FIXED_SCRIPT_MARKER,
};
pub use prompt::{render_prompt, PromptError, PromptInputs, RenderedPrompt, Task};
pub use simplified::{to_simplified, Issue, RuleEntry, SimplifiedAnalysis};
pub use triplet::{emit_triplet, TrainingTriplet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Section {
    Analysis,
    FixedScript,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Section::Analysis => "Analysis",
            Section::FixedScript => "FixedScript",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("missing {0} section")]
    MissingSection(Section),
    #[error("invalid analysis JSON at byte {position}: {message}")]
    InvalidJson { position: usize, message: String },
    #[error("unexpected text after the analysis JSON at byte {position}")]
    TrailingText { position: usize },
    #[error("rule {0} has an empty Issues list")]
    EmptyIssuesList(String),
    #[error("rule {0} appears more than once")]
    DuplicateRule(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
}

impl SchemaError {
    /// Short `Kind:detail` tag, e.g. `MissingSection:FixedScript`.
    pub fn reason(&self) -> String {
        match self {
            SchemaError::MissingSection(s) => format!("MissingSection:{s}"),
            SchemaError::InvalidJson { position, .. } => format!("InvalidJson:{position}"),
            SchemaError::TrailingText { position } => format!("TrailingText:{position}"),
            SchemaError::EmptyIssuesList(r) => format!("EmptyIssuesList:{r}"),
            SchemaError::DuplicateRule(r) => format!("DuplicateRule:{r}"),
            SchemaError::InvalidField(_) => "InvalidField".to_owned(),
        }
    }
}

/// Pretty JSON array of diagnostics in export field order.
pub fn diagnostics_to_json(diags: &[Diagnostic]) -> String {
    serde_json::to_string_pretty(diags).expect("diagnostics serialize")
}
