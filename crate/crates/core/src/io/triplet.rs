use serde::{Deserialize, Serialize};

use super::simplified::SimplifiedAnalysis;

const TRAINING_SYSTEM: &str = include_str!("../../templates/training_system.txt");
const TRAINING_USER: &str = include_str!("../../templates/training_user.txt");
const TRAINING_TARGET: &str = include_str!("../../templates/training_target.txt");

/// One supervised fine-tuning record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingTriplet {
    pub system: String,
    pub user: String,
    pub target: String,
}

impl TrainingTriplet {
    /// Single-line JSON record.
    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("triplet serializes")
    }
}

/// Builds the record for `script` with its analysis and repaired text.
/// The fixed script is placed last and verbatim.
pub fn emit_triplet(script: &str, analysis: &SimplifiedAnalysis, fixed: &str) -> TrainingTriplet {
    let template = TRAINING_TARGET.trim_end_matches(['\r', '\n']);
    let (head, tail) = template
        .split_once("{{fixed}}")
        .expect("target template has a fixed placeholder");
    let target = format!(
        "{}{fixed}{tail}",
        head.replace("{{analysis}}", &analysis.to_json())
    );
    TrainingTriplet {
        system: TRAINING_SYSTEM.trim_end_matches(['\r', '\n']).to_owned(),
        user: TRAINING_USER
            .trim_end_matches(['\r', '\n'])
            .replace("{{script}}", script),
        target,
    }
}
