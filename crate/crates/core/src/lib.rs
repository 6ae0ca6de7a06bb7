//! PowerShell security linting, benchmark scoring, reward shaping and
//! training-data synthesis.
//!
//! ```
//! use psaudit::{analyze, SourceScript};
//!
//! let script = SourceScript::new("demo.ps1", "gci | % { $_.Name }\n");
//! let ids: Vec<_> = analyze(&script).into_iter().map(|d| d.rule_id).collect();
//! assert_eq!(ids, ["PSAvoidUsingCmdletAliases", "PSAvoidUsingCmdletAliases"]);
//! ```

pub mod corpus;
pub mod eval;
pub mod io;
pub mod reward;
pub mod rules;
pub mod syntax;
pub mod synth;

pub use corpus::{dedup_splits, normalize, partition, DedupOptions, DedupReport};
pub use eval::{
    fsuc_rate, match_issues, s_rate, score_analysis, similarity, EvalReport, MatchResult,
};
pub use io::{
    emit_triplet, parse_model_output, render_prompt, to_simplified, ModelOutput, SchemaError,
    SimplifiedAnalysis, Task, TrainingTriplet,
};
pub use reward::{analysis_reward, fix_reward, total_reward, RewardBreakdown, RewardConfig};
pub use rules::{analyze, classify, list_rules, Analyzer, Diagnostic, SecurityVerdict, Verdict};
pub use syntax::{parse, SourceScript};
pub use synth::{repair_once, synthesize, synthesize_dataset, verify_fix, LlmClient};
