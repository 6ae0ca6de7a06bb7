use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::simplified::SimplifiedAnalysis;

const CODEGEN_SYSTEM: &str = include_str!("../../templates/codegen_system.txt");
const CODEGEN_USER: &str = include_str!("../../templates/codegen_user.txt");
const ANALYSIS_SYSTEM: &str = include_str!("../../templates/code_analysis_system.txt");
const ANALYSIS_USER: &str = include_str!("../../templates/code_analysis_user.txt");
const FIX_SYSTEM: &str = include_str!("../../templates/code_fix_system.txt");
const FIX_USER: &str = include_str!("../../templates/code_fix_user.txt");

const RULE_NAMES_CONTEXT: &str = "\nYou will also be provided with a list containing all possible security rule names from the official document, delimited by triple quotes.";
const RULE_DOCS_CONTEXT: &str = "\nYou will also be provided with a dictionary containing all possible security rules and their descriptions from the official document, delimited by triple quotes.";
const FIX_JSON_STRUCTURE: &str = "
JSON structure (provided in M2/3/4):
Each item in Analysis contains:
- RuleName: The rule violated by the issue.
- Severity: The severity level.
- Script Repair Suggestion: (provided in M3/4) The suggested fix.
- Issues: A list of concrete issues, each with Message, StartLineNumber, StartColumnNumber, and Text (the offending code).
";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("mode M{mode} is not defined for {task}")]
    InvalidMode { task: Task, mode: u8 },
    #[error("{task} M{mode} requires {input}")]
    MissingInput {
        task: Task,
        mode: u8,
        input: &'static str,
    },
    #[error("unknown task {0:?}")]
    UnknownTask(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    CodeGen,
    CodeAnalysis,
    CodeFix,
}

impl Task {
    pub fn modes(self) -> std::ops::RangeInclusive<u8> {
        match self {
            Task::CodeGen => 1..=1,
            Task::CodeAnalysis => 1..=3,
            Task::CodeFix => 1..=4,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::CodeGen => "CodeGen",
            Task::CodeAnalysis => "CodeAnalysis",
            Task::CodeFix => "CodeFix",
        })
    }
}

impl FromStr for Task {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "codegen" | "gen" => Ok(Task::CodeGen),
            "codeanalysis" | "analysis" => Ok(Task::CodeAnalysis),
            "codefix" | "fix" => Ok(Task::CodeFix),
            _ => Err(PromptError::UnknownTask(s.to_owned())),
        }
    }
}

/// Everything a template may reference. Unused inputs are ignored.
#[derive(Debug, Clone, Default)]
pub struct PromptInputs {
    /// Natural-language task for CodeGen.
    pub prompt: Option<String>,
    pub script: Option<String>,
    pub analysis: Option<SimplifiedAnalysis>,
    /// Rule ids for CodeAnalysis M2.
    pub rule_names: Vec<String>,
    /// Rule id to documentation for CodeAnalysis M3.
    pub rule_docs: BTreeMap<String, String>,
    /// Rule id to replacement suggestion for CodeFix M4.
    pub custom_suggestions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    /// System and user parts as one text.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.system, self.user)
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

fn quoted(label: &str, body: &str) -> String {
    format!("\n{label}\n\"\"\"\n{body}\n\"\"\"\n")
}

fn require<'a, T>(
    v: Option<&'a T>,
    task: Task,
    mode: u8,
    input: &'static str,
) -> Result<&'a T, PromptError> {
    v.ok_or(PromptError::MissingInput { task, mode, input })
}

/// Fills the task template for `mode` (1-based).
pub fn render_prompt(
    task: Task,
    mode: u8,
    inputs: &PromptInputs,
) -> Result<RenderedPrompt, PromptError> {
    if !task.modes().contains(&mode) {
        return Err(PromptError::InvalidMode { task, mode });
    }
    match task {
        Task::CodeGen => {
            let prompt = require(inputs.prompt.as_ref(), task, mode, "a prompt")?;
            Ok(RenderedPrompt {
                system: CODEGEN_SYSTEM.to_owned(),
                user: fill(CODEGEN_USER, &[("prompt", prompt)]),
            })
        }
        Task::CodeAnalysis => {
            let script = require(inputs.script.as_ref(), task, mode, "a script")?;
            let (context, extra) = match mode {
                1 => ("", String::new()),
                2 => {
                    if inputs.rule_names.is_empty() {
                        return Err(PromptError::MissingInput {
                            task,
                            mode,
                            input: "rule names",
                        });
                    }
                    let list = serde_json::to_string_pretty(&inputs.rule_names)
                        .expect("strings serialize");
                    (RULE_NAMES_CONTEXT, quoted("Rule name list:", &list))
                }
                _ => {
                    if inputs.rule_docs.is_empty() {
                        return Err(PromptError::MissingInput {
                            task,
                            mode,
                            input: "rule documentation",
                        });
                    }
                    let docs =
                        serde_json::to_string_pretty(&inputs.rule_docs).expect("strings serialize");
                    (RULE_DOCS_CONTEXT, quoted("Rule dictionary:", &docs))
                }
            };
            Ok(RenderedPrompt {
                system: fill(ANALYSIS_SYSTEM, &[("mode_context", context)]),
                user: fill(ANALYSIS_USER, &[("script", script)]) + &extra,
            })
        }
        Task::CodeFix => {
            let script = require(inputs.script.as_ref(), task, mode, "a script")?;
            if mode == 1 {
                return Ok(RenderedPrompt {
                    system: fill(FIX_SYSTEM, &[("json_structure", "")]),
                    user: fill(FIX_USER, &[("script", script)]),
                });
            }
            let analysis = require(inputs.analysis.as_ref(), task, mode, "an analysis")?;
            let shown = match mode {
                2 => analysis.without_suggestions(),
                3 => analysis.clone(),
                _ => {
                    if inputs.custom_suggestions.is_empty() {
                        return Err(PromptError::MissingInput {
                            task,
                            mode,
                            input: "customized suggestions",
                        });
                    }
                    let mut a = analysis.clone();
                    for r in &mut a.analysis {
                        if let Some(s) = inputs.custom_suggestions.get(&r.rule_name) {
                            r.suggestion = s.clone();
                        }
                    }
                    a
                }
            };
            Ok(RenderedPrompt {
                system: fill(FIX_SYSTEM, &[("json_structure", FIX_JSON_STRUCTURE)]),
                user: fill(FIX_USER, &[("script", script)])
                    + &quoted("Corresponding analysis result:", &shown.to_json()),
            })
        }
    }
}
