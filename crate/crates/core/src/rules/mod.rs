//! Security rule engine: 22 checkers over [`ScriptAst`] facts, driven by
//! JSON data tables.

mod checks;
mod data;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::syntax::{parse, ScriptAst, SourceScript, Span};

pub use data::{AutomaticVariables, RuleSet, RuleSettings};

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("unknown rule: {0}")]
    UnknownRule(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid data table {file}: {source}")]
    Json {
        file: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid rule table: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Code Style & Readability")]
    CodeStyle,
    #[serde(rename = "Logic & Semantic Correctness")]
    Logic,
    #[serde(rename = "Scope & Global State")]
    Scope,
    #[serde(rename = "User Interaction & Change Confirmation")]
    UserInteraction,
    #[serde(rename = "Platform/API Usage & Compatibility")]
    Platform,
    #[serde(rename = "Credentials & Secrets Management")]
    Credentials,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::CodeStyle,
        Category::Logic,
        Category::Scope,
        Category::UserInteraction,
        Category::Platform,
        Category::Credentials,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::CodeStyle => "Code Style & Readability",
            Category::Logic => "Logic & Semantic Correctness",
            Category::Scope => "Scope & Global State",
            Category::UserInteraction => "User Interaction & Change Confirmation",
            Category::Platform => "Platform/API Usage & Compatibility",
            Category::Credentials => "Credentials & Secrets Management",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Presence,
    Absence,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub rule_id: String,
    pub category: Category,
    pub severity: u8,
    pub kind: RuleKind,
    pub description: String,
    /// Diagnostic message with `{name}`, `{target}` and `{file}` placeholders.
    pub message: String,
    pub suggested_fix: String,
}

/// One rule violation, serialized with the field set and order of the
/// diagnostic export format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file_name: String,
    pub rule_id: String,
    pub severity: u8,
    pub line_span: Span,
    pub description: String,
    pub suggested_fix: String,
    pub code_snippet: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Secure,
    Insecure,
    Invalid,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Secure => "secure",
            Verdict::Insecure => "insecure",
            Verdict::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SecurityVerdict {
    pub verdict: Verdict,
    pub diagnostics: Vec<Diagnostic>,
}

impl SecurityVerdict {
    /// No Warning- or Error-level finding and no parse failure.
    pub fn passes(&self) -> bool {
        self.verdict == Verdict::Secure
    }
}

/// Severity attached to parse failures.
pub const PARSE_ERROR_SEVERITY: u8 = 3;

/// A rule set plus a selection of enabled rules.
#[derive(Debug, Clone)]
pub struct Analyzer {
    set: RuleSet,
    enabled: Vec<bool>,
}

impl Analyzer {
    pub fn new(set: RuleSet) -> Self {
        let enabled = vec![true; set.rules().len()];
        Self { set, enabled }
    }

    /// Restricts analysis to `rule_ids`.
    pub fn with_rules<S: AsRef<str>>(set: RuleSet, rule_ids: &[S]) -> Result<Self, RuleError> {
        let mut enabled = vec![false; set.rules().len()];
        for id in rule_ids {
            let i = set
                .index_of(id.as_ref())
                .ok_or_else(|| RuleError::UnknownRule(id.as_ref().to_owned()))?;
            enabled[i] = true;
        }
        Ok(Self { set, enabled })
    }

    pub fn rule_set(&self) -> &RuleSet {
        &self.set
    }

    pub fn analyze(&self, script: &SourceScript) -> Vec<Diagnostic> {
        self.analyze_ast(script, &parse(script))
    }

    pub fn analyze_ast(&self, script: &SourceScript, ast: &ScriptAst) -> Vec<Diagnostic> {
        let mut findings = Vec::new();
        checks::run(&self.set, ast, &self.enabled, &mut findings);
        let mut out: Vec<Diagnostic> = findings
            .into_iter()
            .map(|f| {
                let spec = &self.set.rules()[f.rule];
                Diagnostic {
                    file_name: script.path().to_owned(),
                    rule_id: spec.rule_id.clone(),
                    severity: spec.severity,
                    line_span: f.span,
                    description: spec
                        .message
                        .replace("{name}", &f.name)
                        .replace("{target}", &f.target)
                        .replace("{file}", file_stem(script.path())),
                    suggested_fix: spec.suggested_fix.clone(),
                    code_snippet: script.span_text(&f.span).to_owned(),
                }
            })
            .collect();
        sort_diagnostics(&mut out);
        out.dedup();
        out
    }

    pub fn classify(&self, script: &SourceScript) -> SecurityVerdict {
        let ast = parse(script);
        let mut diagnostics = self.analyze_ast(script, &ast);
        for e in &ast.parse_errors {
            diagnostics.push(Diagnostic {
                file_name: script.path().to_owned(),
                rule_id: e.kind.id().to_owned(),
                severity: PARSE_ERROR_SEVERITY,
                line_span: e.span,
                description: e.message.clone(),
                suggested_fix: String::new(),
                code_snippet: script.raw()[e.start..e.end].to_owned(),
            });
        }
        sort_diagnostics(&mut diagnostics);
        let verdict = if !ast.parse_errors.is_empty() {
            Verdict::Invalid
        } else if diagnostics.iter().any(|d| d.severity >= 1) {
            Verdict::Insecure
        } else {
            Verdict::Secure
        };
        SecurityVerdict {
            verdict,
            diagnostics,
        }
    }
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::new(RuleSet::embedded().clone())
    }
}

fn sort_diagnostics(d: &mut [Diagnostic]) {
    d.sort_by(|a, b| {
        (a.line_span.start_line, a.line_span.start_column, &a.rule_id)
            .cmp(&(b.line_span.start_line, b.line_span.start_column, &b.rule_id))
            .then_with(|| a.line_span.cmp(&b.line_span))
            .then_with(|| a.code_snippet.cmp(&b.code_snippet))
    });
}

fn file_stem(path: &str) -> &str {
    path.rsplit(['/', '\\']).next().unwrap_or(path)
}

/// Shared analyzer over the embedded rule set.
pub fn default_analyzer() -> &'static Analyzer {
    static DEFAULT: OnceLock<Analyzer> = OnceLock::new();
    DEFAULT.get_or_init(Analyzer::default)
}

/// Runs every shipped rule over `script`.
pub fn analyze(script: &SourceScript) -> Vec<Diagnostic> {
    default_analyzer().analyze(script)
}

/// Classifies `script` with the shipped rule set.
pub fn classify(script: &SourceScript) -> SecurityVerdict {
    default_analyzer().classify(script)
}

/// The shipped rules in table order.
pub fn list_rules() -> &'static [RuleSpec] {
    RuleSet::embedded().rules()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lint(src: &str) -> Vec<(String, usize, usize)> {
        analyze(&SourceScript::new("t.ps1", src))
            .into_iter()
            .map(|d| (d.rule_id, d.line_span.start_line, d.line_span.start_column))
            .collect()
    }

    fn ids(src: &str) -> Vec<String> {
        lint(src).into_iter().map(|d| d.0).collect()
    }

    #[test]
    fn shipped_rules() {
        let rules = list_rules();
        assert_eq!(rules.len(), 22);
        let wh = rules
            .iter()
            .find(|r| r.rule_id == "PSAvoidUsingWriteHost")
            .unwrap();
        assert_eq!(wh.category, Category::CodeStyle);
        assert!(rules.iter().all(|r| r.severity <= 2));
    }

    #[test]
    fn alias_pipeline() {
        let a = "PSAvoidUsingCmdletAliases".to_string();
        assert_eq!(lint("gci | % { $_ }"), vec![(a.clone(), 1, 1), (a, 1, 7)]);
    }

    #[test]
    fn plain_text_secure_string() {
        let d = analyze(&SourceScript::new(
            "t.ps1",
            "ConvertTo-SecureString \"pw\" -AsPlainText -Force",
        ));
        assert_eq!(d.len(), 1);
        assert_eq!(
            d[0].rule_id,
            "PSAvoidUsingConvertToSecureStringWithPlainText"
        );
        assert_eq!(d[0].severity, 2);
        assert_eq!(
            d[0].code_snippet,
            "ConvertTo-SecureString \"pw\" -AsPlainText -Force"
        );
    }

    #[test]
    fn empty_script_is_clean() {
        assert!(lint("").is_empty());
    }

    #[test]
    fn verdicts() {
        let v = |s: &str| classify(&SourceScript::new("t.ps1", s)).verdict;
        assert_eq!(v("Write-Host \"x\""), Verdict::Insecure);
        assert_eq!(v("function {"), Verdict::Invalid);
        assert_eq!(v("Write-Output 'x'"), Verdict::Secure);
    }

    #[test]
    fn unknown_rule_is_rejected() {
        let err = Analyzer::with_rules(RuleSet::embedded().clone(), &["PSNope"]).unwrap_err();
        assert!(matches!(err, RuleError::UnknownRule(id) if id == "PSNope"));
    }

    #[test]
    fn selection_limits_rules() {
        let a =
            Analyzer::with_rules(RuleSet::embedded().clone(), &["PSAvoidUsingWriteHost"]).unwrap();
        let d = a.analyze(&SourceScript::new("t.ps1", "gci; Write-Host x"));
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn names_in_strings_and_comments_are_not_commands() {
        assert!(lint("# Write-Host\n'gci' | Out-Null").is_empty());
    }

    #[test]
    fn function_rules() {
        let src = "function Get-Items {\n  param($Path, $Unused)\n  Get-ChildItem -Path $Path\n}";
        let d = lint(src);
        assert!(d.contains(&("PSUseSingularNouns".into(), 1, 10)), "{d:?}");
        assert!(
            d.contains(&("PSReviewUnusedParameter".into(), 2, 16)),
            "{d:?}"
        );
        assert_eq!(d.len(), 2, "{d:?}");
    }

    #[test]
    fn unused_parameter_sees_foreach_blocks_only() {
        let used = "function Get-A {\n  param($x)\n  1..3 | ForEach-Object { $x }\n}";
        assert!(!ids(used).contains(&"PSReviewUnusedParameter".to_string()));
        let hidden = "function Get-A {\n  param($x)\n  $sb = { $x }\n  & $sb\n}";
        assert!(ids(hidden).contains(&"PSReviewUnusedParameter".to_string()));
    }

    #[test]
    fn should_process_pairs() {
        let declared = "function Set-A {\n  [CmdletBinding(SupportsShouldProcess)]\n  param()\n}";
        assert_eq!(ids(declared), vec!["PSShouldProcess"]);
        let both = "function Set-A {\n  [CmdletBinding(SupportsShouldProcess)]\n  param()\n  if ($PSCmdlet.ShouldProcess('x')) { }\n}";
        assert!(ids(both).is_empty(), "{:?}", ids(both));
    }

    #[test]
    fn credentials() {
        let src = "function Connect-Thing {\n  param([string]$UserName, [string]$Password)\n  $UserName; $Password\n}";
        let d = ids(src);
        assert!(d.contains(&"PSAvoidUsingUsernameAndPasswordParams".to_string()));
        assert!(d.contains(&"PSAvoidUsingPlainTextForPassword".to_string()));
        let ok = "function Connect-Thing {\n  param([PSCredential]$Credential)\n  $Credential\n}";
        assert!(ids(ok).is_empty(), "{:?}", ids(ok));
    }

    #[test]
    fn computer_name_loopback_is_exempt() {
        assert!(ids("Get-Service -ComputerName localhost").is_empty());
        assert_eq!(
            ids("Get-Service -ComputerName srv01"),
            vec!["PSAvoidUsingComputerNameHardcoded"]
        );
    }

    #[test]
    fn cmdlet_correctly() {
        assert_eq!(ids("Write-Warning"), vec!["PSUseCmdletCorrectly"]);
        assert!(ids("Write-Warning 'x'").is_empty());
        assert!(ids("'x' | Write-Warning").is_empty());
    }

    #[test]
    fn runspace_variables() {
        let src = "$x = 1\nStart-Job -ScriptBlock { $x; $using:x }";
        assert_eq!(
            lint(src),
            vec![("PSUseUsingScopeModifierInNewRunspaces".into(), 2, 26)]
        );
    }
}
