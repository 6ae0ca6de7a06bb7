use serde::Serialize;

use super::token::{Span, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ParseErrorKind {
    UnterminatedString,
    UnterminatedHereString,
    HereStringHeader,
    UnterminatedComment,
    MissingEndCurlyBrace,
    MissingEndParenthesis,
    MissingEndSquareBracket,
    UnexpectedClosingBracket,
    MissingFunctionName,
    MissingFunctionBody,
    MissingCatchOrFinally,
}

impl ParseErrorKind {
    /// Error identifier in the style PowerShell's parser reports.
    pub fn id(self) -> &'static str {
        match self {
            ParseErrorKind::UnterminatedString | ParseErrorKind::UnterminatedHereString => {
                "TerminatorExpectedAtEndOfString"
            }
            ParseErrorKind::HereStringHeader => "UnexpectedCharactersAfterHereStringHeader",
            ParseErrorKind::UnterminatedComment => "MissingTerminatorMultiLineComment",
            ParseErrorKind::MissingEndCurlyBrace => "MissingEndCurlyBrace",
            ParseErrorKind::MissingEndParenthesis => "MissingEndParenthesisInExpression",
            ParseErrorKind::MissingEndSquareBracket => "MissingEndSquareBracket",
            ParseErrorKind::UnexpectedClosingBracket => "UnexpectedToken",
            ParseErrorKind::MissingFunctionName => "MissingNameAfterKeyword",
            ParseErrorKind::MissingFunctionBody => "MissingFunctionBody",
            ParseErrorKind::MissingCatchOrFinally => "MissingCatchOrFinally",
        }
    }

    fn message(self) -> &'static str {
        match self {
            ParseErrorKind::UnterminatedString => "The string is missing the terminator.",
            ParseErrorKind::UnterminatedHereString => {
                "The here-string is missing its terminator at the start of a line."
            }
            ParseErrorKind::HereStringHeader => {
                "No characters are allowed after a here-string header but before the end of the line."
            }
            ParseErrorKind::UnterminatedComment => "Missing the terminator '#>' of a block comment.",
            ParseErrorKind::MissingEndCurlyBrace => "Missing closing '}' in statement block.",
            ParseErrorKind::MissingEndParenthesis => "Missing closing ')' in expression.",
            ParseErrorKind::MissingEndSquareBracket => "Missing closing ']'.",
            ParseErrorKind::UnexpectedClosingBracket => "Unexpected closing bracket.",
            ParseErrorKind::MissingFunctionName => "Missing function name after the keyword.",
            ParseErrorKind::MissingFunctionBody => "Missing function body in function declaration.",
            ParseErrorKind::MissingCatchOrFinally => {
                "The Try statement is missing its Catch or Finally block."
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    /// Byte range of the offending text.
    pub start: usize,
    pub end: usize,
    pub span: Span,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, start: usize, end: usize) -> Self {
        Self {
            kind,
            message: kind.message().to_owned(),
            start,
            end,
            span: Span::default(),
        }
    }
}

/// A variable occurrence, either a token or a reference embedded in an
/// expandable string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableUse {
    pub name: String,
    pub scope: Option<String>,
    pub span: Span,
    pub start: usize,
    pub end: usize,
    pub in_string: bool,
}

impl VariableUse {
    pub fn scope_is(&self, scope: &str) -> bool {
        self.scope
            .as_deref()
            .is_some_and(|s| s.eq_ignore_ascii_case(scope))
    }

    pub fn is_named(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    /// Span of the `$name` token.
    pub name_span: Span,
    /// Extent from the first attribute to the end of the declaration.
    pub span: Span,
    pub start: usize,
    pub end: usize,
    /// Type constraints as written, e.g. `string`, `string[]`, `System.Security.SecureString`.
    pub types: Vec<String>,
    /// Attribute names other than type constraints, e.g. `Parameter`, `ValidateSet`.
    pub attributes: Vec<String>,
    pub mandatory: bool,
    pub value_from_pipeline: bool,
    pub default: Option<String>,
}

impl ParamDecl {
    pub fn has_type(&self, names: &[&str]) -> bool {
        self.types.iter().any(|t| {
            let t = t.trim_end_matches("[]");
            let short = t.rsplit('.').next().unwrap_or(t);
            names
                .iter()
                .any(|n| n.eq_ignore_ascii_case(t) || n.eq_ignore_ascii_case(short))
        })
    }

    pub fn has_attribute(&self, name: &str) -> bool {
        self.attributes.iter().any(|a| {
            let short = a.rsplit('.').next().unwrap_or(a);
            let short = short.strip_suffix("Attribute").unwrap_or(short);
            short.eq_ignore_ascii_case(name)
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamBlock {
    /// Extent of the `param(...)` list (or the inline parameter parentheses).
    pub span: Span,
    pub params: Vec<ParamDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    /// Name as written, including any scope prefix.
    pub name: String,
    pub name_span: Span,
    pub verb: Option<String>,
    pub noun: Option<String>,
    pub keyword_span: Span,
    /// Byte offset of the `function` keyword.
    pub start: usize,
    pub params: Option<ParamBlock>,
    /// Byte range of the body including braces.
    pub body_start: usize,
    pub body_end: usize,
    pub body_span: Span,
    pub cmdlet_binding: bool,
    /// Span of the `SupportsShouldProcess` argument when it is enabled.
    pub supports_should_process: Option<Span>,
    pub has_begin: bool,
    pub has_process: bool,
    pub has_end: bool,
}

impl FunctionDecl {
    /// Name without a `scope:` prefix.
    pub fn bare_name(&self) -> &str {
        match self.name.split_once(':') {
            Some((_, rest)) if !rest.is_empty() => rest,
            _ => &self.name,
        }
    }

    pub fn param_list(&self) -> &[ParamDecl] {
        self.params
            .as_ref()
            .map(|p| p.params.as_slice())
            .unwrap_or(&[])
    }

    pub fn contains(&self, offset: usize) -> bool {
        (self.body_start..self.body_end).contains(&offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ElementKind {
    Parameter,
    Argument,
}

/// One whitespace-delimited element of a command invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandElement {
    pub kind: ElementKind,
    pub text: String,
    pub span: Span,
    pub start: usize,
    pub end: usize,
    /// For parameters, the name without the dash or trailing colon.
    pub parameter: Option<String>,
    /// Constant string value for barewords and quoted strings without
    /// variable expansion.
    pub literal: Option<String>,
    /// Element is a scriptblock literal `{ ... }`.
    pub is_scriptblock: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundParameter {
    pub name: String,
    pub span: Span,
    /// Index into `CommandCall::elements` of the value, if any.
    pub value: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandCall {
    pub name: String,
    pub name_span: Span,
    /// Byte range of the whole invocation.
    pub start: usize,
    pub end: usize,
    pub span: Span,
    /// Elements after the command name.
    pub elements: Vec<CommandElement>,
    pub parameters: Vec<BoundParameter>,
    /// Indices of positional argument elements.
    pub positional: Vec<usize>,
    /// 0-based position within its pipeline.
    pub pipeline_position: usize,
    /// Invocation uses `@splat` arguments.
    pub splatted: bool,
}

impl CommandCall {
    pub fn is_named(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name)
    }

    /// Finds a bound parameter whose name is `name` or an unambiguous prefix
    /// of it (at least `min_prefix` characters).
    pub fn parameter(&self, name: &str, min_prefix: usize) -> Option<&BoundParameter> {
        self.parameters
            .iter()
            .find(|p| param_matches(&p.name, name, min_prefix))
    }

    pub fn parameter_value(&self, p: &BoundParameter) -> Option<&CommandElement> {
        p.value.map(|i| &self.elements[i])
    }
}

pub(crate) fn param_matches(written: &str, full: &str, min_prefix: usize) -> bool {
    let w = written.to_ascii_lowercase();
    let f = full.to_ascii_lowercase();
    w == f || (w.len() >= min_prefix.max(1) && f.starts_with(&w))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchBlock {
    /// From the `catch` keyword through the closing brace.
    pub span: Span,
    pub start: usize,
    pub end: usize,
    pub is_empty: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub name: String,
    pub scope: Option<String>,
    pub operator: String,
    /// Span of the target variable.
    pub span: Span,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub operator: String,
    pub lhs: String,
    pub rhs: String,
    /// From the start of the left operand to the end of the right one.
    pub span: Span,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunspaceKind {
    Job,
    ThreadJob,
    Remote,
    Parallel,
}

/// A scriptblock that runs in a fresh runspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptBlockContext {
    pub kind: RunspaceKind,
    pub command: String,
    pub span: Span,
    pub start: usize,
    pub end: usize,
    pub variables: Vec<VariableUse>,
    /// Names assigned anywhere in the block (including loop variables).
    pub assigned: Vec<String>,
    /// Names declared by the block's own `param(...)`.
    pub params: Vec<String>,
}

/// Facts extracted from one script by [`parse`](super::parse).
#[derive(Debug, Clone, Default)]
pub struct ScriptAst {
    /// Full token stream, comments included.
    pub tokens: Vec<Token>,
    pub functions: Vec<FunctionDecl>,
    /// The script-level `param(...)` block, if any.
    pub script_params: Option<ParamBlock>,
    pub commands: Vec<CommandCall>,
    pub catch_blocks: Vec<CatchBlock>,
    pub assignments: Vec<Assignment>,
    pub comparisons: Vec<Comparison>,
    pub scriptblock_contexts: Vec<ScriptBlockContext>,
    /// Byte ranges of scriptblock literals (`{ ... }` used as values).
    pub scriptblocks: Vec<(usize, usize)>,
    pub variables: Vec<VariableUse>,
    pub parse_errors: Vec<ParseError>,
}

impl ScriptAst {
    /// Innermost function whose body contains `offset`.
    pub fn enclosing_function(&self, offset: usize) -> Option<&FunctionDecl> {
        self.functions
            .iter()
            .filter(|f| f.contains(offset))
            .min_by_key(|f| f.body_end - f.body_start)
    }
}
