use serde::{Deserialize, Serialize};

/// Lexical class of a [`Token`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    LineComment,
    BlockComment,
    SingleQuoteString,
    DoubleQuoteString,
    HereString,
    Variable,
    CommandName,
    Parameter,
    Operator,
    Number,
    Punctuation,
    Keyword,
    Identifier,
    Newline,
}

impl TokenKind {
    pub fn is_comment(self) -> bool {
        matches!(self, TokenKind::LineComment | TokenKind::BlockComment)
    }

    pub fn is_string(self) -> bool {
        matches!(
            self,
            TokenKind::SingleQuoteString | TokenKind::DoubleQuoteString | TokenKind::HereString
        )
    }
}

/// 1-based source extent. The end column is exclusive.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Span {
    pub start_line: usize,
    pub start_column: usize,
    pub end_line: usize,
    pub end_column: usize,
}

/// Variable reference carried by [`TokenKind::Variable`] tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarRef {
    /// Scope or drive qualifier (`global`, `script`, `using`, `env`, ...), as written.
    pub scope: Option<String>,
    pub name: String,
    /// `@name` splatting form.
    pub splat: bool,
}

impl VarRef {
    pub fn scope_is(&self, scope: &str) -> bool {
        self.scope
            .as_deref()
            .is_some_and(|s| s.eq_ignore_ascii_case(scope))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte range in the script text.
    pub start: usize,
    pub end: usize,
    pub span: Span,
    pub var: Option<VarRef>,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text.eq_ignore_ascii_case(text)
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.kind == TokenKind::Punctuation && self.text == text
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.kind == TokenKind::Operator && self.text.eq_ignore_ascii_case(text)
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }

    pub fn is_opener(&self) -> bool {
        self.kind == TokenKind::Punctuation
            && matches!(self.text.as_str(), "{" | "(" | "[" | "$(" | "@(" | "@{")
    }

    pub fn is_closer(&self) -> bool {
        self.kind == TokenKind::Punctuation && matches!(self.text.as_str(), "}" | ")" | "]")
    }

    /// Variable name as written (no sigil or scope), if this is a variable token.
    pub fn var_name(&self) -> Option<&str> {
        self.var.as_ref().map(|v| v.name.as_str())
    }
}
