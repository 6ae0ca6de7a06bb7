//! PowerShell tokenizer and best-effort fact extractor.

mod ast;
mod lexer;
mod parser;
mod source;
mod token;

pub use ast::{
    Assignment, BoundParameter, CatchBlock, CommandCall, CommandElement, Comparison, ElementKind,
    FunctionDecl, ParamBlock, ParamDecl, ParseError, ParseErrorKind, RunspaceKind, ScriptAst,
    ScriptBlockContext, VariableUse,
};
pub use lexer::{lex, tokenize};
pub use parser::parse;
pub use source::{OffsetOutOfRange, SourceScript};
pub use token::{Span, Token, TokenKind, VarRef};

/// Returns the script text with every comment replaced by a single space.
pub fn strip_comments(script: &SourceScript) -> String {
    let raw = script.raw();
    let mut out = String::with_capacity(raw.len());
    let mut last = 0;
    for t in tokenize(script).iter().filter(|t| t.kind.is_comment()) {
        out.push_str(&raw[last..t.start]);
        out.push(' ');
        last = t.end;
    }
    out.push_str(&raw[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(src: &str) -> String {
        strip_comments(&SourceScript::new("t.ps1", src))
    }

    #[test]
    fn strips_line_and_block_comments() {
        assert_eq!(strip("$a = 1 # x"), "$a = 1  ");
        assert_eq!(strip("<# c #>$a"), " $a");
    }

    #[test]
    fn hash_inside_string_survives() {
        assert_eq!(strip("\"#not a comment\""), "\"#not a comment\"");
    }
}
