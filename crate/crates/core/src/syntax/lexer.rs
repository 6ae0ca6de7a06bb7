//! Lossless PowerShell tokenizer.
//!
//! The lexer covers the subset of the language the rule checks depend on:
//! comments, the four string forms, variables with scope qualifiers, command
//! and parameter tokens, the dash operators, brackets and attributes. Anything
//! else degrades to `Identifier` or `Punctuation`. Whitespace (including
//! backtick line continuations) is the only text not covered by a token.

use super::ast::{ParseError, ParseErrorKind};
use super::source::SourceScript;
use super::token::{Span, Token, TokenKind, VarRef};

const KEYWORDS: &[&str] = &[
    "begin",
    "break",
    "catch",
    "class",
    "continue",
    "data",
    "do",
    "dynamicparam",
    "else",
    "elseif",
    "end",
    "enum",
    "exit",
    "filter",
    "finally",
    "for",
    "foreach",
    "function",
    "if",
    "in",
    "param",
    "process",
    "return",
    "switch",
    "throw",
    "trap",
    "try",
    "until",
    "using",
    "while",
    "workflow",
];

/// Keywords that may follow a closing brace on the same statement.
const CONTINUATION_KEYWORDS: &[&str] = &["else", "elseif", "catch", "finally", "until", "while"];

const DASH_OPERATORS: &[&str] = &[
    "eq",
    "ne",
    "gt",
    "ge",
    "lt",
    "le",
    "like",
    "notlike",
    "match",
    "notmatch",
    "contains",
    "notcontains",
    "in",
    "notin",
    "replace",
    "split",
    "join",
    "is",
    "isnot",
    "as",
    "and",
    "or",
    "xor",
    "not",
    "band",
    "bor",
    "bxor",
    "bnot",
    "shl",
    "shr",
    "f",
];

/// Comparison operators that accept a `c`/`i` case prefix.
const CASED_OPERATORS: &[&str] = &[
    "eq",
    "ne",
    "gt",
    "ge",
    "lt",
    "le",
    "like",
    "notlike",
    "match",
    "notmatch",
    "contains",
    "notcontains",
    "in",
    "notin",
    "replace",
    "split",
];

pub(crate) fn is_dash_operator(word: &str) -> bool {
    let w = word.to_ascii_lowercase();
    if DASH_OPERATORS.contains(&w.as_str()) {
        return true;
    }
    match w.strip_prefix('c').or_else(|| w.strip_prefix('i')) {
        Some(rest) => CASED_OPERATORS.contains(&rest),
        None => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Brace,
    Paren,
    SubExpr,
    ArrayExpr,
    Hash,
    Square,
}

impl Group {
    fn closer(self) -> char {
        match self {
            Group::Brace | Group::Hash => '}',
            Group::Paren | Group::SubExpr | Group::ArrayExpr => ')',
            Group::Square => ']',
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    tokens: Vec<Token>,
    errors: Vec<ParseError>,
    stack: Vec<Group>,
    /// Next bareword starts a statement (command position).
    cmd_pos: bool,
    /// Next bareword follows `.` or `::`.
    member_next: bool,
    /// Next bareword is a function name.
    function_name_next: bool,
    /// Inside a hashtable literal, after `key =`.
    hash_value: bool,
}

/// Tokenizes `script`, returning the tokens together with any lexical errors.
pub fn lex(script: &SourceScript) -> (Vec<Token>, Vec<ParseError>) {
    let mut lexer = Lexer {
        src: script.raw(),
        pos: 0,
        tokens: Vec::new(),
        errors: Vec::new(),
        stack: Vec::new(),
        cmd_pos: true,
        member_next: false,
        function_name_next: false,
        hash_value: false,
    };
    lexer.run();
    let Lexer {
        mut tokens,
        mut errors,
        ..
    } = lexer;
    for t in &mut tokens {
        t.span = span_of(script, t.start, t.end);
    }
    for e in &mut errors {
        e.span = span_of(script, e.start, e.end);
    }
    (tokens, errors)
}

/// Token stream for `script`. Lexical errors are dropped; use [`lex`] or the
/// parser to observe them.
pub fn tokenize(script: &SourceScript) -> Vec<Token> {
    lex(script).0
}

pub(crate) fn span_of(script: &SourceScript, start: usize, end: usize) -> Span {
    let (start_line, start_column) = script.position(start);
    let (end_line, end_column) = script.position(end);
    Span {
        start_line,
        start_column,
        end_line,
        end_column,
    }
}

fn is_horizontal_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\u{0b}' | '\u{0c}' | '\u{a0}' | '\u{feff}')
        || (c.is_whitespace() && c != '\n' && c != '\r')
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Characters that end a generic (command-mode) bareword. `=` only ends
/// one inside a hashtable literal.
fn ends_bareword(c: char, in_hash: bool) -> bool {
    c.is_whitespace()
        || matches!(
            c,
            '(' | ')'
                | '{'
                | '}'
                | '['
                | ']'
                | ';'
                | ','
                | '|'
                | '&'
                | '"'
                | '\''
                | '$'
                | '<'
                | '>'
        )
        || (c == '=' && in_hash)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn char_at(&self, pos: usize) -> Option<char> {
        self.src.get(pos..).and_then(|s| s.chars().next())
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        self.push_var(kind, start, None);
    }

    fn push_var(&mut self, kind: TokenKind, start: usize, var: Option<VarRef>) {
        self.tokens.push(Token {
            kind,
            text: self.src[start..self.pos].to_owned(),
            start,
            end: self.pos,
            span: Span::default(),
            var,
        });
    }

    fn error(&mut self, kind: ParseErrorKind, start: usize, end: usize) {
        self.errors.push(ParseError::new(kind, start, end));
    }

    fn prev_significant(&self) -> Option<&Token> {
        self.tokens.iter().rev().find(|t| !t.kind.is_comment())
    }

    /// Whether the innermost non-paren group forbids commands (type literals
    /// and attributes).
    fn in_square(&self) -> bool {
        for g in self.stack.iter().rev() {
            match g {
                Group::Paren => continue,
                Group::Square => return true,
                _ => return false,
            }
        }
        false
    }

    fn top(&self) -> Option<Group> {
        self.stack.last().copied()
    }

    fn open(&mut self, group: Group) {
        self.stack.push(group);
    }

    fn close(&mut self, closer: char) {
        if let Some(idx) = self.stack.iter().rposition(|g| g.closer() == closer) {
            self.stack.truncate(idx);
        }
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                '\n' => {
                    self.bump();
                    self.push(TokenKind::Newline, start);
                    self.statement_boundary();
                }
                '\r' if self.peek_at(1) == Some('\n') => {
                    self.pos += 2;
                    self.push(TokenKind::Newline, start);
                    self.statement_boundary();
                }
                '\r' => {
                    self.bump();
                }
                c if is_horizontal_space(c) => {
                    self.bump();
                }
                '`' if self.peek_at(1) == Some('\n') => {
                    self.pos += 2;
                }
                '`' if self.peek_at(1) == Some('\r') && self.peek_at(2) == Some('\n') => {
                    self.pos += 3;
                }
                '#' => self.line_comment(start),
                '<' if self.peek_at(1) == Some('#') => self.block_comment(start),
                '@' => self.at_sign(start),
                '\'' => {
                    self.bump();
                    if self.single_quoted_body().is_none() {
                        self.error(ParseErrorKind::UnterminatedString, start, self.src.len());
                    }
                    self.push(TokenKind::SingleQuoteString, start);
                    self.after_value();
                }
                '"' => {
                    self.bump();
                    if self.double_quoted_body().is_none() {
                        self.error(ParseErrorKind::UnterminatedString, start, self.src.len());
                    }
                    self.push(TokenKind::DoubleQuoteString, start);
                    self.after_value();
                }
                '$' => self.dollar(start),
                '{' => {
                    self.bump();
                    self.push(TokenKind::Punctuation, start);
                    self.open(Group::Brace);
                    self.statement_boundary();
                }
                '}' | ')' | ']' => {
                    self.bump();
                    self.push(TokenKind::Punctuation, start);
                    self.close(c);
                    self.after_value();
                }
                '(' => {
                    self.bump();
                    self.push(TokenKind::Punctuation, start);
                    self.open(Group::Paren);
                    self.cmd_pos = true;
                    self.member_next = false;
                    self.hash_value = false;
                }
                '[' => {
                    self.bump();
                    self.push(TokenKind::Punctuation, start);
                    self.open(Group::Square);
                    self.cmd_pos = false;
                    self.member_next = false;
                }
                ';' => {
                    self.bump();
                    self.push(TokenKind::Punctuation, start);
                    self.statement_boundary();
                }
                ',' => {
                    self.bump();
                    self.push(TokenKind::Punctuation, start);
                    self.cmd_pos = false;
                }
                '|' => {
                    self.bump();
                    if self.peek() == Some('|') {
                        self.bump();
                    }
                    self.push(TokenKind::Operator, start);
                    self.cmd_pos = true;
                }
                '&' => {
                    self.bump();
                    if self.peek() == Some('&') {
                        self.bump();
                    }
                    self.push(TokenKind::Operator, start);
                    self.cmd_pos = true;
                }
                '=' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                    }
                    self.push(TokenKind::Operator, start);
                    self.cmd_pos = true;
                    if self.top() == Some(Group::Hash) {
                        self.hash_value = true;
                    }
                }
                '-' => self.dash(start),
                '.' => self.dot(start),
                ':' => {
                    self.bump();
                    if self.peek() == Some(':') {
                        self.bump();
                        self.push(TokenKind::Punctuation, start);
                        self.member_next = true;
                    } else {
                        self.push(TokenKind::Punctuation, start);
                    }
                }
                '0'..='9' => self.number(start),
                '%' | '?' if self.cmd_pos && self.alias_symbol_follows() => {
                    self.bump();
                    self.push(TokenKind::CommandName, start);
                    self.cmd_pos = false;
                }
                '+' | '*' | '/' | '%' | '!' | '<' | '>' | '?' | '^' | '~' => {
                    self.symbol_operator(start, c)
                }
                _ => self.bareword(start),
            }
        }
    }

    fn statement_boundary(&mut self) {
        self.cmd_pos = true;
        self.member_next = false;
        self.function_name_next = false;
        self.hash_value = false;
    }

    fn after_value(&mut self) {
        self.cmd_pos = false;
        self.member_next = false;
    }

    fn alias_symbol_follows(&self) -> bool {
        match self.peek_at(1) {
            None => true,
            Some(n) => n.is_whitespace() || n == '{',
        }
    }

    fn line_comment(&mut self, start: usize) {
        let rest = &self.src[start..];
        let mut end = start + rest.find('\n').unwrap_or(rest.len());
        if end > start && self.src.as_bytes()[end - 1] == b'\r' {
            end -= 1;
        }
        self.pos = end.max(start + 1);
        self.push(TokenKind::LineComment, start);
    }

    fn block_comment(&mut self, start: usize) {
        match self.src[start + 2..].find("#>") {
            Some(rel) => self.pos = start + 2 + rel + 2,
            None => {
                self.pos = self.src.len();
                self.error(ParseErrorKind::UnterminatedComment, start, self.pos);
            }
        }
        self.push(TokenKind::BlockComment, start);
    }

    fn at_sign(&mut self, start: usize) {
        match self.peek_at(1) {
            Some(q @ ('"' | '\'')) => self.here_string(start, q),
            Some('(') => {
                self.pos += 2;
                self.push(TokenKind::Punctuation, start);
                self.open(Group::ArrayExpr);
                self.cmd_pos = true;
            }
            Some('{') => {
                self.pos += 2;
                self.push(TokenKind::Punctuation, start);
                self.open(Group::Hash);
                self.statement_boundary();
            }
            Some(c) if is_ident_char(c) => {
                self.bump();
                let name_start = self.pos;
                while self.peek().is_some_and(is_ident_char) {
                    self.bump();
                }
                let var = VarRef {
                    scope: None,
                    name: self.src[name_start..self.pos].to_owned(),
                    splat: true,
                };
                self.push_var(TokenKind::Variable, start, Some(var));
                self.after_value();
            }
            _ => {
                self.bump();
                self.push(TokenKind::Punctuation, start);
            }
        }
    }

    fn here_string(&mut self, start: usize, quote: char) {
        self.pos += 2;
        let mut header_end = self.pos;
        while self.char_at(header_end).is_some_and(is_horizontal_space) {
            header_end += 1;
        }
        let terminator: String = [quote, '@'].iter().collect();
        let well_formed_header =
            self.src[header_end..].starts_with('\n') || self.src[header_end..].starts_with("\r\n");
        if well_formed_header {
            let body_start = header_end;
            let mut search = body_start;
            let end = loop {
                match self.src[search..].find('\n') {
                    Some(rel) => {
                        let line = search + rel + 1;
                        if self.src[line..].starts_with(&terminator) {
                            break Some(line + 2);
                        }
                        search = line;
                    }
                    None => break None,
                }
            };
            match end {
                Some(end) => self.pos = end,
                None => {
                    self.pos = self.src.len();
                    self.error(ParseErrorKind::UnterminatedHereString, start, self.pos);
                }
            }
        } else {
            // Header not followed by a line break. Read up to the first
            // terminator so the content is still treated as string text.
            self.error(ParseErrorKind::HereStringHeader, start, header_end);
            match self.src[self.pos..].find(&terminator) {
                Some(rel) => self.pos += rel + 2,
                None => {
                    self.pos = self.src.len();
                    self.error(ParseErrorKind::UnterminatedHereString, start, self.pos);
                }
            }
        }
        self.push(TokenKind::HereString, start);
        self.after_value();
    }

    /// Consumes a single-quoted body after the opening quote. Returns `None`
    /// at end of input.
    fn single_quoted_body(&mut self) -> Option<()> {
        loop {
            if self.bump()? == '\'' {
                if self.peek() == Some('\'') {
                    self.bump();
                } else {
                    return Some(());
                }
            }
        }
    }

    fn double_quoted_body(&mut self) -> Option<()> {
        loop {
            match self.bump()? {
                '`' => {
                    self.bump();
                }
                '"' => {
                    if self.peek() == Some('"') {
                        self.bump();
                    } else {
                        return Some(());
                    }
                }
                '$' if self.peek() == Some('(') => {
                    self.bump();
                    self.skip_subexpression()?;
                }
                _ => {}
            }
        }
    }

    /// Skips to the `)` closing a `$(` inside an expandable string.
    fn skip_subexpression(&mut self) -> Option<()> {
        let mut depth = 1usize;
        loop {
            match self.bump()? {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(());
                    }
                }
                '"' => self.double_quoted_body()?,
                '\'' => self.single_quoted_body()?,
                '`' => {
                    self.bump();
                }
                _ => {}
            }
        }
    }

    fn dollar(&mut self, start: usize) {
        match self.peek_at(1) {
            Some('(') => {
                self.pos += 2;
                self.push(TokenKind::Punctuation, start);
                self.open(Group::SubExpr);
                self.cmd_pos = true;
                self.member_next = false;
            }
            Some('{') => {
                self.pos += 2;
                let inner_start = self.pos;
                let mut closed = false;
                while let Some(c) = self.bump() {
                    match c {
                        '`' => {
                            self.bump();
                        }
                        '}' => {
                            closed = true;
                            break;
                        }
                        _ => {}
                    }
                }
                let inner_end = if closed { self.pos - 1 } else { self.pos };
                if !closed {
                    self.error(ParseErrorKind::MissingEndCurlyBrace, start, self.pos);
                }
                let var = split_scope(&self.src[inner_start..inner_end]);
                self.push_var(TokenKind::Variable, start, Some(var));
                self.after_value();
            }
            Some(c @ ('$' | '?' | '^')) => {
                self.pos += 1 + c.len_utf8();
                let var = VarRef {
                    scope: None,
                    name: c.to_string(),
                    splat: false,
                };
                self.push_var(TokenKind::Variable, start, Some(var));
                self.after_value();
            }
            Some(c) if is_ident_char(c) => {
                self.bump();
                let first_start = self.pos;
                while self.peek().is_some_and(is_ident_char) {
                    self.bump();
                }
                let first = &self.src[first_start..self.pos];
                let scoped = self.peek() == Some(':')
                    && self
                        .peek_at(1)
                        .is_some_and(|n| is_ident_char(n) || n == '?');
                let var = if scoped {
                    let scope = first.to_owned();
                    self.bump();
                    let name_start = self.pos;
                    while self.peek().is_some_and(|n| is_ident_char(n) || n == '?') {
                        self.bump();
                    }
                    VarRef {
                        scope: Some(scope),
                        name: self.src[name_start..self.pos].to_owned(),
                        splat: false,
                    }
                } else {
                    VarRef {
                        scope: None,
                        name: first.to_owned(),
                        splat: false,
                    }
                };
                self.push_var(TokenKind::Variable, start, Some(var));
                self.after_value();
            }
            _ => {
                self.bump();
                self.push(TokenKind::Identifier, start);
                self.after_value();
            }
        }
    }

    fn dash(&mut self, start: usize) {
        match self.peek_at(1) {
            Some(c) if c.is_alphabetic() => {
                self.bump();
                let word_start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| is_ident_char(c) || c == '?' || c == '-')
                {
                    if self.peek() == Some('-') && !self.peek_at(1).is_some_and(is_ident_char) {
                        break;
                    }
                    self.bump();
                }
                let word = &self.src[word_start..self.pos];
                if is_dash_operator(word) {
                    self.push(TokenKind::Operator, start);
                    self.cmd_pos = false;
                } else {
                    if self.peek() == Some(':') && self.peek_at(1) != Some(':') {
                        self.bump();
                    }
                    self.push(TokenKind::Parameter, start);
                    self.cmd_pos = false;
                }
                self.member_next = false;
            }
            Some('=') => {
                self.pos += 2;
                self.push(TokenKind::Operator, start);
                self.cmd_pos = true;
            }
            Some('-') => {
                self.pos += 2;
                self.push(TokenKind::Operator, start);
                self.cmd_pos = false;
            }
            _ => {
                self.bump();
                self.push(TokenKind::Operator, start);
                self.cmd_pos = false;
            }
        }
    }

    fn dot(&mut self, start: usize) {
        let next = self.peek_at(1);
        if next == Some('.') {
            self.pos += 2;
            self.push(TokenKind::Operator, start);
            self.cmd_pos = false;
            return;
        }
        let adjacent_value = self.tokens.last().is_some_and(|t| {
            t.end == start
                && (matches!(
                    t.kind,
                    TokenKind::Variable
                        | TokenKind::Identifier
                        | TokenKind::SingleQuoteString
                        | TokenKind::DoubleQuoteString
                        | TokenKind::HereString
                ) || (t.kind == TokenKind::Punctuation
                    && matches!(t.text.as_str(), ")" | "]" | "}")))
        });
        if adjacent_value
            && next.is_some_and(|c| is_ident_char(c) || c == '$' || c == '"' || c == '\'')
        {
            self.bump();
            self.push(TokenKind::Punctuation, start);
            self.member_next = true;
            return;
        }
        if self.cmd_pos && next.is_none_or(|c| c.is_whitespace()) {
            self.bump();
            self.push(TokenKind::Operator, start);
            return;
        }
        if next.is_some_and(|c| c.is_ascii_digit()) {
            self.number(start);
            return;
        }
        self.bareword(start);
    }

    fn number(&mut self, start: usize) {
        if self.starts_with("0x") || self.starts_with("0X") {
            self.pos += 2;
        }
        while let Some(c) = self.peek() {
            let next_digit = self.peek_at(1).is_some_and(|n| n.is_ascii_digit());
            let exponent_sign = (c == '+' || c == '-')
                && matches!(self.src[..self.pos].chars().last(), Some('e' | 'E'));
            if c.is_ascii_alphanumeric() || c == '_' || ((c == '.' || exponent_sign) && next_digit)
            {
                self.bump();
            } else {
                break;
            }
        }
        if self.pos == start {
            self.bump();
        }
        self.push(TokenKind::Number, start);
        self.after_value();
    }

    fn symbol_operator(&mut self, start: usize, c: char) {
        self.bump();
        let mut assignment = false;
        match (c, self.peek()) {
            ('+' | '*' | '/' | '%', Some('=')) => {
                self.bump();
                assignment = true;
            }
            ('!', Some('=')) | ('+', Some('+')) | ('>', Some('>')) | ('*', Some('>')) => {
                self.bump();
            }
            ('?', Some('?')) => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    assignment = true;
                }
            }
            ('?', Some('.')) => {
                self.bump();
                self.push(TokenKind::Operator, start);
                self.member_next = true;
                return;
            }
            _ => {}
        }
        self.push(TokenKind::Operator, start);
        self.cmd_pos = assignment;
        self.member_next = false;
    }

    fn bareword(&mut self, start: usize) {
        let member = self.member_next;
        let restricted = member || self.in_square();
        let in_hash = self.top() == Some(Group::Hash);
        while let Some(c) = self.peek() {
            if c == '`' {
                self.bump();
                self.bump();
                continue;
            }
            let stop = if member {
                !is_ident_char(c)
            } else if restricted {
                !(is_ident_char(c) || c == '.' || c == '+' || c == '`')
            } else {
                ends_bareword(c, in_hash)
            };
            if stop && self.pos > start {
                break;
            }
            self.bump();
            if stop {
                break;
            }
        }
        let word = &self.src[start..self.pos];
        let lower = word.to_ascii_lowercase();
        let prev_closes_brace = self.prev_significant().is_some_and(|t| t.is_punct("}"));
        let prev_is_pipe = self
            .tokens
            .iter()
            .rev()
            .find(|t| !t.kind.is_comment() && t.kind != TokenKind::Newline)
            .is_some_and(|t| t.is_op("|"));
        let in_hash_key = self.top() == Some(Group::Hash) && !self.hash_value;

        let kind = if member {
            TokenKind::Identifier
        } else if self.function_name_next {
            self.function_name_next = false;
            TokenKind::Identifier
        } else if self.in_square() || in_hash_key {
            TokenKind::Identifier
        } else if KEYWORDS.contains(&lower.as_str()) {
            self.keyword_kind(&lower, prev_closes_brace, prev_is_pipe)
        } else if self.cmd_pos {
            TokenKind::CommandName
        } else {
            TokenKind::Identifier
        };
        self.push(kind, start);
        self.member_next = false;
        match kind {
            TokenKind::Keyword => match lower.as_str() {
                "function" | "filter" | "workflow" => {
                    self.function_name_next = true;
                    self.cmd_pos = false;
                }
                "return" | "throw" | "exit" | "in" | "else" | "try" | "finally" | "do"
                | "begin" | "process" | "end" | "dynamicparam" | "trap" => self.cmd_pos = true,
                _ => self.cmd_pos = false,
            },
            _ => self.cmd_pos = false,
        }
    }

    fn keyword_kind(&self, lower: &str, prev_closes_brace: bool, prev_is_pipe: bool) -> TokenKind {
        if lower == "foreach" && prev_is_pipe {
            return TokenKind::CommandName;
        }
        if lower == "in" {
            let after_var = self
                .prev_significant()
                .is_some_and(|t| t.kind == TokenKind::Variable);
            return if after_var && self.top() == Some(Group::Paren) {
                TokenKind::Keyword
            } else if self.cmd_pos {
                TokenKind::CommandName
            } else {
                TokenKind::Identifier
            };
        }
        if self.cmd_pos || (prev_closes_brace && CONTINUATION_KEYWORDS.contains(&lower)) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        }
    }
}

pub(crate) fn split_scope(inner: &str) -> VarRef {
    match inner.split_once(':') {
        Some((scope, name)) if !scope.is_empty() && scope.chars().all(is_ident_char) => VarRef {
            scope: Some(scope.to_owned()),
            name: name.to_owned(),
            splat: false,
        },
        _ => VarRef {
            scope: None,
            name: inner.to_owned(),
            splat: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(&SourceScript::new("t.ps1", src))
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    fn lexed(src: &str) -> (Vec<Token>, Vec<ParseError>) {
        lex(&SourceScript::new("t.ps1", src))
    }

    #[test]
    fn write_host_with_string_and_comment() {
        assert_eq!(
            kinds("Write-Host \"hi\" # note"),
            vec![
                (TokenKind::CommandName, "Write-Host".into()),
                (TokenKind::DoubleQuoteString, "\"hi\"".into()),
                (TokenKind::LineComment, "# note".into()),
            ]
        );
    }

    #[test]
    fn block_comment_spans_lines() {
        let (tokens, errors) = lexed("<# a\nb #>$x");
        assert!(errors.is_empty());
        assert_eq!(tokens.len(), 2);
        assert_eq!(tokens[0].kind, TokenKind::BlockComment);
        assert_eq!((tokens[0].span.start_line, tokens[0].span.end_line), (1, 2));
        assert_eq!(tokens[1].kind, TokenKind::Variable);
        assert_eq!(tokens[1].text, "$x");
    }

    #[test]
    fn here_string_is_one_token_over_three_lines() {
        let (tokens, errors) = lexed("@\"\nline\n\"@");
        assert!(errors.is_empty());
        assert_eq!(tokens.len(), 1);
        assert_eq!(tokens[0].kind, TokenKind::HereString);
        assert_eq!(tokens[0].span.start_line, 1);
        assert_eq!(tokens[0].span.end_line, 3);
        assert_eq!(tokens[0].span.end_column, 3);
    }

    #[test]
    fn here_string_terminator_must_start_a_line() {
        let (tokens, errors) = lexed("@'\na '@ b\n'@\n$x");
        assert!(errors.is_empty());
        assert_eq!(tokens[0].kind, TokenKind::HereString);
        assert_eq!(tokens[0].text, "@'\na '@ b\n'@");
    }

    #[test]
    fn unterminated_forms_run_to_eof_and_flag() {
        for src in ["'abc", "\"abc", "<# abc", "@\"\nabc"] {
            let (tokens, errors) = lexed(src);
            assert_eq!(tokens.len(), 1, "{src}");
            assert_eq!(tokens[0].end, src.len(), "{src}");
            assert_eq!(errors.len(), 1, "{src}");
        }
    }

    #[test]
    fn variables_carry_scope() {
        let (tokens, _) = lexed("$global:Count $using:x ${env:Path} $x @params");
        let vars: Vec<_> = tokens.iter().map(|t| t.var.clone().unwrap()).collect();
        assert_eq!(vars[0].scope.as_deref(), Some("global"));
        assert_eq!(vars[0].name, "Count");
        assert!(vars[1].scope_is("using"));
        assert_eq!(vars[2].scope.as_deref(), Some("env"));
        assert_eq!(vars[2].name, "Path");
        assert_eq!(vars[3].scope, None);
        assert!(vars[4].splat);
    }

    #[test]
    fn operators_and_parameters() {
        assert_eq!(
            kinds("if ($x -eq $null) { Get-Item -Path a }"),
            vec![
                (TokenKind::Keyword, "if".into()),
                (TokenKind::Punctuation, "(".into()),
                (TokenKind::Variable, "$x".into()),
                (TokenKind::Operator, "-eq".into()),
                (TokenKind::Variable, "$null".into()),
                (TokenKind::Punctuation, ")".into()),
                (TokenKind::Punctuation, "{".into()),
                (TokenKind::CommandName, "Get-Item".into()),
                (TokenKind::Parameter, "-Path".into()),
                (TokenKind::Identifier, "a".into()),
                (TokenKind::Punctuation, "}".into()),
            ]
        );
    }

    #[test]
    fn pipeline_aliases_are_commands() {
        let k = kinds("gci | % { $_ } | ? { $_ } | foreach { 1 }");
        let cmds: Vec<_> = k
            .iter()
            .filter(|(kind, _)| *kind == TokenKind::CommandName)
            .map(|(_, t)| t.as_str())
            .collect();
        assert_eq!(cmds, vec!["gci", "%", "?", "foreach"]);
    }

    #[test]
    fn modulo_is_not_a_command() {
        let k = kinds("$a = 5 % 2");
        assert!(k.iter().all(|(kind, _)| *kind != TokenKind::CommandName));
    }

    #[test]
    fn attribute_contents_are_not_commands() {
        let k = kinds("[Parameter(Mandatory=$true)][string]$Name");
        assert!(k.iter().all(|(kind, _)| *kind != TokenKind::CommandName));
    }

    #[test]
    fn function_name_is_identifier() {
        let k = kinds("function gci { }");
        assert_eq!(k[0], (TokenKind::Keyword, "function".into()));
        assert_eq!(k[1], (TokenKind::Identifier, "gci".into()));
    }

    #[test]
    fn hashtable_keys_are_not_commands() {
        let k = kinds("$h = @{ ls = 1; Name = Get-Date }");
        let cmds: Vec<_> = k
            .iter()
            .filter(|(kind, _)| *kind == TokenKind::CommandName)
            .map(|(_, t)| t.as_str())
            .collect();
        assert_eq!(cmds, vec!["Get-Date"]);
    }

    #[test]
    fn member_access_is_not_a_command() {
        let k = kinds("$x.Count; \"a\".Length; [Math]::Round(1)");
        assert!(k.iter().all(|(kind, _)| *kind != TokenKind::CommandName));
    }

    #[test]
    fn subexpression_in_string_does_not_end_string_early() {
        let k = kinds("\"a $(\"b\") c\" x");
        assert_eq!(
            k[0],
            (TokenKind::DoubleQuoteString, "\"a $(\"b\") c\"".into())
        );
    }

    #[test]
    fn else_after_brace_is_keyword() {
        let k = kinds("if ($a) { } else { }");
        assert!(k.contains(&(TokenKind::Keyword, "else".into())));
    }

    #[test]
    fn backtick_continuation_is_whitespace() {
        let (tokens, _) = lexed("Get-Item `\n  -Path a");
        assert!(tokens.iter().all(|t| t.kind != TokenKind::Newline));
        assert_eq!(tokens[1].kind, TokenKind::Parameter);
        assert_eq!(tokens[1].span.start_line, 2);
    }

    #[test]
    fn hash_in_string_is_not_comment() {
        let k = kinds("\"#not a comment\"");
        assert_eq!(
            k,
            vec![(TokenKind::DoubleQuoteString, "\"#not a comment\"".into())]
        );
    }

    #[test]
    fn dot_sourcing_keeps_command_position() {
        let k = kinds(". .\\helpers.ps1\n& gci");
        assert_eq!(k[0], (TokenKind::Operator, ".".into()));
        assert_eq!(k[1], (TokenKind::CommandName, ".\\helpers.ps1".into()));
        assert_eq!(k[4], (TokenKind::CommandName, "gci".into()));
    }
}
