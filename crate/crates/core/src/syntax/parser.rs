use std::collections::HashSet;

use super::ast::*;
use super::lexer::{is_ident_char, lex, span_of, split_scope, tokenize};
use super::source::SourceScript;
use super::token::{Span, Token, TokenKind};

const ASSIGNMENT_OPERATORS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "??="];
const EQUALITY_OPERATORS: &[&str] = &["-eq", "-ne", "-ceq", "-cne", "-ieq", "-ine"];
const BLOCK_KEYWORDS: &[&str] = &[
    "else",
    "try",
    "finally",
    "do",
    "begin",
    "process",
    "end",
    "dynamicparam",
    "trap",
    "catch",
];
const CONDITION_KEYWORDS: &[&str] = &["if", "elseif", "while", "for", "foreach", "switch", "until"];

/// Parameters that never take an argument. Used to decide whether the
/// element following a parameter is its value or a positional argument.
const SWITCH_PARAMETERS: &[&str] = &[
    "AllowClobber",
    "Append",
    "AsHashtable",
    "AsJob",
    "AsPlainText",
    "AsSecureString",
    "CaseSensitive",
    "Compress",
    "Confirm",
    "Debug",
    "Descending",
    "Detailed",
    "Directory",
    "Examples",
    "File",
    "Force",
    "Full",
    "Hidden",
    "IncludeEqual",
    "List",
    "ListAvailable",
    "NoClobber",
    "NoEnumerate",
    "NoNewline",
    "NoProfile",
    "NoTypeInformation",
    "NotMatch",
    "Online",
    "PassThru",
    "Quiet",
    "Raw",
    "Recurse",
    "SimpleMatch",
    "SkipPublisherCheck",
    "Unique",
    "UseBasicParsing",
    "Verbose",
    "Wait",
    "WhatIf",
];

const REMOTE_PARAMETERS: &[&str] = &[
    "ComputerName",
    "Session",
    "HostName",
    "VMName",
    "VMId",
    "ContainerId",
    "ConnectionUri",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BraceKind {
    Statement,
    SwitchBody,
    FunctionBody,
    ScriptBlock,
}

/// Parses `script` into [`ScriptAst`] facts. Never fails: syntax problems are
/// recorded in `parse_errors` and extraction continues on a best-effort basis.
pub fn parse(script: &SourceScript) -> ScriptAst {
    let (tokens, lex_errors) = lex(script);
    let mut ast = {
        let mut p = Parser::new(script, &tokens);
        p.errors.extend(lex_errors);
        let functions = p.functions();
        let script_params = p.script_params();
        let commands = p.commands();
        let catch_blocks = p.catch_blocks();
        p.check_try();
        let assignments = p.assignments();
        let comparisons = p.comparisons();
        let variables = p.variables();
        let kinds = p.brace_kinds();
        let scriptblocks = kinds
            .iter()
            .filter(|(_, k)| *k == BraceKind::ScriptBlock)
            .filter_map(|(i, _)| Some((p.toks[*i].start, p.toks[p.partner[*i]?].end)))
            .collect();
        let scriptblock_contexts = p.runspace_contexts(&commands, &variables, &assignments);
        let mut errors = std::mem::take(&mut p.errors);
        for e in &mut errors {
            e.span = span_of(script, e.start, e.end);
        }
        errors.sort_by_key(|e| (e.start, e.end, e.kind.id()));
        errors.dedup();
        ScriptAst {
            tokens: Vec::new(),
            functions,
            script_params,
            commands,
            catch_blocks,
            assignments,
            comparisons,
            scriptblock_contexts,
            scriptblocks,
            variables,
            parse_errors: errors,
        }
    };
    ast.tokens = tokens;
    ast
}

struct Parser<'a> {
    script: &'a SourceScript,
    /// Tokens without comments.
    toks: Vec<&'a Token>,
    partner: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    errors: Vec<ParseError>,
    param_ranges: Vec<(usize, usize)>,
    function_bodies: HashSet<usize>,
}

fn closer_for(open: &str) -> &'static str {
    match open {
        "{" | "@{" => "}",
        "[" => "]",
        _ => ")",
    }
}

fn missing_kind(open: &str) -> ParseErrorKind {
    match open {
        "{" | "@{" => ParseErrorKind::MissingEndCurlyBrace,
        "[" => ParseErrorKind::MissingEndSquareBracket,
        _ => ParseErrorKind::MissingEndParenthesis,
    }
}

fn unquote(tok: &Token) -> Option<String> {
    let t = tok.text.as_str();
    match tok.kind {
        TokenKind::SingleQuoteString if t.len() >= 2 && t.ends_with('\'') => {
            Some(t[1..t.len() - 1].replace("''", "'"))
        }
        TokenKind::DoubleQuoteString
            if t.len() >= 2 && t.ends_with('"') && !t.contains('$') && !t.contains('`') =>
        {
            Some(t[1..t.len() - 1].replace("\"\"", "\""))
        }
        TokenKind::Identifier | TokenKind::Number | TokenKind::CommandName | TokenKind::Keyword => {
            Some(t.to_owned())
        }
        _ => None,
    }
}

impl<'a> Parser<'a> {
    fn new(script: &'a SourceScript, tokens: &'a [Token]) -> Self {
        let toks: Vec<&Token> = tokens.iter().filter(|t| !t.kind.is_comment()).collect();
        let n = toks.len();
        let mut partner = vec![None; n];
        let mut parent = vec![None; n];
        let mut errors = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        for i in 0..n {
            let t = toks[i];
            parent[i] = stack.last().copied();
            if t.is_opener() {
                stack.push(i);
            } else if t.is_closer() {
                match stack
                    .iter()
                    .rposition(|&o| closer_for(&toks[o].text) == t.text)
                {
                    Some(pos) => {
                        for &o in &stack[pos + 1..] {
                            errors.push(ParseError::new(
                                missing_kind(&toks[o].text),
                                toks[o].start,
                                toks[o].end,
                            ));
                        }
                        stack.truncate(pos + 1);
                        let o = stack.pop().expect("position is in the stack");
                        partner[o] = Some(i);
                        partner[i] = Some(o);
                        parent[i] = parent[o];
                    }
                    None => errors.push(ParseError::new(
                        ParseErrorKind::UnexpectedClosingBracket,
                        t.start,
                        t.end,
                    )),
                }
            }
        }
        for &o in &stack {
            errors.push(ParseError::new(
                missing_kind(&toks[o].text),
                toks[o].start,
                toks[o].end,
            ));
        }
        Self {
            script,
            toks,
            partner,
            parent,
            errors,
            param_ranges: Vec::new(),
            function_bodies: HashSet::new(),
        }
    }

    fn len(&self) -> usize {
        self.toks.len()
    }

    fn span(&self, a: usize, b: usize) -> Span {
        span_of(self.script, self.toks[a].start, self.toks[b].end)
    }

    fn text(&self, a: usize, b: usize) -> &'a str {
        &self.script.raw()[self.toks[a].start..self.toks[b].end]
    }

    fn next_sig(&self, i: usize) -> Option<usize> {
        (i + 1..self.len()).find(|&j| self.toks[j].kind != TokenKind::Newline)
    }

    fn prev_sig(&self, i: usize) -> Option<usize> {
        (0..i)
            .rev()
            .find(|&j| self.toks[j].kind != TokenKind::Newline)
    }

    fn is_word(&self, i: usize, word: &str) -> bool {
        let t = self.toks[i];
        matches!(
            t.kind,
            TokenKind::Keyword | TokenKind::Identifier | TokenKind::CommandName
        ) && t.text.eq_ignore_ascii_case(word)
    }

    fn is_punct_at(&self, i: Option<usize>, text: &str) -> bool {
        i.is_some_and(|i| self.toks[i].is_punct(text))
    }

    fn functions(&mut self) -> Vec<FunctionDecl> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            let t = self.toks[i];
            if !(t.is_keyword("function") || t.is_keyword("filter") || t.is_keyword("workflow")) {
                continue;
            }
            let name_idx = (i + 1 < self.len()).then_some(i + 1).filter(|&j| {
                matches!(
                    self.toks[j].kind,
                    TokenKind::Identifier | TokenKind::CommandName | TokenKind::Keyword
                )
            });
            let Some(j) = name_idx else {
                self.errors.push(ParseError::new(
                    ParseErrorKind::MissingFunctionName,
                    t.start,
                    t.end,
                ));
                continue;
            };
            let mut k = self.next_sig(j);
            let mut params = None;
            if let Some(o) = k.filter(|&o| self.toks[o].is_punct("(")) {
                if let Some(c) = self.partner[o] {
                    params = Some(self.param_block(o, o, c));
                    k = self.next_sig(c);
                }
            }
            let body = k
                .filter(|&o| self.toks[o].is_punct("{"))
                .and_then(|o| Some((o, self.partner[o]?)));
            let Some((open, close)) = body else {
                self.errors.push(ParseError::new(
                    ParseErrorKind::MissingFunctionBody,
                    self.toks[j].start,
                    self.toks[j].end,
                ));
                continue;
            };
            self.function_bodies.insert(open);
            let name = self.toks[j].text.clone();
            let bare = match name.split_once(':') {
                Some((_, rest)) if !rest.is_empty() => rest.to_owned(),
                _ => name.clone(),
            };
            let (verb, noun) = match bare.split_once('-') {
                Some((v, n)) if !v.is_empty() && !n.is_empty() => {
                    (Some(v.to_owned()), Some(n.to_owned()))
                }
                _ => (None, None),
            };
            let mut decl = FunctionDecl {
                name,
                name_span: self.span(j, j),
                verb,
                noun,
                keyword_span: self.span(i, i),
                start: t.start,
                params: None,
                body_start: self.toks[open].start,
                body_end: self.toks[close].end,
                body_span: self.span(open, close),
                cmdlet_binding: false,
                supports_should_process: None,
                has_begin: false,
                has_process: false,
                has_end: false,
            };
            let mut m = open + 1;
            while m < close {
                if self.parent[m] == Some(open) {
                    if self.toks[m].is_punct("[") {
                        if let Some(e) = self.partner[m] {
                            self.binding_attribute(m, e, &mut decl);
                            m = e + 1;
                            continue;
                        }
                    }
                    let after = self.next_sig(m);
                    if self.is_word(m, "param") && self.is_punct_at(after, "(") {
                        let o = after.expect("checked above");
                        if let Some(c) = self.partner[o] {
                            if params.is_none() {
                                params = Some(self.param_block(m, o, c));
                            }
                            m = c + 1;
                            continue;
                        }
                    }
                    if self.is_punct_at(after, "{") {
                        if self.is_word(m, "begin") {
                            decl.has_begin = true;
                        } else if self.is_word(m, "process") {
                            decl.has_process = true;
                        } else if self.is_word(m, "end") {
                            decl.has_end = true;
                        }
                    }
                }
                m += 1;
            }
            decl.params = params;
            out.push(decl);
        }
        out
    }

    /// Reads `[CmdletBinding(...)]` into `decl`.
    fn binding_attribute(&self, open: usize, close: usize, decl: &mut FunctionDecl) {
        if open + 1 >= close || !self.is_word(open + 1, "CmdletBinding") {
            return;
        }
        decl.cmdlet_binding = true;
        let Some(p) = (open + 2 < close)
            .then_some(open + 2)
            .filter(|&p| self.toks[p].is_punct("("))
        else {
            return;
        };
        let Some(pc) = self.partner[p] else { return };
        for m in p + 1..pc {
            if self.parent[m] == Some(p)
                && self.is_word(m, "SupportsShouldProcess")
                && self.flag_value(m)
            {
                decl.supports_should_process = Some(self.span(m, m));
            }
        }
    }

    /// Value of a named attribute argument such as `Mandatory` or
    /// `Mandatory = $false`.
    fn flag_value(&self, i: usize) -> bool {
        match self.next_sig(i) {
            Some(e) if self.toks[e].is_op("=") => match self.next_sig(e) {
                Some(v) => {
                    let t = &self.toks[v].text;
                    !(t.eq_ignore_ascii_case("$false") || t == "0")
                }
                None => true,
            },
            _ => true,
        }
    }

    fn script_params(&mut self) -> Option<ParamBlock> {
        let i = (0..self.len()).find(|&i| {
            self.parent[i].is_none()
                && self.is_word(i, "param")
                && self.is_punct_at(self.next_sig(i), "(")
        })?;
        let open = self.next_sig(i)?;
        let close = self.partner[open]?;
        Some(self.param_block(i, open, close))
    }

    fn param_block(&mut self, first: usize, open: usize, close: usize) -> ParamBlock {
        self.param_ranges.push((open, close));
        let mut segments = Vec::new();
        let mut seg_start = open + 1;
        for m in open + 1..close {
            if self.parent[m] == Some(open) && self.toks[m].is_punct(",") {
                segments.push((seg_start, m));
                seg_start = m + 1;
            }
        }
        segments.push((seg_start, close));

        let mut params: Vec<ParamDecl> = Vec::new();
        let mut default_starts: Vec<Option<usize>> = Vec::new();
        for (a, b) in segments {
            let mut decl = ParamDecl::default();
            let mut var = None;
            let mut default_from = None;
            let mut first_tok = None;
            let mut last_tok = None;
            let mut m = a;
            while m < b {
                let t = self.toks[m];
                if t.kind == TokenKind::Newline {
                    m += 1;
                    continue;
                }
                first_tok.get_or_insert(m);
                let group_end = if t.is_opener() {
                    self.partner[m].filter(|&e| e < b).unwrap_or(m)
                } else {
                    m
                };
                last_tok = Some(group_end);
                if default_from.is_none() {
                    if t.is_punct("[") && group_end > m {
                        self.read_attribute(m, group_end, &mut decl);
                    } else if t.kind == TokenKind::Variable && var.is_none() {
                        var = Some(m);
                    } else if t.is_op("=") && var.is_some() {
                        default_from = self.next_sig(m).filter(|&d| d < b);
                    }
                }
                m = group_end + 1;
            }
            match var {
                Some(v) => {
                    let first = first_tok.expect("segment has a variable");
                    let last = last_tok.expect("segment has a variable");
                    decl.name = self.toks[v].var_name().unwrap_or_default().to_owned();
                    decl.name_span = self.span(v, v);
                    decl.span = self.span(first, last);
                    decl.start = self.toks[first].start;
                    decl.end = self.toks[last].end;
                    decl.default = default_from.map(|d| self.text(d, last).to_owned());
                    default_starts.push(default_from.map(|d| self.toks[d].start));
                    params.push(decl);
                }
                None => {
                    // A top-level comma inside a default value, e.g. `$a = 1, 2`.
                    if let (Some(prev), Some(Some(ds)), Some(last)) =
                        (params.last_mut(), default_starts.last(), last_tok)
                    {
                        let end = self.toks[last].end;
                        prev.default = Some(self.script.raw()[*ds..end].to_owned());
                        prev.end = end;
                        prev.span = span_of(self.script, prev.start, end);
                    }
                }
            }
        }
        ParamBlock {
            span: self.span(first, close),
            params,
        }
    }

    fn read_attribute(&self, open: usize, close: usize, decl: &mut ParamDecl) {
        if open + 1 >= close {
            return;
        }
        let args =
            (open + 1..close).find(|&q| self.parent[q] == Some(open) && self.toks[q].is_punct("("));
        match args {
            Some(q) if q > open + 1 => {
                let name = self.text(open + 1, q - 1).to_owned();
                let is_parameter = name.eq_ignore_ascii_case("Parameter")
                    || name.eq_ignore_ascii_case("System.Management.Automation.Parameter");
                if is_parameter {
                    let end = self.partner[q].unwrap_or(close);
                    for m in q + 1..end {
                        if self.parent[m] != Some(q) {
                            continue;
                        }
                        if self.is_word(m, "Mandatory") && self.flag_value(m) {
                            decl.mandatory = true;
                        } else if (self.is_word(m, "ValueFromPipeline")
                            || self.is_word(m, "ValueFromPipelineByPropertyName"))
                            && self.flag_value(m)
                        {
                            decl.value_from_pipeline = true;
                        }
                    }
                }
                decl.attributes.push(name);
            }
            _ => decl.types.push(self.text(open + 1, close - 1).to_owned()),
        }
    }

    fn ends_command(&self, i: usize) -> bool {
        let t = self.toks[i];
        match t.kind {
            TokenKind::Newline => true,
            TokenKind::Punctuation => t.text == ";" || t.is_closer(),
            TokenKind::Operator => match t.text.as_str() {
                "|" | "||" | "&&" => true,
                "&" => !(i > 0 && self.toks[i - 1].is_op(">") && self.toks[i - 1].end == t.start),
                _ => false,
            },
            _ => false,
        }
    }

    fn pipeline_positions(&self) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        let mut counters = vec![0usize];
        for (i, slot) in out.iter_mut().enumerate() {
            let t = self.toks[i];
            *slot = *counters.last().expect("never empty");
            if t.is_opener() {
                counters.push(0);
            } else if t.is_closer() {
                if self.partner[i].is_some() && counters.len() > 1 {
                    counters.pop();
                }
            } else if t.is_op("|") {
                *counters.last_mut().expect("never empty") += 1;
            } else if t.is_punct(";") || t.is_op("||") || t.is_op("&&") {
                *counters.last_mut().expect("never empty") = 0;
            } else if t.kind == TokenKind::Newline {
                let continued = self.prev_sig(i).is_some_and(|p| self.toks[p].is_op("|"));
                if !continued {
                    *counters.last_mut().expect("never empty") = 0;
                }
            }
        }
        out
    }

    #[allow(clippy::needless_range_loop)]
    fn commands(&self) -> Vec<CommandCall> {
        let positions = self.pipeline_positions();
        let mut out = Vec::new();
        for i in 0..self.len() {
            if self.toks[i].kind != TokenKind::CommandName {
                continue;
            }
            let mut elements = Vec::new();
            let mut j = i + 1;
            while j < self.len() && !self.ends_command(j) {
                let start = j;
                let mut end = j;
                loop {
                    if self.toks[end].is_opener() {
                        match self.partner[end] {
                            Some(p) => end = p,
                            None => break,
                        }
                    }
                    if self.toks[end].kind == TokenKind::Parameter
                        && self.toks[end].text.ends_with(':')
                    {
                        break;
                    }
                    let nx = end + 1;
                    if nx < self.len()
                        && self.toks[nx].start == self.toks[end].end
                        && !self.ends_command(nx)
                        && self.toks[nx].kind != TokenKind::Parameter
                    {
                        end = nx;
                    } else {
                        break;
                    }
                }
                elements.push(self.element(start, end));
                j = end + 1;
            }
            let mut parameters = Vec::new();
            let mut positional = Vec::new();
            let mut idx = 0;
            while idx < elements.len() {
                let el: &CommandElement = &elements[idx];
                match &el.parameter {
                    Some(name) => {
                        let inline = el.text.ends_with(':');
                        let is_switch = SWITCH_PARAMETERS
                            .iter()
                            .any(|s| param_matches(name, s, usize::MAX));
                        let takes = idx + 1 < elements.len()
                            && (inline
                                || (!is_switch && elements[idx + 1].kind == ElementKind::Argument));
                        parameters.push(BoundParameter {
                            name: name.clone(),
                            span: el.span,
                            value: takes.then_some(idx + 1),
                        });
                        idx += if takes { 2 } else { 1 };
                    }
                    None => {
                        positional.push(idx);
                        idx += 1;
                    }
                }
            }
            let end = elements.last().map(|e| e.end).unwrap_or(self.toks[i].end);
            let splatted = elements.iter().any(|e| {
                e.text.starts_with('@')
                    && !e.text.starts_with("@(")
                    && !e.text.starts_with("@{")
                    && !e.text.starts_with("@'")
                    && !e.text.starts_with("@\"")
            });
            out.push(CommandCall {
                name: self.toks[i].text.clone(),
                name_span: self.span(i, i),
                start: self.toks[i].start,
                end,
                span: span_of(self.script, self.toks[i].start, end),
                elements,
                parameters,
                positional,
                pipeline_position: positions[i],
                splatted,
            });
        }
        out
    }

    fn element(&self, start: usize, end: usize) -> CommandElement {
        let first = self.toks[start];
        let text = self.text(start, end).to_owned();
        let (kind, parameter) = if first.kind == TokenKind::Parameter {
            let name = first.text.trim_start_matches('-').trim_end_matches(':');
            (ElementKind::Parameter, Some(name.to_owned()))
        } else {
            (ElementKind::Argument, None)
        };
        CommandElement {
            kind,
            span: self.span(start, end),
            start: first.start,
            end: self.toks[end].end,
            parameter,
            literal: if start == end && kind == ElementKind::Argument {
                unquote(first)
            } else {
                None
            },
            is_scriptblock: first.is_punct("{") && self.partner[start] == Some(end),
            text,
        }
    }

    fn catch_blocks(&self) -> Vec<CatchBlock> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            if !self.toks[i].is_keyword("catch") {
                continue;
            }
            let mut k = self.next_sig(i);
            while let Some(m) = k {
                let t = self.toks[m];
                if t.is_punct("[") {
                    k = self.partner[m].and_then(|e| self.next_sig(e));
                } else if t.is_punct(",") {
                    k = self.next_sig(m);
                } else {
                    break;
                }
            }
            let Some(open) = k.filter(|&o| self.toks[o].is_punct("{")) else {
                continue;
            };
            let Some(close) = self.partner[open] else {
                continue;
            };
            out.push(CatchBlock {
                span: self.span(i, close),
                start: self.toks[i].start,
                end: self.toks[close].end,
                is_empty: (open + 1..close).all(|m| self.toks[m].kind == TokenKind::Newline),
            });
        }
        out
    }

    fn check_try(&mut self) {
        for i in 0..self.len() {
            if !self.toks[i].is_keyword("try") {
                continue;
            }
            let body = self
                .next_sig(i)
                .filter(|&o| self.toks[o].is_punct("{"))
                .and_then(|o| self.partner[o]);
            let Some(close) = body else { continue };
            let handled = self
                .next_sig(close)
                .is_some_and(|k| self.is_word(k, "catch") || self.is_word(k, "finally"));
            if !handled {
                self.errors.push(ParseError::new(
                    ParseErrorKind::MissingCatchOrFinally,
                    self.toks[i].start,
                    self.toks[close].end,
                ));
            }
        }
    }

    fn in_param_block(&self, i: usize) -> bool {
        self.param_ranges.iter().any(|&(a, b)| a < i && i < b)
    }

    fn assignments(&self) -> Vec<Assignment> {
        let mut out = Vec::new();
        for i in 0..self.len().saturating_sub(1) {
            let t = self.toks[i];
            let Some(var) = &t.var else { continue };
            let op = self.toks[i + 1];
            if op.kind != TokenKind::Operator || !ASSIGNMENT_OPERATORS.contains(&op.text.as_str()) {
                continue;
            }
            let member = i > 0
                && (self.toks[i - 1].is_punct(".") || self.toks[i - 1].is_punct("::"))
                && self.toks[i - 1].end == t.start;
            if member || var.splat || self.in_param_block(i) {
                continue;
            }
            out.push(Assignment {
                name: var.name.clone(),
                scope: var.scope.clone(),
                operator: op.text.clone(),
                span: t.span,
                start: t.start,
            });
        }
        out
    }

    fn operand_before(&self, op: usize) -> Option<(usize, usize)> {
        let k = op.checked_sub(1)?;
        let t = self.toks[k];
        if t.kind == TokenKind::Newline || t.kind == TokenKind::Operator || t.is_opener() {
            return None;
        }
        let mut a = k;
        loop {
            if self.toks[a].is_closer() {
                match self.partner[a] {
                    Some(o) => a = o,
                    None => break,
                }
            }
            let Some(p) = a.checked_sub(1) else { break };
            let pt = self.toks[p];
            if pt.end == self.toks[a].start
                && pt.kind != TokenKind::Newline
                && pt.kind != TokenKind::Operator
                && !pt.is_opener()
            {
                a = p;
            } else {
                break;
            }
        }
        Some((a, k))
    }

    fn operand_after(&self, op: usize) -> Option<(usize, usize)> {
        let k = op + 1;
        let t = *self.toks.get(k)?;
        if t.kind == TokenKind::Newline || t.kind == TokenKind::Operator || t.is_closer() {
            return None;
        }
        let mut b = k;
        loop {
            if self.toks[b].is_opener() {
                match self.partner[b] {
                    Some(c) => b = c,
                    None => break,
                }
            }
            let nx = b + 1;
            let Some(nt) = self.toks.get(nx) else { break };
            if nt.start == self.toks[b].end
                && nt.kind != TokenKind::Newline
                && nt.kind != TokenKind::Operator
                && !nt.is_closer()
            {
                b = nx;
            } else {
                break;
            }
        }
        Some((k, b))
    }

    fn comparisons(&self) -> Vec<Comparison> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            let t = self.toks[i];
            if t.kind != TokenKind::Operator {
                continue;
            }
            let op = t.text.to_ascii_lowercase();
            if !EQUALITY_OPERATORS.contains(&op.as_str()) {
                continue;
            }
            let (Some((la, lb)), Some((ra, rb))) = (self.operand_before(i), self.operand_after(i))
            else {
                continue;
            };
            out.push(Comparison {
                operator: t.text.clone(),
                lhs: self.text(la, lb).to_owned(),
                rhs: self.text(ra, rb).to_owned(),
                span: self.span(la, rb),
                start: self.toks[la].start,
                end: self.toks[rb].end,
            });
        }
        out
    }

    fn variables(&self) -> Vec<VariableUse> {
        let mut out = Vec::new();
        for t in &self.toks {
            if let Some(var) = &t.var {
                out.push(VariableUse {
                    name: var.name.clone(),
                    scope: var.scope.clone(),
                    span: t.span,
                    start: t.start,
                    end: t.end,
                    in_string: false,
                });
            } else if is_expandable(t) {
                embedded_variables(self.script, &t.text, t.start, &mut out);
            }
        }
        out
    }

    fn brace_kinds(&self) -> Vec<(usize, BraceKind)> {
        let mut kinds: Vec<(usize, BraceKind)> = Vec::new();
        let mut switch_bodies = HashSet::new();
        for i in 0..self.len() {
            if !self.toks[i].is_punct("{") {
                continue;
            }
            let kind = self.brace_kind(i, &switch_bodies);
            if kind == BraceKind::SwitchBody {
                switch_bodies.insert(i);
            }
            kinds.push((i, kind));
        }
        kinds
    }

    fn brace_kind(&self, i: usize, switch_bodies: &HashSet<usize>) -> BraceKind {
        if self.function_bodies.contains(&i) {
            return BraceKind::FunctionBody;
        }
        if self.parent[i].is_some_and(|p| switch_bodies.contains(&p)) {
            return BraceKind::Statement;
        }
        let Some(p) = self.prev_sig(i) else {
            return BraceKind::ScriptBlock;
        };
        let prev = self.toks[p];
        if prev.kind == TokenKind::Keyword
            && BLOCK_KEYWORDS
                .iter()
                .any(|k| prev.text.eq_ignore_ascii_case(k))
        {
            return BraceKind::Statement;
        }
        if ["begin", "process", "end"]
            .iter()
            .any(|w| self.is_word(p, w))
            && self.parent[p].is_some_and(|o| self.function_bodies.contains(&o))
        {
            return BraceKind::Statement;
        }
        if prev.is_punct(")") {
            if let Some(o) = self.partner[p] {
                let mut q = self.prev_sig(o);
                while let Some(k) = q.filter(|&k| self.toks[k].kind == TokenKind::Parameter) {
                    q = self.prev_sig(k);
                }
                if let Some(k) = q {
                    let kt = self.toks[k];
                    if kt.kind == TokenKind::Keyword
                        && CONDITION_KEYWORDS
                            .iter()
                            .any(|c| kt.text.eq_ignore_ascii_case(c))
                    {
                        return if kt.text.eq_ignore_ascii_case("switch") {
                            BraceKind::SwitchBody
                        } else {
                            BraceKind::Statement
                        };
                    }
                }
            }
        }
        if prev.is_punct("]") {
            let mut q = Some(p);
            while let Some(k) = q {
                let kt = self.toks[k];
                if kt.is_punct("]") {
                    q = self.partner[k].and_then(|o| self.prev_sig(o));
                } else if kt.is_punct(",") {
                    q = self.prev_sig(k);
                } else {
                    break;
                }
            }
            if q.is_some_and(|k| {
                self.toks[k].is_keyword("catch") || self.toks[k].is_keyword("trap")
            }) {
                return BraceKind::Statement;
            }
        }
        BraceKind::ScriptBlock
    }

    fn index_at(&self, offset: usize) -> Option<usize> {
        self.toks.binary_search_by_key(&offset, |t| t.start).ok()
    }

    fn runspace_contexts(
        &self,
        commands: &[CommandCall],
        variables: &[VariableUse],
        assignments: &[Assignment],
    ) -> Vec<ScriptBlockContext> {
        let mut out = Vec::new();
        for cmd in commands {
            let lower = cmd.name.to_ascii_lowercase();
            let kind = match lower.as_str() {
                "start-job" | "sajb" => RunspaceKind::Job,
                "start-threadjob" => RunspaceKind::ThreadJob,
                "invoke-command" | "icm" => {
                    let remote = cmd.parameters.iter().any(|p| {
                        p.name.eq_ignore_ascii_case("Cn")
                            || REMOTE_PARAMETERS
                                .iter()
                                .any(|r| param_matches(&p.name, r, 4))
                    });
                    if !remote {
                        continue;
                    }
                    RunspaceKind::Remote
                }
                "foreach-object" | "%" | "foreach" => RunspaceKind::Parallel,
                _ => continue,
            };
            let block = if kind == RunspaceKind::Parallel {
                cmd.parameter("Parallel", 3)
                    .and_then(|p| cmd.parameter_value(p))
            } else {
                cmd.parameter("ScriptBlock", 2)
                    .and_then(|p| cmd.parameter_value(p))
                    .or_else(|| {
                        cmd.positional
                            .iter()
                            .map(|&i| &cmd.elements[i])
                            .find(|e| e.is_scriptblock)
                    })
            };
            let Some(block) = block.filter(|b| b.is_scriptblock) else {
                continue;
            };
            let (start, end) = (block.start, block.end);
            let inside = |o: usize| start < o && o < end;
            let mut assigned: Vec<String> = assignments
                .iter()
                .filter(|a| inside(a.start))
                .map(|a| a.name.clone())
                .collect();
            let mut params = Vec::new();
            if let Some(open) = self.index_at(start) {
                let close = self.partner[open].unwrap_or(open);
                for m in open + 1..close {
                    let t = self.toks[m];
                    if self.parent[m] == Some(open) && self.is_word(m, "param") {
                        if let Some(o) = self.next_sig(m).filter(|&o| self.toks[o].is_punct("(")) {
                            let c = self.partner[o].unwrap_or(close);
                            for v in o + 1..c {
                                if self.parent[v] == Some(o) {
                                    if let Some(name) = self.toks[v].var_name() {
                                        params.push(name.to_owned());
                                    }
                                }
                            }
                        }
                    }
                    // Loop variables: foreach ($x in ...)
                    if t.is_keyword("foreach") {
                        if let Some(o) = self.next_sig(m).filter(|&o| self.toks[o].is_punct("(")) {
                            if let Some(name) = self.toks.get(o + 1).and_then(|v| v.var_name()) {
                                assigned.push(name.to_owned());
                            }
                        }
                    }
                }
            }
            out.push(ScriptBlockContext {
                kind,
                command: cmd.name.clone(),
                span: block.span,
                start,
                end,
                variables: variables
                    .iter()
                    .filter(|v| inside(v.start))
                    .cloned()
                    .collect(),
                assigned,
                params,
            });
        }
        out
    }
}

fn is_expandable(t: &Token) -> bool {
    t.kind == TokenKind::DoubleQuoteString
        || (t.kind == TokenKind::HereString && t.text.starts_with("@\""))
}

/// Collects variable references from the text of an expandable string token
/// that starts at byte `base`.
fn embedded_variables(script: &SourceScript, text: &str, base: usize, out: &mut Vec<VariableUse>) {
    let mut push = |name: String, scope: Option<String>, a: usize, b: usize| {
        out.push(VariableUse {
            name,
            scope,
            span: span_of(script, base + a, base + b),
            start: base + a,
            end: base + b,
            in_string: true,
        })
    };
    let mut nested = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        match c {
            '`' => {
                iter.next();
            }
            '$' => {
                let Some(&(j, n)) = iter.peek() else { break };
                if n == '(' {
                    let inner = j + 1;
                    let close = subexpression_end(text, inner);
                    nested.push((inner, close));
                    while iter.peek().is_some_and(|&(k, _)| k <= close) {
                        iter.next();
                    }
                } else if n == '{' {
                    if let Some(rel) = text[j..].find('}') {
                        let var = split_scope(&text[j + 1..j + rel]);
                        push(var.name, var.scope, i, j + rel + 1);
                        while iter.peek().is_some_and(|&(k, _)| k <= j + rel) {
                            iter.next();
                        }
                    }
                } else if is_ident_char(n) {
                    let mut end = j;
                    while let Some(&(k, ch)) = iter.peek() {
                        if is_ident_char(ch) {
                            end = k + ch.len_utf8();
                            iter.next();
                        } else {
                            break;
                        }
                    }
                    let first = text[j..end].to_owned();
                    let scoped = text[end..].starts_with(':')
                        && text[end + 1..].chars().next().is_some_and(is_ident_char);
                    if scoped {
                        iter.next();
                        let name_start = end + 1;
                        let mut name_end = name_start;
                        while let Some(&(k, ch)) = iter.peek() {
                            if is_ident_char(ch) {
                                name_end = k + ch.len_utf8();
                                iter.next();
                            } else {
                                break;
                            }
                        }
                        push(
                            text[name_start..name_end].to_owned(),
                            Some(first),
                            i,
                            name_end,
                        );
                    } else {
                        push(first, None, i, end);
                    }
                }
            }
            _ => {}
        }
    }
    for (a, b) in nested {
        collect_code_variables(script, &text[a..b], base + a, out);
    }
}

/// Byte index of the `)` closing a subexpression whose content starts at
/// `from`, or the text length if it is unterminated.
fn subexpression_end(text: &str, from: usize) -> usize {
    let mut depth = 1usize;
    let mut quote: Option<char> = None;
    let mut iter = text[from..].char_indices();
    while let Some((k, c)) = iter.next() {
        match (quote, c) {
            (_, '`') => {
                iter.next();
            }
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'') => quote = Some(c),
            (None, '(') => depth += 1,
            (None, ')') => {
                depth -= 1;
                if depth == 0 {
                    return from + k;
                }
            }
            _ => {}
        }
    }
    text.len()
}

fn collect_code_variables(
    script: &SourceScript,
    code: &str,
    base: usize,
    out: &mut Vec<VariableUse>,
) {
    let sub = SourceScript::new("", code);
    for t in tokenize(&sub) {
        if let Some(var) = &t.var {
            out.push(VariableUse {
                name: var.name.clone(),
                scope: var.scope.clone(),
                span: span_of(script, base + t.start, base + t.end),
                start: base + t.start,
                end: base + t.end,
                in_string: true,
            });
        } else if is_expandable(&t) {
            embedded_variables(script, &t.text, base + t.start, out);
        }
    }
}
