use crate::syntax::{CommandCall, FunctionDecl, ParamDecl, ScriptAst, Span, TokenKind};

use super::RuleSet;

pub(super) struct Finding {
    pub rule: usize,
    pub span: Span,
    pub name: String,
    pub target: String,
}

#[derive(Clone, Copy)]
struct Ctx<'a> {
    set: &'a RuleSet,
    ast: &'a ScriptAst,
}

impl<'a> Ctx<'a> {
    fn resolved<'b>(self, c: &'b CommandCall) -> &'b str
    where
        'a: 'b,
    {
        self.set.resolve(&c.name)
    }

    /// Function params followed by script params.
    fn all_params(self) -> impl Iterator<Item = &'a ParamDecl> {
        self.ast
            .functions
            .iter()
            .flat_map(|f| f.param_list())
            .chain(self.ast.script_params.iter().flat_map(|b| &b.params))
    }
}

struct Sink<'o> {
    rule: usize,
    out: &'o mut Vec<Finding>,
}

impl Sink<'_> {
    fn report(&mut self, span: Span, name: impl Into<String>) {
        self.report_with(span, name, "");
    }

    fn report_with(&mut self, span: Span, name: impl Into<String>, target: &str) {
        self.out.push(Finding {
            rule: self.rule,
            span,
            name: name.into(),
            target: target.to_owned(),
        });
    }
}

type Checker = fn(Ctx, &mut Sink);

pub(super) fn is_known(rule_id: &str) -> bool {
    checker_for(rule_id).is_some()
}

fn checker_for(rule_id: &str) -> Option<Checker> {
    Some(match rule_id {
        "PSAvoidUsingWriteHost" => write_host,
        "PSAvoidUsingCmdletAliases" => cmdlet_aliases,
        "PSUseSingularNouns" => singular_nouns,
        "PSUseApprovedVerbs" => approved_verbs,
        "PSReviewUnusedParameter" => unused_parameter,
        "PSPossibleIncorrectComparisonWithNull" => comparison_with_null,
        "PSAvoidUsingEmptyCatchBlock" => empty_catch,
        "PSAvoidDefaultValueForMandatoryParameter" => mandatory_default,
        "PSAvoidGlobalVars" => global_vars,
        "PSAvoidAssignmentToAutomaticVariable" => automatic_assignment,
        "PSUseUsingScopeModifierInNewRunspaces" => using_scope,
        "PSUseShouldProcessForStateChangingFunctions" => state_changing,
        "PSShouldProcess" => should_process,
        "PSAvoidUsingWMICmdlet" => wmi_cmdlet,
        "PSUseProcessBlockForPipelineCommand" => process_block,
        "PSAvoidOverwritingBuiltInCmdlets" => overwriting_builtin,
        "PSUseCmdletCorrectly" => cmdlet_correctly,
        "PSAvoidUsingInvokeExpression" => invoke_expression,
        "PSAvoidUsingConvertToSecureStringWithPlainText" => secure_string_plain_text,
        "PSAvoidUsingPlainTextForPassword" => plain_text_password,
        "PSAvoidUsingUsernameAndPasswordParams" => username_and_password,
        "PSAvoidUsingComputerNameHardcoded" => computer_name_hardcoded,
        _ => return None,
    })
}

pub(super) fn run(set: &RuleSet, ast: &ScriptAst, enabled: &[bool], out: &mut Vec<Finding>) {
    for (rule, spec) in set.rules().iter().enumerate() {
        if !enabled[rule] {
            continue;
        }
        let check = checker_for(&spec.rule_id).expect("rule tables are validated on load");
        check(Ctx { set, ast }, &mut Sink { rule, out });
    }
}

fn contains_ci(haystack: &str, patterns: &[String]) -> bool {
    let h = haystack.to_lowercase();
    patterns.iter().any(|p| h.contains(&p.to_lowercase()))
}

fn in_list(name: &str, list: &[String]) -> bool {
    list.iter().any(|x| x.eq_ignore_ascii_case(name))
}

fn write_host(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.commands {
        if !cx.resolved(c).eq_ignore_ascii_case("Write-Host") {
            continue;
        }
        let in_show = cx.ast.enclosing_function(c.start).is_some_and(|f| {
            f.verb
                .as_deref()
                .is_some_and(|v| v.eq_ignore_ascii_case("Show"))
        });
        if !in_show {
            out.report(c.span, "");
        }
    }
}

fn cmdlet_aliases(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.commands {
        if let Some(target) = cx.set.alias_target(&c.name) {
            out.report_with(c.name_span, c.name.clone(), target);
        }
    }
}

fn wmi_cmdlet(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.commands {
        if in_list(cx.resolved(c), &cx.set.settings.wmi_cmdlets) {
            out.report(c.span, c.name.clone());
        }
    }
}

fn invoke_expression(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.commands {
        if cx.resolved(c).eq_ignore_ascii_case("Invoke-Expression") {
            out.report(c.span, c.name.clone());
        }
    }
}

fn secure_string_plain_text(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.commands {
        if cx
            .resolved(c)
            .eq_ignore_ascii_case("ConvertTo-SecureString")
            && c.parameter("AsPlainText", 1).is_some()
        {
            out.report(c.span, c.name.clone());
        }
    }
}

fn is_secure_param(p: &ParamDecl) -> bool {
    p.has_type(&["SecureString", "PSCredential"]) || p.has_attribute("Credential")
}

fn is_plain_text_type(p: &ParamDecl) -> bool {
    p.types.is_empty() || p.has_type(&["string", "System.String", "object", "System.Object"])
}

fn plain_text_password(cx: Ctx, out: &mut Sink) {
    let found: Vec<_> = cx
        .all_params()
        .filter(|p| contains_ci(&p.name, &cx.set.settings.password_patterns))
        .filter(|p| !is_secure_param(p) && is_plain_text_type(p))
        .map(|p| (p.span, p.name.clone()))
        .collect();
    for (span, name) in found {
        out.report(span, name);
    }
}

fn username_and_password(cx: Ctx, out: &mut Sink) {
    let settings = &cx.set.settings;
    let mut found = Vec::new();
    for f in &cx.ast.functions {
        let params = f.param_list();
        let user = params
            .iter()
            .find(|p| contains_ci(&p.name, &settings.username_patterns));
        let password = params.iter().find(|p| {
            contains_ci(&p.name, &settings.password_patterns)
                && !p.has_type(&["SecureString", "PSCredential"])
        });
        if let (Some(u), Some(p)) = (user, password) {
            let (first, last) = if u.start <= p.start { (u, p) } else { (p, u) };
            let span = Span {
                start_line: first.span.start_line,
                start_column: first.span.start_column,
                end_line: last.span.end_line,
                end_column: last.span.end_column,
            };
            found.push((span, f.name.clone()));
        }
    }
    for (span, name) in found {
        out.report(span, name);
    }
}

fn computer_name_hardcoded(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.commands {
        let Some(p) = c.parameters.iter().find(|p| {
            p.name.eq_ignore_ascii_case("ComputerName") || p.name.eq_ignore_ascii_case("Cn")
        }) else {
            continue;
        };
        let literal = c.parameter_value(p).and_then(|v| v.literal.as_deref());
        if let Some(value) = literal {
            if !in_list(value, &cx.set.settings.loopback_names) {
                out.report(c.span, c.name.clone());
            }
        }
    }
}

fn global_vars(cx: Ctx, out: &mut Sink) {
    for v in &cx.ast.variables {
        if v.scope_is("global") && !cx.set.is_automatic(&v.name) {
            out.report(v.span, format!("global:{}", v.name));
        }
    }
}

fn automatic_assignment(cx: Ctx, out: &mut Sink) {
    for a in &cx.ast.assignments {
        if a.scope.is_none() && cx.set.is_assignable_automatic(&a.name) {
            out.report(a.span, a.name.clone());
        }
    }
    let params: Vec<_> = cx
        .all_params()
        .filter(|p| cx.set.is_assignable_automatic(&p.name))
        .map(|p| (p.name_span, p.name.clone()))
        .collect();
    for (span, name) in params {
        out.report(span, name);
    }
}

fn empty_catch(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.catch_blocks {
        if c.is_empty {
            out.report(c.span, "");
        }
    }
}

fn comparison_with_null(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.comparisons {
        if c.rhs.eq_ignore_ascii_case("$null") && !c.lhs.eq_ignore_ascii_case("$null") {
            out.report(c.span, "");
        }
    }
}

fn state_changing(cx: Ctx, out: &mut Sink) {
    for f in &cx.ast.functions {
        let Some(verb) = f.verb.as_deref() else {
            continue;
        };
        if in_list(verb, &cx.set.settings.state_changing_verbs)
            && f.supports_should_process.is_none()
        {
            out.report(f.name_span, f.name.clone());
        }
    }
}

/// Spans of `.ShouldProcess(` / `.ShouldContinue(` member calls in `f`'s body.
fn should_process_calls(ast: &ScriptAst, f: &FunctionDecl) -> Vec<Span> {
    let toks: Vec<_> = ast
        .tokens
        .iter()
        .filter(|t| t.start >= f.body_start && t.end <= f.body_end)
        .filter(|t| !t.kind.is_comment() && t.kind != TokenKind::Newline)
        .collect();
    toks.windows(2)
        .filter(|w| w[0].text == "." || w[0].text == "::")
        .filter(|w| {
            w[1].text.eq_ignore_ascii_case("ShouldProcess")
                || w[1].text.eq_ignore_ascii_case("ShouldContinue")
        })
        .map(|w| w[1].span)
        .collect()
}

fn should_process(cx: Ctx, out: &mut Sink) {
    for f in &cx.ast.functions {
        let calls = should_process_calls(cx.ast, f);
        match (f.supports_should_process, calls.first()) {
            (Some(span), None) => out.report(span, f.name.clone()),
            (None, Some(&call)) => out.report(call, f.name.clone()),
            _ => {}
        }
    }
}

fn process_block(cx: Ctx, out: &mut Sink) {
    for f in &cx.ast.functions {
        let Some(block) = &f.params else {
            continue;
        };
        if !f.has_process && block.params.iter().any(|p| p.value_from_pipeline) {
            out.report(block.span, f.name.clone());
        }
    }
}

fn using_scope(cx: Ctx, out: &mut Sink) {
    for ctx in &cx.ast.scriptblock_contexts {
        for v in &ctx.variables {
            if v.scope.is_some()
                || cx.set.is_automatic(&v.name)
                || in_list(&v.name, &ctx.assigned)
                || in_list(&v.name, &ctx.params)
            {
                continue;
            }
            out.report(v.span, v.name.clone());
        }
    }
}

fn approved_verbs(cx: Ctx, out: &mut Sink) {
    for f in &cx.ast.functions {
        if let Some(verb) = f.verb.as_deref() {
            if !cx.set.is_approved_verb(verb) {
                out.report(f.name_span, f.name.clone());
            }
        }
    }
}

/// Last PascalCase word of `noun`.
fn last_word(noun: &str) -> &str {
    let start = noun
        .char_indices()
        .rev()
        .find(|(i, c)| *i > 0 && c.is_uppercase())
        .map(|(i, _)| i)
        .unwrap_or(0);
    &noun[start..]
}

pub(crate) fn is_plural_noun(noun: &str, allowlist: &[String]) -> bool {
    let word = last_word(noun);
    let lower = word.to_lowercase();
    lower.len() > 1
        && lower.ends_with('s')
        && !["ss", "us", "is"].iter().any(|s| lower.ends_with(s))
        && !in_list(noun, allowlist)
        && !in_list(word, allowlist)
}

fn singular_nouns(cx: Ctx, out: &mut Sink) {
    for f in &cx.ast.functions {
        if let Some(noun) = f.noun.as_deref() {
            if is_plural_noun(noun, &cx.set.settings.noun_allowlist) {
                out.report(f.name_span, f.name.clone());
            }
        }
    }
}

fn mandatory_default(cx: Ctx, out: &mut Sink) {
    let found: Vec<_> = cx
        .all_params()
        .filter(|p| p.mandatory && p.default.is_some())
        .map(|p| (p.span, p.name.clone()))
        .collect();
    for (span, name) in found {
        out.report(span, name);
    }
}

const SCRIPTBLOCK_TRAVERSING: &[&str] = &["ForEach-Object", "Where-Object"];

/// Whether a use at `offset` is visible from the scope spanning
/// `scope` (byte range). Uses inside nested functions or scriptblock
/// literals are invisible, except scriptblocks handed to ForEach-Object or
/// Where-Object.
fn visible_from(cx: Ctx, scope: (usize, usize), offset: usize) -> bool {
    let nested = |a: usize, b: usize| a > scope.0 && b <= scope.1 && (a..b).contains(&offset);
    if cx.ast.functions.iter().any(|f| nested(f.start, f.body_end)) {
        return false;
    }
    cx.ast
        .scriptblocks
        .iter()
        .filter(|&&(a, b)| nested(a, b))
        .all(|&(a, _)| {
            cx.ast.commands.iter().any(|c| {
                let name = cx.resolved(c);
                SCRIPTBLOCK_TRAVERSING
                    .iter()
                    .any(|n| n.eq_ignore_ascii_case(name))
                    && c.elements.iter().any(|e| e.is_scriptblock && e.start == a)
            })
        })
}

fn unused_in_scope(cx: Ctx, scope: (usize, usize), params: &[ParamDecl]) -> Vec<(Span, String)> {
    let used_in_scope = |name: &str| {
        cx.ast.variables.iter().any(|v| {
            v.is_named(name)
                && v.start >= scope.0
                && v.end <= scope.1
                && visible_from(cx, scope, v.start)
        })
    };
    if used_in_scope("PSBoundParameters") {
        return Vec::new();
    }
    params
        .iter()
        .filter(|p| {
            !cx.ast.variables.iter().any(|v| {
                v.is_named(&p.name)
                    && v.span != p.name_span
                    && v.start >= scope.0
                    && v.end <= scope.1
                    && visible_from(cx, scope, v.start)
            })
        })
        .map(|p| (p.name_span, p.name.clone()))
        .collect()
}

fn unused_parameter(cx: Ctx, out: &mut Sink) {
    let mut found = Vec::new();
    for f in &cx.ast.functions {
        let params = f.param_list();
        if params.is_empty() {
            continue;
        }
        // Inline `function f($a)` params sit before the body.
        let scope = (f.start, f.body_end);
        found.extend(unused_in_scope(cx, scope, params));
    }
    if let Some(block) = &cx.ast.script_params {
        let end = cx.ast.tokens.last().map(|t| t.end).unwrap_or(0);
        found.extend(unused_in_scope(cx, (0, end), &block.params));
    }
    for (span, name) in found {
        out.report(span, name);
    }
}

fn overwriting_builtin(cx: Ctx, out: &mut Sink) {
    for f in &cx.ast.functions {
        if cx.set.builtin(f.bare_name()).is_some() {
            out.report(f.name_span, f.bare_name().to_owned());
        }
    }
}

fn cmdlet_correctly(cx: Ctx, out: &mut Sink) {
    for c in &cx.ast.commands {
        if c.splatted || !c.positional.is_empty() || c.pipeline_position > 0 {
            continue;
        }
        let Some(sets) = cx.set.mandatory_sets(cx.resolved(c)) else {
            continue;
        };
        let satisfied = |m: &String| c.parameter(m, 1).is_some();
        if !sets.iter().any(|set| set.iter().all(satisfied)) {
            out.report(c.span, c.name.clone());
        }
    }
}
