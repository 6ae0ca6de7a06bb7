use proptest::prelude::*;
use psaudit::rules::{analyze, classify, list_rules, RuleKind, Verdict};
use psaudit::syntax::SourceScript;

const PRESENCE_SNIPPETS: &[(&str, &str)] = &[
    ("PSAvoidUsingWriteHost", "Write-Host 'x'"),
    ("PSAvoidUsingCmdletAliases", "gci"),
    ("PSAvoidUsingWMICmdlet", "Get-WmiObject Win32_BIOS"),
    ("PSAvoidUsingInvokeExpression", "Invoke-Expression $c"),
    (
        "PSAvoidUsingConvertToSecureStringWithPlainText",
        "ConvertTo-SecureString 'a' -AsPlainText -Force",
    ),
    (
        "PSAvoidUsingComputerNameHardcoded",
        "Get-Service -ComputerName srv9",
    ),
    ("PSAvoidGlobalVars", "$global:g = 1"),
    ("PSAvoidAssignmentToAutomaticVariable", "$input = 1"),
    ("PSAvoidUsingEmptyCatchBlock", "try { 1 } catch { }"),
    (
        "PSPossibleIncorrectComparisonWithNull",
        "if ($v -eq $null) { }",
    ),
];

const CLEAN_BASES: &[&str] = &[
    "",
    "Write-Output 'ok'",
    "$a = 1\nif ($null -eq $a) { Write-Output $a }",
    "function Get-Widget {\n  param($Name)\n  Write-Output $Name\n}",
    "Get-ChildItem -Path . | ForEach-Object { $_.Name }",
];

#[test]
fn bases_are_clean_and_snippets_fire() {
    for b in CLEAN_BASES {
        assert_eq!(
            classify(&SourceScript::new("b.ps1", *b)).verdict,
            Verdict::Secure,
            "{b}"
        );
    }
    for (rule, snippet) in PRESENCE_SNIPPETS {
        let spec = list_rules().iter().find(|r| r.rule_id == *rule).unwrap();
        assert_eq!(spec.kind, RuleKind::Presence);
        let d = analyze(&SourceScript::new("s.ps1", *snippet));
        assert!(d.iter().any(|d| d.rule_id == *rule), "{rule}");
    }
}

proptest! {
    #[test]
    fn presence_rules_survive_concatenation(
        base in prop::sample::select(CLEAN_BASES),
        pick in prop::sample::select(PRESENCE_SNIPPETS),
        before in any::<bool>(),
    ) {
        let (rule, snippet) = pick;
        let src = if before { format!("{snippet}\n{base}") } else { format!("{base}\n{snippet}") };
        let d = analyze(&SourceScript::new("c.ps1", src));
        prop_assert!(d.iter().any(|d| d.rule_id == rule));
    }

    #[test]
    fn analysis_is_deterministic(src in "[ -~\n]{0,120}") {
        let s = SourceScript::new("d.ps1", src);
        let a = serde_json::to_string(&analyze(&s)).unwrap();
        let b = serde_json::to_string(&analyze(&s)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn diagnostics_are_sorted_and_snippets_match(src in "[ -~\n]{0,120}") {
        let s = SourceScript::new("d.ps1", src);
        let d = analyze(&s);
        for w in d.windows(2) {
            let ka = (w[0].line_span.start_line, w[0].line_span.start_column, &w[0].rule_id);
            let kb = (w[1].line_span.start_line, w[1].line_span.start_column, &w[1].rule_id);
            prop_assert!(ka <= kb);
        }
        for x in &d {
            prop_assert_eq!(s.span_text(&x.line_span), x.code_snippet.as_str());
            prop_assert!(x.severity <= 2);
        }
    }
}
