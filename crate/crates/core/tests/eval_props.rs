use std::collections::BTreeMap;

use proptest::prelude::*;
use psaudit::eval::{match_issues, score_analysis, similarity, TEXT_MATCH_THRESHOLD};
use psaudit::io::{Issue, RuleEntry, SimplifiedAnalysis};

const TEXTS: &[&str] = &[
    "Write-Host $x",
    "gci",
    "Get-ChildItem",
    "abcdef",
    "abcxyz",
    "$global:a",
];

fn build(items: Vec<(usize, usize, usize, String)>) -> SimplifiedAnalysis {
    let mut by_rule: BTreeMap<String, Vec<Issue>> = BTreeMap::new();
    for (rule, line, text, suffix) in items {
        by_rule
            .entry(format!("Rule{rule}"))
            .or_default()
            .push(Issue {
                message: "m".into(),
                start_line: line,
                start_column: 1,
                text: format!("{}{suffix}", TEXTS[text]),
            });
    }
    SimplifiedAnalysis {
        file_name: "p.ps1".into(),
        analysis: by_rule
            .into_iter()
            .map(|(rule_name, issues)| RuleEntry {
                rule_name,
                severity: 1,
                suggestion: String::new(),
                issues,
            })
            .collect(),
    }
}

fn analysis() -> impl Strategy<Value = SimplifiedAnalysis> {
    prop::collection::vec((0..3usize, 1..4usize, 0..TEXTS.len(), "[a-z]{0,4}"), 0..8)
        .prop_map(build)
}

fn flat(a: &SimplifiedAnalysis) -> Vec<(&str, &Issue)> {
    a.analysis
        .iter()
        .flat_map(|r| r.issues.iter().map(move |i| (r.rule_name.as_str(), i)))
        .collect()
}

proptest! {
    #[test]
    fn similarity_bounds(a in "\\PC{0,40}", b in "\\PC{0,40}") {
        let s = similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(similarity(&a, &a), 1.0);
        if !a.is_empty() {
            prop_assert_eq!(similarity(&a, ""), 0.0);
        }
    }

    #[test]
    fn match_counts_are_consistent(pred in analysis(), gt in analysis()) {
        let m = match_issues(&pred, &gt);
        prop_assert_eq!(m.tp + m.fn_, gt.issue_count());
        prop_assert_eq!(m.tp + m.fp, pred.issue_count());
        prop_assert_eq!(m.matched_pairs.len(), m.tp);
        prop_assert!((0.0..=1.0).contains(&m.f1));
    }

    #[test]
    fn matched_pairs_are_eligible_and_disjoint(pred in analysis(), gt in analysis()) {
        let m = match_issues(&pred, &gt);
        let (p, g) = (flat(&pred), flat(&gt));
        let mut used_p = vec![false; p.len()];
        let mut used_g = vec![false; g.len()];
        for pair in &m.matched_pairs {
            prop_assert!(!used_p[pair.pred] && !used_g[pair.gt]);
            used_p[pair.pred] = true;
            used_g[pair.gt] = true;
            let ((pr, pi), (gr, gi)) = (p[pair.pred], g[pair.gt]);
            prop_assert_eq!(pr, gr);
            prop_assert_eq!(pi.start_line, gi.start_line);
            prop_assert!(pair.similarity >= TEXT_MATCH_THRESHOLD);
        }
    }

    #[test]
    fn self_match_is_perfect(a in analysis()) {
        let m = match_issues(&a, &a);
        prop_assert_eq!(m.tp, a.issue_count());
        prop_assert_eq!(m.f1, 1.0);
        let scores = score_analysis(std::slice::from_ref(&a), std::slice::from_ref(&a)).unwrap();
        prop_assert_eq!(scores.issue_f1, 100.0);
        prop_assert_eq!(scores.rule_f1, 100.0);
    }

    #[test]
    fn dropping_a_prediction_never_raises_tp(pred in analysis(), gt in analysis(), k in 0..8usize) {
        let before = match_issues(&pred, &gt).tp;
        let mut fewer = pred.clone();
        if let Some(entry) = fewer.analysis.iter_mut().find(|e| !e.issues.is_empty()) {
            let i = k % entry.issues.len();
            entry.issues.remove(i);
        }
        fewer.analysis.retain(|e| !e.issues.is_empty());
        let after = match_issues(&fewer, &gt).tp;
        prop_assert!(after <= before && before <= after + 1);
    }
}
