use std::collections::BTreeMap;
use std::path::Path;

use psaudit::rules::analyze;
use psaudit::syntax::SourceScript;

fn fixtures() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/oracle"
    ))
}

#[test]
fn lint_matches_recorded_oracle() {
    let golden: BTreeMap<String, Vec<(String, usize)>> =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("golden.json")).unwrap())
            .unwrap();
    assert!(golden.len() >= 60);
    let mut mismatches = Vec::new();
    for (file, expected) in &golden {
        let text = std::fs::read(fixtures().join(file)).unwrap();
        let script = SourceScript::from_bytes(file.as_str(), &text);
        let mut got: Vec<_> = analyze(&script)
            .into_iter()
            .map(|d| (d.rule_id, d.line_span.start_line))
            .collect();
        got.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
        if &got != expected {
            mismatches.push(format!("{file}: expected {expected:?}, got {got:?}"));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}
