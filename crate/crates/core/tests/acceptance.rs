//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p psaudit-core --test acceptance`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use psaudit::corpus::{dedup_splits, normalize, DedupOptions};
use psaudit::eval::{fsuc_rate, match_issues, s_rate, similarity};
use psaudit::io::{
    diagnostics_to_json, emit_triplet, parse_model_output, render_model_output, to_simplified,
    Issue, RuleEntry, SimplifiedAnalysis, TrainingTriplet,
};
use psaudit::reward::{analysis_reward, fix_reward, total_reward, RewardConfig};
use psaudit::rules::{Analyzer, RuleSet, Verdict};
use psaudit::synth::{synthesize_dataset, ScriptedClient, SynthConfig};
use psaudit::{analyze, classify, SourceScript};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

const INSECURE: &str = "function Get-Report {
    param([string]$Path)
    $items = gci $Path
    foreach ($item in $items) {
        Write-Host $item.Name
    }
    Write-Host \"Found $($items.Count) items\"
    Get-ChildItem $Path -Recurse | Where-Object { $_.Length -gt 1MB } | Sort-Object Length
    $summary = $items | Measure-Object -Property Length -Sum
    Write-Output \"Total bytes: $($summary.Sum)\"
}
";

const FIXED: &str = "function Get-Report {
    param([string]$Path)
    $items = Get-ChildItem $Path
    foreach ($item in $items) {
        Write-Output $item.Name
    }
    Write-Output \"Found $($items.Count) items\"
    Get-ChildItem $Path -Recurse | Where-Object { $_.Length -gt 1MB } | Sort-Object Length
    $summary = $items | Measure-Object -Property Length -Sum
    Write-Output \"Total bytes: $($summary.Sum)\"
}
";

fn gt_analysis() -> SimplifiedAnalysis {
    to_simplified(&analyze(&SourceScript::new("t.ps1", INSECURE)), "t.ps1")
}

fn oracle_parity() -> Outcome {
    let dir = manifest_dir().join("tests/fixtures/oracle");
    let golden: BTreeMap<String, Vec<(String, usize)>> = serde_json::from_str(
        &fs::read_to_string(dir.join("golden.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let scripts: Vec<(String, Vec<u8>)> = golden
        .keys()
        .map(|f| fs::read(dir.join(f)).map(|b| (f.clone(), b)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut mismatched = Vec::new();
    let mut covered = BTreeSet::new();
    for (file, bytes) in &scripts {
        let script = SourceScript::from_bytes(file.as_str(), bytes);
        let mut got: Vec<(String, usize)> = analyze(&script)
            .into_iter()
            .map(|d| (d.rule_id, d.line_span.start_line))
            .collect();
        let mut want = golden[file].clone();
        got.sort();
        want.sort();
        covered.extend(want.iter().map(|(r, _)| r.clone()));
        if got != want {
            mismatched.push(file.clone());
        }
    }
    let elapsed = start.elapsed();
    ensure(mismatched.is_empty(), || {
        format!("mismatched: {mismatched:?}")
    })?;
    ensure(covered.len() == 22, || {
        format!("fixtures cover {} of 22 rules", covered.len())
    })?;
    ensure(elapsed.as_secs_f64() < 2.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} snippets, 22 rules, {:.0} ms",
        scripts.len(),
        elapsed.as_secs_f64() * 1e3
    ))
}

fn embedded_tables_with(rule: &str, severity: u8) -> RuleSet {
    let mut rules: Value = serde_json::from_str(include_str!("../data/rules.json")).unwrap();
    for r in rules["rules"].as_array_mut().unwrap() {
        if r["rule_id"] == rule {
            r["severity"] = severity.into();
        }
    }
    RuleSet::from_json(
        &rules.to_string(),
        include_str!("../data/aliases.json"),
        include_str!("../data/verbs.json"),
        include_str!("../data/autovars.json"),
        include_str!("../data/builtins.json"),
    )
    .unwrap()
}

fn verdict_taxonomy() -> Outcome {
    let info_only = Analyzer::new(embedded_tables_with("PSAvoidUsingWriteHost", 0));
    let default = Analyzer::default();
    let cases: [(&Analyzer, &str, Verdict, Option<u8>); 7] = [
        (&default, "Get-Date\n", Verdict::Secure, None),
        (&info_only, "Write-Host 'hi'\n", Verdict::Secure, Some(0)),
        (&default, "Write-Host 'hi'\n", Verdict::Insecure, Some(1)),
        (
            &default,
            "$s = ConvertTo-SecureString 'p' -AsPlainText -Force\n",
            Verdict::Insecure,
            Some(2),
        ),
        (
            &default,
            "function f {\n  Get-Date\n",
            Verdict::Invalid,
            Some(3),
        ),
        (&default, "$x = 'unterminated\n", Verdict::Invalid, Some(3)),
        (&default, "Write-Host (1 +\n", Verdict::Invalid, Some(3)),
    ];
    for (analyzer, text, want, severity) in cases {
        let v = analyzer.classify(&SourceScript::new("case.ps1", text));
        ensure(v.verdict == want, || {
            format!("{text:?}: expected {want:?}, got {:?}", v.verdict)
        })?;
        let max = v.diagnostics.iter().map(|d| d.severity).max();
        ensure(max == severity, || {
            format!("{text:?}: highest severity {max:?}, expected {severity:?}")
        })?;
    }
    Ok(format!("{} fixtures", cases.len()))
}

#[derive(serde::Deserialize)]
struct SimPair {
    a: String,
    b: String,
    ratio: f64,
}

fn similarity_parity() -> Outcome {
    let pairs: Vec<SimPair> = serde_json::from_str(
        &fs::read_to_string(manifest_dir().join("tests/fixtures/similarity_pairs.json"))
            .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure(pairs.len() == 200, || format!("{} pairs", pairs.len()))?;
    ensure(similarity("", "") == 1.0, || "empty/empty != 1".into())?;
    let mut worst = 0.0f64;
    for (i, p) in pairs.iter().enumerate() {
        let got = similarity(&p.a, &p.b);
        let err = (got - p.ratio).abs();
        worst = worst.max(err);
        ensure(err <= 1e-9, || {
            format!("pair {i}: got {got}, reference {}", p.ratio)
        })?;
    }
    Ok(format!("200 pairs, max |err| {worst:e}"))
}

fn reference_matches(a: &[char], b: &[char]) -> usize {
    let (mut bi, mut bj, mut bk) = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            if k > bk {
                (bi, bj, bk) = (i, j, k);
            }
        }
    }
    if bk == 0 {
        return 0;
    }
    bk + reference_matches(&a[..bi], &b[..bj]) + reference_matches(&a[bi + bk..], &b[bj + bk..])
}

fn reference_similarity(a: &str, b: &str) -> f64 {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * reference_matches(&a, &b) as f64 / (a.len() + b.len()) as f64
}

fn flat(a: &SimplifiedAnalysis) -> Vec<(&str, &Issue)> {
    a.analysis
        .iter()
        .flat_map(|r| r.issues.iter().map(move |i| (r.rule_name.as_str(), i)))
        .collect()
}

fn brute_force_tp(pred: &SimplifiedAnalysis, gt: &SimplifiedAnalysis) -> usize {
    let p = flat(pred);
    let g = flat(gt);
    let ok: Vec<Vec<bool>> = p
        .iter()
        .map(|(pr, pi)| {
            g.iter()
                .map(|(gr, gi)| {
                    pr == gr
                        && pi.start_line == gi.start_line
                        && reference_similarity(&pi.text, &gi.text) >= 0.5
                })
                .collect()
        })
        .collect();
    fn best(i: usize, used: &mut Vec<bool>, ok: &[Vec<bool>]) -> usize {
        if i == ok.len() {
            return 0;
        }
        let mut top = best(i + 1, used, ok);
        for j in 0..used.len() {
            if ok[i][j] && !used[j] {
                used[j] = true;
                top = top.max(1 + best(i + 1, used, ok));
                used[j] = false;
            }
        }
        top
    }
    best(0, &mut vec![false; g.len()], &ok)
}

const TEXTS: [&str; 8] = [
    "Write-Host $x",
    "Write-Host $y",
    "gci",
    "Get-ChildItem",
    "abcdef",
    "abcxyz",
    "abdefq",
    "$global:a = 1",
];

fn random_analysis(rng: &mut ChaCha8Rng) -> SimplifiedAnalysis {
    let mut by_rule: BTreeMap<&str, Vec<Issue>> = BTreeMap::new();
    for _ in 0..rng.gen_range(0..=6) {
        let rule = ["RuleA", "RuleB"][rng.gen_range(0..2)];
        let mut text = TEXTS[rng.gen_range(0..TEXTS.len())].to_owned();
        if rng.gen_bool(0.3) {
            text.push_str(&"z".repeat(rng.gen_range(1..6)));
        }
        by_rule.entry(rule).or_default().push(Issue {
            message: "m".into(),
            start_line: rng.gen_range(1..=3),
            start_column: 1,
            text,
        });
    }
    SimplifiedAnalysis {
        file_name: "r.ps1".into(),
        analysis: by_rule
            .into_iter()
            .map(|(rule, issues)| RuleEntry {
                rule_name: rule.into(),
                severity: 1,
                suggestion: String::new(),
                issues,
            })
            .collect(),
    }
}

fn metric_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut total_tp = 0;
    for n in 0..100 {
        let pred = random_analysis(&mut rng);
        let gt = random_analysis(&mut rng);
        let m = match_issues(&pred, &gt);
        let want = brute_force_tp(&pred, &gt);
        let (np, ng) = (pred.issue_count(), gt.issue_count());
        ensure(m.tp == want, || {
            format!("instance {n}: tp {} vs exhaustive {want}", m.tp)
        })?;
        ensure(m.tp + m.fn_ == ng && m.tp + m.fp == np, || {
            format!(
                "instance {n}: identities fail ({}, {}, {})",
                m.tp, m.fp, m.fn_
            )
        })?;
        total_tp += want;
    }
    Ok(format!("100 instances, {total_tp} matched pairs in total"))
}

fn reward_constants() -> Outcome {
    let cfg = RewardConfig::default();
    let gt = gt_analysis();
    ensure(
        classify(&SourceScript::new("f.ps1", FIXED)).verdict == Verdict::Secure,
        || "reference fix is not secure".into(),
    )?;

    let gated = total_reward(
        &format!("***Analysis***\n\n{}", gt.to_json()),
        &gt,
        FIXED,
        &cfg,
    );
    ensure(gated.total == -20.0, || {
        format!("gate total {}", gated.total)
    })?;

    let broken = total_reward(
        &render_model_output(&gt, "function f {\n"),
        &gt,
        FIXED,
        &cfg,
    );
    ensure(broken.fix_score == Some(-10.0), || {
        format!("unparseable fix scored {:?}", broken.fix_score)
    })?;

    let perfect = total_reward(&render_model_output(&gt, FIXED), &gt, FIXED, &cfg);
    ensure(perfect.total == 30.0, || {
        format!("perfect total {}", perfect.total)
    })?;
    Ok("gate -20, unparseable fix -10, perfect 30".into())
}

fn anti_hack() -> Outcome {
    let cfg = RewardConfig::default();
    let gt = gt_analysis();
    let score = |a: &SimplifiedAnalysis, fixed: &str| {
        total_reward(&render_model_output(a, fixed), &gt, FIXED, &cfg).total
    };
    let honest = score(&gt, FIXED);

    let mut shifted = gt.clone();
    for e in &mut shifted.analysis {
        for i in &mut e.issues {
            i.start_line += 10;
        }
    }
    ensure(match_issues(&shifted, &gt).tp == 0, || {
        "shifted lines still matched".into()
    })?;
    let hallucinated = score(&shifted, FIXED);
    ensure(hallucinated < honest, || {
        format!("wrong lines {hallucinated} >= honest {honest}")
    })?;

    let mut echo = gt.clone();
    for e in &mut echo.analysis {
        let keyword = e.rule_name.trim_start_matches("PS").to_owned();
        for i in &mut e.issues {
            i.start_line = 1;
            i.text = keyword.clone();
        }
    }
    ensure(match_issues(&echo, &gt).tp == 0, || {
        "keyword echo earned issue credit".into()
    })?;
    let echoed = score(&echo, FIXED);
    ensure(echoed < honest, || {
        format!("keyword echo {echoed} >= honest {honest}")
    })?;

    let analyzer = Analyzer::default();
    let honest_fix = fix_reward(&analyzer, FIXED, FIXED, &gt, &cfg).score;
    let deleted = fix_reward(&analyzer, "# cleaned up\n", FIXED, &gt, &cfg).score;
    ensure(deleted < honest_fix, || {
        format!("delete-all {deleted} >= honest fix {honest_fix}")
    })?;
    ensure(deleted <= 0.35 * honest_fix, || {
        format!("delete-all {deleted} > 35% of {honest_fix}")
    })?;

    let skipped = total_reward(&format!("***Fixed Script***\n\n{FIXED}"), &gt, FIXED, &cfg);
    ensure(
        skipped.total == cfg.gate_penalty && skipped.total < honest,
        || format!("skipped analysis scored {}", skipped.total),
    )?;

    let one = to_simplified(
        &analyze(&SourceScript::new("w.ps1", "Write-Host 'x'\n")),
        "w.ps1",
    );
    let mut flood = one.clone();
    let template = one.analysis[0].issues[0].clone();
    flood.analysis[0].issues = (1..=1300)
        .map(|line| Issue {
            start_line: line,
            ..template.clone()
        })
        .collect();
    let single = analysis_reward(&one, &one, &cfg).score;
    let flooded = analysis_reward(&flood, &one, &cfg).score;
    ensure(flooded < single, || {
        format!("flooding {flooded} >= single {single}")
    })?;

    Ok(format!(
        "honest {honest}; wrong lines {hallucinated}, echo {echoed}, skip {}, \
         delete-all fix {deleted:.2}/{honest_fix} ({:.0}%), flood {flooded} vs {single}",
        skipped.total,
        100.0 * deleted / honest_fix
    ))
}

fn unique_script(rng: &mut ChaCha8Rng, i: usize) -> String {
    let verbs = ["Get", "Set", "New", "Remove", "Test"];
    let verb = verbs[rng.gen_range(0..verbs.len())];
    format!(
        "function {verb}-Thing{i} {{\n    param([string]$Name{i})\n    $value = {} + {i}\n    Write-Output \"$Name{i} $value\"\n}}\n",
        rng.gen_range(0..1_000_000)
    )
}

fn variant(text: &str, kind: usize) -> String {
    match kind % 3 {
        0 => format!("# copied from elsewhere\n{text}<# trailing note #>\n"),
        1 => text.to_uppercase(),
        _ => text.replace("    ", "\t\t").replace('\n', "  \r\n\n"),
    }
}

fn dedup_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let eval: Vec<SourceScript> = (0..100)
        .map(|i| SourceScript::new(format!("eval/{i}.ps1"), unique_script(&mut rng, i)))
        .collect();
    let mut train: Vec<SourceScript> = (100..950)
        .map(|i| SourceScript::new(format!("train/{i}.ps1"), unique_script(&mut rng, i)))
        .collect();
    for k in 0..50 {
        let src = &eval[k * 2];
        train.push(SourceScript::new(
            format!("train/dup{k}.ps1"),
            variant(src.raw(), k),
        ));
    }
    ensure(train.len() + eval.len() == 1000, || "corpus size".into())?;

    let out = dedup_splits(&train, &eval, DedupOptions::default());
    ensure(out.report.removed.len() == 50, || {
        format!("{} removals reported", out.report.removed.len())
    })?;
    let eval_digests: HashSet<String> = eval.iter().map(|s| normalize(s).digest).collect();
    let shared = out
        .train
        .iter()
        .filter(|s| eval_digests.contains(&normalize(s).digest))
        .count();
    ensure(shared == 0, || {
        format!("{shared} kept scripts still collide")
    })?;

    for s in train.iter().chain(&eval) {
        let once = normalize(s);
        let twice = normalize(&SourceScript::new(s.path(), once.canonical.as_str()));
        ensure(once == twice, || format!("{} not idempotent", s.path()))?;
    }
    Ok("1000 files, 50 removals, empty intersection, normalize idempotent".into())
}

fn end_to_end_synthesis() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("corpus");
    fs::create_dir_all(&corpus).map_err(|e| e.to_string())?;
    let mut fixes: HashMap<String, String> = HashMap::new();
    let mut secure: BTreeMap<String, String> = BTreeMap::new();
    for i in 0..20 {
        let tag = format!("# case {i:02}");
        let (text, fixed) = match i % 4 {
            0 => (
                format!("{tag}\ngci C:\\Temp\\{i}\n"),
                Some(format!("{tag}\nGet-ChildItem C:\\Temp\\{i}\n")),
            ),
            1 => (
                format!("{tag}\nWrite-Host 'step {i}'\n"),
                Some(format!("{tag}\nWrite-Output 'step {i}'\n")),
            ),
            2 if i < 10 => (
                format!("{tag}\n$global:count = {i}\n"),
                Some(format!("{tag}\n$script:count = {i}\n")),
            ),
            _ => (format!("{tag}\nGet-Date\nWrite-Output {i}\n"), None),
        };
        let name = format!("s{i:02}.ps1");
        fs::write(corpus.join(&name), &text).map_err(|e| e.to_string())?;
        match fixed {
            Some(f) => {
                fixes.insert(tag, f);
            }
            None => {
                secure.insert(tag, text);
            }
        }
    }
    let table = fixes.clone();
    let client = ScriptedClient::new("scripted", move |_, user| {
        table
            .iter()
            .find(|(tag, _)| user.contains(tag.as_str()))
            .map(|(_, f)| format!("```powershell\n{f}```"))
            .ok_or_else(|| psaudit::synth::ClientError::NoResponse(String::new()))
    });
    let out = dir.path().join("train.jsonl");
    let summary = synthesize_dataset(
        &corpus,
        &client,
        &out,
        &Analyzer::default(),
        &SynthConfig::default(),
    )
    .map_err(|e| e.to_string())?;

    let triplets: Vec<TrainingTriplet> = fs::read_to_string(&out)
        .map_err(|e| e.to_string())?
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(triplets.len() == 20, || {
        format!("{} triplets ({summary:?})", triplets.len())
    })?;
    let mut passthrough = 0;
    for t in &triplets {
        let parsed = parse_model_output(&t.target).map_err(|e| format!("round trip: {e}"))?;
        let v = classify(&SourceScript::new(
            "fixed.ps1",
            parsed.fixed_script.as_str(),
        ));
        ensure(v.verdict == Verdict::Secure, || {
            format!("emitted fix is {:?}: {:?}", v.verdict, parsed.fixed_script)
        })?;
        if let Some((_, original)) = secure.iter().find(|(tag, _)| t.user.contains(tag.as_str())) {
            ensure(
                parsed.fixed_script.as_bytes() == original.as_bytes(),
                || format!("passthrough altered: {:?}", parsed.fixed_script),
            )?;
            ensure(parsed.analysis.is_secure(), || {
                "secure input got issues".into()
            })?;
            passthrough += 1;
        }
    }
    ensure(passthrough == secure.len(), || {
        format!("{passthrough} of {} passthroughs found", secure.len())
    })?;
    Ok(format!(
        "20 triplets ({} repaired, {passthrough} passthrough), all secure",
        fixes.len()
    ))
}

fn rate_definitions() -> Outcome {
    let analyzer = Analyzer::default();
    let batch = [
        "Get-Date\n".to_owned(),
        "Write-Host 'x'\n".to_owned(),
        "$p = ConvertTo-SecureString 'x' -AsPlainText -Force\n".to_owned(),
    ];
    let named: Vec<(String, String)> = batch
        .iter()
        .enumerate()
        .map(|(i, t)| (format!("{i}.ps1"), t.clone()))
        .collect();
    let fsuc = fsuc_rate(&analyzer, &named).map_err(|e| e.to_string())?;
    let srate = s_rate(&analyzer, &batch).map_err(|e| e.to_string())?;
    ensure(fsuc.rate_2dp() == 33.33, || {
        format!("FSucRate {}", fsuc.rate_2dp())
    })?;
    ensure(srate.rate_2dp() == 33.33, || {
        format!("SRate {}", srate.rate_2dp())
    })?;
    Ok("FSucRate 33.33, SRate 33.33".into())
}

fn key_paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let path = format!("{prefix}/{k}");
                out.insert(path.clone());
                key_paths(child, &path, out);
            }
        }
        Value::Array(items) => {
            for item in items {
                key_paths(item, &format!("{prefix}[]"), out);
            }
        }
        _ => {}
    }
}

fn template_example() -> Result<Value, String> {
    let template = include_str!("../templates/code_analysis_system.txt");
    let start = template
        .find("{\n")
        .ok_or("no example JSON in analysis template")?;
    let mut stream = serde_json::Deserializer::from_str(&template[start..]).into_iter::<Value>();
    stream
        .next()
        .ok_or("empty example")?
        .map_err(|e| e.to_string())
}

fn format_fidelity() -> Outcome {
    let diags = analyze(&SourceScript::new("t.ps1", INSECURE));
    let emitted: Value =
        serde_json::from_str(&diagnostics_to_json(&diags)).map_err(|e| e.to_string())?;
    let want: BTreeSet<&str> = [
        "file_name",
        "rule_id",
        "severity",
        "line_span",
        "description",
        "suggested_fix",
        "code_snippet",
    ]
    .into();
    for d in emitted.as_array().ok_or("diagnostics are not an array")? {
        let keys: BTreeSet<&str> = d.as_object().unwrap().keys().map(String::as_str).collect();
        ensure(keys == want, || format!("diagnostic keys {keys:?}"))?;
    }

    let mut ours = BTreeSet::new();
    key_paths(&serde_json::to_value(gt_analysis()).unwrap(), "", &mut ours);
    let mut theirs = BTreeSet::new();
    key_paths(&template_example()?, "", &mut theirs);
    ensure(ours == theirs, || {
        format!("simplified keys {ours:?} vs prompt example {theirs:?}")
    })?;
    ensure(
        ours.contains("/Analysis[]/Script Repair Suggestion"),
        || "missing repair suggestion field".into(),
    )?;

    let t = emit_triplet(INSECURE, &gt_analysis(), FIXED);
    let a = t.target.find("***Corresponding analysis result***");
    let f = t.target.find("***Fixed Script***");
    ensure(a == Some(0) && f > a, || {
        "training markers out of place".into()
    })?;
    ensure(t.target.ends_with(FIXED), || "fixed script not last".into())?;
    ensure(t.user.contains(INSECURE), || {
        "script missing from user turn".into()
    })?;
    ensure(!t.system.is_empty(), || "empty system turn".into())?;
    Ok(format!(
        "7 diagnostic fields, {} simplified key paths, training markers",
        ours.len()
    ))
}

fn main() -> ExitCode {
    let checks: [Check; 10] = [
        ("oracle_parity", oracle_parity),
        ("verdict_taxonomy", verdict_taxonomy),
        ("similarity_parity", similarity_parity),
        ("metric_correctness", metric_correctness),
        ("reward_constants", reward_constants),
        ("anti_hack_suite", anti_hack),
        ("dedup_soundness", dedup_soundness),
        ("end_to_end_synthesis", end_to_end_synthesis),
        ("fsuc_srate_definitions", rate_definitions),
        ("format_fidelity", format_fidelity),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
