use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use psaudit::analyze;
use psaudit::eval::{match_issues, similarity};
use psaudit::reward::{total_reward, RewardConfig};
use psaudit::syntax::{parse, SourceScript};
use psaudit_bench::{perfect_output, sample_analysis, sample_fixed, sample_script};

fn syntax(c: &mut Criterion) {
    let mut group = c.benchmark_group("parse");
    for n in [1, 10, 100] {
        let text = sample_script(n);
        group.throughput(Throughput::Bytes(text.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &text, |b, text| {
            b.iter(|| parse(&SourceScript::new("bench.ps1", black_box(text.as_str()))))
        });
    }
    group.finish();
}

fn rules(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    for n in [1, 10, 100] {
        let script = SourceScript::new("bench.ps1", sample_script(n));
        group.throughput(Throughput::Bytes(script.raw().len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &script, |b, s| {
            b.iter(|| analyze(black_box(s)))
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let a = "Get-ChildItem C:\\Temp | ForEach-Object { $_.Name }".repeat(4);
    let b = "gci C:\\Temp | % { $_.FullName }".repeat(4);
    c.bench_function("similarity/200", |bench| {
        bench.iter(|| similarity(black_box(&a), black_box(&b)))
    });

    let gt = sample_analysis(20);
    let mut pred = gt.clone();
    for entry in &mut pred.analysis {
        for issue in &mut entry.issues {
            issue.text.push_str(" # edited");
        }
    }
    c.bench_function("match_issues/20", |bench| {
        bench.iter(|| match_issues(black_box(&pred), black_box(&gt)))
    });
}

fn reward(c: &mut Criterion) {
    let cfg = RewardConfig::default();
    let gt = sample_analysis(10);
    let fixed = sample_fixed(10);
    let output = perfect_output(10);
    c.bench_function("total_reward/10", |b| {
        b.iter(|| total_reward(black_box(&output), &gt, &fixed, &cfg))
    });
}

criterion_group!(benches, syntax, rules, metrics, reward);
criterion_main!(benches);
