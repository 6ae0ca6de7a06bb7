use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;

use psaudit::corpus::{self, DedupOptions};
use psaudit::eval::{self, EvalError, EvalReport, F1Aggregation, ScoreOptions};
use psaudit::io::{self, PromptInputs, SimplifiedAnalysis, Task};
use psaudit::reward::{RewardConfig, RewardEngine};
use psaudit::rules::{Analyzer, RuleSet};
use psaudit::synth::{
    self, Decoding, HttpClient, HttpConfig, LlmClient, ReplayClient, SynthConfig,
};
use psaudit::SourceScript;

use crate::{Aggregation, Cli, Command, Format, GlobalOpts};

/// A failed run: bad input (exit 1) or a bug or environment fault (exit 2).
pub enum Failure {
    Input {
        kind: &'static str,
        err: anyhow::Error,
    },
    Internal(anyhow::Error),
}

impl Failure {
    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Input { kind, .. } => kind,
            Failure::Internal(_) => "internal",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input { .. } => 1,
            Failure::Internal(_) => 2,
        }
    }

    pub fn source(&self) -> &anyhow::Error {
        match self {
            Failure::Input { err, .. } | Failure::Internal(err) => err,
        }
    }
}

fn input(kind: &'static str) -> impl FnOnce(anyhow::Error) -> Failure {
    move |err| Failure::Input { kind, err }
}

fn internal(err: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(err.into())
}

type Result<T> = std::result::Result<T, Failure>;

pub fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    if let Some(n) = g.jobs {
        if n == 0 {
            return Err(input("usage")(anyhow!("--jobs must be at least 1")));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let analyzer = analyzer(g)?;
    match cli.command {
        Command::Lint { paths, simplified } => lint(g, &analyzer, &paths, simplified),
        Command::Classify { paths } => {
            let scripts = load_all(&paths)?;
            emit_json(g, &corpus::manifest(&analyzer, &scripts))
        }
        Command::Normalize { paths, text } => normalize(g, &paths, text),
        Command::Dedup {
            train,
            eval,
            remove_intra_split,
        } => dedup(g, &train, &eval, remove_intra_split),
        Command::Partition { corpus, out_dir } => partition(g, &analyzer, &corpus, out_dir),
        Command::Stats { corpus } => {
            let scripts = load_all(&[corpus])?;
            emit_json(g, &corpus::corpus_stats(&analyzer, &scripts))
        }
        Command::Rules => {
            let rules: Vec<_> = analyzer
                .rule_set()
                .rules()
                .iter()
                .filter(|r| g.rules.is_empty() || g.rules.contains(&r.rule_id))
                .collect();
            emit_json(g, &rules)
        }
        Command::Prompt {
            task,
            mode,
            script,
            prompt,
            analysis,
            suggestions,
            json,
        } => {
            let task: Task = task.parse().map_err(|e| input("usage")(anyhow!("{e}")))?;
            let mode = parse_mode(&mode)?;
            let inputs = prompt_inputs(
                &analyzer,
                task,
                mode,
                script.as_deref(),
                prompt.as_deref(),
                analysis.as_deref(),
                suggestions.as_deref(),
            )?;
            let rendered = io::render_prompt(task, mode, &inputs)
                .map_err(|e| input("prompt")(anyhow!("{e}")))?;
            if json {
                emit_json(g, &rendered)
            } else {
                emit(g, &rendered.text())
            }
        }
        Command::EvalAnalysis {
            pred,
            gt,
            rule_f1,
            issue_f1,
            format,
        } => eval_analysis(g, &pred, &gt, rule_f1, issue_f1, format),
        Command::EvalFix { fixed, format } => {
            let items = texts(&fixed)?;
            let report = eval::fsuc_rate(&analyzer, &items).map_err(eval_failure)?;
            rate_output(g, format, &report, EvalReport::default().with_fsuc(&report))
        }
        Command::EvalGen { generated, format } => {
            let items = texts(&generated)?;
            let bodies: Vec<String> = items.iter().map(|(_, t)| t.clone()).collect();
            let mut report = eval::s_rate(&analyzer, &bodies).map_err(eval_failure)?;
            for (o, (id, _)) in report.outcomes.iter_mut().zip(&items) {
                o.id = id.clone();
            }
            rate_output(
                g,
                format,
                &report,
                EvalReport::default().with_srate(&report),
            )
        }
        Command::Reward {
            batch,
            serve,
            config,
            overrides,
        } => {
            let cfg = reward_config(config.as_deref(), &overrides)?;
            let engine =
                RewardEngine::new(cfg, analyzer).map_err(|e| input("config")(anyhow!("{e}")))?;
            if serve {
                let stdin = std::io::stdin();
                let stdout = std::io::stdout();
                engine
                    .serve(stdin.lock(), stdout.lock())
                    .map_err(internal)?;
                return Ok(ExitCode::SUCCESS);
            }
            let path = batch.expect("clap requires --batch without --serve");
            let text = read(&path)?;
            let mut out = String::new();
            for (n, r) in engine.score_batch(&text).into_iter().enumerate() {
                let rec = r.map_err(|e| {
                    input("malformed")(anyhow!("{}: record {}: {e}", path.display(), n + 1))
                })?;
                out.push_str(&serde_json::to_string(&rec).map_err(internal)?);
                out.push('\n');
            }
            emit(g, &out)
        }
        Command::Synth {
            corpus,
            client,
            out,
            rounds,
            retries,
            mode,
            model,
            base_url,
            api_key_env,
            temperature,
        } => {
            let client: Box<dyn LlmClient> = match client.split_once(':') {
                Some(("replay", file)) => Box::new(
                    ReplayClient::from_file(Path::new(file))
                        .with_context(|| format!("loading replay file {file}"))
                        .map_err(input("io"))?,
                ),
                None if client == "http" => Box::new(HttpClient::new(HttpConfig {
                    base_url,
                    model,
                    api_key_env,
                    ..Default::default()
                })),
                _ => {
                    return Err(input("usage")(anyhow!(
                        "unknown client {client:?}; expected replay:<FILE> or http"
                    )))
                }
            };
            let cfg = SynthConfig {
                repair_rounds: rounds.max(1),
                retries,
                parallelism: g.jobs.unwrap_or(0),
                prompt_mode: parse_mode(&mode)?,
                decoding: Decoding {
                    temperature,
                    ..Default::default()
                },
            };
            let summary =
                synth::synthesize_dataset(&corpus, client.as_ref(), &out, &analyzer, &cfg)
                    .map_err(|e| match e {
                        synth::SynthError::Pool(_) => internal(e),
                        other => input("io")(other.into()),
                    })?;
            emit_json(g, &summary)
        }
    }
}

fn analyzer(g: &GlobalOpts) -> Result<Analyzer> {
    let set = match &g.rules_dir {
        Some(dir) => RuleSet::from_dir(dir)
            .with_context(|| format!("loading rules from {}", dir.display()))
            .map_err(input("rules"))?,
        None => RuleSet::embedded().clone(),
    };
    if g.rules.is_empty() {
        Ok(Analyzer::new(set))
    } else {
        Analyzer::with_rules(set, &g.rules).map_err(|e| input("rules")(e.into()))
    }
}

fn emit(g: &GlobalOpts, text: &str) -> Result<ExitCode> {
    let mut text = text.to_owned();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &g.output {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(input("io"))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(internal)?;
            out.flush().map_err(internal)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_json<T: Serialize + ?Sized>(g: &GlobalOpts, value: &T) -> Result<ExitCode> {
    emit(g, &serde_json::to_string_pretty(value).map_err(internal)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input("io"))
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<SourceScript>> {
    let mut out = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(input("io")(anyhow!("{} does not exist", p.display())));
        }
        out.extend(corpus::load_scripts(p).map_err(|e| input("io")(e.into()))?);
    }
    Ok(out)
}

fn texts(path: &Path) -> Result<Vec<(String, String)>> {
    Ok(load_all(&[path.to_owned()])?
        .into_iter()
        .map(|s| (s.path().to_owned(), s.raw().to_owned()))
        .collect())
}

fn file_name(path: &str) -> &str {
    path.rsplit(['/', '\\']).next().unwrap_or(path)
}

fn lint(
    g: &GlobalOpts,
    analyzer: &Analyzer,
    paths: &[PathBuf],
    simplified: bool,
) -> Result<ExitCode> {
    let scripts = load_all(paths)?;
    let per_script: Vec<_> = scripts.par_iter().map(|s| analyzer.analyze(s)).collect();
    if simplified {
        let out: Vec<SimplifiedAnalysis> = scripts
            .iter()
            .zip(&per_script)
            .map(|(s, d)| io::to_simplified(d, file_name(s.path())))
            .collect();
        emit_json(g, &out)
    } else {
        let all: Vec<_> = per_script.into_iter().flatten().collect();
        emit(g, &io::diagnostics_to_json(&all))
    }
}

#[derive(Serialize)]
struct NormalizeRecord<'a> {
    path: &'a str,
    digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    canonical: Option<String>,
}

fn normalize(g: &GlobalOpts, paths: &[PathBuf], text: bool) -> Result<ExitCode> {
    let scripts = load_all(paths)?;
    let records: Vec<NormalizeRecord> = scripts
        .iter()
        .map(|s| {
            let c = corpus::normalize(s);
            NormalizeRecord {
                path: s.path(),
                digest: c.digest,
                canonical: text.then_some(c.canonical),
            }
        })
        .collect();
    emit_json(g, &records)
}

#[derive(Serialize)]
struct DedupOutput<'a> {
    #[serde(flatten)]
    report: &'a corpus::DedupReport,
    kept: Vec<&'a str>,
}

fn dedup(g: &GlobalOpts, train: &Path, eval: &Path, remove_intra_split: bool) -> Result<ExitCode> {
    let train = load_all(&[train.to_owned()])?;
    let eval = load_all(&[eval.to_owned()])?;
    let outcome = corpus::dedup_splits(&train, &eval, DedupOptions { remove_intra_split });
    emit_json(
        g,
        &DedupOutput {
            report: &outcome.report,
            kept: outcome.train.iter().map(|s| s.path()).collect(),
        },
    )
}

fn partition(
    g: &GlobalOpts,
    analyzer: &Analyzer,
    corpus_dir: &Path,
    out_dir: Option<PathBuf>,
) -> Result<ExitCode> {
    let scripts = load_all(&[corpus_dir.to_owned()])?;
    let p = corpus::partition(analyzer, &scripts);
    let buckets = [
        ("secure", &p.secure),
        ("insecure", &p.insecure),
        ("invalid", &p.invalid),
    ];
    if let Some(out) = &out_dir {
        for (name, bucket) in buckets {
            let dir = out.join(name);
            fs::create_dir_all(&dir)
                .with_context(|| format!("creating {}", dir.display()))
                .map_err(input("io"))?;
            for s in bucket {
                let src = Path::new(s.path());
                let rel = src.strip_prefix(corpus_dir).unwrap_or(src);
                let dest = dir.join(rel.file_name().map_or(rel, Path::new));
                fs::copy(src, &dest)
                    .with_context(|| format!("copying {} to {}", src.display(), dest.display()))
                    .map_err(input("io"))?;
            }
        }
    }
    let listing: BTreeMap<&str, Vec<&str>> = buckets
        .iter()
        .map(|(name, b)| (*name, b.iter().map(|s| s.path()).collect()))
        .collect();
    emit_json(g, &listing)
}

fn parse_mode(mode: &str) -> Result<u8> {
    mode.trim_start_matches(['M', 'm'])
        .parse()
        .map_err(|_| input("usage")(anyhow!("invalid mode {mode:?}; expected M1..M4")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(input("malformed"))
}

fn prompt_inputs(
    analyzer: &Analyzer,
    task: Task,
    mode: u8,
    script: Option<&Path>,
    prompt: Option<&Path>,
    analysis: Option<&Path>,
    suggestions: Option<&Path>,
) -> Result<PromptInputs> {
    let mut inputs = PromptInputs::default();
    if let Some(p) = prompt {
        inputs.prompt = Some(read(p)?);
    }
    if let Some(p) = script {
        inputs.script = Some(read(p)?);
    }
    let rules = analyzer.rule_set().rules();
    if task == Task::CodeAnalysis {
        inputs.rule_names = rules.iter().map(|r| r.rule_id.clone()).collect();
        inputs.rule_docs = rules
            .iter()
            .map(|r| (r.rule_id.clone(), r.description.clone()))
            .collect();
    }
    if task == Task::CodeFix && mode >= 2 {
        inputs.analysis = match (analysis, script) {
            (Some(p), _) => Some(read_json(p)?),
            (None, Some(p)) => {
                let s = corpus::read_script(p).map_err(|e| input("io")(e.into()))?;
                Some(io::to_simplified(
                    &analyzer.analyze(&s),
                    file_name(&p.to_string_lossy()),
                ))
            }
            (None, None) => None,
        };
    }
    if let Some(p) = suggestions {
        inputs.custom_suggestions = read_json(p)?;
    }
    Ok(inputs)
}

/// Reads one analysis per file, per JSON Lines line, or per array element.
fn load_analyses(path: &Path) -> Result<Vec<SimplifiedAnalysis>> {
    let parse_one = |text: &str, origin: &str| -> Result<SimplifiedAnalysis> {
        let a: SimplifiedAnalysis = match serde_json::from_str(text) {
            Ok(a) => a,
            Err(json_err) => match io::parse_model_output(text) {
                Ok(out) => out.analysis,
                Err(_) => {
                    return Err(input("malformed")(anyhow!("{origin}: {json_err}")));
                }
            },
        };
        a.validate()
            .map_err(|e| input("malformed")(anyhow!("{origin}: {e}")))?;
        Ok(a)
    };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))
            .map_err(input("io"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        return files
            .iter()
            .map(|f| parse_one(&read(f)?, &f.display().to_string()))
            .collect();
    }
    let text = read(path)?;
    if path.extension().is_some_and(|x| x == "jsonl") {
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| parse_one(l, &format!("{}:{}", path.display(), n + 1)))
            .collect();
    }
    if text.trim_start().starts_with('[') {
        let items: Vec<serde_json::Value> = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(input("malformed"))?;
        return items
            .iter()
            .enumerate()
            .map(|(n, v)| parse_one(&v.to_string(), &format!("{}[{n}]", path.display())))
            .collect();
    }
    Ok(vec![parse_one(&text, &path.display().to_string())?])
}

fn eval_failure(e: EvalError) -> Failure {
    let kind = match e {
        EvalError::LengthMismatch { .. } => "LengthMismatch",
        EvalError::EmptyBatch => "EmptyBatch",
    };
    input(kind)(e.into())
}

fn agg(a: Aggregation) -> F1Aggregation {
    match a {
        Aggregation::PerScript => F1Aggregation::PerScript,
        Aggregation::Pooled => F1Aggregation::Pooled,
    }
}

fn eval_analysis(
    g: &GlobalOpts,
    pred: &Path,
    gt: &Path,
    rule_f1: Aggregation,
    issue_f1: Aggregation,
    format: Format,
) -> Result<ExitCode> {
    let preds = load_analyses(pred)?;
    let gts = load_analyses(gt)?;
    let opts = ScoreOptions {
        rule_f1: agg(rule_f1),
        issue_f1: agg(issue_f1),
    };
    let scores = eval::score_analysis_with(&preds, &gts, opts).map_err(eval_failure)?;
    match format {
        Format::Json => emit_json(g, &scores),
        Format::Table => emit(g, &EvalReport::default().with_analysis(&scores).to_table()),
    }
}

fn rate_output(
    g: &GlobalOpts,
    format: Format,
    report: &eval::RateReport,
    summary: EvalReport,
) -> Result<ExitCode> {
    match format {
        Format::Json => emit_json(g, report),
        Format::Table => emit(g, &summary.to_table()),
    }
}

fn reward_config(file: Option<&Path>, overrides: &[String]) -> Result<RewardConfig> {
    let bad = |e: psaudit::reward::RewardError| input("config")(e.into());
    let mut cfg = RewardConfig::default();
    if let Some(p) = file {
        let v: serde_json::Value = read_json(p)?;
        cfg = cfg.overlay(&v).map_err(bad)?;
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| input("usage")(anyhow!("--set expects KEY=VALUE, got {o:?}")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.into()));
        cfg = cfg.overlay(&serde_json::json!({ k: value })).map_err(bad)?;
    }
    Ok(cfg)
}
