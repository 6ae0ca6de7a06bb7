//! Repair-and-verify pipeline that turns a corpus into training triplets.

mod client;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{load_scripts, CorpusError};
use crate::io::{
    emit_triplet, render_prompt, strip_fences, to_simplified, PromptInputs, SimplifiedAnalysis,
    Task, TrainingTriplet,
};
use crate::reward::Residual;
use crate::rules::{Analyzer, Verdict};
use crate::syntax::SourceScript;

pub use client::{
    prompt_digest, ClientError, Decoding, LlmClient, ReplayClient, ReplayEntry, ScriptedClient,
};
#[cfg(feature = "http")]
pub use client::{HttpClient, HttpConfig};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// LLM repair calls per script.
    pub repair_rounds: usize,
    /// Extra attempts after a client error, per call.
    pub retries: usize,
    /// Concurrent scripts; 0 uses the global pool.
    pub parallelism: usize,
    /// CodeFix prompt mode.
    pub prompt_mode: u8,
    pub decoding: Decoding,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            repair_rounds: 1,
            retries: 2,
            parallelism: 0,
            prompt_mode: 2,
            decoding: Decoding::default(),
        }
    }
}

/// Asks `client` for a repaired script and removes any code fence around it.
pub fn repair_once(
    script: &str,
    analysis: &SimplifiedAnalysis,
    client: &dyn LlmClient,
    cfg: &SynthConfig,
) -> Result<String, ClientError> {
    let inputs = PromptInputs {
        script: Some(script.to_owned()),
        analysis: Some(analysis.clone()),
        ..Default::default()
    };
    let prompt = render_prompt(Task::CodeFix, cfg.prompt_mode, &inputs)
        .map_err(|e| ClientError::Malformed(e.to_string()))?;
    let mut last = ClientError::Timeout;
    for _ in 0..=cfg.retries {
        match client.complete(&prompt.system, &prompt.user, &cfg.decoding) {
            Ok(text) => return Ok(strip_fences(&text).to_owned()),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    Empty,
    ParseError,
    Residual { residuals: Vec<Residual> },
    ClientError { message: String },
    InvalidInput,
}

impl RejectReason {
    pub fn label(&self) -> &'static str {
        match self {
            RejectReason::Empty => "empty",
            RejectReason::ParseError => "parse_error",
            RejectReason::Residual { .. } => "residual",
            RejectReason::ClientError { .. } => "client_error",
            RejectReason::InvalidInput => "invalid_input",
        }
    }
}

/// Accepts a candidate iff it is non-empty and classifies Secure.
pub fn verify_fix(analyzer: &Analyzer, candidate: &str) -> Result<(), RejectReason> {
    if candidate.trim().is_empty() {
        return Err(RejectReason::Empty);
    }
    let v = analyzer.classify(&SourceScript::new("candidate.ps1", candidate));
    match v.verdict {
        Verdict::Secure => Ok(()),
        Verdict::Invalid => Err(RejectReason::ParseError),
        Verdict::Insecure => Err(RejectReason::Residual {
            residuals: v
                .diagnostics
                .iter()
                .filter(|d| matches!(d.severity, 1 | 2))
                .map(|d| Residual {
                    rule_id: d.rule_id.clone(),
                    line: d.line_span.start_line,
                })
                .collect(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SynthStatus {
    Accepted,
    Rejected { reason: RejectReason },
    PassthroughSecure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub script_id: String,
    #[serde(flatten)]
    pub status: SynthStatus,
    /// LLM calls made, retries included.
    pub attempts: usize,
    pub fixed_text: Option<String>,
    /// Unified diff from the original to the accepted fix.
    pub diff: Option<String>,
    pub model: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub passthrough: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SynthesisRun {
    /// Sorted by `script_id`.
    pub records: Vec<SynthesisRecord>,
    /// `(script_id, triplet)` for every accepted or passthrough script.
    pub triplets: Vec<(String, TrainingTriplet)>,
}

impl SynthesisRun {
    pub fn summary(&self) -> SynthesisSummary {
        let mut s = SynthesisSummary::default();
        for r in &self.records {
            match r.status {
                SynthStatus::Accepted => s.accepted += 1,
                SynthStatus::Rejected { .. } => s.rejected += 1,
                SynthStatus::PassthroughSecure => s.passthrough += 1,
            }
        }
        s
    }
}

pub fn unified_diff(id: &str, old: &str, new: &str) -> String {
    similar::TextDiff::from_lines(old, new)
        .unified_diff()
        .context_radius(3)
        .header(&format!("a/{id}"), &format!("b/{id}"))
        .to_string()
}

fn file_name(id: &str) -> &str {
    id.rsplit(['/', '\\']).next().unwrap_or(id)
}

struct CountingClient<'a> {
    inner: &'a dyn LlmClient,
    calls: AtomicUsize,
}

impl CountingClient<'_> {
    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl LlmClient for CountingClient<'_> {
    fn complete(&self, system: &str, user: &str, d: &Decoding) -> Result<String, ClientError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.complete(system, user, d)
    }

    fn identity(&self) -> &str {
        self.inner.identity()
    }
}

fn process(
    id: &str,
    script: &SourceScript,
    analyzer: &Analyzer,
    client: &dyn LlmClient,
    cfg: &SynthConfig,
) -> (SynthesisRecord, Option<TrainingTriplet>) {
    let raw = script.raw();
    let model = client.identity().to_owned();
    let verdict = analyzer.classify(script);
    let record = |status, attempts, fixed_text: Option<String>, diff| SynthesisRecord {
        script_id: id.to_owned(),
        status,
        attempts,
        fixed_text,
        diff,
        model: model.clone(),
    };
    match verdict.verdict {
        Verdict::Invalid => {
            return (
                record(
                    SynthStatus::Rejected {
                        reason: RejectReason::InvalidInput,
                    },
                    0,
                    None,
                    None,
                ),
                None,
            )
        }
        Verdict::Secure => {
            let empty = to_simplified(&[], file_name(id));
            let t = emit_triplet(raw, &empty, raw);
            return (
                record(
                    SynthStatus::PassthroughSecure,
                    0,
                    Some(raw.to_owned()),
                    None,
                ),
                Some(t),
            );
        }
        Verdict::Insecure => {}
    }

    let analysis = to_simplified(&analyzer.analyze(script), file_name(id));
    let counter = CountingClient {
        inner: client,
        calls: AtomicUsize::new(0),
    };
    let mut current = raw.to_owned();
    let mut current_analysis = analysis.clone();
    let mut reason = RejectReason::Empty;
    for _ in 0..cfg.repair_rounds.max(1) {
        let candidate = match repair_once(&current, &current_analysis, &counter, cfg) {
            Ok(c) => c,
            Err(e) => {
                reason = RejectReason::ClientError {
                    message: e.to_string(),
                };
                break;
            }
        };
        match verify_fix(analyzer, &candidate) {
            Ok(()) => {
                let diff = unified_diff(id, raw, &candidate);
                let t = emit_triplet(raw, &analysis, &candidate);
                return (
                    record(
                        SynthStatus::Accepted,
                        counter.calls(),
                        Some(candidate),
                        Some(diff),
                    ),
                    Some(t),
                );
            }
            Err(r) => {
                reason = r;
                if !matches!(reason, RejectReason::Residual { .. }) {
                    break;
                }
                let next = SourceScript::new(id, candidate.as_str());
                current_analysis = to_simplified(&analyzer.analyze(&next), file_name(id));
                current = candidate;
            }
        }
    }
    (
        record(
            SynthStatus::Rejected { reason },
            counter.calls(),
            None,
            None,
        ),
        None,
    )
}

/// Runs the pipeline over `(script_id, script)` pairs.
pub fn synthesize(
    scripts: &[(String, SourceScript)],
    analyzer: &Analyzer,
    client: &dyn LlmClient,
    cfg: &SynthConfig,
) -> Result<SynthesisRun, SynthError> {
    let work = || -> Vec<(SynthesisRecord, Option<TrainingTriplet>)> {
        scripts
            .par_iter()
            .map(|(id, s)| process(id, s, analyzer, client, cfg))
            .collect()
    };
    let mut results = if cfg.parallelism == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| SynthError::Pool(e.to_string()))?
            .install(work)
    };
    results.sort_by(|a, b| a.0.script_id.cmp(&b.0.script_id));

    let mut run = SynthesisRun::default();
    for (record, triplet) in results {
        if let Some(t) = triplet {
            run.triplets.push((record.script_id.clone(), t));
        }
        run.records.push(record);
    }
    Ok(run)
}

/// Path of the per-script record file written next to `out_path`.
pub fn records_path(out_path: &Path) -> PathBuf {
    let mut name = out_path.file_stem().unwrap_or_default().to_os_string();
    name.push(".records.jsonl");
    out_path.with_file_name(name)
}

/// Reads `corpus_dir`, synthesizes, and writes triplets to `out_path` and
/// records to [`records_path`] as JSON Lines.
pub fn synthesize_dataset(
    corpus_dir: &Path,
    client: &dyn LlmClient,
    out_path: &Path,
    analyzer: &Analyzer,
    cfg: &SynthConfig,
) -> Result<SynthesisSummary, SynthError> {
    let scripts: Vec<(String, SourceScript)> = load_scripts(corpus_dir)?
        .into_iter()
        .map(|s| {
            let id = Path::new(s.path())
                .strip_prefix(corpus_dir)
                .map(|p| p.to_string_lossy().replace('\\', "/"))
                .unwrap_or_else(|_| s.path().to_owned());
            (id, s)
        })
        .collect();
    let run = synthesize(&scripts, analyzer, client, cfg)?;
    write_jsonl(out_path, run.triplets.iter().map(|(_, t)| t.to_jsonl()))?;
    write_jsonl(
        &records_path(out_path),
        run.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes")),
    )?;
    Ok(run.summary())
}

fn write_jsonl(path: &Path, lines: impl Iterator<Item = String>) -> Result<(), SynthError> {
    let err = |source| SynthError::Io {
        path: path.to_owned(),
        source,
    };
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(err)?);
    for l in lines {
        writeln!(f, "{l}").map_err(err)?;
    }
    f.flush().map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INSECURE: &str = "gci\n";
    const FIXED: &str = "Get-ChildItem\n";

    fn corpus() -> Vec<(String, SourceScript)> {
        vec![
            ("a.ps1".into(), SourceScript::new("a.ps1", "Get-Date\n")),
            ("b.ps1".into(), SourceScript::new("b.ps1", INSECURE)),
        ]
    }

    fn fixer() -> ScriptedClient {
        ScriptedClient::new("mock", |_, user| {
            Ok(if user.contains("gci") {
                format!("```powershell\n{FIXED}```")
            } else {
                String::new()
            })
        })
    }

    #[test]
    fn perfect_client() {
        let run = synthesize(
            &corpus(),
            &Analyzer::default(),
            &fixer(),
            &SynthConfig::default(),
        )
        .unwrap();
        assert_eq!(run.triplets.len(), 2);
        assert_eq!(run.records[0].status, SynthStatus::PassthroughSecure);
        assert_eq!(run.records[1].status, SynthStatus::Accepted);
        assert_eq!(run.records[1].fixed_text.as_deref(), Some(FIXED));
        assert!(run.records[1]
            .diff
            .as_ref()
            .unwrap()
            .contains("+Get-ChildItem"));
        assert_eq!(run.records[1].attempts, 1);
    }

    #[test]
    fn deleting_client_is_rejected() {
        let client = ScriptedClient::new("del", |_, _| Ok("   \n".into()));
        let run = synthesize(
            &corpus(),
            &Analyzer::default(),
            &client,
            &SynthConfig::default(),
        )
        .unwrap();
        assert_eq!(run.summary().accepted, 0);
        assert_eq!(
            run.records[1].status,
            SynthStatus::Rejected {
                reason: RejectReason::Empty
            }
        );
    }

    #[test]
    fn client_errors_exhaust_retries() {
        let client = ScriptedClient::new("down", |_, _| Err(ClientError::Timeout));
        let cfg = SynthConfig {
            retries: 3,
            ..Default::default()
        };
        let run = synthesize(&corpus(), &Analyzer::default(), &client, &cfg).unwrap();
        assert_eq!(run.records[1].attempts, 4);
        assert!(matches!(
            run.records[1].status,
            SynthStatus::Rejected {
                reason: RejectReason::ClientError { .. }
            }
        ));
    }

    #[test]
    fn residual_rejected() {
        assert!(matches!(
            verify_fix(&Analyzer::default(), "Write-Host 'x'\n"),
            Err(RejectReason::Residual { .. })
        ));
        assert_eq!(verify_fix(&Analyzer::default(), "Get-Date\n"), Ok(()));
    }

    #[test]
    fn replay_client_uses_digest() {
        let client = ReplayClient::new(
            "r",
            [ReplayEntry {
                prompt_digest: prompt_digest("s", "u"),
                response: "ok".into(),
            }],
        );
        assert_eq!(
            client.complete("s", "u", &Decoding::default()).unwrap(),
            "ok"
        );
        assert!(matches!(
            client.complete("s", "v", &Decoding::default()),
            Err(ClientError::NoResponse(_))
        ));
    }
}
