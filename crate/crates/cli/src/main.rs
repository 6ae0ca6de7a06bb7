mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// PowerShell security linting, benchmark scoring, reward scoring and
/// training-data synthesis.
#[derive(Debug, Parser)]
#[command(name = "psaudit", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Load rule tables from this directory instead of the built-in set
    #[arg(long, global = true, value_name = "DIR")]
    pub rules_dir: Option<PathBuf>,
    /// Comma-separated rule ids to enable (default: all)
    #[arg(long, global = true, value_name = "IDS", value_delimiter = ',')]
    pub rules: Vec<String>,
    /// Worker threads (default: logical CPUs)
    #[arg(short = 'j', long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Write the result here instead of stdout
    #[arg(short, long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Aggregation {
    PerScript,
    Pooled,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print diagnostics for scripts as JSON
    Lint {
        /// Script files or directories
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Emit one simplified analysis per script instead
        #[arg(long)]
        simplified: bool,
    },
    /// Print the secure/insecure/invalid verdict of each script
    Classify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Print canonical digests used for deduplication
    Normalize {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Include the canonical text
        #[arg(long)]
        text: bool,
    },
    /// Remove training scripts that duplicate evaluation scripts
    Dedup {
        #[arg(long, value_name = "DIR")]
        train: PathBuf,
        #[arg(long, value_name = "DIR")]
        eval: PathBuf,
        /// Also drop repeated scripts within the training split
        #[arg(long)]
        remove_intra_split: bool,
    },
    /// Split a corpus by verdict
    Partition {
        corpus: PathBuf,
        /// Copy scripts into secure/, insecure/ and invalid/ under this directory
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Print corpus statistics
    Stats { corpus: PathBuf },
    /// List the enabled rules
    Rules,
    /// Render a benchmark prompt
    Prompt {
        /// codegen, code-analysis or code-fix
        #[arg(long)]
        task: String,
        /// M1..M4 (or 1..4)
        #[arg(long, default_value = "M1")]
        mode: String,
        /// Script file for analysis and fix tasks
        #[arg(long, value_name = "FILE")]
        script: Option<PathBuf>,
        /// CodeGen task description file
        #[arg(long, value_name = "FILE")]
        prompt: Option<PathBuf>,
        /// Simplified analysis JSON for CodeFix M2-M4 (default: lint the script)
        #[arg(long, value_name = "FILE")]
        analysis: Option<PathBuf>,
        /// JSON object of rule id to suggestion text for CodeFix M4
        #[arg(long, value_name = "FILE")]
        suggestions: Option<PathBuf>,
        /// Emit {"system", "user"} JSON instead of plain text
        #[arg(long)]
        json: bool,
    },
    /// Score predicted analyses against ground truth
    EvalAnalysis {
        /// Directory of *.json analyses or a JSON Lines file
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        #[arg(long, value_name = "PATH")]
        gt: PathBuf,
        #[arg(long, value_enum, default_value = "per-script")]
        rule_f1: Aggregation,
        #[arg(long, value_enum, default_value = "pooled")]
        issue_f1: Aggregation,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// FSucRate of repaired scripts
    EvalFix {
        #[arg(long, value_name = "PATH")]
        fixed: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// SRate of generated scripts
    EvalGen {
        #[arg(long, value_name = "PATH")]
        generated: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Score model outputs with the layered reward
    Reward {
        /// JSON Lines file of {id, output, gt_analysis, gt_fixed} records
        #[arg(
            long,
            value_name = "FILE",
            conflicts_with = "serve",
            required_unless_present = "serve"
        )]
        batch: Option<PathBuf>,
        /// Answer JSON Lines requests on stdin until EOF
        #[arg(long)]
        serve: bool,
        /// JSON file of reward config overrides
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Override one config value, e.g. --set fix_max=5
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Repair insecure scripts with an LLM and write training triplets
    Synth {
        #[arg(long, value_name = "DIR")]
        corpus: PathBuf,
        /// replay:<FILE> or http
        #[arg(long)]
        client: String,
        /// Triplet JSON Lines path; records go next to it
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long, default_value_t = 2)]
        retries: usize,
        /// CodeFix prompt mode
        #[arg(long, default_value = "M2")]
        mode: String,
        #[arg(long, default_value = "gpt-4o")]
        model: String,
        #[arg(long, default_value = "https://api.openai.com/v1")]
        base_url: String,
        #[arg(long, default_value = "OPENAI_API_KEY")]
        api_key_env: String,
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!(
                "{}",
                serde_json::json!({"error": "usage", "kind": format!("{:?}", e.kind()), "message": msg.trim()})
            );
            return ExitCode::from(1);
        }
    };
    match run::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": e.kind(), "message": format!("{:#}", e.source())})
            );
            ExitCode::from(e.exit_code())
        }
    }
}
