//! Command-line interface: `bench` runs the scripted benchmark, `explain`
//! prints the per-message packing decision table for a logged conversation,
//! `validate` checks a scenario file.
//!
//! Exit codes: 0 success, 1 grading or validation failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use afm::baselines::Method;
use afm::bench::{run_benchmark, summarize, BenchOptions, Scenario, TranscriptEvent};
use afm::gateway::{GatewayConfig, HttpGateway};
use afm::importance::RulesClassifier;
use afm::manager::{AblationFlags, FocusManager};
use afm::model::FocusConfig;
use afm::{AfmError, Result};

#[derive(Parser)]
#[command(name = "afm", about = "Budget-aware dialogue context engine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scripted benchmark and print a summary table.
    Bench(BenchArgs),
    /// Show the fidelity decision table for a conversation transcript.
    Explain(ExplainArgs),
    /// Validate a scenario file.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Bundled scenario name (allergy, tax) or a path to a scenario file.
    #[arg(long, default_value = "allergy")]
    scenario: String,
    /// Methods to run; defaults to all four.
    #[arg(long, value_enum)]
    method: Vec<Method>,
    #[arg(long, default_value_t = 30)]
    seeds: u64,
    #[arg(long, default_value_t = 286)]
    budget: usize,
    /// Use the deterministic offline responder (the default).
    #[arg(long, conflicts_with = "live")]
    offline: bool,
    /// Send prompts to a live gateway instead of the offline responder.
    #[arg(long)]
    live: bool,
    /// Ablation: remove the summary rung of the downgrade chain.
    #[arg(long)]
    no_compression: bool,
    /// Ablation: remove the placeholder rung of the downgrade chain.
    #[arg(long)]
    no_stubs: bool,
    /// Ablation: score every message as TRIVIAL.
    #[arg(long)]
    no_importance: bool,
    /// Directory for transcripts and summary files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recency baseline: newest messages kept verbatim.
    #[arg(long, default_value_t = 4)]
    keep_recent: usize,
    /// Recency baseline: compression target for older messages.
    #[arg(long, default_value_t = 20)]
    local_budget: usize,
    /// Config file (TOML or JSON) overriding engine defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    /// Transcript JSONL file; `script` events form the history.
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long, default_value_t = 286)]
    budget: usize,
    /// Query the history is scored against.
    #[arg(long)]
    query: String,
    /// Emit the table as JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Config file (TOML or JSON) overriding engine defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file to check.
    #[arg(long)]
    scenario: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<FocusConfig> {
    match path {
        Some(p) => FocusConfig::from_file(p),
        None => {
            let mut cfg = FocusConfig::default();
            cfg.apply_env()?;
            Ok(cfg)
        }
    }
}

fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    if let Some(s) = Scenario::bundled(name_or_path) {
        return Ok(s);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        return Scenario::load(path);
    }
    Err(AfmError::InvalidArg(format!(
        "unknown scenario {name_or_path:?}; use a bundled name (allergy, tax) or a file path"
    )))
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let methods = if args.method.is_empty() {
        vec![Method::Default, Method::Naive, Method::Recency, Method::Afm]
    } else {
        args.method.clone()
    };
    let options = BenchOptions {
        seeds: args.seeds,
        budget: args.budget,
        config: load_config(args.config.as_deref())?,
        ablations: AblationFlags {
            no_compression: args.no_compression,
            no_stubs: args.no_stubs,
            no_importance: args.no_importance,
        },
        keep_recent: args.keep_recent,
        local_budget: args.local_budget,
        offline: !args.live,
        out_dir: args.out.clone(),
        ..Default::default()
    };
    let gateway = if args.live {
        Some(Arc::new(HttpGateway::new(GatewayConfig::from_env())?) as Arc<dyn afm::gateway::Gateway>)
    } else {
        None
    };
    let results = run_benchmark(&scenario, &methods, &options, gateway)?;
    let summary = summarize(&results)?;

    println!(
        "{:<8} {:<10} {:>14} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "method", "scenario", "pass", "tokens", "full", "comp", "stub", "drop"
    );
    for row in &summary.rows {
        println!(
            "{:<8} {:<10} {:>14} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
            row.method.to_string(),
            row.scenario,
            row.pass_display(),
            row.mean_graded_turn_tokens,
            row.mean_full,
            row.mean_compressed,
            row.mean_stub,
            row.mean_dropped
        );
    }
    if let Some(dir) = &args.out {
        summary.write(dir)?;
        println!("wrote {} and {}", dir.join("summary.json").display(), dir.join("summary.csv").display());
    }
    Ok(())
}

fn cmd_explain(args: &ExplainArgs) -> Result<()> {
    let data = std::fs::read_to_string(&args.transcript)?;
    let mut manager = FocusManager::offline(load_config(args.config.as_deref())?)
        .with_classifier(Box::new(RulesClassifier::bundled()));
    for line in data.lines().filter(|l| !l.trim().is_empty()) {
        let event: TranscriptEvent = serde_json::from_str(line)?;
        if event.kind == "script" {
            manager.add_message(event.role, event.content);
        }
    }
    let rows = manager.explain(&args.query, args.budget)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(());
    }
    println!(
        "{:>4} {:>7} {:>7} {:<9} {:>7} {:<11} {:<11} {:>6}",
        "id", "sim", "recency", "label", "score", "intended", "achieved", "tokens"
    );
    for r in &rows {
        println!(
            "{:>4} {:>7.3} {:>7.3} {:<9} {:>7.3} {:<11} {:<11} {:>6}",
            r.id,
            r.sim,
            r.recency,
            r.label.to_string(),
            r.score,
            r.intended.to_string(),
            r.achieved.map(|f| f.to_string()).unwrap_or_else(|| "dropped".to_string()),
            r.tokens_spent
        );
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let scenario = Scenario::load(&args.scenario)?;
    println!(
        "ok: scenario {:?} with {} turns (graded turn at index {})",
        scenario.name,
        scenario.turns.len(),
        scenario.graded_index()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bench(args) => cmd_bench(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (AfmError::InvalidArg(_) | AfmError::Json(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
