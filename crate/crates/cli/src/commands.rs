//! Command implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fraglearn_chem::io::{load_molecules, read_smiles_file, write_smiles_file};
use fraglearn_chem::Molecule;
use fraglearn_core::generator::{BatchRecord, BatchSidecar};
use fraglearn_core::membership::{load_classes, shipped_class, MembershipClass};
use fraglearn_core::session::write_json;
use fraglearn_core::{
    evaluate, generate_batch, mfr_score, FeedbackRecord, LoopMode, RoundStatus, RunConfig, RunState, Session, Strategy,
};

use crate::reasoner::build_reasoner;
use crate::settings::load_config;
use crate::UsageError;

#[derive(Debug, Parser)]
#[command(name = "fraglearn", version, about = "Fragment vocabulary learning and guided molecule generation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set qlearn.alpha=0.3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a fragment vocabulary and Q-table on a SMILES file.
    Train(TrainArgs),
    /// Generate molecules from a trained run.
    Generate(GenerateArgs),
    /// Score a generated SMILES file against a training set.
    Evaluate(EvaluateArgs),
    /// Open review rounds, or submit feedback to an open one.
    Round(RoundArgs),
    /// Serve the session wire API for a run directory.
    Serve(ServeArgs),
    /// List the learned fragments.
    InspectVocab(InspectArgs),
    /// Write a summary of a run: metrics, objective history and rounds.
    ExportReport(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training molecules, one SMILES per line.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value = "run", value_name = "DIR")]
    pub run_dir: PathBuf,
    /// Continue the run stored in the run directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Ran,
    Bal,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "run", value_name = "DIR")]
    pub run_dir: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    /// Output SMILES file; a JSON sidecar is written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long)]
    pub top_r: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub generated: PathBuf,
    #[arg(long = "train", value_name = "FILE")]
    pub training: PathBuf,
    /// Shipped class name or class file. Defaults to the shipped class named
    /// like the training file, if any.
    #[arg(long)]
    pub membership: Option<String>,
    #[arg(long)]
    pub json: bool,
}

fn parse_mode(s: &str) -> std::result::Result<LoopMode, String> {
    s.parse().map_err(|e: fraglearn_core::CoreError| e.to_string())
}

#[derive(Debug, Args)]
pub struct RoundArgs {
    #[arg(long, default_value = "run", value_name = "DIR")]
    pub run_dir: PathBuf,
    /// human-human, human-agent or agent-agent.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<LoopMode>,
    /// Rounds to open (agent-agent rounds close on their own).
    #[arg(long, default_value_t = 1)]
    pub rounds: u32,
    /// Submit this feedback record (JSON) instead of opening a round.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["skip", "approve"])]
    pub feedback: Option<PathBuf>,
    /// Target round for --feedback, --skip or --approve; defaults to the open round.
    #[arg(long = "round", value_name = "N")]
    pub number: Option<u32>,
    #[arg(long, conflicts_with = "approve")]
    pub skip: bool,
    /// Apply rules held back for approval.
    #[arg(long)]
    pub approve: bool,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "run", value_name = "DIR")]
    pub run_dir: PathBuf,
    #[arg(long, value_name = "ADDR")]
    pub bind: Option<String>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<LoopMode>,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, default_value = "run", value_name = "DIR")]
    pub run_dir: PathBuf,
    #[arg(long, default_value_t = 25)]
    pub top: usize,
    /// Include fragments not used in the latest epoch.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "run", value_name = "DIR")]
    pub run_dir: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
}

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Train(a) => train(g, a),
        Command::Generate(a) => generate(g, a),
        Command::Evaluate(a) => evaluate_cmd(g, a),
        Command::Round(a) => round(g, a),
        Command::Serve(a) => serve(g, a),
        Command::InspectVocab(a) => inspect_vocab(a),
        Command::ExportReport(a) => export_report(a),
    }
}

fn config_for(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = load_config(g.config.as_deref(), &g.overrides)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_dataset(path: &Path) -> Result<Vec<Molecule>> {
    let mols = load_molecules(path)?;
    if mols.is_empty() {
        bail!("{} holds no molecules", path.display());
    }
    Ok(mols)
}

fn dataset_of(cfg: &RunConfig, flag: Option<&Path>) -> Result<Vec<Molecule>> {
    match flag.or(cfg.data.train.as_deref()) {
        Some(p) => load_dataset(p),
        None => Err(UsageError("--data is required (or set data.train in the config)".into()).into()),
    }
}

/// Opens the session stored in `dir`, applying config overrides from flags.
fn open_session(g: &GlobalArgs, dir: &Path, data: Option<&Path>) -> Result<Session> {
    if !dir.join("session.json").is_file() {
        bail!("{} holds no run; start one with `fraglearn train --run-dir {}`", dir.display(), dir.display());
    }
    let stored = RunConfig::load(&dir.join("config.toml"))?;
    let path = data.map(Path::to_path_buf).or(stored.data.train.clone());
    let dataset = match &path {
        Some(p) => load_dataset(p)?,
        None => bail!("the run has no training data path; pass --data"),
    };
    let mut session = Session::load(dir, dataset)?;
    if let Some(p) = g.config.as_deref() {
        session.config = RunConfig::load(p)?;
    }
    session.config = crate::settings::apply_overrides(session.config.clone(), &g.overrides)?;
    session.config.data.train = path;
    let reasoner = build_reasoner(&session.config.tuning)?;
    Ok(session.with_reasoner(reasoner))
}

fn train(g: &GlobalArgs, a: TrainArgs) -> Result<()> {
    let mut session = if a.resume {
        open_session(g, &a.run_dir, a.data.as_deref())?
    } else {
        if a.run_dir.join("state.json").exists() {
            bail!("{} already holds a run; pass --resume to continue it", a.run_dir.display());
        }
        let mut cfg = config_for(g)?;
        if let Some(d) = &a.data {
            cfg.data.train = Some(d.clone());
        }
        let dataset = dataset_of(&cfg, None)?;
        if let Some(p) = cfg.data.train.as_mut() {
            *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display()))?;
        }
        cfg.validate()?;
        let state = RunState::new(&cfg)?;
        Session::new(cfg, dataset, state, LoopMode::default()).with_run_dir(&a.run_dir)
    };
    let epochs = a.epochs.unwrap_or(session.config.epochs);
    session.train(epochs)?;
    let s = session.summary();
    println!(
        "epoch {}: {} fragments, {} table entries, state {}",
        s.epoch,
        s.vocabulary,
        s.table_entries,
        &s.state_digest[..16]
    );
    println!("run written to {}", a.run_dir.display());
    Ok(())
}

fn generate(g: &GlobalArgs, a: GenerateArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.run_dir.join("config.toml"))?;
    let cfg = crate::settings::apply_overrides(cfg, &g.overrides)?;
    let state = RunState::restore(&a.run_dir.join("state.json"))?;
    let mut gen = cfg.generation;
    gen.rng_seed = g.seed.unwrap_or(cfg.seed);
    if let Some(n) = a.count {
        gen.batch_size = n;
    }
    if let Some(s) = a.strategy {
        gen.strategy = match s {
            StrategyArg::Ran => Strategy::Ran,
            StrategyArg::Bal => Strategy::Bal,
        };
    }
    if let Some(r) = a.top_r {
        gen.top_r = r;
    }
    if let Some(t) = a.temperature {
        gen.temperature = t;
    }
    gen.validate()?;
    let batch = generate_batch(&state.qtable, &state.active_fragments()?, &gen)?;
    let out = a.out.unwrap_or_else(|| a.run_dir.join("generated.smi"));
    let smiles: Vec<&str> = batch.iter().map(|m| m.smiles.as_str()).collect();
    write_smiles_file(&out, &smiles)?;
    let sidecar = BatchSidecar { seed: gen.rng_seed, strategy: gen.strategy, molecules: batch.iter().map(BatchRecord::from).collect() };
    write_json(&out.with_extension("json"), &sidecar)?;
    let distinct: std::collections::BTreeSet<&str> = smiles.iter().copied().collect();
    println!("{} molecules ({} distinct) written to {}", batch.len(), distinct.len(), out.display());
    Ok(())
}

fn membership_class(name: &str) -> Result<MembershipClass> {
    let path = Path::new(name);
    if path.is_file() {
        return load_classes(path)?.into_iter().next().context("class file defines no class");
    }
    shipped_class(name).ok_or_else(|| UsageError(format!("--membership: no shipped class or file named '{name}'")).into())
}

fn evaluate_cmd(g: &GlobalArgs, a: EvaluateArgs) -> Result<()> {
    let cfg = config_for(g)?;
    let generated = read_smiles_file(&a.generated)?;
    let training = load_dataset(&a.training)?;
    let class = match a.membership.as_deref().or(cfg.data.membership.as_deref()) {
        Some(name) => Some(membership_class(name)?),
        None => a.training.file_stem().and_then(|s| s.to_str()).and_then(shipped_class),
    };
    let provider = fraglearn_core::ProxyProvider::with_reference(&training);
    let report = evaluate(&generated, &training, &cfg.metrics, class.as_ref(), &provider)?;
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn round(g: &GlobalArgs, a: RoundArgs) -> Result<()> {
    let mut session = open_session(g, &a.run_dir, a.data.as_deref())?;
    if let Some(mode) = a.mode {
        session.mode = mode;
    }
    let target = |s: &Session| -> Result<u32> {
        match a.number.or(s.open_round().map(|r| r.number)) {
            Some(n) => Ok(n),
            None => bail!("no round is open; pass --round"),
        }
    };
    if let Some(path) = &a.feedback {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let record: FeedbackRecord = serde_json::from_str(&text).with_context(|| format!("{} is not a feedback record", path.display()))?;
        record.validate()?;
        let n = target(&session)?;
        let response = session.submit_feedback(n, record, None)?;
        println!("{}", serde_json::to_string_pretty(&response)?);
        return Ok(());
    }
    if a.skip {
        let n = target(&session)?;
        session.skip_round(n)?;
        println!("round {n} skipped");
        return Ok(());
    }
    if a.approve {
        let n = target(&session)?;
        let spec = session.approve_pending(n)?;
        println!("objective version {}", spec.version);
        return Ok(());
    }
    for _ in 0..a.rounds {
        let r = session.start_round(None)?;
        let status = match r.status {
            RoundStatus::Open => "open, awaiting feedback".to_string(),
            RoundStatus::Closed => format!("closed, objective v{} -> v{}", r.spec_version_before, r.spec_version_after.unwrap_or(r.spec_version_before)),
            RoundStatus::Skipped => "skipped (feedback insufficient)".to_string(),
        };
        println!(
            "round {}: {} generated, {} distinct, top-{} mean MW {:.1}; {status}",
            r.number,
            r.generated,
            r.distinct,
            r.top.len().min(50),
            r.mean_mw(50)
        );
    }
    println!("objective history: {} versions", session.kb.history.len());
    Ok(())
}

fn serve(g: &GlobalArgs, a: ServeArgs) -> Result<()> {
    let mut session = open_session(g, &a.run_dir, a.data.as_deref())?;
    if let Some(mode) = a.mode {
        session.mode = mode;
    }
    let bind = a.bind.unwrap_or_else(|| session.config.serve.bind.clone());
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::server::serve(session, &bind))
}

fn inspect_vocab(a: InspectArgs) -> Result<()> {
    let state = RunState::restore(&a.run_dir.join("state.json"))?;
    let fragments = if a.all { state.all_fragments()? } else { state.active_fragments()? };
    let mut rows: Vec<(String, usize, u64, usize, f64)> = fragments
        .iter()
        .map(|f| {
            let key = f.key().to_string();
            let count = state.vocabulary.get(&key).copied().unwrap_or(0);
            let links = state.qtable.entries_for(&key).count();
            (key, f.num_sites(), count, links, mfr_score(f, &state.qtable))
        })
        .collect();
    rows.sort_by(|x, y| y.4.total_cmp(&x.4).then_with(|| x.0.cmp(&y.0)));
    rows.truncate(a.top);
    if a.json {
        let json: Vec<_> = rows
            .iter()
            .map(|(k, s, c, l, q)| serde_json::json!({"fragment": k, "sites": s, "occurrences": c, "connections": l, "score": q}))
            .collect();
        println!("{}", serde_json::to_string_pretty(&json)?);
        return Ok(());
    }
    println!("{} fragments ({} seen overall), epoch {}", fragments.len(), state.vocabulary.len(), state.epoch);
    println!("{:>8}  {:>5}  {:>6}  {:>5}  fragment", "score", "sites", "seen", "links");
    for (k, s, c, l, q) in rows {
        println!("{q:>8.3}  {s:>5}  {c:>6}  {l:>5}  {k}");
    }
    Ok(())
}

fn export_report(a: ReportArgs) -> Result<()> {
    let dir = &a.run_dir;
    let state = RunState::restore(&dir.join("state.json"))?;
    let kb = fraglearn_core::KnowledgeBase::restore(&dir.join("kb.json"))?;
    let session: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("session.json")).with_context(|| format!("reading {}/session.json", dir.display()))?,
    )?;
    let rounds: Vec<fraglearn_core::Round> = serde_json::from_value(session["rounds"].clone())?;
    let text = match a.format {
        ReportFormat::Json => serde_json::to_string_pretty(&serde_json::json!({
            "epoch": state.epoch,
            "state_digest": state.digest(),
            "vocabulary": state.vocabulary.len(),
            "table_entries": state.qtable.len(),
            "objective": state.spec,
            "history": kb.history,
            "metrics": state.history,
            "rounds": rounds,
        }))?,
        ReportFormat::Markdown => markdown_report(&state, &kb, &rounds),
    };
    match &a.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn markdown_report(state: &RunState, kb: &fraglearn_core::KnowledgeBase, rounds: &[fraglearn_core::Round]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Run report\n");
    let _ = writeln!(out, "- epochs: {}", state.epoch);
    let _ = writeln!(out, "- fragments seen: {}", state.vocabulary.len());
    let _ = writeln!(out, "- table entries: {}", state.qtable.len());
    let _ = writeln!(out, "- objective version: {}", state.spec.version);
    let _ = writeln!(out, "- state digest: `{}`\n", state.digest());
    if let Some(m) = state.history.last() {
        let _ = writeln!(out, "## Last epoch\n");
        let _ = writeln!(
            out,
            "molecules {}, new fragments {}, mean cuts {:.2}, mean Q {:.3}, unique samples {}/{}, mean individual reward {:.3}, mean group reward {:.3}\n",
            m.molecules, m.new_fragments, m.mean_cuts, m.mean_q, m.unique_samples, m.samples, m.mean_individual, m.mean_group
        );
    }
    let _ = writeln!(out, "## Objective\n");
    let _ = writeln!(out, "| term | weight |\n|---|---|");
    for t in &state.spec.terms {
        let _ = writeln!(out, "| {} | {:.3} |", t.name, t.weight);
    }
    let _ = writeln!(out, "\n## Objective history\n");
    if kb.history.is_empty() {
        let _ = writeln!(out, "No changes.");
    }
    for h in &kb.history {
        let _ = writeln!(out, "- v{} (round {}, {}): {}", h.version, h.round, h.source, h.changes.join("; "));
    }
    let _ = writeln!(out, "\n## Rounds\n");
    let _ = writeln!(out, "| round | status | generated | distinct | top-50 MW | objective |\n|---|---|---|---|---|---|");
    for r in rounds {
        let after = r.spec_version_after.map_or("-".to_string(), |v| format!("v{v}"));
        let _ = writeln!(
            out,
            "| {} | {:?} | {} | {} | {:.1} | v{} -> {} |",
            r.number,
            r.status,
            r.generated,
            r.distinct,
            r.mean_mw(50),
            r.spec_version_before,
            after
        );
    }
    out
}
