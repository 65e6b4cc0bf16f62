//! Pipeline steps behind the `lawcraft` command: each reads its inputs from
//! an artifact directory, writes its outputs there and records a run entry
//! in `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use lawcraft_core::agents::{Agent, LlmAgent, NoopAgent, PlannerAgent, Policy, PolicyAgent, RandomAgent, TrainConfig};
use lawcraft_core::collect::{collect_records, CollectConfig, Diversity};
use lawcraft_core::eval::{self, ComparisonRow, ConfigScores, EvalReport};
use lawcraft_core::llm::{ChatClient, ChatModel, GatewayConfig};
use lawcraft_core::miner::llm::{mine_with_llm, LlmMinerConfig};
use lawcraft_core::miner::{mine_symbolic, Experience};
use lawcraft_core::records::{write_atomic, RecordSet, RecordState};
use lawcraft_core::rewardgen::{compile_interpret, compile_llm, CompileBackend, PredicateSet, Preset};
use lawcraft_core::world::{generate_world, GameState, WorldConfig, WorldError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tracing::{info, warn};

pub const RECORDS: &str = "records.jsonl";
pub const EXPERIENCE: &str = "experience.json";
pub const EXPERIENCE_TEXT: &str = "experience.txt";
pub const PREDICATES: &str = "predicates.json";
pub const POLICY: &str = "policy.json";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const REPORT: &str = "report.csv";
pub const SUMMARY: &str = "summary.json";
pub const COMPARISON: &str = "compare.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input: expected {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{stage}: {count} objective(s) failed: {details}")]
    Partial { stage: &'static str, count: usize, details: String },
}

/// One subcommand invocation. Only `wall_clock` differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_clock: WallClock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

/// Run entries keyed by subcommand; a rerun replaces its entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub runs: BTreeMap<String, RunManifest>,
}

/// Shared settings from the global flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub llm: GatewayConfig,
}

struct Run<'a> {
    ctx: &'a Settings,
    subcommand: &'static str,
    started: Instant,
    started_unix_ms: u128,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    fn start(ctx: &'a Settings, subcommand: &'static str) -> Result<Run<'a>> {
        std::fs::create_dir_all(&ctx.out_dir).with_context(|| format!("creating {}", ctx.out_dir.display()))?;
        let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
        Ok(Run { ctx, subcommand, started: Instant::now(), started_unix_ms, inputs: Vec::new(), outputs: Vec::new() })
    }

    fn label(&self, path: &Path) -> String {
        path.strip_prefix(&self.ctx.out_dir).unwrap_or(path).display().to_string()
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        if !path.exists() {
            return Err(CliError::MissingInput(path.to_path_buf()).into());
        }
        self.inputs.push(self.label(path));
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }

    fn write(&mut self, name: &str, bytes: &str) -> Result<PathBuf> {
        let path = self.ctx.out_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_atomic(&path, bytes.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    fn finish(self, config: Value, seeds: Vec<u64>) -> Result<()> {
        let path = self.ctx.out_dir.join(MANIFEST);
        let mut manifest: Manifest = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            Err(_) => Manifest::default(),
        };
        let entry = RunManifest {
            subcommand: self.subcommand.to_string(),
            config,
            seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock: WallClock { started_unix_ms: self.started_unix_ms, elapsed_ms: self.started.elapsed().as_millis() },
        };
        manifest.runs.insert(self.subcommand.to_string(), entry);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(())
    }
}

fn input_path(ctx: &Settings, given: Option<&Path>, default: &str) -> PathBuf {
    given.map(Path::to_path_buf).unwrap_or_else(|| ctx.out_dir.join(default))
}

fn chat_model(ctx: &Settings) -> Result<Arc<dyn ChatModel>> {
    Ok(Arc::new(ChatClient::from_env(ctx.llm.clone())?))
}

#[derive(Debug, Clone, Serialize)]
pub struct CollectArgs {
    pub successes: usize,
    pub failures: usize,
    pub diversity: Diversity,
}

impl Default for CollectArgs {
    fn default() -> Self {
        CollectArgs { successes: 10, failures: 10, diversity: Diversity::Max }
    }
}

pub fn collect(ctx: &Settings, args: &CollectArgs) -> Result<RecordSet> {
    let mut run = Run::start(ctx, "collect")?;
    let config = CollectConfig { seed: ctx.seed, successes: args.successes, failures: args.failures, diversity: args.diversity, ..CollectConfig::default() };
    let records = collect_records(&config)?;
    run.write(RECORDS, &records.to_jsonl())?;
    info!(records = records.len(), "collected");
    run.finish(serde_json::to_value(args)?, vec![ctx.seed])?;
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MineBackend {
    Symbolic,
    Llm,
}

impl std::str::FromStr for MineBackend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "symbolic" => Ok(MineBackend::Symbolic),
            "llm" => Ok(MineBackend::Llm),
            other => Err(format!("unknown mining backend `{other}` (expected symbolic or llm)")),
        }
    }
}

pub fn mine(ctx: &Settings, backend: MineBackend, records: Option<&Path>) -> Result<Experience> {
    let mut run = Run::start(ctx, "mine")?;
    let path = input_path(ctx, records, RECORDS);
    let set = RecordSet::parse_jsonl(&run.read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
    let outcome = match backend {
        MineBackend::Symbolic => mine_symbolic(&set),
        MineBackend::Llm => mine_with_llm(&set, chat_model(ctx)?.as_ref(), &LlmMinerConfig::default()),
    };
    run.write(EXPERIENCE, &outcome.experience.to_json())?;
    run.write(EXPERIENCE_TEXT, &outcome.experience.to_text())?;
    run.finish(json!({ "backend": backend }), vec![])?;
    if !outcome.errors.is_empty() {
        let details = outcome.errors.values().map(|e| e.to_string()).collect::<Vec<_>>().join("; ");
        return Err(CliError::Partial { stage: "mine", count: outcome.errors.len(), details }.into());
    }
    Ok(outcome.experience)
}

pub fn compile(ctx: &Settings, backend: CompileBackend, iterations: u32, experience: Option<&Path>) -> Result<PredicateSet> {
    let mut run = Run::start(ctx, "compile")?;
    let path = input_path(ctx, experience, EXPERIENCE);
    let exp = Experience::from_json(&run.read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
    let outcome = match backend {
        CompileBackend::Interpret => compile_interpret(&exp),
        CompileBackend::Llm => {
            let records_path = ctx.out_dir.join(RECORDS);
            let probes: Vec<RecordState> = if records_path.exists() {
                RecordSet::parse_jsonl(&run.read(&records_path)?)?.records.into_iter().map(|r| r.init_state).collect()
            } else {
                warn!(path = %records_path.display(), "no records to probe generated code with");
                Vec::new()
            };
            compile_llm(&exp, chat_model(ctx)?.as_ref(), iterations, &probes)
        }
    };
    for (objective, reason) in &outcome.fallbacks {
        warn!(%objective, %reason, "generated source rejected; using the mined conditions");
    }
    for p in outcome.predicates.predicates.values() {
        if let Some(source) = &p.source {
            run.write(&format!("rewards/{}.txt", p.objective.name()), source)?;
        }
    }
    run.write(PREDICATES, &outcome.predicates.to_json())?;
    run.finish(json!({ "backend": backend, "iterations": iterations }), vec![])?;
    if !outcome.errors.is_empty() {
        let details = outcome.errors.values().map(|e| e.to_string()).collect::<Vec<_>>().join("; ");
        return Err(CliError::Partial { stage: "compile", count: outcome.errors.len(), details }.into());
    }
    Ok(outcome.predicates)
}

pub fn world_factory() -> impl Fn(u64) -> Result<GameState, WorldError> {
    |seed| generate_world(seed, &WorldConfig::default())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainArgs {
    pub preset: Preset,
    pub steps: u64,
    pub hidden: usize,
    pub rollout: usize,
}

impl Default for TrainArgs {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainArgs { preset: Preset::HealthAchievementPenalty, steps: d.total_steps, hidden: d.hidden, rollout: d.rollout }
    }
}

impl TrainArgs {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig { total_steps: self.steps, hidden: self.hidden, rollout: self.rollout, seed, ..TrainConfig::default() }
    }
}

pub fn train_policy(args: &TrainArgs, seed: u64, predicates: &PredicateSet) -> Result<lawcraft_core::agents::TrainOutcome> {
    let factory = world_factory();
    Ok(lawcraft_core::agents::train(&factory, &args.config(seed), &args.preset.config(), predicates, |row| {
        info!(step = row.step, mean_reward = row.mean_reward, unlocked = row.achievements_unlocked, "rollout")
    })?)
}

pub fn train(ctx: &Settings, args: &TrainArgs, predicates: Option<&Path>) -> Result<Policy> {
    let mut run = Run::start(ctx, "train")?;
    let path = input_path(ctx, predicates, PREDICATES);
    let preds = PredicateSet::from_json(&run.read(&path)?)?;
    let outcome = train_policy(args, ctx.seed, &preds)?;
    run.write(POLICY, &outcome.policy.to_json())?;
    run.write(TRAIN_LOG, &lawcraft_core::agents::ppo::log_to_csv(&outcome.log))?;
    let cfg = args.config(ctx.seed);
    run.finish(json!({ "preset": args.preset.name(), "shaping": args.preset.config(), "train": cfg }), vec![ctx.seed])?;
    Ok(outcome.policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Random,
    Noop,
    Planner,
    Policy,
    Llm,
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(AgentKind::Random),
            "noop" => Ok(AgentKind::Noop),
            "planner" => Ok(AgentKind::Planner),
            "policy" => Ok(AgentKind::Policy),
            "llm" => Ok(AgentKind::Llm),
            other => Err(format!("unknown agent `{other}` (expected random, noop, planner, policy or llm)")),
        }
    }
}

/// Episode seeds for evaluation run `seed`; identical across agents.
pub fn eval_seeds(seed: u64, episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|i| seed.wrapping_mul(100_000).wrapping_add(1_000_000 + i)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalArgs {
    pub agent: AgentKind,
    pub episodes: usize,
    pub policy: Option<PathBuf>,
    pub experience: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary<'a> {
    agent: &'a str,
    score: f64,
    episodes: usize,
    median_unlocked: f64,
    config: &'a EvalArgs,
    seeds: &'a [u64],
    unlocked_per_episode: Vec<usize>,
}

pub fn evaluate(ctx: &Settings, args: &EvalArgs) -> Result<EvalReport> {
    if args.episodes == 0 {
        bail!("--episodes must be at least 1");
    }
    let mut run = Run::start(ctx, "eval")?;
    let mut agent: Box<dyn Agent> = match args.agent {
        AgentKind::Random => Box::new(RandomAgent::new()),
        AgentKind::Noop => Box::new(NoopAgent),
        AgentKind::Planner => {
            let path = input_path(ctx, args.experience.as_deref(), EXPERIENCE);
            Box::new(PlannerAgent::new(Experience::from_json(&run.read(&path)?)?))
        }
        AgentKind::Policy => {
            let path = input_path(ctx, args.policy.as_deref(), POLICY);
            Box::new(PolicyAgent::new(Policy::from_json(&run.read(&path)?)?)?)
        }
        AgentKind::Llm => {
            let path = input_path(ctx, args.experience.as_deref(), EXPERIENCE);
            Box::new(LlmAgent::new(chat_model(ctx)?, Experience::from_json(&run.read(&path)?)?))
        }
    };
    let seeds = eval_seeds(ctx.seed, args.episodes);
    let report = eval::run_episodes(agent.as_mut(), &world_factory(), &seeds)?;
    run.write(REPORT, &report.to_csv())?;
    let summary = Summary {
        agent: &report.agent,
        score: report.score,
        episodes: report.episodes.len(),
        median_unlocked: report.median_unlock_count(),
        config: args,
        seeds: &seeds,
        unlocked_per_episode: report.episodes.iter().map(|e| e.unlocked.len()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    run.write(SUMMARY, &text)?;
    run.finish(serde_json::to_value(args)?, seeds.clone())?;
    Ok(report)
}

/// A row of a comparison: a reward preset (trained then evaluated) or a fixed agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum CompareConfig {
    Preset(Preset),
    Agent(AgentKind),
}

impl std::str::FromStr for CompareConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(p) = s.parse::<Preset>() {
            return Ok(CompareConfig::Preset(p));
        }
        match s.parse::<AgentKind>() {
            Ok(AgentKind::Policy) | Ok(AgentKind::Llm) | Err(_) => Err(format!("`{s}` is neither a reward preset nor random, noop or planner")),
            Ok(a) => Ok(CompareConfig::Agent(a)),
        }
    }
}

impl CompareConfig {
    pub fn name(&self) -> String {
        match self {
            CompareConfig::Preset(p) => p.name().to_string(),
            CompareConfig::Agent(a) => serde_json::to_value(a).unwrap().as_str().unwrap().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareArgs {
    pub configs: Vec<CompareConfig>,
    pub runs: usize,
    pub steps: u64,
    pub hidden: usize,
    pub episodes: usize,
    /// Worker threads; runs are independent and results do not depend on it.
    #[serde(skip)]
    pub jobs: usize,
}

/// One (configuration, run seed) cell of a comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CompareCell {
    pub config: String,
    pub seed: u64,
    pub score: Option<f64>,
    pub error: Option<String>,
}

fn run_cell(config: CompareConfig, seed: u64, args: &CompareArgs, predicates: &PredicateSet, experience: Option<&Experience>) -> Result<f64> {
    let seeds = eval_seeds(seed, args.episodes);
    let factory = world_factory();
    let mut agent: Box<dyn Agent> = match config {
        CompareConfig::Preset(preset) => {
            let t = TrainArgs { preset, steps: args.steps, hidden: args.hidden, ..TrainArgs::default() };
            Box::new(PolicyAgent::new(train_policy(&t, seed, predicates)?.policy)?)
        }
        CompareConfig::Agent(AgentKind::Random) => Box::new(RandomAgent::new()),
        CompareConfig::Agent(AgentKind::Noop) => Box::new(NoopAgent),
        CompareConfig::Agent(AgentKind::Planner) => Box::new(PlannerAgent::new(experience.context("planner needs experience")?.clone())),
        CompareConfig::Agent(other) => bail!("{other:?} cannot be compared offline"),
    };
    Ok(eval::run_episodes(agent.as_mut(), &factory, &seeds)?.score)
}

/// Trains and evaluates every configuration under the same run seeds.
pub fn compare_runs(seed: u64, args: &CompareArgs, predicates: &PredicateSet, experience: Option<&Experience>) -> Vec<CompareCell> {
    let jobs: Vec<(CompareConfig, u64)> =
        (0..args.runs as u64).flat_map(|k| args.configs.iter().map(move |c| (*c, seed + k))).collect();
    let results: Vec<std::sync::Mutex<Option<CompareCell>>> = jobs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.max(1).min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let Some(&(config, s)) = jobs.get(i) else { break };
                let cell = match run_cell(config, s, args, predicates, experience) {
                    Ok(score) => CompareCell { config: config.name(), seed: s, score: Some(score), error: None },
                    Err(e) => {
                        warn!(config = %config.name(), seed = s, error = %e, "comparison run failed");
                        CompareCell { config: config.name(), seed: s, score: None, error: Some(format!("{e:#}")) }
                    }
                };
                info!(config = %cell.config, seed = s, score = ?cell.score, "comparison run done");
                *results[i].lock().unwrap() = Some(cell);
            });
        }
    });
    results.into_iter().map(|m| m.into_inner().unwrap().expect("every job ran")).collect()
}

pub fn summarize(configs: &[CompareConfig], cells: &[CompareCell]) -> Result<Vec<ComparisonRow>> {
    let scores: Vec<ConfigScores> = configs
        .iter()
        .map(|c| {
            let name = c.name();
            let mine: Vec<&CompareCell> = cells.iter().filter(|x| x.config == name).collect();
            let scores = match mine.iter().find_map(|x| x.error.clone()) {
                Some(e) => Err(e),
                None => Ok(mine.iter().filter_map(|x| x.score).collect()),
            };
            ConfigScores { name, scores }
        })
        .collect();
    Ok(eval::compare(&scores)?)
}

pub fn compare(ctx: &Settings, args: &CompareArgs) -> Result<Vec<ComparisonRow>> {
    let mut run = Run::start(ctx, "compare")?;
    let needs_predicates = args.configs.iter().any(|c| matches!(c, CompareConfig::Preset(_)));
    let predicates = if needs_predicates {
        PredicateSet::from_json(&run.read(&ctx.out_dir.join(PREDICATES))?)?
    } else {
        PredicateSet::default()
    };
    let experience = if args.configs.contains(&CompareConfig::Agent(AgentKind::Planner)) {
        Some(Experience::from_json(&run.read(&ctx.out_dir.join(EXPERIENCE))?)?)
    } else {
        None
    };
    let cells = compare_runs(ctx.seed, args, &predicates, experience.as_ref());
    let rows = summarize(&args.configs, &cells)?;
    run.write(COMPARISON, &eval::comparison_csv(&rows))?;
    let seeds: Vec<u64> = (0..args.runs as u64).map(|k| ctx.seed + k).collect();
    run.finish(serde_json::to_value(args)?, seeds)?;
    Ok(rows)
}
