use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Result;
use clap::{Parser, Subcommand};
use lawcraft_cli::{
    collect, compare, compile, evaluate, mine, train, AgentKind, CollectArgs, CompareArgs, CompareConfig, EvalArgs, MineBackend, Settings,
    TrainArgs,
};
use lawcraft_core::collect::Diversity;
use lawcraft_core::eval::comparison_table;
use lawcraft_core::llm::{GatewayConfig, DEFAULT_KEY_ENV};
use lawcraft_core::rewardgen::{CompileBackend, Preset};
use lawcraft_service::ServiceConfig;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "lawcraft", version, about = "Collect records, mine experience, compile rewards, train and evaluate agents.")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "artifacts")]
    out_dir: PathBuf,
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Base URL of an OpenAI-compatible endpoint.
    #[arg(long, global = true)]
    llm_base_url: Option<String>,
    #[arg(long, global = true)]
    llm_model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, global = true, default_value = DEFAULT_KEY_ENV)]
    llm_key_env: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve interactive play sessions over HTTP and WebSocket.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value_t = 64)]
        max_sessions: usize,
        #[arg(long, default_value_t = 1800)]
        idle_timeout_secs: u64,
    },
    /// Generate interaction records with the scripted demonstrator.
    Collect {
        #[arg(long, default_value_t = 10)]
        per_objective_success: usize,
        #[arg(long, default_value_t = 10)]
        per_objective_fail: usize,
        #[arg(long, default_value = "max")]
        diversity: Diversity,
    },
    /// Mine experience from records.jsonl.
    Mine {
        #[arg(long, default_value = "symbolic")]
        backend: MineBackend,
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Compile experience.json into reward predicates.
    Compile {
        #[arg(long, default_value = "interpret")]
        backend: CompileBackend,
        #[arg(long, default_value_t = 1)]
        iterations: u32,
        #[arg(long)]
        experience: Option<PathBuf>,
    },
    /// Train a policy with a shaped reward.
    Train {
        #[arg(long, default_value = "health_achievement_penalty")]
        reward_preset: Preset,
        #[arg(long, default_value_t = 300_000)]
        steps: u64,
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long)]
        predicates: Option<PathBuf>,
    },
    /// Evaluate an agent over seeded episodes.
    Eval {
        #[arg(long, default_value = "policy")]
        agent: AgentKind,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        experience: Option<PathBuf>,
    },
    /// Train or run several configurations under matched seeds and tabulate scores.
    #[command(alias = "report")]
    Compare {
        /// Reward presets and/or fixed agents (random, noop, planner).
        #[arg(long, value_delimiter = ',', default_value = "health_only,health_achievement,health_achievement_penalty")]
        configs: Vec<CompareConfig>,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 300_000)]
        steps: u64,
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut llm = GatewayConfig { api_key_env: cli.llm_key_env.clone(), ..GatewayConfig::default() };
    if let Some(url) = cli.llm_base_url {
        llm.base_url = url;
    }
    if let Some(model) = cli.llm_model {
        llm.model = model;
    }
    let ctx = Settings { seed: cli.seed, out_dir: cli.out_dir, llm };
    match cli.command {
        Command::Serve { port, max_sessions, idle_timeout_secs } => {
            let config = ServiceConfig {
                max_sessions,
                idle_timeout: Duration::from_secs(idle_timeout_secs),
                spool_dir: Some(ctx.out_dir.join("spool")),
                ..ServiceConfig::default()
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(lawcraft_service::serve(SocketAddr::from(([127, 0, 0, 1], port)), config))?;
        }
        Command::Collect { per_objective_success, per_objective_fail, diversity } => {
            let records = collect(&ctx, &CollectArgs { successes: per_objective_success, failures: per_objective_fail, diversity })?;
            println!("{} records written to {}", records.len(), ctx.out_dir.display());
        }
        Command::Mine { backend, records } => {
            let exp = mine(&ctx, backend, records.as_deref())?;
            print!("{}", exp.to_text());
        }
        Command::Compile { backend, iterations, experience } => {
            let set = compile(&ctx, backend, iterations, experience.as_deref())?;
            println!("{} predicates written to {}", set.len(), ctx.out_dir.display());
        }
        Command::Train { reward_preset, steps, hidden, predicates } => {
            let args = TrainArgs { preset: reward_preset, steps, hidden, ..TrainArgs::default() };
            let policy = train(&ctx, &args, predicates.as_deref())?;
            println!("policy with {} parameters written to {}", policy.param_count(), ctx.out_dir.display());
        }
        Command::Eval { agent, episodes, policy, experience } => {
            let report = evaluate(&ctx, &EvalArgs { agent, episodes, policy, experience })?;
            for r in &report.rates {
                println!("{:<20} {:>3}/{:<3} {:.3}", r.objective.name(), r.successes, r.episodes, r.rate);
            }
            println!("score {:.3}", report.score);
        }
        Command::Compare { configs, runs, steps, hidden, episodes, jobs } => {
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            let rows = compare(&ctx, &CompareArgs { configs, runs, steps, hidden, episodes, jobs })?;
            print!("{}", comparison_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default = if cli.verbose { "debug" } else { "info" };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default)))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
