//! Episode running, per-objective success rates and the aggregate score.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::agents::Agent;
use crate::laws::Objective;
use crate::world::{GameState, WorldError};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("expected {expected} rates, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("rate {value} for {objective} is outside [0, 1]")]
    RateDomain { objective: usize, value: f64 },
    #[error("need at least one episode")]
    NoEpisodes,
    #[error("need at least two configurations to compare")]
    TooFewConfigs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub steps: u64,
    pub unlocked: BTreeSet<Objective>,
    pub total_reward: f64,
    /// Set when the agent or the world failed mid-episode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRate {
    pub objective: Objective,
    pub successes: usize,
    pub episodes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub agent: String,
    pub rates: Vec<ObjectiveRate>,
    pub score: f64,
    pub episodes: Vec<EpisodeResult>,
}

/// Aggregate score over 22 success rates in [0, 1]: the geometric mean of
/// `1 + 100·r` minus one.
pub fn score(rates: &[f64]) -> Result<f64, EvalError> {
    if rates.len() != Objective::COUNT {
        return Err(EvalError::RateCount { expected: Objective::COUNT, got: rates.len() });
    }
    if let Some((i, r)) = rates.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
        return Err(EvalError::RateDomain { objective: i, value: *r });
    }
    let mean = rates.iter().map(|r| (100.0 * r).ln_1p()).sum::<f64>() / rates.len() as f64;
    Ok(mean.exp() - 1.0)
}

/// Runs one episode to death or the step cap.
pub fn run_episode(agent: &mut dyn Agent, mut state: GameState, seed: u64) -> EpisodeResult {
    agent.reset(seed);
    let mut total_reward = 0.0;
    let mut failure = None;
    while !state.is_done() {
        let step = agent.act(&state).map_err(|e| e.to_string()).and_then(|a| state.step(a).map_err(|e| e.to_string()));
        match step {
            Ok(info) => total_reward += info.reward,
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    match failure {
        Some(e) => {
            warn!(seed, agent = agent.name(), error = %e, "episode failed; counted with no unlocks");
            EpisodeResult { seed, steps: state.step_count(), unlocked: BTreeSet::new(), total_reward, failure: Some(e) }
        }
        None => EpisodeResult { seed, steps: state.step_count(), unlocked: state.unlocked().clone(), total_reward, failure: None },
    }
}

pub fn report(agent: &str, episodes: Vec<EpisodeResult>) -> Result<EvalReport, EvalError> {
    if episodes.is_empty() {
        return Err(EvalError::NoEpisodes);
    }
    let n = episodes.len();
    let rates: Vec<ObjectiveRate> = Objective::ALL
        .iter()
        .map(|o| {
            let successes = episodes.iter().filter(|e| e.unlocked.contains(o)).count();
            ObjectiveRate { objective: *o, successes, episodes: n, rate: successes as f64 / n as f64 }
        })
        .collect();
    let score = score(&rates.iter().map(|r| r.rate).collect::<Vec<_>>())?;
    Ok(EvalReport { agent: agent.to_string(), rates, score, episodes })
}

/// Runs one episode per seed; a world that fails to build counts as a failed episode.
pub fn run_episodes(
    agent: &mut dyn Agent,
    env_factory: &dyn Fn(u64) -> Result<GameState, WorldError>,
    seeds: &[u64],
) -> Result<EvalReport, EvalError> {
    let mut episodes = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let result = match env_factory(seed) {
            Ok(state) => run_episode(agent, state, seed),
            Err(e) => {
                warn!(seed, error = %e, "world generation failed; counted with no unlocks");
                EpisodeResult { seed, steps: 0, unlocked: BTreeSet::new(), total_reward: 0.0, failure: Some(e.to_string()) }
            }
        };
        episodes.push(result);
    }
    report(agent.name(), episodes)
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("objective,successes,episodes,rate\n");
        for r in &self.rates {
            writeln!(out, "{},{},{},{}", r.objective.name(), r.successes, r.episodes, r.rate).unwrap();
        }
        out
    }

    /// Objectives unlocked in at least half of the episodes.
    pub fn median_unlocked(&self) -> BTreeSet<Objective> {
        let n = self.episodes.len();
        self.rates.iter().filter(|r| 2 * r.successes >= n).map(|r| r.objective).collect()
    }

    pub fn median_unlock_count(&self) -> f64 {
        median(&self.episodes.iter().map(|e| e.unlocked.len() as f64).collect::<Vec<_>>())
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Scores of one configuration across seeds, or why it could not be run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigScores {
    pub name: String,
    pub scores: Result<Vec<f64>, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub seeds: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub error: Option<String>,
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 { (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

/// Mean, sample standard deviation and median of each configuration's scores.
pub fn compare(configs: &[ConfigScores]) -> Result<Vec<ComparisonRow>, EvalError> {
    if configs.len() < 2 {
        return Err(EvalError::TooFewConfigs);
    }
    Ok(configs
        .iter()
        .map(|c| match &c.scores {
            Ok(s) if !s.is_empty() => {
                let (mean, sd) = mean_sd(s);
                ComparisonRow { name: c.name.clone(), seeds: s.len(), mean, sd, median: median(s), error: None }
            }
            Ok(_) => ComparisonRow { name: c.name.clone(), seeds: 0, mean: f64::NAN, sd: f64::NAN, median: f64::NAN, error: Some("no runs".into()) },
            Err(e) => ComparisonRow { name: c.name.clone(), seeds: 0, mean: f64::NAN, sd: f64::NAN, median: f64::NAN, error: Some(e.clone()) },
        })
        .collect())
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("config,seeds,mean,sd,median,error\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.name, r.seeds, r.mean, r.sd, r.median, r.error.as_deref().unwrap_or("")).unwrap();
    }
    out
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(6).max(6);
    let mut out = format!("{:width$}  {:>5}  {:>16}  {:>8}\n", "config", "seeds", "score", "median");
    for r in rows {
        match &r.error {
            Some(e) => writeln!(out, "{:width$}  failed: {e}", r.name).unwrap(),
            None => writeln!(out, "{:width$}  {:>5}  {:>7.3} ± {:>6.3}  {:>8.3}", r.name, r.seeds, r.mean, r.sd, r.median).unwrap(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_rejects_bad_input() {
        assert_eq!(score(&[0.0; 21]), Err(EvalError::RateCount { expected: 22, got: 21 }));
        let mut r = [0.0; 22];
        r[3] = 1.5;
        assert!(matches!(score(&r), Err(EvalError::RateDomain { objective: 3, .. })));
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn failed_configs_stay_in_the_table() {
        let rows = compare(&[
            ConfigScores { name: "a".into(), scores: Ok(vec![1.0, 3.0]) },
            ConfigScores { name: "b".into(), scores: Err("diverged".into()) },
        ])
        .unwrap();
        assert_eq!(rows[1].error.as_deref(), Some("diverged"));
        assert!(comparison_table(&rows).contains("failed: diverged"));
        assert_eq!(compare(&rows[..1].iter().map(|r| ConfigScores { name: r.name.clone(), scores: Ok(vec![]) }).collect::<Vec<_>>()), Err(EvalError::TooFewConfigs));
    }
}
