//! Agents that act in the world: baselines, the learned policy, the
//! experience-driven planner and a language-model agent.

pub mod net;
pub mod obs;
pub mod planner;
pub mod ppo;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use tracing::warn;

use crate::llm::templates::{AGENT_INSTRUCTION, MINING_SYSTEM};
use crate::llm::{ChatMessage, ChatModel, LlmError};
use crate::miner::Experience;
use crate::records::render_text_observation;
use crate::world::{Action, GameState};

pub use net::{Adam, Architecture, NetError, Policy};
pub use planner::{Planner, PlannerAgent};
pub use ppo::{train, TrainConfig, TrainError, TrainLogRow, TrainOutcome};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("language model: {0}")]
    Llm(#[from] LlmError),
    #[error("policy: {0}")]
    Net(#[from] NetError),
}

pub trait Agent {
    fn name(&self) -> &str;
    /// Called at the start of every episode.
    fn reset(&mut self, seed: u64);
    fn act(&mut self, state: &GameState) -> Result<Action, AgentError>;
}

/// Uniformly random actions.
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new() -> RandomAgent {
        RandomAgent { rng: ChaCha8Rng::seed_from_u64(0) }
    }
}

impl Default for RandomAgent {
    fn default() -> Self {
        Self::new()
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a11);
    }

    fn act(&mut self, _state: &GameState) -> Result<Action, AgentError> {
        Ok(Action::ALL[self.rng.gen_range(0..Action::COUNT)])
    }
}

pub struct NoopAgent;

impl Agent for NoopAgent {
    fn name(&self) -> &str {
        "noop"
    }

    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, _state: &GameState) -> Result<Action, AgentError> {
        Ok(Action::Noop)
    }
}

/// Samples from a trained policy.
pub struct PolicyAgent {
    policy: Policy,
    rng: ChaCha8Rng,
}

impl PolicyAgent {
    pub fn new(policy: Policy) -> Result<PolicyAgent, AgentError> {
        let arch = policy.architecture;
        if arch.input != obs::OBS_DIM || arch.actions != Action::COUNT {
            return Err(NetError::Shape(format!("policy expects {} inputs and {} actions", arch.input, arch.actions)).into());
        }
        Ok(PolicyAgent { policy, rng: ChaCha8Rng::seed_from_u64(0) })
    }
}

impl Agent for PolicyAgent {
    fn name(&self) -> &str {
        "policy"
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0b5e_71ce);
    }

    fn act(&mut self, state: &GameState) -> Result<Action, AgentError> {
        let fwd = self.policy.forward(&obs::encode(state));
        let i = ppo::sample_action(&fwd.probs, &mut self.rng);
        Ok(Action::ALL[i])
    }
}

/// Finds the action named in a free-form reply. Accepts spaces or
/// underscores and any case; the earliest mention wins, longer names first
/// at the same position.
pub fn parse_action(reply: &str) -> Option<Action> {
    let norm: String = reply.to_lowercase().chars().map(|c| if c == ' ' || c == '-' { '_' } else { c }).collect();
    let mut best: Option<(usize, usize, Action)> = None;
    for a in Action::ALL {
        let name = a.name();
        let mut from = 0;
        while let Some(off) = norm[from..].find(name) {
            let at = from + off;
            let end = at + name.len();
            let bounded = |c: Option<char>| c.is_none_or(|c| !c.is_ascii_alphanumeric());
            if bounded(norm[..at].chars().next_back()) && bounded(norm[end..].chars().next()) {
                let better = match best {
                    None => true,
                    Some((pos, len, _)) => at < pos || (at == pos && name.len() > len),
                };
                if better {
                    best = Some((at, name.len(), a));
                }
                break;
            }
            from = at + 1;
        }
    }
    best.map(|(_, _, a)| a)
}

/// Prompts a chat model with the experience and a text observation.
pub struct LlmAgent {
    model: Arc<dyn ChatModel>,
    experience: Experience,
}

impl LlmAgent {
    pub fn new(model: Arc<dyn ChatModel>, experience: Experience) -> LlmAgent {
        LlmAgent { model, experience }
    }

    pub fn prompt(&self, state: &GameState) -> Vec<ChatMessage> {
        let system = MINING_SYSTEM.render(&[]).expect("no slots");
        let actions: Vec<&str> = Action::ALL.iter().map(|a| a.name()).collect();
        let instruction = AGENT_INSTRUCTION.render(&[("actions", &actions.join(", "))]).expect("slots filled");
        let user = format!("{}\n{}\n{}", self.experience.to_text(), render_text_observation(state), instruction);
        vec![ChatMessage::system(system), ChatMessage::user(user)]
    }
}

impl Agent for LlmAgent {
    fn name(&self) -> &str {
        "llm"
    }

    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, state: &GameState) -> Result<Action, AgentError> {
        let reply = self.model.complete(&self.prompt(state))?;
        Ok(parse_action(&reply).unwrap_or_else(|| {
            warn!(reply = %reply, "no action in reply; using noop");
            Action::Noop
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_loose_action_names() {
        assert_eq!(parse_action("I will Collect Wood now"), Some(Action::CollectWood));
        assert_eq!(parse_action("place_stone"), Some(Action::PlaceStone));
        assert_eq!(parse_action("make wood pickaxe, then make stone pickaxe"), Some(Action::MakeWoodPickaxe));
        assert_eq!(parse_action("hmm"), None);
        assert_eq!(parse_action("MOVE-LEFT"), Some(Action::MoveLeft));
    }
}
