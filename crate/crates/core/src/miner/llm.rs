//! Language-model mining backend.
//!
//! Effects are described first from the model's own knowledge, then refined
//! batch by batch against successful records. Preconditions are seeded from
//! that description and refined against all records. The final answers are
//! read back with the `Requires …` grammar; answers that do not parse are kept
//! as text only.

use crate::llm::templates::{MINING_SYSTEM, MINING_USER_A, MINING_USER_B, PRECONDITION_REFINE, PRECONDITION_SEED};
use crate::llm::{ChatMessage, ChatModel};
use crate::records::{Record, RecordSet};

use super::{parse_effects, parse_requires, ExperienceSource, ExperienceText, MineError, MiningOutcome, ObjectiveExperience};

#[derive(Debug, Clone)]
pub struct LlmMinerConfig {
    pub batch_size: usize,
    pub aspect: String,
}

impl Default for LlmMinerConfig {
    fn default() -> Self {
        LlmMinerConfig { batch_size: 5, aspect: "attributes, tools, materials, face, nearby".into() }
    }
}

fn render_record(r: &Record, with_label: bool) -> String {
    let pretty = |s| serde_json::to_string_pretty(s).expect("state serializes");
    let mut out = format!(
        "action: {}\n\ninit_state:\n{}\n\nresulting_state:\n{}\n",
        r.action,
        pretty(&r.init_state),
        pretty(&r.resulting_state)
    );
    if with_label {
        out.push_str(&format!("\nvalid: {}\n", r.valid));
    }
    out
}

fn render_batch(batch: &[&Record], with_label: bool) -> String {
    batch.iter().map(|r| render_record(r, with_label)).collect::<Vec<_>>().join("\n")
}

fn first_line(text: &str) -> String {
    text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("").to_string()
}

pub fn mine_with_llm(records: &RecordSet, model: &dyn ChatModel, config: &LlmMinerConfig) -> MiningOutcome {
    let mut outcome = MiningOutcome::default();
    let system = MINING_SYSTEM.render(&[]).expect("no slots");
    let batch = config.batch_size.max(1);
    for (objective, recs) in records.by_objective() {
        let action = objective.name();
        let fail = |message: String| MineError::Backend { objective, message };
        let result = (|| -> Result<ObjectiveExperience, MineError> {
            let successes: Vec<&Record> = recs.iter().copied().filter(|r| r.valid).collect();
            if successes.is_empty() {
                return Err(MineError::NoSuccesses(objective));
            }
            let ask = |messages: Vec<ChatMessage>| model.complete(&messages).map(|t| t.trim().to_string()).map_err(|e| fail(e.to_string()));
            let user_a = MINING_USER_A.render(&[("action_name", action), ("aspect", &config.aspect)]).map_err(|e| fail(e.to_string()))?;
            let mut effects = ask(vec![ChatMessage::system(&system), ChatMessage::user(user_a)])?;
            for chunk in successes.chunks(batch) {
                let user_b = MINING_USER_B
                    .render(&[("aspect", &config.aspect), ("action_name", action), ("records", &render_batch(chunk, false))])
                    .map_err(|e| fail(e.to_string()))?;
                effects = ask(vec![ChatMessage::system(&system), ChatMessage::assistant(&effects), ChatMessage::user(user_b)])?;
            }
            let seed = PRECONDITION_SEED.render(&[("action_name", action), ("effects", &effects)]).map_err(|e| fail(e.to_string()))?;
            let mut pre = ask(vec![ChatMessage::system(&system), ChatMessage::user(seed)])?;
            for chunk in recs.chunks(batch) {
                let refine = PRECONDITION_REFINE
                    .render(&[("action_name", action), ("preconditions", &pre), ("records", &render_batch(chunk, true))])
                    .map_err(|e| fail(e.to_string()))?;
                pre = ask(vec![ChatMessage::system(&system), ChatMessage::assistant(&pre), ChatMessage::user(refine)])?;
            }
            let (costs, benefits) = parse_effects(&effects);
            let preconditions = match parse_requires(&pre) {
                Ok(p) => Some(p),
                Err(e) => {
                    tracing::warn!(%objective, error = %e, "preconditions kept as text only");
                    None
                }
            };
            Ok(ObjectiveExperience {
                objective,
                source: ExperienceSource::Llm,
                costs,
                benefits,
                preconditions,
                tied_effects: Vec::new(),
                text: ExperienceText { preconditions: first_line(&pre), effects: first_line(&effects) },
            })
        })();
        match result {
            Ok(entry) => outcome.experience.insert(entry),
            Err(e) => {
                outcome.errors.insert(objective, e);
            }
        }
    }
    outcome
}
