//! Reward predicates compiled from experience, and shaped rewards built on them.
//!
//! A predicate answers "would this objective action succeed here?" for one
//! objective. The interpret backend evaluates mined conditions directly. The
//! language-model backend asks for a Python function, keeps the reply as an
//! artifact, and runs it through [`sandbox`] only if the sandbox accepts it on
//! a set of probe states; otherwise the objective falls back to the
//! interpreted conditions.

pub mod sandbox;

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laws::{Condition, LawTable, Objective, StateView};
use crate::llm::templates::{CODEGEN_REVISION, CODEGEN_SYSTEM, CODEGEN_USER};
use crate::llm::{ChatMessage, ChatModel};
use crate::miner::Experience;
use crate::records::RecordState;
use crate::world::{GameState, StepInfo};

pub use sandbox::{Program, SandboxError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("{0}: experience has no symbolic preconditions")]
    MissingSymbolic(Objective),
    #[error("{objective}: {message}")]
    Backend { objective: Objective, message: String },
    #[error("{objective}: stored source does not load: {source}")]
    Source { objective: Objective, source: SandboxError },
    #[error("predicate file: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SymbolicExperience,
    LlmGeneratedSource,
    GroundTruthLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileBackend {
    #[default]
    Interpret,
    Llm,
}

impl FromStr for CompileBackend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interpret" => Ok(CompileBackend::Interpret),
            "llm" => Ok(CompileBackend::Llm),
            other => Err(format!("unknown compile backend `{other}` (expected interpret or llm)")),
        }
    }
}

/// States a predicate can be evaluated on.
pub trait PredicateInput: StateView {
    /// The local description handed to generated programs.
    fn record_view(&self) -> Cow<'_, RecordState>;
}

impl PredicateInput for RecordState {
    fn record_view(&self) -> Cow<'_, RecordState> {
        Cow::Borrowed(self)
    }
}

impl PredicateInput for GameState {
    fn record_view(&self) -> Cow<'_, RecordState> {
        Cow::Owned(RecordState::from_game(self))
    }
}

/// The executable validity check for one objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledPredicate {
    pub objective: Objective,
    pub provenance: Provenance,
    /// The mined preconditions. They decide the predicate unless a program
    /// is attached, and always decide the unmet-penalty.
    pub conditions: Vec<Condition>,
    /// The model reply the program was extracted from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip)]
    program: Option<Program>,
}

impl PartialEq for CompiledPredicate {
    fn eq(&self, other: &Self) -> bool {
        self.objective == other.objective && self.provenance == other.provenance && self.conditions == other.conditions && self.source == other.source
    }
}

impl CompiledPredicate {
    pub fn from_conditions(objective: Objective, provenance: Provenance, conditions: Vec<Condition>) -> CompiledPredicate {
        CompiledPredicate { objective, provenance, conditions, source: None, program: None }
    }

    pub fn function_name(&self) -> String {
        format!("{}_reward", self.objective.name())
    }

    pub fn holds<S: PredicateInput + ?Sized>(&self, state: &S) -> bool {
        match &self.program {
            Some(program) => match program.call_predicate(&self.function_name(), &state.record_view()) {
                Ok(b) => b,
                Err(e) => {
                    tracing::debug!(objective = %self.objective, error = %e, "generated predicate failed; treated as false");
                    false
                }
            },
            None => self.conditions.iter().all(|c| c.holds(state)),
        }
    }

    /// True when the mined preconditions are non-empty and none of them hold.
    pub fn fully_unmet<S: StateView + ?Sized>(&self, state: &S) -> bool {
        !self.conditions.is_empty() && self.conditions.iter().all(|c| !c.holds(state))
    }

    pub fn has_program(&self) -> bool {
        self.program.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredicateSet {
    pub predicates: BTreeMap<Objective, CompiledPredicate>,
}

impl PredicateSet {
    pub fn from_laws(table: &LawTable) -> PredicateSet {
        let mut set = PredicateSet::default();
        for law in table.iter() {
            let mut conds = law.preconditions.clone();
            conds.sort();
            set.insert(CompiledPredicate::from_conditions(law.objective, Provenance::GroundTruthLaw, conds));
        }
        set
    }

    pub fn insert(&mut self, predicate: CompiledPredicate) {
        self.predicates.insert(predicate.objective, predicate);
    }

    pub fn get(&self, objective: Objective) -> Option<&CompiledPredicate> {
        self.predicates.get(&objective)
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("predicates serialize");
        s.push('\n');
        s
    }

    /// Loads a predicate file, re-parsing the source of generated predicates.
    pub fn from_json(json: &str) -> Result<PredicateSet, CompileError> {
        let mut set: PredicateSet = serde_json::from_str(json).map_err(|e| CompileError::Json(e.to_string()))?;
        for p in set.predicates.values_mut() {
            if p.provenance == Provenance::LlmGeneratedSource {
                let source = p.source.as_deref().ok_or(CompileError::Json(format!("{} has no source", p.objective)))?;
                let program = Program::parse(&extract_code(source)).map_err(|source| CompileError::Source { objective: p.objective, source })?;
                p.program = Some(program);
            }
        }
        Ok(set)
    }
}

/// Compiled predicates plus the objectives that could not be compiled.
#[derive(Debug, Clone, Default)]
pub struct CompileOutcome {
    pub predicates: PredicateSet,
    pub errors: BTreeMap<Objective, CompileError>,
    /// Objectives whose generated source was rejected, with the reason.
    pub fallbacks: BTreeMap<Objective, String>,
}

/// Interpret backend: the mined conditions are the predicate.
pub fn compile_interpret(experience: &Experience) -> CompileOutcome {
    let mut out = CompileOutcome::default();
    for (objective, entry) in &experience.entries {
        match &entry.preconditions {
            Some(conds) => out.predicates.insert(CompiledPredicate::from_conditions(*objective, Provenance::SymbolicExperience, conds.clone())),
            None => {
                out.errors.insert(*objective, CompileError::MissingSymbolic(*objective));
            }
        }
    }
    out
}

/// The code inside the first fenced block of a reply, or the whole reply.
pub fn extract_code(reply: &str) -> String {
    let Some(start) = reply.find("```") else {
        return reply.trim().to_string();
    };
    let after = &reply[start + 3..];
    let body = after.find('\n').map_or("", |i| &after[i + 1..]);
    let end = body.find("```").unwrap_or(body.len());
    body[..end].trim_end().to_string()
}

/// Parses generated source and dry-runs it on every probe state.
pub fn accept_source(objective: Objective, reply: &str, probes: &[RecordState]) -> Result<Program, SandboxError> {
    let program = Program::parse(&extract_code(reply))?;
    let name = format!("{}_reward", objective.name());
    if !program.has_function(&name) {
        return Err(SandboxError::MissingFunction(name));
    }
    for probe in probes {
        program.call_predicate(&name, probe)?;
    }
    Ok(program)
}

/// Language-model backend: `iterations` rounds of code generation per
/// objective, each fed the previous draft.
pub fn compile_llm(experience: &Experience, model: &dyn ChatModel, iterations: u32, probes: &[RecordState]) -> CompileOutcome {
    let mut out = CompileOutcome::default();
    let system = CODEGEN_SYSTEM.render(&[]).expect("no slots");
    for (objective, entry) in &experience.entries {
        let objective = *objective;
        let action = objective.name();
        let understanding = format!("{} {}", entry.text.preconditions, entry.text.effects);
        let request = CODEGEN_USER.render(&[("action_name", action), ("experience", &understanding), ("name", action)]).expect("slots filled");
        let mut draft: Option<String> = None;
        let mut failure = None;
        for _ in 0..iterations.max(1) {
            let mut user = request.clone();
            if let Some(prev) = &draft {
                user.push_str(&CODEGEN_REVISION.render(&[("draft", prev)]).expect("slots filled"));
            }
            match model.complete(&[ChatMessage::system(&system), ChatMessage::user(user)]) {
                Ok(reply) => draft = Some(reply),
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        let fallback = |out: &mut CompileOutcome, reason: String, source: Option<String>| match &entry.preconditions {
            Some(conds) => {
                tracing::warn!(%objective, %reason, "generated predicate rejected; using interpreted conditions");
                let mut p = CompiledPredicate::from_conditions(objective, Provenance::SymbolicExperience, conds.clone());
                p.source = source;
                out.predicates.insert(p);
                out.fallbacks.insert(objective, reason);
            }
            None => {
                out.errors.insert(objective, CompileError::Backend { objective, message: reason });
            }
        };
        let conditions = entry.preconditions.clone().unwrap_or_default();
        match (draft, failure) {
            (Some(reply), None) => match accept_source(objective, &reply, probes) {
                Ok(program) => out.predicates.insert(CompiledPredicate {
                    objective,
                    provenance: Provenance::LlmGeneratedSource,
                    conditions,
                    source: Some(reply),
                    program: Some(program),
                }),
                Err(e) => fallback(&mut out, e.to_string(), Some(reply)),
            },
            (draft, failure) => fallback(&mut out, failure.unwrap_or_else(|| "no reply".into()), draft),
        }
    }
    out
}

/// How the per-step training reward is composed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    pub health_enabled: bool,
    /// Reward per point of health change.
    pub health_coefficient: f64,
    pub achievement_enabled: bool,
    /// Paid on the first valid step of each objective in an episode.
    pub achievement_bonus: f64,
    pub penalty_enabled: bool,
    /// Added (it is negative) on the first fully-unmet attempt of each objective in an episode.
    pub penalty: f64,
    pub gamma: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ShapingError {
    #[error("unknown reward preset `{0}` (expected health_only, health_achievement or health_achievement_penalty)")]
    UnknownPreset(String),
    #[error("invalid shaping config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    HealthOnly,
    HealthAchievement,
    HealthAchievementPenalty,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::HealthOnly, Preset::HealthAchievement, Preset::HealthAchievementPenalty];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HealthOnly => "health_only",
            Preset::HealthAchievement => "health_achievement",
            Preset::HealthAchievementPenalty => "health_achievement_penalty",
        }
    }

    pub fn config(self) -> ShapingConfig {
        let base = ShapingConfig {
            health_enabled: true,
            health_coefficient: 0.1,
            achievement_enabled: false,
            achievement_bonus: 1.0,
            penalty_enabled: false,
            penalty: -0.5,
            gamma: 0.95,
            iterations: 1,
        };
        match self {
            Preset::HealthOnly => base,
            Preset::HealthAchievement => ShapingConfig { achievement_enabled: true, ..base },
            Preset::HealthAchievementPenalty => ShapingConfig { achievement_enabled: true, penalty_enabled: true, ..base },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ShapingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| ShapingError::UnknownPreset(s.to_string()))
    }
}

pub fn preset(name: &str) -> Result<ShapingConfig, ShapingError> {
    Ok(name.parse::<Preset>()?.config())
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<(), ShapingError> {
        let finite = [self.health_coefficient, self.achievement_bonus, self.penalty].iter().all(|x| x.is_finite());
        if !finite {
            return Err(ShapingError::Invalid("coefficients must be finite".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ShapingError::Invalid(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        Ok(())
    }
}

/// Which bonuses and penalties have been paid in the current episode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpisodeRewardMemo {
    bonus_paid: [bool; 22],
    penalty_paid: [bool; 22],
}

impl EpisodeRewardMemo {
    pub fn new() -> EpisodeRewardMemo {
        EpisodeRewardMemo::default()
    }

    pub fn reset(&mut self) {
        *self = EpisodeRewardMemo::default();
    }

    pub fn bonus_paid(&self, objective: Objective) -> bool {
        self.bonus_paid[objective.index()]
    }

    pub fn penalty_paid(&self, objective: Objective) -> bool {
        self.penalty_paid[objective.index()]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub health: f64,
    pub achievement: f64,
    pub penalty: f64,
    pub total: f64,
}

/// The shaped reward for one step. `before` is the state the action was
/// taken in. Steps swallowed by sleep earn only the health component.
pub fn shaped_reward<S: PredicateInput + ?Sized>(
    before: &S,
    info: &StepInfo,
    predicates: &PredicateSet,
    cfg: &ShapingConfig,
    memo: &mut EpisodeRewardMemo,
) -> RewardBreakdown {
    let mut r = RewardBreakdown::default();
    if cfg.health_enabled {
        r.health = cfg.health_coefficient * info.health_delta as f64;
    }
    if let (Some(objective), false) = (info.objective, info.suppressed) {
        if let Some(pred) = predicates.get(objective) {
            let i = objective.index();
            if cfg.achievement_enabled && !memo.bonus_paid[i] && pred.holds(before) {
                memo.bonus_paid[i] = true;
                r.achievement = cfg.achievement_bonus;
            }
            if cfg.penalty_enabled && !memo.penalty_paid[i] && pred.fully_unmet(before) {
                memo.penalty_paid[i] = true;
                r.penalty = cfg.penalty;
            }
        }
    }
    r.total = r.health + r.achievement + r.penalty;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{builtin_law_table, ItemKind, Texture};
    use crate::records::AttributeBlock;
    use crate::world::CellView;

    fn probe(face: Texture, items: &[(ItemKind, u32)]) -> RecordState {
        let cell = |t| CellView { texture: t, occupant: None };
        let mut nearby = [[cell(Texture::Grass); 3]; 3];
        nearby[1][1].occupant = Some(crate::laws::Occupant::Player { asleep: false });
        nearby[2][1] = cell(face);
        let mut s = RecordState {
            attributes: AttributeBlock { health: 9, food: 9, drink: 9, energy: 9 },
            tools: BTreeMap::new(),
            materials: BTreeMap::new(),
            face: cell(face),
            nearby,
        };
        for (i, n) in items {
            if i.is_tool() { s.tools.insert(*i, *n) } else { s.materials.insert(*i, *n) };
        }
        s
    }

    #[test]
    fn exact_predicates_answer_known_cases() {
        let set = compile_interpret(&Experience::from_laws(builtin_law_table())).predicates;
        assert!(set.get(Objective::CollectStone).unwrap().holds(&probe(Texture::Stone, &[(ItemKind::WoodPickaxe, 1)])));
        assert!(set.get(Objective::PlaceStone).unwrap().holds(&probe(Texture::Lava, &[(ItemKind::Stone, 1)])));
        assert!(!set.get(Objective::PlaceStone).unwrap().holds(&probe(Texture::Tree, &[(ItemKind::Stone, 1)])));
    }

    #[test]
    fn presets() {
        let h = preset("health_only").unwrap();
        assert!(!h.achievement_enabled && !h.penalty_enabled);
        let full = preset("health_achievement_penalty").unwrap();
        assert!(full.health_enabled && full.achievement_enabled && full.penalty_enabled);
        assert_eq!(preset("health_achievement").unwrap(), preset("health_achievement").unwrap());
        assert_eq!(preset("achievement"), Err(ShapingError::UnknownPreset("achievement".into())));
    }

    #[test]
    fn extracts_fenced_code() {
        let reply = "Here you go:\n```python\ndef f(agent, target):\n    return True\n```\nDone.";
        assert_eq!(extract_code(reply), "def f(agent, target):\n    return True");
        assert_eq!(extract_code("  def f(a, t): return 1 \n"), "def f(a, t): return 1");
    }

    #[test]
    fn predicate_json_round_trip_keeps_programs() {
        let reply = "def collect_wood_reward(agent, target):\n    texture, obj = agent.world[target]\n    return texture == 'tree'\n";
        let program = accept_source(Objective::CollectWood, reply, &[probe(Texture::Tree, &[])]).unwrap();
        let mut set = PredicateSet::default();
        set.insert(CompiledPredicate {
            objective: Objective::CollectWood,
            provenance: Provenance::LlmGeneratedSource,
            conditions: vec![Condition::facing_textures([Texture::Tree])],
            source: Some(reply.into()),
            program: Some(program),
        });
        let json = set.to_json();
        let back = PredicateSet::from_json(&json).unwrap();
        assert_eq!(back, set);
        assert!(back.get(Objective::CollectWood).unwrap().has_program());
        assert_eq!(back.to_json(), json);
    }
}
