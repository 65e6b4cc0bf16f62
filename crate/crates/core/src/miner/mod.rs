//! Experience mining from interaction records.
//!
//! For each objective the successful attempts are diffed to find what an
//! attempt costs and what it yields, and the successes are intersected to find
//! the most specific conjunction of atomic conditions they all share. Failed
//! attempts then prune atoms that could not have mattered.

mod effects;
pub mod llm;
mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laws::{Attribute, Condition, Effect, ItemKind, LawTable, Objective, StateView, Texture};
use crate::records::{Record, RecordSet};

pub use effects::{diff, effects_of, mine_costs_benefits, DiffSummary, MinedEffects};
pub use text::{parse_effects, parse_requires, render_effects, render_requires, TextError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MineError {
    #[error("no successful attempts for {0}")]
    NoSuccesses(Objective),
    #[error("inconsistent records for {objective}: failed attempt at record {record} satisfies every retained condition")]
    Inconsistent { objective: Objective, record: usize },
    #[error("language model backend failed for {objective}: {message}")]
    Backend { objective: Objective, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperienceSource {
    Symbolic,
    Llm,
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperienceText {
    pub preconditions: String,
    pub effects: String,
}

/// What was learned about one objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveExperience {
    pub objective: Objective,
    pub source: ExperienceSource,
    pub costs: Vec<Effect>,
    pub benefits: Vec<Effect>,
    /// `None` when a language-model description could not be read back
    /// into conditions; such entries exist as text only.
    pub preconditions: Option<Vec<Condition>>,
    /// Effects included on an exact 50% split of the successes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tied_effects: Vec<Effect>,
    pub text: ExperienceText,
}

impl ObjectiveExperience {
    pub fn new(objective: Objective, source: ExperienceSource, costs: Vec<Effect>, benefits: Vec<Effect>, preconditions: Vec<Condition>) -> Self {
        let text = ExperienceText { preconditions: render_requires(&preconditions), effects: render_effects(&costs, &benefits) };
        ObjectiveExperience { objective, source, costs, benefits, preconditions: Some(preconditions), tied_effects: Vec::new(), text }
    }

    pub fn line(&self) -> String {
        format!("{}. {}: {} {}", self.objective.index() + 1, self.objective.title(), self.text.preconditions, self.text.effects)
    }

    /// True when the mined preconditions hold in `state`. Text-only entries never hold.
    pub fn holds<S: StateView + ?Sized>(&self, state: &S) -> bool {
        match &self.preconditions {
            Some(conds) => conds.iter().all(|c| c.holds(state)),
            None => false,
        }
    }
}

/// The mined experience for every objective that had records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experience {
    pub entries: BTreeMap<Objective, ObjectiveExperience>,
}

impl Experience {
    pub fn get(&self, objective: Objective) -> Option<&ObjectiveExperience> {
        self.entries.get(&objective)
    }

    pub fn insert(&mut self, entry: ObjectiveExperience) {
        self.entries.insert(entry.objective, entry);
    }

    /// The experience a perfect miner would produce.
    pub fn from_laws(table: &LawTable) -> Experience {
        let mut e = Experience::default();
        for law in table.iter() {
            let mut pre = law.preconditions.clone();
            pre.sort();
            let mut costs = law.costs.clone();
            costs.sort();
            let mut benefits = law.benefits.clone();
            benefits.sort();
            e.insert(ObjectiveExperience::new(law.objective, ExperienceSource::GroundTruth, costs, benefits, pre));
        }
        e
    }

    /// One numbered line per objective, numbered by objective position.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for entry in self.entries.values() {
            out.push_str(&entry.line());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("experience serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Experience, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Mined experience plus the objectives that could not be mined.
#[derive(Debug, Clone, Default)]
pub struct MiningOutcome {
    pub experience: Experience,
    pub errors: BTreeMap<Objective, MineError>,
}

fn tool_families() -> [&'static [ItemKind]; 2] {
    [&ItemKind::SWORDS, &ItemKind::PICKAXES]
}

/// Candidate atoms true in every success. The bool marks atoms seeded from
/// consumed items, which failures may not prune.
fn candidates(successes: &[&Record], costs: &[Effect]) -> Vec<(Condition, bool)> {
    let states: Vec<_> = successes.iter().map(|r| &r.init_state).collect();
    let mut out: Vec<(Condition, bool)> = Vec::new();
    for item in ItemKind::ALL {
        let min = states.iter().map(|s| s.count(item)).min().unwrap_or(0);
        if min >= 1 {
            let seeded = costs.iter().any(|c| matches!(c, Effect::Consume { item: i, .. } if *i == item));
            out.push((Condition::HasAtLeast { item, n: min }, seeded));
        }
    }
    for family in tool_families() {
        if family.iter().any(|i| states.iter().all(|s| s.count(*i) >= 1)) {
            continue;
        }
        let hits = |set: &[ItemKind]| states.iter().all(|s| set.iter().any(|i| s.count(*i) >= 1));
        let n = family.len();
        let mut minimal: Vec<Vec<ItemKind>> = Vec::new();
        for mask in 1u32..(1 << n) {
            let set: Vec<ItemKind> = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| family[b]).collect();
            if set.len() < 2 || !hits(&set) {
                continue;
            }
            let reducible = (0..n).any(|b| {
                mask & (1 << b) != 0 && {
                    let sub: Vec<ItemKind> = (0..n).filter(|c| *c != b && mask & (1 << c) != 0).map(|c| family[c]).collect();
                    hits(&sub)
                }
            });
            if !reducible {
                minimal.push(set);
            }
        }
        for set in minimal {
            out.push((Condition::any_of(set), false));
        }
    }
    let faces: Vec<_> = states.iter().map(|s| s.faced()).collect();
    if faces.iter().all(|f| f.occupant.is_none()) {
        out.push((Condition::facing_textures(faces.iter().map(|f| f.texture)), false));
    } else if let Some(first) = faces[0].occupant {
        let kind = first.kind();
        if faces.iter().all(|f| f.occupant.map(|o| o.kind()) == Some(kind)) {
            let ripe_required = kind == crate::laws::Creature::Plant && faces.iter().all(|f| f.occupant.is_some_and(|o| o.is_ripe()));
            out.push((Condition::FacingCreature { creature: kind, ripe_required }, false));
        }
    }
    for t in [Texture::Table, Texture::Furnace] {
        if states.iter().all(|s| s.nearby_has_texture(t, 1)) {
            out.push((Condition::nearby(t), false));
        }
    }
    let max_energy = states.iter().map(|s| s.attribute(Attribute::Energy)).max().unwrap_or(Attribute::MAX);
    if max_energy < Attribute::MAX {
        out.push((Condition::AttributeBelow { attribute: Attribute::Energy, threshold: max_energy + 1 }, false));
    }
    out
}

/// Mines the preconditions of one objective from its records (successes and
/// failures together). `costs` are the mined costs, used to seed item atoms.
/// Record indices in errors are positions in `records`.
pub fn mine_preconditions(objective: Objective, records: &[&Record], costs: &[Effect]) -> Result<Vec<Condition>, MineError> {
    let successes: Vec<&Record> = records.iter().copied().filter(|r| r.valid).collect();
    if successes.is_empty() {
        return Err(MineError::NoSuccesses(objective));
    }
    let mut atoms = candidates(&successes, costs);
    let failures: Vec<(usize, &Record)> = records.iter().copied().enumerate().filter(|(_, r)| !r.valid).collect();
    if !failures.is_empty() {
        atoms.retain(|(atom, seeded)| *seeded || !failures.iter().all(|(_, f)| atom.holds(&f.init_state)));
    }
    for (index, f) in &failures {
        if atoms.iter().all(|(atom, _)| atom.holds(&f.init_state)) {
            return Err(MineError::Inconsistent { objective, record: *index });
        }
    }
    let mut conds: Vec<Condition> = atoms.into_iter().map(|(c, _)| c).collect();
    conds.sort();
    debug_assert!(successes.iter().all(|s| conds.iter().all(|c| c.holds(&s.init_state))));
    Ok(conds)
}

/// Runs the symbolic miner over every objective present in `records`.
/// Objectives that fail are reported and left out of the experience.
pub fn mine_symbolic(records: &RecordSet) -> MiningOutcome {
    let mut outcome = MiningOutcome::default();
    let mut groups: BTreeMap<Objective, Vec<(usize, &Record)>> = BTreeMap::new();
    for (i, r) in records.records.iter().enumerate() {
        groups.entry(r.objective()).or_default().push((i, r));
    }
    for (objective, group) in groups {
        let recs: Vec<&Record> = group.iter().map(|(_, r)| *r).collect();
        let successes: Vec<&Record> = recs.iter().copied().filter(|r| r.valid).collect();
        let mined = match mine_costs_benefits(objective, &successes) {
            Ok(m) => m,
            Err(e) => {
                outcome.errors.insert(objective, e);
                continue;
            }
        };
        match mine_preconditions(objective, &recs, &mined.costs) {
            Ok(pre) => {
                let mut entry = ObjectiveExperience::new(objective, ExperienceSource::Symbolic, mined.costs, mined.benefits, pre);
                entry.tied_effects = mined.tied;
                outcome.experience.insert(entry);
            }
            Err(MineError::Inconsistent { objective, record }) => {
                let line = group[record].0 + 1;
                tracing::warn!(%objective, line, "inconsistent records");
                outcome.errors.insert(objective, MineError::Inconsistent { objective, record: line });
            }
            Err(e) => {
                outcome.errors.insert(objective, e);
            }
        }
    }
    outcome
}
