//! Costs and benefits from before/after diffs of successful attempts.

use std::collections::BTreeMap;

use crate::laws::{Attribute, Effect, ItemKind, Objective, Occupant};
use crate::records::{Record, RecordState};
use crate::world::CellView;

use super::MineError;

/// Differences between the two sides of a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffSummary {
    pub item_deltas: BTreeMap<ItemKind, i64>,
    pub attribute_deltas: BTreeMap<Attribute, i32>,
    pub face_before: CellView,
    pub face_after: CellView,
    pub fell_asleep: bool,
}

pub fn diff(before: &RecordState, after: &RecordState) -> DiffSummary {
    let mut item_deltas = BTreeMap::new();
    for item in ItemKind::ALL {
        let d = after.count_of(item) as i64 - before.count_of(item) as i64;
        if d != 0 {
            item_deltas.insert(item, d);
        }
    }
    let mut attribute_deltas = BTreeMap::new();
    for a in Attribute::ALL {
        let d = after.attributes.get(a) as i32 - before.attributes.get(a) as i32;
        if d != 0 {
            attribute_deltas.insert(a, d);
        }
    }
    DiffSummary {
        item_deltas,
        attribute_deltas,
        face_before: before.face,
        face_after: after.face,
        fell_asleep: !before.is_asleep() && after.is_asleep(),
    }
}

/// Effects read off one diff, with magnitudes.
pub fn effects_of(d: &DiffSummary) -> Vec<Effect> {
    let mut out = Vec::new();
    for (&item, &delta) in &d.item_deltas {
        if delta < 0 {
            out.push(Effect::Consume { item, n: (-delta) as u32 });
        } else {
            out.push(Effect::Gain { item, n: delta as u32 });
        }
    }
    for (&attribute, &delta) in &d.attribute_deltas {
        out.push(Effect::AttributeDelta { attribute, delta });
    }
    if d.face_before.texture != d.face_after.texture {
        out.push(Effect::FaceBecomes { texture: d.face_after.texture });
    }
    let creature = |o: Option<Occupant>| o.filter(|o| !matches!(o, Occupant::Player { .. })).map(|o| o.kind());
    match (creature(d.face_before.occupant), creature(d.face_after.occupant)) {
        (Some(_), None) => out.push(Effect::RemoveFacedCreature),
        (None, Some(kind)) => out.push(Effect::SpawnFacedCreature { creature: kind }),
        _ => {}
    }
    if d.fell_asleep {
        out.push(Effect::BeginSleep);
    }
    out
}

/// Identity of an effect with its magnitude erased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EffectKey {
    Consume(ItemKind),
    Gain(ItemKind),
    Raise(Attribute),
    Lower(Attribute),
    Face(crate::laws::Texture),
    Remove,
    Spawn(crate::laws::Creature),
    Sleep,
}

fn key(e: &Effect) -> (EffectKey, i64) {
    match e {
        Effect::Consume { item, n } => (EffectKey::Consume(*item), *n as i64),
        Effect::Gain { item, n } => (EffectKey::Gain(*item), *n as i64),
        Effect::AttributeDelta { attribute, delta } if *delta > 0 => (EffectKey::Raise(*attribute), *delta as i64),
        Effect::AttributeDelta { attribute, delta } => (EffectKey::Lower(*attribute), *delta as i64),
        Effect::FaceBecomes { texture } => (EffectKey::Face(*texture), 0),
        Effect::RemoveFacedCreature => (EffectKey::Remove, 0),
        Effect::SpawnFacedCreature { creature } => (EffectKey::Spawn(*creature), 0),
        Effect::BeginSleep => (EffectKey::Sleep, 0),
    }
}

fn mode(values: &[i64]) -> i64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(*v).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by_key(|(v, c)| (*c, v.abs()))
        .map(|(v, _)| v)
        .unwrap_or(0)
}

fn rebuild(k: EffectKey, magnitudes: &[i64]) -> Effect {
    match k {
        EffectKey::Consume(item) => Effect::Consume { item, n: mode(magnitudes) as u32 },
        EffectKey::Gain(item) => Effect::Gain { item, n: mode(magnitudes) as u32 },
        // Clamping at the ceiling hides part of a gain, so the largest observed gain is the best estimate.
        EffectKey::Raise(attribute) => Effect::AttributeDelta { attribute, delta: *magnitudes.iter().max().unwrap() as i32 },
        EffectKey::Lower(attribute) => Effect::AttributeDelta { attribute, delta: mode(magnitudes) as i32 },
        EffectKey::Face(texture) => Effect::FaceBecomes { texture },
        EffectKey::Remove => Effect::RemoveFacedCreature,
        EffectKey::Spawn(creature) => Effect::SpawnFacedCreature { creature },
        EffectKey::Sleep => Effect::BeginSleep,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MinedEffects {
    pub costs: Vec<Effect>,
    pub benefits: Vec<Effect>,
    /// Effects seen in exactly half of the successes. They are included.
    pub tied: Vec<Effect>,
}

/// Keeps every effect observed in a strict majority of successes, plus ties.
pub fn mine_costs_benefits(objective: Objective, successes: &[&Record]) -> Result<MinedEffects, MineError> {
    if successes.is_empty() {
        return Err(MineError::NoSuccesses(objective));
    }
    let mut seen: BTreeMap<EffectKey, Vec<i64>> = BTreeMap::new();
    for r in successes {
        for e in effects_of(&diff(&r.init_state, &r.resulting_state)) {
            let (k, m) = key(&e);
            seen.entry(k).or_default().push(m);
        }
    }
    let n = successes.len();
    let mut out = MinedEffects::default();
    for (k, mags) in seen {
        if mags.len() * 2 < n {
            continue;
        }
        let effect = rebuild(k, &mags);
        if mags.len() * 2 == n {
            out.tied.push(effect.clone());
        }
        match k {
            EffectKey::Consume(_) | EffectKey::Lower(_) => out.costs.push(effect),
            _ => out.benefits.push(effect),
        }
    }
    out.costs.sort();
    out.benefits.sort();
    Ok(out)
}
