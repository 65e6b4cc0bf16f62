//! Scripted demonstrator that stages attempts and logs records.
//!
//! Each attempt starts from a freshly generated world, rewrites the player's
//! 3×3 neighbourhood, inventory, attributes and facing, then takes one real
//! step through the world so the logged transition is produced by the game
//! itself. Creatures within four cells are cleared first so nothing else
//! moves into the logged neighbourhood during the step.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laws::{builtin_law_table, Attribute, Condition, Creature, ItemKind, Law, Objective, Texture};
use crate::records::{Record, RecordSet, RecordState};
use crate::world::{generate_world, Action, Direction, GameState, WorldConfig, WorldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diversity {
    /// Incidental features vary, and one success per objective holds exactly
    /// the required items and nothing else.
    Max,
    /// Incidental features are constant across an objective's successes.
    Low,
}

impl std::str::FromStr for Diversity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Diversity::Max),
            "low" => Ok(Diversity::Low),
            other => Err(format!("unknown diversity `{other}` (expected max or low)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub seed: u64,
    pub successes: usize,
    pub failures: usize,
    pub diversity: Diversity,
    pub objectives: Vec<Objective>,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            seed: 0,
            successes: 10,
            failures: 10,
            diversity: Diversity::Max,
            objectives: Objective::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("staged {objective} attempt #{index} came out {got} instead of {wanted}")]
    Staging { objective: Objective, index: usize, wanted: bool, got: bool },
}

/// Facing palette for laws that say nothing about the faced cell.
const INCIDENTAL_FACES: [Texture; 8] = [
    Texture::Grass,
    Texture::Sand,
    Texture::Path,
    Texture::Stone,
    Texture::Tree,
    Texture::Water,
    Texture::Coal,
    Texture::Iron,
];
const FILLER: [Texture; 5] = [Texture::Grass, Texture::Sand, Texture::Path, Texture::Tree, Texture::Stone];

/// Everything that is rewritten before an attempt.
#[derive(Debug, Clone)]
struct Scene {
    items: [u32; 12],
    attributes: [u8; 4],
    facing: Direction,
    face_texture: Texture,
    face_creature: Option<(Creature, bool)>,
    filler: [Texture; 9],
    nearby: BTreeSet<Texture>,
}

impl Scene {
    fn plain() -> Scene {
        Scene {
            items: [0; 12],
            attributes: [9, 3, 3, 9],
            facing: Direction::South,
            face_texture: Texture::Grass,
            face_creature: None,
            filler: [Texture::Grass; 9],
            nearby: BTreeSet::new(),
        }
    }

    fn stage(&self, base: &GameState) -> GameState {
        let mut s = base.clone();
        s.clear_creatures_within(4);
        let p = s.player_pos();
        let mut free = Vec::new();
        for (i, t) in self.filler.iter().enumerate() {
            let q = p.offset(i as i32 % 3 - 1, i as i32 / 3 - 1);
            s.set_texture(q, *t);
            if q != p && q != p.step(self.facing) {
                free.push(q);
            }
        }
        s.set_texture(p, Texture::Grass);
        for (t, q) in self.nearby.iter().zip(free) {
            s.set_texture(q, *t);
        }
        s.set_facing(self.facing);
        let f = p.step(self.facing);
        s.set_texture(f, self.face_texture);
        if let Some((kind, ripe)) = self.face_creature {
            s.spawn_creature(kind, f, ripe);
        }
        s.clear_inventory();
        for item in ItemKind::ALL {
            s.set_count(item, self.items[item.index()]);
        }
        for a in Attribute::ALL {
            s.set_attribute(a, self.attributes[a.index()]);
        }
        s.set_sleeping(false);
        s
    }
}

fn items_of(law: &Law) -> BTreeSet<ItemKind> {
    let mut out = BTreeSet::new();
    for c in &law.preconditions {
        match c {
            Condition::HasAtLeast { item, .. } => {
                out.insert(*item);
            }
            Condition::HasAnyOf { items } => out.extend(items.iter().copied()),
            _ => {}
        }
    }
    out
}

fn satisfy(scene: &mut Scene, law: &Law, variant: usize) {
    for c in &law.preconditions {
        match c {
            Condition::HasAtLeast { item, n } => scene.items[item.index()] = scene.items[item.index()].max(*n),
            Condition::HasAnyOf { items } => {
                let list: Vec<_> = items.iter().copied().collect();
                let pick = list[variant % list.len()];
                scene.items[pick.index()] = scene.items[pick.index()].max(1);
            }
            Condition::FacingTexture { allowed } => {
                let list: Vec<_> = allowed.iter().copied().collect();
                scene.face_texture = list[variant % list.len()];
                scene.face_creature = None;
            }
            Condition::FacingCreature { creature, ripe_required } => {
                scene.face_texture = Texture::Grass;
                scene.face_creature = Some((*creature, *ripe_required));
            }
            Condition::NearbyTexture { texture, .. } => {
                scene.nearby.insert(*texture);
            }
            Condition::AttributeBelow { attribute, threshold } => {
                let v = &mut scene.attributes[attribute.index()];
                if *v >= *threshold {
                    *v = threshold.saturating_sub(1);
                }
            }
        }
    }
}

fn violate(scene: &mut Scene, cond: &Condition, rng: &mut ChaCha8Rng) {
    match cond {
        Condition::HasAtLeast { item, n } => scene.items[item.index()] = rng.gen_range(0..*n),
        Condition::HasAnyOf { items } => {
            for i in items {
                scene.items[i.index()] = 0;
            }
        }
        Condition::FacingTexture { allowed } => {
            let outside: Vec<_> = INCIDENTAL_FACES.iter().copied().filter(|t| !allowed.contains(t)).collect();
            scene.face_texture = *outside.choose(rng).expect("palette is larger than any allowed set");
            scene.face_creature = None;
        }
        Condition::FacingCreature { creature, ripe_required } => {
            if *ripe_required && rng.gen_bool(0.5) {
                scene.face_creature = Some((*creature, false));
            } else if rng.gen_bool(0.5) {
                let other = if *creature == Creature::Cow { Creature::Plant } else { Creature::Cow };
                scene.face_creature = Some((other, false));
            } else {
                scene.face_creature = None;
                scene.face_texture = *[Texture::Grass, Texture::Sand, Texture::Path].choose(rng).unwrap();
            }
        }
        Condition::NearbyTexture { texture, .. } => {
            scene.nearby.remove(texture);
        }
        Condition::AttributeBelow { attribute, threshold } => {
            scene.attributes[attribute.index()] = rng.gen_range(*threshold..=Attribute::MAX);
        }
    }
}

fn has_facing_atom(law: &Law) -> bool {
    law.preconditions
        .iter()
        .any(|c| matches!(c, Condition::FacingTexture { .. } | Condition::FacingCreature { .. }))
}

/// Random incidental features that leave the law's own atoms untouched.
fn incidentals(scene: &mut Scene, law: &Law, rng: &mut ChaCha8Rng) {
    let guarded = items_of(law);
    let defeat = matches!(law.objective, Objective::DefeatZombie | Objective::DefeatSkeleton);
    for item in ItemKind::ALL {
        if guarded.contains(&item) {
            if !(defeat && ItemKind::SWORDS.contains(&item)) {
                scene.items[item.index()] += rng.gen_range(0..=2);
            }
        } else if !(defeat && ItemKind::SWORDS.contains(&item)) && rng.gen_bool(0.3) {
            scene.items[item.index()] = rng.gen_range(1..=3);
        }
    }
    scene.attributes = [rng.gen_range(1..=9), rng.gen_range(0..=9), rng.gen_range(0..=9), 9];
    scene.facing = Direction::ALL[rng.gen_range(0..4)];
    for t in scene.filler.iter_mut() {
        *t = *FILLER.choose(rng).unwrap();
    }
    if !has_facing_atom(law) {
        scene.face_texture = *INCIDENTAL_FACES.choose(rng).unwrap();
        scene.face_creature = None;
        if rng.gen_bool(0.2) {
            scene.face_texture = Texture::Grass;
            scene.face_creature = Some((Creature::Cow, false));
        }
    }
    for t in [Texture::Table, Texture::Furnace] {
        if rng.gen_bool(0.3) {
            scene.nearby.insert(t);
        }
    }
}

fn success_scene(law: &Law, k: usize, diversity: Diversity, template: &Scene, rng: &mut ChaCha8Rng) -> Scene {
    let mut scene = match diversity {
        Diversity::Low => template.clone(),
        Diversity::Max if k == 0 => {
            let mut s = Scene::plain();
            if !has_facing_atom(law) {
                s.face_creature = Some((Creature::Cow, false));
            }
            s
        }
        Diversity::Max => {
            let mut s = Scene::plain();
            incidentals(&mut s, law, rng);
            s
        }
    };
    if law.objective == Objective::Sleep {
        scene.attributes[Attribute::Energy.index()] = match (diversity, k) {
            (Diversity::Max, 0) => 8,
            (Diversity::Max, _) => rng.gen_range(0..=8),
            (Diversity::Low, _) => template.attributes[Attribute::Energy.index()],
        };
    }
    let variant = if diversity == Diversity::Low { 0 } else { k };
    satisfy(&mut scene, law, variant);
    scene
}

fn failure_scene(law: &Law, j: usize, diversity: Diversity, template: &Scene, rng: &mut ChaCha8Rng) -> Scene {
    let mut scene = match diversity {
        Diversity::Low => template.clone(),
        Diversity::Max => {
            let mut s = Scene::plain();
            incidentals(&mut s, law, rng);
            s
        }
    };
    satisfy(&mut scene, law, j);
    if j == 0 {
        for c in &law.preconditions {
            violate(&mut scene, c, rng);
        }
    } else {
        let c = &law.preconditions[(j - 1) % law.preconditions.len()];
        violate(&mut scene, c, rng);
    }
    scene
}

fn low_template(law: &Law, rng: &mut ChaCha8Rng) -> Scene {
    let mut s = Scene::plain();
    incidentals(&mut s, law, rng);
    if law.objective == Objective::Sleep {
        s.attributes[Attribute::Energy.index()] = rng.gen_range(0..=8);
    }
    s
}

fn attempt(base: &GameState, law: &Law, scene: &Scene, index: usize, wanted: bool) -> Result<Record, CollectError> {
    let mut s = scene.stage(base);
    let init_state = RecordState::from_game(&s);
    let info = s.step(law.action)?;
    if info.valid != wanted {
        return Err(CollectError::Staging { objective: law.objective, index, wanted, got: info.valid });
    }
    Ok(Record { action: law.action, init_state, resulting_state: RecordState::from_game(&s), valid: info.valid })
}

/// Produces the configured number of successes then failures per objective.
pub fn collect_records(config: &CollectConfig) -> Result<RecordSet, CollectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let table = builtin_law_table();
    let mut out = RecordSet::default();
    for &objective in &config.objectives {
        let law = table.get(objective);
        let base = generate_world(rng.gen(), &WorldConfig::default())?;
        let template = low_template(law, &mut rng);
        for k in 0..config.successes {
            let scene = success_scene(law, k, config.diversity, &template, &mut rng);
            out.push(attempt(&base, law, &scene, k, true)?);
        }
        for j in 0..config.failures {
            let scene = failure_scene(law, j, config.diversity, &template, &mut rng);
            out.push(attempt(&base, law, &scene, config.successes + j, false)?);
        }
    }
    Ok(out)
}

/// Draws varied game states for checking predicates against the world's own
/// legality: a short random walk from a generated world, then a rewrite of
/// inventory, attributes, the faced cell and the neighbourhood.
pub struct StateSampler {
    worlds: Vec<GameState>,
    rng: ChaCha8Rng,
}

impl StateSampler {
    pub fn new(seed: u64, worlds: usize) -> Result<StateSampler, CollectError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let worlds = (0..worlds.max(1)).map(|_| generate_world(rng.gen(), &WorldConfig::default())).collect::<Result<_, _>>()?;
        Ok(StateSampler { worlds, rng })
    }

    pub fn sample(&mut self) -> GameState {
        let rng = &mut self.rng;
        let mut s = self.worlds[rng.gen_range(0..self.worlds.len())].clone();
        for _ in 0..rng.gen_range(0..40) {
            let action = Action::from_index(rng.gen_range(0..Action::COUNT)).expect("index in range");
            if s.step(action).map_or(true, |info| info.done) {
                break;
            }
        }
        if s.is_done() {
            s.set_attribute(Attribute::Health, 9);
        }
        s.set_sleeping(false);
        if rng.gen_bool(0.8) {
            s.clear_inventory();
            for item in ItemKind::ALL {
                if rng.gen_bool(0.35) {
                    s.set_count(item, rng.gen_range(1..=4));
                }
            }
        }
        for a in Attribute::ALL {
            if rng.gen_bool(0.5) {
                s.set_attribute(a, rng.gen_range(if a == Attribute::Health { 1 } else { 0 }..=9));
            }
        }
        s.set_facing(Direction::ALL[rng.gen_range(0..4)]);
        let p = s.player_pos();
        let f = s.faced_pos();
        if rng.gen_bool(0.7) && s.in_bounds(f) {
            s.remove_creature_at(f);
            let t = Texture::ALL[rng.gen_range(0..Texture::ALL.len())];
            s.set_texture(f, t);
            if t.is_walkable() && rng.gen_bool(0.35) {
                let kind = [Creature::Zombie, Creature::Skeleton, Creature::Cow, Creature::Plant][rng.gen_range(0..4)];
                s.spawn_creature(kind, f, rng.gen_bool(0.5));
            }
        }
        for t in [Texture::Table, Texture::Furnace] {
            if rng.gen_bool(0.3) {
                let q = p.offset(rng.gen_range(-1..=1), rng.gen_range(-1..=1));
                if q != p && q != f && s.in_bounds(q) {
                    s.remove_creature_at(q);
                    s.set_texture(q, t);
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_collection_has_440_labelled_records() {
        let set = collect_records(&CollectConfig::default()).unwrap();
        assert_eq!(set.len(), 440);
        for objective in Objective::ALL {
            let (ok, bad) = set.partition(objective);
            assert_eq!((ok.len(), bad.len()), (10, 10), "{objective}");
        }
    }

    #[test]
    fn records_match_the_law_table() {
        let table = builtin_law_table();
        for diversity in [Diversity::Max, Diversity::Low] {
            let cfg = CollectConfig { seed: 9, diversity, ..CollectConfig::default() };
            for r in collect_records(&cfg).unwrap().records {
                assert_eq!(table.get(r.objective()).check(&r.init_state), r.valid);
            }
        }
    }
}
