//! The survival gridworld.
//!
//! A step runs in two phases. Phase 1 applies the chosen action: movement, a
//! noop, or an objective attempt gated by the law table. An attempt whose
//! preconditions fail leaves the state exactly as a noop would and never
//! touches the random stream. Phase 2 advances the world clock: needs decay,
//! creatures act, zombies and skeletons spawn.

mod dynamics;
mod gen;
mod noise;

use std::collections::BTreeSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laws::{builtin_law_table, Attribute, Creature, Effect, FacedCell, ItemKind, Objective, Occupant, StateView, Texture};

pub use dynamics::DAY_LENGTH;
pub use gen::generate_world;

/// Version tag written into state snapshots.
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("map generation failed after {attempts} attempts")]
    GenerationFailed { attempts: u32 },
    #[error("episode is over (health {health}, step {step})")]
    EpisodeOver { health: u8, step: u64 },
    #[error("action {0} does not attempt an objective")]
    NotAnObjective(Action),
    #[error("unknown action name `{0}`")]
    UnknownAction(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// The 27 actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Noop,
    MoveLeft,
    MoveRight,
    MoveUp,
    MoveDown,
    EatPlant,
    DefeatZombie,
    DefeatSkeleton,
    EatCow,
    CollectCoal,
    CollectDiamond,
    CollectDrink,
    CollectIron,
    CollectSapling,
    CollectStone,
    CollectWood,
    Sleep,
    PlaceStone,
    PlaceTable,
    PlaceFurnace,
    PlacePlant,
    MakeWoodPickaxe,
    MakeStonePickaxe,
    MakeIronPickaxe,
    MakeWoodSword,
    MakeStoneSword,
    MakeIronSword,
}

impl Action {
    pub const COUNT: usize = 27;
    pub const ALL: [Action; 27] = [
        Action::Noop,
        Action::MoveLeft,
        Action::MoveRight,
        Action::MoveUp,
        Action::MoveDown,
        Action::EatPlant,
        Action::DefeatZombie,
        Action::DefeatSkeleton,
        Action::EatCow,
        Action::CollectCoal,
        Action::CollectDiamond,
        Action::CollectDrink,
        Action::CollectIron,
        Action::CollectSapling,
        Action::CollectStone,
        Action::CollectWood,
        Action::Sleep,
        Action::PlaceStone,
        Action::PlaceTable,
        Action::PlaceFurnace,
        Action::PlacePlant,
        Action::MakeWoodPickaxe,
        Action::MakeStonePickaxe,
        Action::MakeIronPickaxe,
        Action::MakeWoodSword,
        Action::MakeStoneSword,
        Action::MakeIronSword,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Noop => "noop",
            Action::MoveLeft => "move_left",
            Action::MoveRight => "move_right",
            Action::MoveUp => "move_up",
            Action::MoveDown => "move_down",
            Action::EatPlant => "eat_plant",
            Action::DefeatZombie => "defeat_zombie",
            Action::DefeatSkeleton => "defeat_skeleton",
            Action::EatCow => "eat_cow",
            Action::CollectCoal => "collect_coal",
            Action::CollectDiamond => "collect_diamond",
            Action::CollectDrink => "collect_drink",
            Action::CollectIron => "collect_iron",
            Action::CollectSapling => "collect_sapling",
            Action::CollectStone => "collect_stone",
            Action::CollectWood => "collect_wood",
            Action::Sleep => "sleep",
            Action::PlaceStone => "place_stone",
            Action::PlaceTable => "place_table",
            Action::PlaceFurnace => "place_furnace",
            Action::PlacePlant => "place_plant",
            Action::MakeWoodPickaxe => "make_wood_pickaxe",
            Action::MakeStonePickaxe => "make_stone_pickaxe",
            Action::MakeIronPickaxe => "make_iron_pickaxe",
            Action::MakeWoodSword => "make_wood_sword",
            Action::MakeStoneSword => "make_stone_sword",
            Action::MakeIronSword => "make_iron_sword",
        }
    }

    pub fn from_name(name: &str) -> Result<Action, WorldError> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| WorldError::UnknownAction(name.to_string()))
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::MoveLeft => Some(Direction::West),
            Action::MoveRight => Some(Direction::East),
            Action::MoveUp => Some(Direction::North),
            Action::MoveDown => Some(Direction::South),
            _ => None,
        }
    }

    pub fn objective(self) -> Option<Objective> {
        Objective::ALL.into_iter().find(|o| o.action() == self)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::South, Direction::East, Direction::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::South => (0, 1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }

    pub fn move_action(self) -> Action {
        match self {
            Direction::North => Action::MoveUp,
            Direction::South => Action::MoveDown,
            Direction::East => Action::MoveRight,
            Direction::West => Action::MoveLeft,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub fn new(x: i32, y: i32) -> Pos {
        Pos { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.delta();
        Pos { x: self.x + dx, y: self.y + dy }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos { x: self.x + dx, y: self.y + dy }
    }

    pub fn chebyshev(self, other: Pos) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

/// A non-player object on the map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatureInstance {
    pub kind: Creature,
    pub pos: Pos,
    #[serde(default)]
    pub cooldown: u32,
    /// Ticks since planting; only meaningful for plants.
    #[serde(default)]
    pub grown: u32,
}

impl CreatureInstance {
    pub fn new(kind: Creature, pos: Pos) -> CreatureInstance {
        CreatureInstance { kind, pos, cooldown: 0, grown: 0 }
    }

    pub fn occupant(&self) -> Occupant {
        match self.kind {
            Creature::Zombie => Occupant::Zombie,
            Creature::Skeleton => Occupant::Skeleton,
            Creature::Plant => Occupant::Plant { ripe: self.grown >= dynamics::PLANT_RIPE_TICKS },
            Creature::Cow => Occupant::Cow,
            Creature::Player => Occupant::Player { asleep: false },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub size: usize,
    pub step_limit: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig { size: 64, step_limit: 10_000 }
    }
}

/// Per-step counters driving need decay and health regeneration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedClocks {
    pub hunger: u32,
    pub thirst: u32,
    pub fatigue: u32,
    pub recover: u32,
    pub degen: u32,
}

/// Full world state. Cloneable and snapshot-able as JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    size: usize,
    grid: Vec<Texture>,
    creatures: Vec<CreatureInstance>,
    player: Pos,
    facing: Direction,
    attributes: [u8; 4],
    inventory: [u32; 12],
    sleeping: bool,
    clocks: NeedClocks,
    step_count: u64,
    step_limit: u64,
    unlocked: BTreeSet<Objective>,
    rng: ChaCha8Rng,
}

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub action: Action,
    /// The objective the action attempted, if any.
    pub objective: Option<Objective>,
    /// Preconditions held (objective actions) or the action took effect (others).
    pub valid: bool,
    /// The action was ignored because the player is asleep.
    pub suppressed: bool,
    /// Objective unlocked for the first time this episode.
    pub unlocked: Option<Objective>,
    pub attribute_deltas: [i32; 4],
    pub health_delta: i32,
    /// Native environment reward: 0.1 per health point plus 1 per new unlock.
    pub reward: f64,
    pub done: bool,
}

impl GameState {
    pub(crate) fn from_parts(size: usize, grid: Vec<Texture>, player: Pos, creatures: Vec<CreatureInstance>, config: &WorldConfig, seed: u64) -> GameState {
        GameState {
            size,
            grid,
            creatures,
            player,
            facing: Direction::South,
            attributes: [Attribute::MAX; 4],
            inventory: [0; 12],
            sleeping: false,
            clocks: NeedClocks::default(),
            step_count: 0,
            step_limit: config.step_limit,
            unlocked: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d1ce_0000_0001),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.x >= 0 && pos.y >= 0 && (pos.x as usize) < self.size && (pos.y as usize) < self.size
    }

    /// Texture at `pos`; out-of-map cells read as water.
    pub fn texture_at(&self, pos: Pos) -> Texture {
        if self.in_bounds(pos) {
            self.grid[pos.y as usize * self.size + pos.x as usize]
        } else {
            Texture::Water
        }
    }

    pub fn occupant_at(&self, pos: Pos) -> Option<Occupant> {
        if pos == self.player {
            return Some(Occupant::Player { asleep: self.sleeping });
        }
        self.creatures.iter().find(|c| c.pos == pos).map(|c| c.occupant())
    }

    pub fn creature_at(&self, pos: Pos) -> Option<&CreatureInstance> {
        self.creatures.iter().find(|c| c.pos == pos)
    }

    pub fn creatures(&self) -> &[CreatureInstance] {
        &self.creatures
    }

    pub fn player_pos(&self) -> Pos {
        self.player
    }

    pub fn facing(&self) -> Direction {
        self.facing
    }

    pub fn faced_pos(&self) -> Pos {
        self.player.step(self.facing)
    }

    pub fn attribute_value(&self, attribute: Attribute) -> u8 {
        self.attributes[attribute.index()]
    }

    pub fn inventory_count(&self, item: ItemKind) -> u32 {
        self.inventory[item.index()]
    }

    pub fn is_sleeping(&self) -> bool {
        self.sleeping
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn step_limit(&self) -> u64 {
        self.step_limit
    }

    pub fn unlocked(&self) -> &BTreeSet<Objective> {
        &self.unlocked
    }

    pub fn is_night(&self) -> bool {
        dynamics::is_night(self.step_count)
    }

    /// 1.0 during the day, 0.0 at night.
    pub fn daylight(&self) -> f64 {
        if self.is_night() {
            0.0
        } else {
            1.0
        }
    }

    pub fn is_done(&self) -> bool {
        self.attributes[Attribute::Health.index()] == 0 || self.step_count >= self.step_limit
    }

    /// A cell the player or a creature could move onto.
    pub fn is_free_walkable(&self, pos: Pos) -> bool {
        self.in_bounds(pos) && self.texture_at(pos).is_walkable() && self.occupant_at(pos).is_none()
    }

    // Scenario staging. These bypass the rules and are meant for building
    // demonstration states and tests.

    pub fn set_texture(&mut self, pos: Pos, texture: Texture) {
        if self.in_bounds(pos) {
            self.grid[pos.y as usize * self.size + pos.x as usize] = texture;
        }
    }

    pub fn set_count(&mut self, item: ItemKind, n: u32) {
        self.inventory[item.index()] = n;
    }

    pub fn clear_inventory(&mut self) {
        self.inventory = [0; 12];
    }

    pub fn set_attribute(&mut self, attribute: Attribute, value: u8) {
        self.attributes[attribute.index()] = value.min(Attribute::MAX);
    }

    pub fn set_facing(&mut self, facing: Direction) {
        self.facing = facing;
    }

    pub fn set_player_pos(&mut self, pos: Pos) {
        self.player = pos;
    }

    pub fn set_sleeping(&mut self, sleeping: bool) {
        self.sleeping = sleeping;
    }

    pub fn set_step_count(&mut self, step: u64) {
        self.step_count = step;
    }

    pub fn set_step_limit(&mut self, limit: u64) {
        self.step_limit = limit;
    }

    pub fn remove_creature_at(&mut self, pos: Pos) {
        self.creatures.retain(|c| c.pos != pos);
    }

    pub fn clear_creatures_within(&mut self, radius: i32) {
        let player = self.player;
        self.creatures.retain(|c| c.pos.chebyshev(player) > radius);
    }

    /// Places a creature, replacing any creature already there.
    pub fn spawn_creature(&mut self, kind: Creature, pos: Pos, ripe: bool) {
        self.remove_creature_at(pos);
        let mut c = CreatureInstance::new(kind, pos);
        if ripe {
            c.grown = dynamics::PLANT_RIPE_TICKS;
        }
        self.creatures.push(c);
    }

    /// Applies one law effect. Out-of-map faced cells are left untouched.
    pub(crate) fn apply_effect(&mut self, effect: &Effect) {
        let faced = self.faced_pos();
        match effect {
            Effect::Consume { item, n } => {
                let slot = &mut self.inventory[item.index()];
                *slot = slot.saturating_sub(*n);
            }
            Effect::Gain { item, n } => self.inventory[item.index()] += n,
            Effect::AttributeDelta { attribute, delta } => {
                let slot = &mut self.attributes[attribute.index()];
                *slot = (*slot as i32 + delta).clamp(0, Attribute::MAX as i32) as u8;
            }
            Effect::FaceBecomes { texture } => self.set_texture(faced, *texture),
            Effect::RemoveFacedCreature => self.remove_creature_at(faced),
            Effect::SpawnFacedCreature { creature } => {
                if self.in_bounds(faced) {
                    self.spawn_creature(*creature, faced, false)
                }
            }
            Effect::BeginSleep => self.sleeping = true,
        }
    }

    /// Phase 1. Returns (valid, suppressed).
    fn apply_action(&mut self, action: Action) -> (bool, bool) {
        if self.sleeping {
            return (false, true);
        }
        if let Some(dir) = action.direction() {
            self.facing = dir;
            let target = self.player.step(dir);
            if self.is_free_walkable(target) {
                self.player = target;
            }
            return (true, false);
        }
        let Some(law) = builtin_law_table().for_action(action) else {
            return (true, false);
        };
        if !law.check(self) {
            return (false, false);
        }
        for effect in law.effects() {
            self.apply_effect(effect);
        }
        (true, false)
    }

    /// Applies only the action phase. Exposed so gating can be compared
    /// against an explicit noop without the world clock interfering.
    pub fn apply_action_phase(&mut self, action: Action) -> bool {
        self.apply_action(action).0
    }

    /// Advances the world by one step.
    pub fn step(&mut self, action: Action) -> Result<StepInfo, WorldError> {
        if self.is_done() {
            return Err(WorldError::EpisodeOver {
                health: self.attribute_value(Attribute::Health),
                step: self.step_count,
            });
        }
        let before = self.attributes;
        let was_sleeping = self.sleeping;
        let (valid, suppressed) = self.apply_action(action);
        let objective = action.objective();
        let mut unlocked = None;
        if valid {
            if let Some(obj) = objective {
                if self.unlocked.insert(obj) {
                    unlocked = Some(obj);
                }
            }
        }
        dynamics::tick(self, was_sleeping);
        let mut attribute_deltas = [0i32; 4];
        for (i, d) in attribute_deltas.iter_mut().enumerate() {
            *d = self.attributes[i] as i32 - before[i] as i32;
        }
        let health_delta = attribute_deltas[Attribute::Health.index()];
        let reward = 0.1 * health_delta as f64 + if unlocked.is_some() { 1.0 } else { 0.0 };
        Ok(StepInfo {
            action,
            objective,
            valid,
            suppressed,
            unlocked,
            attribute_deltas,
            health_delta,
            reward,
            done: self.is_done(),
        })
    }

    /// The (2r+1)×(2r+1) neighbourhood around the player, row-major from the north-west.
    pub fn observe_local(&self, radius: i32) -> LocalView {
        let mut cells = Vec::with_capacity((2 * radius + 1) as usize);
        for dy in -radius..=radius {
            let mut row = Vec::with_capacity((2 * radius + 1) as usize);
            for dx in -radius..=radius {
                let pos = self.player.offset(dx, dy);
                row.push(self.cell_view(pos));
            }
            cells.push(row);
        }
        LocalView { cells, face: self.cell_view(self.faced_pos()) }
    }

    pub fn cell_view(&self, pos: Pos) -> CellView {
        if !self.in_bounds(pos) {
            return CellView { texture: Texture::Water, occupant: None };
        }
        CellView { texture: self.texture_at(pos), occupant: self.occupant_at(pos) }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&Snapshot::from_state(self)).expect("state serializes")
    }

    pub fn from_json(json: &str) -> Result<GameState, WorldError> {
        let snap: Snapshot = serde_json::from_str(json).map_err(|e| WorldError::Snapshot(e.to_string()))?;
        snap.into_state()
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub(crate) fn creatures_mut(&mut self) -> &mut Vec<CreatureInstance> {
        &mut self.creatures
    }

    pub(crate) fn attributes_mut(&mut self) -> &mut [u8; 4] {
        &mut self.attributes
    }

    pub(crate) fn clocks_mut(&mut self) -> &mut NeedClocks {
        &mut self.clocks
    }

    pub(crate) fn advance_clock(&mut self) {
        self.step_count += 1;
    }
}

impl StateView for GameState {
    fn count(&self, item: ItemKind) -> u32 {
        self.inventory_count(item)
    }

    fn attribute(&self, attribute: Attribute) -> u8 {
        self.attribute_value(attribute)
    }

    fn faced(&self) -> FacedCell {
        let pos = self.faced_pos();
        let view = self.cell_view(pos);
        FacedCell { texture: view.texture, occupant: view.occupant }
    }

    fn nearby_has_texture(&self, texture: Texture, radius: u32) -> bool {
        let r = radius as i32;
        (-r..=r).any(|dy| (-r..=r).any(|dx| self.cell_view(self.player.offset(dx, dy)).texture == texture))
    }
}

/// One rendered cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellView {
    pub texture: Texture,
    pub occupant: Option<Occupant>,
}

impl fmt::Display for CellView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.texture, self.occupant.map(|o| o.token()).unwrap_or(""))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalView {
    pub cells: Vec<Vec<CellView>>,
    pub face: CellView,
}

/// Whether `action` is legal in `state` under the builtin laws.
pub fn legality(state: &GameState, action: Action) -> Result<bool, WorldError> {
    let law = builtin_law_table().for_action(action).ok_or(WorldError::NotAnObjective(action))?;
    Ok(law.check(state))
}

pub fn observe_local(state: &GameState, radius: i32) -> LocalView {
    state.observe_local(radius)
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    size: usize,
    grid: Vec<String>,
    creatures: Vec<CreatureInstance>,
    player: Pos,
    facing: Direction,
    attributes: [u8; 4],
    inventory: std::collections::BTreeMap<ItemKind, u32>,
    sleeping: bool,
    clocks: NeedClocks,
    step_count: u64,
    step_limit: u64,
    unlocked: BTreeSet<Objective>,
    rng: ChaCha8Rng,
}

impl Snapshot {
    fn from_state(s: &GameState) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            size: s.size,
            grid: s.grid.chunks(s.size).map(|row| row.iter().map(|t| t.code()).collect()).collect(),
            creatures: s.creatures.clone(),
            player: s.player,
            facing: s.facing,
            attributes: s.attributes,
            inventory: ItemKind::ALL.into_iter().map(|i| (i, s.inventory[i.index()])).collect(),
            sleeping: s.sleeping,
            clocks: s.clocks.clone(),
            step_count: s.step_count,
            step_limit: s.step_limit,
            unlocked: s.unlocked.clone(),
            rng: s.rng.clone(),
        }
    }

    fn into_state(self) -> Result<GameState, WorldError> {
        if self.version != SNAPSHOT_VERSION {
            return Err(WorldError::Snapshot(format!("unsupported version {}", self.version)));
        }
        if self.grid.len() != self.size {
            return Err(WorldError::Snapshot(format!("expected {} rows, found {}", self.size, self.grid.len())));
        }
        let mut grid = Vec::with_capacity(self.size * self.size);
        for (y, row) in self.grid.iter().enumerate() {
            if row.chars().count() != self.size {
                return Err(WorldError::Snapshot(format!("row {y} has wrong width")));
            }
            for c in row.chars() {
                grid.push(Texture::from_code(c).ok_or_else(|| WorldError::Snapshot(format!("unknown texture code `{c}`")))?);
            }
        }
        let mut inventory = [0u32; 12];
        for (item, n) in self.inventory {
            inventory[item.index()] = n;
        }
        if self.attributes.iter().any(|&a| a > Attribute::MAX) {
            return Err(WorldError::Snapshot("attribute out of range".into()));
        }
        Ok(GameState {
            size: self.size,
            grid,
            creatures: self.creatures,
            player: self.player,
            facing: self.facing,
            attributes: self.attributes,
            inventory,
            sleeping: self.sleeping,
            clocks: self.clocks,
            step_count: self.step_count,
            step_limit: self.step_limit,
            unlocked: self.unlocked,
            rng: self.rng,
        })
    }
}
