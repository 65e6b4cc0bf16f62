//! Game vocabulary and the ground-truth law table.
//!
//! A law ties one objective to the action that attempts it, the atomic
//! preconditions that must all hold in the pre-step state, and the costs and
//! benefits applied when the attempt is legal. Conditions are evaluated
//! against anything implementing [`StateView`], so the same law can be
//! checked on a live [`crate::world::GameState`] or on a logged record state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Action, GameState};

/// Ground textures, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Texture {
    Water,
    Grass,
    Stone,
    Path,
    Sand,
    Tree,
    Lava,
    Coal,
    Iron,
    Diamond,
    Table,
    Furnace,
}

impl Texture {
    pub const ALL: [Texture; 12] = [
        Texture::Water,
        Texture::Grass,
        Texture::Stone,
        Texture::Path,
        Texture::Sand,
        Texture::Tree,
        Texture::Lava,
        Texture::Coal,
        Texture::Iron,
        Texture::Diamond,
        Texture::Table,
        Texture::Furnace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Texture::Water => "water",
            Texture::Grass => "grass",
            Texture::Stone => "stone",
            Texture::Path => "path",
            Texture::Sand => "sand",
            Texture::Tree => "tree",
            Texture::Lava => "lava",
            Texture::Coal => "coal",
            Texture::Iron => "iron",
            Texture::Diamond => "diamond",
            Texture::Table => "table",
            Texture::Furnace => "furnace",
        }
    }

    pub fn from_name(name: &str) -> Option<Texture> {
        Texture::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Textures a creature or the player can stand on.
    pub fn is_walkable(self) -> bool {
        matches!(self, Texture::Grass | Texture::Sand | Texture::Path)
    }

    /// Single-character code used by map snapshots.
    pub fn code(self) -> char {
        match self {
            Texture::Water => 'w',
            Texture::Grass => 'g',
            Texture::Stone => 's',
            Texture::Path => 'p',
            Texture::Sand => 'a',
            Texture::Tree => 't',
            Texture::Lava => 'l',
            Texture::Coal => 'c',
            Texture::Iron => 'i',
            Texture::Diamond => 'd',
            Texture::Table => 'T',
            Texture::Furnace => 'F',
        }
    }

    pub fn from_code(code: char) -> Option<Texture> {
        Texture::ALL.into_iter().find(|t| t.code() == code)
    }
}

impl fmt::Display for Texture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kinds of objects that can occupy a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Creature {
    Zombie,
    Skeleton,
    Plant,
    Cow,
    Player,
}

impl Creature {
    pub const ALL: [Creature; 5] = [
        Creature::Zombie,
        Creature::Skeleton,
        Creature::Plant,
        Creature::Cow,
        Creature::Player,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Creature::Zombie => "zombie",
            Creature::Skeleton => "skeleton",
            Creature::Plant => "plant",
            Creature::Cow => "cow",
            Creature::Player => "player",
        }
    }

    pub fn from_name(name: &str) -> Option<Creature> {
        Creature::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Creature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What occupies a cell, including the state bits that matter to laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Occupant {
    Zombie,
    Skeleton,
    Plant { ripe: bool },
    Cow,
    Player { asleep: bool },
}

impl Occupant {
    pub fn kind(self) -> Creature {
        match self {
            Occupant::Zombie => Creature::Zombie,
            Occupant::Skeleton => Creature::Skeleton,
            Occupant::Plant { .. } => Creature::Plant,
            Occupant::Cow => Creature::Cow,
            Occupant::Player { .. } => Creature::Player,
        }
    }

    pub fn is_ripe(self) -> bool {
        matches!(self, Occupant::Plant { ripe: true })
    }

    /// Token used inside the `texture(occupant)` cell grammar.
    pub fn token(self) -> &'static str {
        match self {
            Occupant::Zombie => "zombie",
            Occupant::Skeleton => "skeleton",
            Occupant::Plant { ripe: false } => "plant",
            Occupant::Plant { ripe: true } => "plant-ripe",
            Occupant::Cow => "cow",
            Occupant::Player { asleep: false } => "player",
            Occupant::Player { asleep: true } => "player-sleep",
        }
    }

    pub fn from_token(token: &str) -> Option<Occupant> {
        Some(match token {
            "zombie" => Occupant::Zombie,
            "skeleton" => Occupant::Skeleton,
            "plant" => Occupant::Plant { ripe: false },
            "plant-ripe" => Occupant::Plant { ripe: true },
            "cow" => Occupant::Cow,
            "player" => Occupant::Player { asleep: false },
            "player-sleep" => Occupant::Player { asleep: true },
            _ => return None,
        })
    }
}

/// Inventory items: materials first, then tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Wood,
    Stone,
    Coal,
    Iron,
    Diamond,
    Sapling,
    WoodPickaxe,
    StonePickaxe,
    IronPickaxe,
    WoodSword,
    StoneSword,
    IronSword,
}

impl ItemKind {
    pub const ALL: [ItemKind; 12] = [
        ItemKind::Wood,
        ItemKind::Stone,
        ItemKind::Coal,
        ItemKind::Iron,
        ItemKind::Diamond,
        ItemKind::Sapling,
        ItemKind::WoodPickaxe,
        ItemKind::StonePickaxe,
        ItemKind::IronPickaxe,
        ItemKind::WoodSword,
        ItemKind::StoneSword,
        ItemKind::IronSword,
    ];
    pub const SWORDS: [ItemKind; 3] = [ItemKind::WoodSword, ItemKind::StoneSword, ItemKind::IronSword];
    pub const PICKAXES: [ItemKind; 3] = [
        ItemKind::WoodPickaxe,
        ItemKind::StonePickaxe,
        ItemKind::IronPickaxe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ItemKind::Wood => "wood",
            ItemKind::Stone => "stone",
            ItemKind::Coal => "coal",
            ItemKind::Iron => "iron",
            ItemKind::Diamond => "diamond",
            ItemKind::Sapling => "sapling",
            ItemKind::WoodPickaxe => "wood_pickaxe",
            ItemKind::StonePickaxe => "stone_pickaxe",
            ItemKind::IronPickaxe => "iron_pickaxe",
            ItemKind::WoodSword => "wood_sword",
            ItemKind::StoneSword => "stone_sword",
            ItemKind::IronSword => "iron_sword",
        }
    }

    pub fn from_name(name: &str) -> Option<ItemKind> {
        ItemKind::ALL.into_iter().find(|i| i.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_tool(self) -> bool {
        self >= ItemKind::WoodPickaxe
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Health,
    Food,
    Drink,
    Energy,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [Attribute::Health, Attribute::Food, Attribute::Drink, Attribute::Energy];
    pub const MAX: u8 = 9;

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Health => "health",
            Attribute::Food => "food",
            Attribute::Drink => "drink",
            Attribute::Energy => "energy",
        }
    }

    pub fn from_name(name: &str) -> Option<Attribute> {
        Attribute::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 22 objectives, in the order used by experience listings and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    CollectWood,
    PlaceTable,
    EatCow,
    CollectSapling,
    CollectDrink,
    MakeWoodPickaxe,
    MakeWoodSword,
    PlacePlant,
    DefeatZombie,
    CollectStone,
    PlaceStone,
    EatPlant,
    DefeatSkeleton,
    MakeStonePickaxe,
    MakeStoneSword,
    Sleep,
    PlaceFurnace,
    CollectCoal,
    CollectIron,
    MakeIronPickaxe,
    MakeIronSword,
    CollectDiamond,
}

impl Objective {
    pub const COUNT: usize = 22;
    pub const ALL: [Objective; 22] = [
        Objective::CollectWood,
        Objective::PlaceTable,
        Objective::EatCow,
        Objective::CollectSapling,
        Objective::CollectDrink,
        Objective::MakeWoodPickaxe,
        Objective::MakeWoodSword,
        Objective::PlacePlant,
        Objective::DefeatZombie,
        Objective::CollectStone,
        Objective::PlaceStone,
        Objective::EatPlant,
        Objective::DefeatSkeleton,
        Objective::MakeStonePickaxe,
        Objective::MakeStoneSword,
        Objective::Sleep,
        Objective::PlaceFurnace,
        Objective::CollectCoal,
        Objective::CollectIron,
        Objective::MakeIronPickaxe,
        Objective::MakeIronSword,
        Objective::CollectDiamond,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        self.action().name()
    }

    pub fn from_name(name: &str) -> Option<Objective> {
        Objective::ALL.into_iter().find(|o| o.name() == name)
    }

    /// The action that attempts this objective.
    pub fn action(self) -> Action {
        match self {
            Objective::CollectWood => Action::CollectWood,
            Objective::PlaceTable => Action::PlaceTable,
            Objective::EatCow => Action::EatCow,
            Objective::CollectSapling => Action::CollectSapling,
            Objective::CollectDrink => Action::CollectDrink,
            Objective::MakeWoodPickaxe => Action::MakeWoodPickaxe,
            Objective::MakeWoodSword => Action::MakeWoodSword,
            Objective::PlacePlant => Action::PlacePlant,
            Objective::DefeatZombie => Action::DefeatZombie,
            Objective::CollectStone => Action::CollectStone,
            Objective::PlaceStone => Action::PlaceStone,
            Objective::EatPlant => Action::EatPlant,
            Objective::DefeatSkeleton => Action::DefeatSkeleton,
            Objective::MakeStonePickaxe => Action::MakeStonePickaxe,
            Objective::MakeStoneSword => Action::MakeStoneSword,
            Objective::Sleep => Action::Sleep,
            Objective::PlaceFurnace => Action::PlaceFurnace,
            Objective::CollectCoal => Action::CollectCoal,
            Objective::CollectIron => Action::CollectIron,
            Objective::MakeIronPickaxe => Action::MakeIronPickaxe,
            Objective::MakeIronSword => Action::MakeIronSword,
            Objective::CollectDiamond => Action::CollectDiamond,
        }
    }

    /// Human title, e.g. `Make Stone Pickaxe`.
    pub fn title(self) -> String {
        self.name()
            .split('_')
            .map(|w| {
                let mut c = w.chars();
                match c.next() {
                    Some(first) => first.to_uppercase().chain(c).collect::<String>(),
                    None => String::new(),
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The faced cell as seen by a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacedCell {
    pub texture: Texture,
    pub occupant: Option<Occupant>,
}

/// Read-only access to the parts of a state that conditions inspect.
pub trait StateView {
    fn count(&self, item: ItemKind) -> u32;
    fn attribute(&self, attribute: Attribute) -> u8;
    fn faced(&self) -> FacedCell;
    /// Whether `texture` appears within Chebyshev distance `radius` of the player.
    fn nearby_has_texture(&self, texture: Texture, radius: u32) -> bool;
}

/// One atomic precondition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    HasAtLeast { item: ItemKind, n: u32 },
    /// At least one of the listed items is held.
    HasAnyOf { items: BTreeSet<ItemKind> },
    /// The faced cell is free of creatures and its texture is in `allowed`.
    FacingTexture { allowed: BTreeSet<Texture> },
    FacingCreature { creature: Creature, ripe_required: bool },
    NearbyTexture { texture: Texture, radius: u32 },
    AttributeBelow { attribute: Attribute, threshold: u8 },
}

impl Condition {
    pub fn holds<S: StateView + ?Sized>(&self, state: &S) -> bool {
        match self {
            Condition::HasAtLeast { item, n } => state.count(*item) >= *n,
            Condition::HasAnyOf { items } => items.iter().any(|i| state.count(*i) >= 1),
            Condition::FacingTexture { allowed } => {
                let faced = state.faced();
                faced.occupant.is_none() && allowed.contains(&faced.texture)
            }
            Condition::FacingCreature { creature, ripe_required } => match state.faced().occupant {
                Some(occ) => occ.kind() == *creature && (!ripe_required || occ.is_ripe()),
                None => false,
            },
            Condition::NearbyTexture { texture, radius } => state.nearby_has_texture(*texture, *radius),
            Condition::AttributeBelow { attribute, threshold } => state.attribute(*attribute) < *threshold,
        }
    }

    pub fn facing_textures<I: IntoIterator<Item = Texture>>(textures: I) -> Condition {
        Condition::FacingTexture { allowed: textures.into_iter().collect() }
    }

    pub fn any_of<I: IntoIterator<Item = ItemKind>>(items: I) -> Condition {
        Condition::HasAnyOf { items: items.into_iter().collect() }
    }

    pub fn nearby(texture: Texture) -> Condition {
        Condition::NearbyTexture { texture, radius: 1 }
    }
}

/// A state change applied by a legal attempt.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Effect {
    Consume { item: ItemKind, n: u32 },
    Gain { item: ItemKind, n: u32 },
    AttributeDelta { attribute: Attribute, delta: i32 },
    FaceBecomes { texture: Texture },
    RemoveFacedCreature,
    SpawnFacedCreature { creature: Creature },
    BeginSleep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Law {
    pub objective: Objective,
    pub action: Action,
    pub preconditions: Vec<Condition>,
    pub costs: Vec<Effect>,
    pub benefits: Vec<Effect>,
}

impl Law {
    pub fn check<S: StateView + ?Sized>(&self, state: &S) -> bool {
        self.preconditions.iter().all(|c| c.holds(state))
    }

    pub fn effects(&self) -> impl Iterator<Item = &Effect> {
        self.costs.iter().chain(self.benefits.iter())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LawError {
    #[error("preconditions of {0} do not hold")]
    PreconditionViolated(Objective),
    #[error("law table is missing objective {0}")]
    MissingObjective(Objective),
    #[error("law for {objective} consumes {item} without requiring it")]
    UncoveredConsumption { objective: Objective, item: ItemKind },
    #[error("law for {0} is keyed to the wrong action")]
    ActionMismatch(Objective),
}

/// All 22 laws, keyed by objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawTable {
    laws: BTreeMap<Objective, Law>,
}

impl LawTable {
    pub fn new(laws: impl IntoIterator<Item = Law>) -> Result<LawTable, LawError> {
        let table = LawTable { laws: laws.into_iter().map(|l| (l.objective, l)).collect() };
        table.validate()?;
        Ok(table)
    }

    pub fn get(&self, objective: Objective) -> &Law {
        &self.laws[&objective]
    }

    pub fn for_action(&self, action: Action) -> Option<&Law> {
        action.objective().map(|o| self.get(o))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Law> {
        self.laws.values()
    }

    /// Every objective is present, keyed to its own action, and every
    /// consumed item is guarded by a sufficient `HasAtLeast`.
    pub fn validate(&self) -> Result<(), LawError> {
        for objective in Objective::ALL {
            let law = self.laws.get(&objective).ok_or(LawError::MissingObjective(objective))?;
            if law.action != objective.action() {
                return Err(LawError::ActionMismatch(objective));
            }
            for cost in &law.costs {
                if let Effect::Consume { item, n } = cost {
                    let covered = law.preconditions.iter().any(|c| {
                        matches!(c, Condition::HasAtLeast { item: i, n: m } if i == item && m >= n)
                    });
                    if !covered {
                        return Err(LawError::UncoveredConsumption { objective, item: *item });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.laws.values().collect::<Vec<_>>()).expect("law table serializes")
    }
}

/// Checks a law against a state.
pub fn check<S: StateView + ?Sized>(law: &Law, state: &S) -> bool {
    law.check(state)
}

/// Applies a law's costs then benefits, failing without side effects when the
/// preconditions do not hold.
pub fn apply_effects(law: &Law, state: &mut GameState) -> Result<(), LawError> {
    if !law.check(state) {
        return Err(LawError::PreconditionViolated(law.objective));
    }
    for effect in law.effects() {
        state.apply_effect(effect);
    }
    Ok(())
}

/// The builtin ground-truth law table.
pub fn builtin_law_table() -> &'static LawTable {
    static TABLE: OnceLock<LawTable> = OnceLock::new();
    TABLE.get_or_init(|| LawTable::new(builtin_laws()).expect("builtin law table is valid"))
}

fn has(item: ItemKind, n: u32) -> Condition {
    Condition::HasAtLeast { item, n }
}

fn consume(item: ItemKind, n: u32) -> Effect {
    Effect::Consume { item, n }
}

fn gain(item: ItemKind) -> Effect {
    Effect::Gain { item, n: 1 }
}

fn face_becomes(texture: Texture) -> Effect {
    Effect::FaceBecomes { texture }
}

fn creature(creature: Creature) -> Condition {
    Condition::FacingCreature { creature, ripe_required: false }
}

fn builtin_laws() -> Vec<Law> {
    use Creature as C;
    use ItemKind as I;
    use Objective as O;
    use Texture as T;

    let placeable = || Condition::facing_textures([T::Grass, T::Sand, T::Path]);
    let law = |objective: Objective, preconditions: Vec<Condition>, costs: Vec<Effect>, benefits: Vec<Effect>| Law {
        objective,
        action: objective.action(),
        preconditions,
        costs,
        benefits,
    };
    let collect = |objective, texture: T, tool: Option<I>, item: I, leaves: T| {
        let mut pre = Vec::new();
        if let Some(tool) = tool {
            pre.push(has(tool, 1));
        }
        pre.push(Condition::facing_textures([texture]));
        law(objective, pre, vec![], vec![gain(item), face_becomes(leaves)])
    };

    vec![
        collect(O::CollectWood, T::Tree, None, I::Wood, T::Grass),
        law(O::PlaceTable, vec![has(I::Wood, 2), placeable()], vec![consume(I::Wood, 2)], vec![face_becomes(T::Table)]),
        law(
            O::EatCow,
            vec![creature(C::Cow)],
            vec![],
            vec![Effect::AttributeDelta { attribute: Attribute::Food, delta: 6 }, Effect::RemoveFacedCreature],
        ),
        law(O::CollectSapling, vec![Condition::facing_textures([T::Grass])], vec![], vec![gain(I::Sapling)]),
        law(
            O::CollectDrink,
            vec![Condition::facing_textures([T::Water])],
            vec![],
            vec![Effect::AttributeDelta { attribute: Attribute::Drink, delta: 1 }],
        ),
        law(
            O::MakeWoodPickaxe,
            vec![has(I::Wood, 1), Condition::nearby(T::Table)],
            vec![consume(I::Wood, 1)],
            vec![gain(I::WoodPickaxe)],
        ),
        law(
            O::MakeWoodSword,
            vec![has(I::Wood, 1), Condition::nearby(T::Table)],
            vec![consume(I::Wood, 1)],
            vec![gain(I::WoodSword)],
        ),
        law(
            O::PlacePlant,
            vec![has(I::Sapling, 1), Condition::facing_textures([T::Grass])],
            vec![consume(I::Sapling, 1)],
            vec![Effect::SpawnFacedCreature { creature: C::Plant }],
        ),
        law(
            O::DefeatZombie,
            vec![Condition::any_of(I::SWORDS), creature(C::Zombie)],
            vec![],
            vec![Effect::RemoveFacedCreature],
        ),
        collect(O::CollectStone, T::Stone, Some(I::WoodPickaxe), I::Stone, T::Path),
        law(
            O::PlaceStone,
            vec![has(I::Stone, 1), Condition::facing_textures([T::Grass, T::Sand, T::Path, T::Water, T::Lava])],
            vec![consume(I::Stone, 1)],
            vec![face_becomes(T::Stone)],
        ),
        law(
            O::EatPlant,
            vec![Condition::FacingCreature { creature: C::Plant, ripe_required: true }],
            vec![],
            vec![Effect::AttributeDelta { attribute: Attribute::Food, delta: 4 }, Effect::RemoveFacedCreature],
        ),
        law(
            O::DefeatSkeleton,
            vec![Condition::any_of(I::SWORDS), creature(C::Skeleton)],
            vec![],
            vec![Effect::RemoveFacedCreature],
        ),
        law(
            O::MakeStonePickaxe,
            vec![has(I::Wood, 1), has(I::Stone, 1), Condition::nearby(T::Table)],
            vec![consume(I::Wood, 1), consume(I::Stone, 1)],
            vec![gain(I::StonePickaxe)],
        ),
        law(
            O::MakeStoneSword,
            vec![has(I::Wood, 1), has(I::Stone, 1), Condition::nearby(T::Table)],
            vec![consume(I::Wood, 1), consume(I::Stone, 1)],
            vec![gain(I::StoneSword)],
        ),
        law(
            O::Sleep,
            vec![Condition::AttributeBelow { attribute: Attribute::Energy, threshold: Attribute::MAX }],
            vec![],
            vec![Effect::BeginSleep],
        ),
        law(O::PlaceFurnace, vec![has(I::Stone, 4), placeable()], vec![consume(I::Stone, 4)], vec![face_becomes(T::Furnace)]),
        collect(O::CollectCoal, T::Coal, Some(I::WoodPickaxe), I::Coal, T::Path),
        collect(O::CollectIron, T::Iron, Some(I::StonePickaxe), I::Iron, T::Path),
        law(
            O::MakeIronPickaxe,
            vec![
                has(I::Wood, 1),
                has(I::Coal, 1),
                has(I::Iron, 1),
                Condition::nearby(T::Table),
                Condition::nearby(T::Furnace),
            ],
            vec![consume(I::Wood, 1), consume(I::Coal, 1), consume(I::Iron, 1)],
            vec![gain(I::IronPickaxe)],
        ),
        law(
            O::MakeIronSword,
            vec![
                has(I::Wood, 1),
                has(I::Coal, 1),
                has(I::Iron, 1),
                Condition::nearby(T::Table),
                Condition::nearby(T::Furnace),
            ],
            vec![consume(I::Wood, 1), consume(I::Coal, 1), consume(I::Iron, 1)],
            vec![gain(I::IronSword)],
        ),
        collect(O::CollectDiamond, T::Diamond, Some(I::IronPickaxe), I::Diamond, T::Path),
    ]
}
