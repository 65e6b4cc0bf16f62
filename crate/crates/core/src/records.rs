//! Interaction records and text observations.
//!
//! A record is one attempt at an objective action: the state description
//! before the step, the action, the description after, and whether the
//! attempt was legal. Files are JSON lines with a fixed key order so that a
//! load/save cycle reproduces the input byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::laws::{Attribute, FacedCell, ItemKind, Objective, Occupant, StateView, Texture};
use crate::world::{Action, CellView, Direction, GameState, Pos};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("invalid cell `{0}`")]
    Cell(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl FromStr for CellView {
    type Err = RecordError;

    /// Parses the `texture(occupant)` grammar, e.g. `grass()` or `grass(cow)`.
    fn from_str(s: &str) -> Result<CellView, RecordError> {
        let bad = || RecordError::Cell(s.to_string());
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let texture = Texture::from_name(&s[..open]).ok_or_else(bad)?;
        let inner = &s[open + 1..s.len() - 1];
        let occupant = if inner.is_empty() { None } else { Some(Occupant::from_token(inner).ok_or_else(bad)?) };
        Ok(CellView { texture, occupant })
    }
}

impl Serialize for CellView {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellView {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeBlock {
    pub health: u8,
    pub food: u8,
    pub drink: u8,
    pub energy: u8,
}

impl AttributeBlock {
    pub fn get(&self, a: Attribute) -> u8 {
        match a {
            Attribute::Health => self.health,
            Attribute::Food => self.food,
            Attribute::Drink => self.drink,
            Attribute::Energy => self.energy,
        }
    }
}

/// The state description logged on either side of an attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordState {
    pub attributes: AttributeBlock,
    pub tools: BTreeMap<ItemKind, u32>,
    pub materials: BTreeMap<ItemKind, u32>,
    pub face: CellView,
    pub nearby: [[CellView; 3]; 3],
}

impl RecordState {
    pub fn from_game(state: &GameState) -> RecordState {
        let local = state.observe_local(1);
        let mut tools = BTreeMap::new();
        let mut materials = BTreeMap::new();
        for item in ItemKind::ALL {
            let n = state.inventory_count(item);
            if n > 0 {
                if item.is_tool() {
                    tools.insert(item, n);
                } else {
                    materials.insert(item, n);
                }
            }
        }
        let row = |r: usize| [local.cells[r][0], local.cells[r][1], local.cells[r][2]];
        RecordState {
            attributes: AttributeBlock {
                health: state.attribute_value(Attribute::Health),
                food: state.attribute_value(Attribute::Food),
                drink: state.attribute_value(Attribute::Drink),
                energy: state.attribute_value(Attribute::Energy),
            },
            tools,
            materials,
            face: local.face,
            nearby: [row(0), row(1), row(2)],
        }
    }

    /// Schema checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), String> {
        for a in Attribute::ALL {
            if self.attributes.get(a) > Attribute::MAX {
                return Err(format!("attribute {a} exceeds {}", Attribute::MAX));
            }
        }
        for (item, n) in &self.tools {
            if !item.is_tool() {
                return Err(format!("`{item}` is not a tool"));
            }
            if *n == 0 {
                return Err(format!("zero count for `{item}`"));
            }
        }
        for (item, n) in &self.materials {
            if item.is_tool() {
                return Err(format!("`{item}` is not a material"));
            }
            if *n == 0 {
                return Err(format!("zero count for `{item}`"));
            }
        }
        if !matches!(self.nearby[1][1].occupant, Some(Occupant::Player { .. })) {
            return Err("centre of nearby must hold the player".into());
        }
        let neighbours = [self.nearby[0][1], self.nearby[2][1], self.nearby[1][0], self.nearby[1][2]];
        if !neighbours.contains(&self.face) {
            return Err("face does not match any orthogonal neighbour".into());
        }
        Ok(())
    }

    pub fn count_of(&self, item: ItemKind) -> u32 {
        let map = if item.is_tool() { &self.tools } else { &self.materials };
        map.get(&item).copied().unwrap_or(0)
    }

    pub fn is_asleep(&self) -> bool {
        matches!(self.nearby[1][1].occupant, Some(Occupant::Player { asleep: true }))
    }
}

impl StateView for RecordState {
    fn count(&self, item: ItemKind) -> u32 {
        self.count_of(item)
    }

    fn attribute(&self, attribute: Attribute) -> u8 {
        self.attributes.get(attribute)
    }

    fn faced(&self) -> FacedCell {
        FacedCell { texture: self.face.texture, occupant: self.face.occupant }
    }

    /// Only the logged 3×3 neighbourhood is known, so radii above 1 are
    /// answered from it as well.
    fn nearby_has_texture(&self, texture: Texture, radius: u32) -> bool {
        if radius == 0 {
            return self.nearby[1][1].texture == texture;
        }
        self.nearby.iter().flatten().any(|c| c.texture == texture)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub action: Action,
    pub init_state: RecordState,
    pub resulting_state: RecordState,
    pub valid: bool,
}

impl Record {
    pub fn objective(&self) -> Objective {
        self.action.objective().expect("records hold objective actions")
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    fn parse_line(line: &str, number: usize) -> Result<Record, RecordError> {
        let schema = |message: String| RecordError::Schema { line: number, message };
        let record: Record = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
        if record.action.objective().is_none() {
            return Err(schema(format!("action `{}` does not attempt an objective", record.action)));
        }
        record.init_state.validate().map_err(|m| schema(format!("init_state: {m}")))?;
        record.resulting_state.validate().map_err(|m| schema(format!("resulting_state: {m}")))?;
        Ok(record)
    }
}

/// An ordered collection of records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordSet {
    pub records: Vec<Record>,
}

impl RecordSet {
    pub fn new(records: Vec<Record>) -> RecordSet {
        RecordSet { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn parse_jsonl(text: &str) -> Result<RecordSet, RecordError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            records.push(Record::parse_line(line, i + 1)?);
        }
        Ok(RecordSet { records })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_json_line());
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<RecordSet, RecordError> {
        let text = std::fs::read_to_string(path).map_err(|source| RecordError::Io { path: path.display().to_string(), source })?;
        RecordSet::parse_jsonl(&text)
    }

    /// Writes through a temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), RecordError> {
        write_atomic(path, self.to_jsonl().as_bytes()).map_err(|source| RecordError::Io { path: path.display().to_string(), source })
    }

    /// Records grouped by objective, in file order.
    pub fn by_objective(&self) -> BTreeMap<Objective, Vec<&Record>> {
        let mut map: BTreeMap<Objective, Vec<&Record>> = BTreeMap::new();
        for r in &self.records {
            map.entry(r.objective()).or_default().push(r);
        }
        map
    }

    /// (successes, failures) for one objective.
    pub fn partition(&self, objective: Objective) -> (Vec<&Record>, Vec<&Record>) {
        self.records.iter().filter(|r| r.objective() == objective).partition(|r| r.valid)
    }
}

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

const SEE_RADIUS: i32 = 4;

fn direction_words(dx: i32, dy: i32) -> &'static str {
    let (ax, ay) = (dx.abs(), dy.abs());
    let diagonal = ax.min(ay) * 1000 > ax.max(ay) * 414;
    let ns = if dy < 0 { "north" } else { "south" };
    let ew = if dx < 0 { "west" } else { "east" };
    if diagonal {
        match (dy < 0, dx < 0) {
            (true, true) => "north-west",
            (true, false) => "north-east",
            (false, true) => "south-west",
            (false, false) => "south-east",
        }
    } else if ax > ay {
        ew
    } else {
        ns
    }
}

/// Renders the text observation given to language-model agents.
pub fn render_text_observation(state: &GameState) -> String {
    let player = state.player_pos();
    let mut nearest_texture: BTreeMap<Texture, (i32, i32, i32)> = BTreeMap::new();
    let mut nearest_creature: BTreeMap<crate::laws::Creature, (i32, i32, i32)> = BTreeMap::new();
    for dy in -SEE_RADIUS..=SEE_RADIUS {
        for dx in -SEE_RADIUS..=SEE_RADIUS {
            if dx == 0 && dy == 0 {
                continue;
            }
            let cell = state.cell_view(Pos::new(player.x + dx, player.y + dy));
            let d = dx.abs() + dy.abs();
            let e = nearest_texture.entry(cell.texture).or_insert((d, dx, dy));
            if d < e.0 {
                *e = (d, dx, dy);
            }
            if let Some(occ) = cell.occupant {
                let e = nearest_creature.entry(occ.kind()).or_insert((d, dx, dy));
                if d < e.0 {
                    *e = (d, dx, dy);
                }
            }
        }
    }
    let mut out = String::from("You see:\n");
    let entries = nearest_texture
        .iter()
        .map(|(t, v)| (t.name(), *v))
        .chain(nearest_creature.iter().map(|(c, v)| (c.name(), *v)));
    for (name, (d, dx, dy)) in entries {
        let _ = writeln!(out, "  - {name} {d} steps to your {}", direction_words(dx, dy));
    }
    let face = state.cell_view(state.faced_pos());
    let faced = face.occupant.map(|o| o.kind().name()).unwrap_or(face.texture.name());
    let _ = write!(out, "\nYou face {faced} at your front.\n\nYour attributes status:\n");
    for a in Attribute::ALL {
        let _ = writeln!(out, "  - {}: {}/{}", a, state.attribute_value(a), Attribute::MAX);
    }
    for (title, tools) in [("materials", false), ("tools", true)] {
        let held: Vec<_> = ItemKind::ALL
            .into_iter()
            .filter(|i| i.is_tool() == tools && state.inventory_count(*i) > 0)
            .collect();
        if !held.is_empty() {
            let _ = write!(out, "\nYour {title} inventory:\n");
            for i in held {
                let _ = writeln!(out, "  - {}: {}", i, state.inventory_count(i));
            }
        }
    }
    if state.is_sleeping() {
        out.push_str("\nYou are sleeping.\n");
    }
    out
}

/// The orthogonal direction from the centre of `nearby` to the faced cell, if unique.
pub fn facing_in(state: &RecordState) -> Option<Direction> {
    let options = [
        (Direction::North, state.nearby[0][1]),
        (Direction::South, state.nearby[2][1]),
        (Direction::West, state.nearby[1][0]),
        (Direction::East, state.nearby[1][2]),
    ];
    let hits: Vec<_> = options.iter().filter(|(_, c)| *c == state.face).collect();
    match hits.as_slice() {
        [(d, _)] => Some(*d),
        _ => None,
    }
}
