//! Play sessions: a live world, its record log and the broadcast channel.

use std::collections::BTreeMap;
use std::time::Instant;

use lawcraft_core::laws::{Attribute, ItemKind, Occupant, Texture};
use lawcraft_core::records::{Record, RecordSet, RecordState};
use lawcraft_core::world::{Action, CellView, Direction, GameState, StepInfo, WorldError};
use serde::Serialize;
use tokio::sync::broadcast;

pub const VIEW_RADIUS: i32 = 4;
const STREAM_BUFFER: usize = 64;

/// What a client sees after every step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct View {
    pub step: u64,
    /// 9×9 cells around the player, rows north to south.
    pub cells: Vec<Vec<CellView>>,
    pub face: CellView,
    pub facing: Direction,
    pub attributes: BTreeMap<&'static str, u8>,
    pub inventory: BTreeMap<&'static str, u32>,
    pub sleeping: bool,
    pub daylight: f64,
    pub unlocked: Vec<&'static str>,
    pub done: bool,
    pub actions: Vec<&'static str>,
}

impl View {
    pub fn of(state: &GameState) -> View {
        let local = state.observe_local(VIEW_RADIUS);
        View {
            step: state.step_count(),
            cells: local.cells,
            face: local.face,
            facing: state.facing(),
            attributes: Attribute::ALL.iter().map(|a| (a.name(), state.attribute_value(*a))).collect(),
            inventory: ItemKind::ALL.iter().map(|i| (i.name(), state.inventory_count(*i))).filter(|(_, n)| *n > 0).collect(),
            sleeping: state.is_sleeping(),
            daylight: state.daylight(),
            unlocked: state.unlocked().iter().map(|o| o.name()).collect(),
            done: state.is_done(),
            actions: action_names(),
        }
    }
}

pub fn action_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = Action::ALL.iter().map(|a| a.name()).collect();
    names.push("interact");
    names
}

#[derive(Debug, Clone, Serialize)]
pub struct Frame {
    pub view: View,
    pub step_info: StepInfo,
}

/// The concrete action behind the context-dependent "interact" key.
pub fn resolve_interact(state: &GameState) -> Action {
    let faced = state.faced_pos();
    match state.occupant_at(faced) {
        Some(Occupant::Cow) => return Action::EatCow,
        Some(Occupant::Zombie) => return Action::DefeatZombie,
        Some(Occupant::Skeleton) => return Action::DefeatSkeleton,
        Some(Occupant::Plant { .. }) => return Action::EatPlant,
        _ => {}
    }
    match state.texture_at(faced) {
        Texture::Tree => Action::CollectWood,
        Texture::Water => Action::CollectDrink,
        Texture::Stone => Action::CollectStone,
        Texture::Coal => Action::CollectCoal,
        Texture::Iron => Action::CollectIron,
        Texture::Diamond => Action::CollectDiamond,
        Texture::Grass => Action::CollectSapling,
        _ => Action::Noop,
    }
}

pub struct Session {
    pub state: GameState,
    pub records: RecordSet,
    pub created: Instant,
    pub last_activity: Instant,
    pub stream: broadcast::Sender<String>,
}

impl Session {
    pub fn new(state: GameState, now: Instant) -> Session {
        let (stream, _) = broadcast::channel(STREAM_BUFFER);
        Session { state, records: RecordSet::default(), created: now, last_activity: now, stream }
    }

    /// Steps the world, logging a record for objective attempts made awake.
    pub fn act(&mut self, action: Action, now: Instant) -> Result<Frame, WorldError> {
        self.last_activity = now;
        let before = (action.objective().is_some() && !self.state.is_sleeping()).then(|| RecordState::from_game(&self.state));
        let info = self.state.step(action)?;
        if let Some(init_state) = before {
            self.records.push(Record { action, init_state, resulting_state: RecordState::from_game(&self.state), valid: info.valid });
        }
        let frame = Frame { view: View::of(&self.state), step_info: info };
        let _ = self.stream.send(serde_json::to_string(&frame).expect("frame serializes"));
        Ok(frame)
    }
}
