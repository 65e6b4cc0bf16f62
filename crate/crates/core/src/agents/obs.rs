//! Fixed-length observation encoding for the learned policy.
//!
//! Layout: 81 cells of the 9×9 view (row-major from the north-west), each a
//! 17-way block of 12 texture indicators followed by zombie, skeleton, cow,
//! plant and ripe-plant indicators; then the same 17-way block for the faced
//! cell; then 12 inventory counts, 4 attributes, daylight, 4 facing
//! indicators and a sleeping flag. Counts and attributes are divided by 9 and
//! clipped to 1.

use crate::laws::{Attribute, ItemKind, Occupant, Texture};
use crate::world::{CellView, Direction, GameState};

pub const VIEW_RADIUS: i32 = 4;
pub const CELLS: usize = 81;
pub const CELL_CHANNELS: usize = 17;
pub const FACED_OFFSET: usize = CELLS * CELL_CHANNELS;
pub const DENSE_OFFSET: usize = FACED_OFFSET + CELL_CHANNELS;
pub const DENSE_LEN: usize = 12 + 4 + 1 + 4 + 1;
pub const OBS_DIM: usize = DENSE_OFFSET + DENSE_LEN;

/// An observation stored as its non-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub entries: Vec<(u32, f64)>,
}

impl Observation {
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for &(i, x) in &self.entries {
            v[i as usize] = x;
        }
        v
    }

    pub fn from_dense(values: &[f64]) -> Observation {
        Observation { entries: values.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, x)| (i as u32, *x)).collect() }
    }
}

fn creature_channel(o: Occupant) -> Option<usize> {
    match o {
        Occupant::Zombie => Some(12),
        Occupant::Skeleton => Some(13),
        Occupant::Cow => Some(14),
        Occupant::Plant { ripe: false } => Some(15),
        Occupant::Plant { ripe: true } => Some(16),
        Occupant::Player { .. } => None,
    }
}

fn push_cell(entries: &mut Vec<(u32, f64)>, base: usize, view: CellView) {
    entries.push(((base + view.texture.index()) as u32, 1.0));
    if let Some(ch) = view.occupant.and_then(creature_channel) {
        entries.push(((base + ch) as u32, 1.0));
    }
}

pub fn encode(state: &GameState) -> Observation {
    let mut entries = Vec::with_capacity(CELLS + 40);
    let p = state.player_pos();
    let mut cell = 0usize;
    for dy in -VIEW_RADIUS..=VIEW_RADIUS {
        for dx in -VIEW_RADIUS..=VIEW_RADIUS {
            push_cell(&mut entries, cell * CELL_CHANNELS, state.cell_view(p.offset(dx, dy)));
            cell += 1;
        }
    }
    push_cell(&mut entries, FACED_OFFSET, state.cell_view(state.faced_pos()));
    let mut k = DENSE_OFFSET;
    let mut push = |x: f64, k: &mut usize| {
        if x != 0.0 {
            entries.push((*k as u32, x));
        }
        *k += 1;
    };
    for item in ItemKind::ALL {
        push((state.inventory_count(item) as f64 / 9.0).min(1.0), &mut k);
    }
    for a in Attribute::ALL {
        push(state.attribute_value(a) as f64 / 9.0, &mut k);
    }
    push(state.daylight(), &mut k);
    for d in Direction::ALL {
        push((state.facing() == d) as u8 as f64, &mut k);
    }
    push(state.is_sleeping() as u8 as f64, &mut k);
    debug_assert_eq!(k, OBS_DIM);
    debug_assert!(Texture::ALL.len() == 12);
    Observation { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_world, WorldConfig};

    #[test]
    fn encoding_is_bounded_and_one_hot() {
        let mut s = generate_world(2, &WorldConfig::default()).unwrap();
        s.set_count(ItemKind::Wood, 30);
        let obs = encode(&s);
        assert!(obs.entries.iter().all(|&(i, x)| (i as usize) < OBS_DIM && x > 0.0 && x <= 1.0));
        let dense = obs.to_dense(OBS_DIM);
        for c in 0..=CELLS {
            let textures: f64 = dense[c * CELL_CHANNELS..c * CELL_CHANNELS + 12].iter().sum();
            assert_eq!(textures, 1.0);
        }
        assert_eq!(dense[DENSE_OFFSET + ItemKind::Wood.index()], 1.0);
        assert_eq!(Observation::from_dense(&dense), obs);
        assert_eq!(OBS_DIM, 1416);
    }
}
