//! The world clock: needs, health, creatures and spawning.

use rand::Rng;

use super::{CreatureInstance, Direction, GameState, Pos};
use crate::laws::{Attribute, Creature, Texture};

pub const DAY_LENGTH: u64 = 300;
pub const HUNGER_PERIOD: u32 = 25;
pub const THIRST_PERIOD: u32 = 20;
pub const FATIGUE_PERIOD: u32 = 30;
pub const DEGEN_PERIOD: u32 = 10;
pub const RECOVER_PERIOD: u32 = 15;
pub const PLANT_RIPE_TICKS: u32 = 60;

const SPAWN_RADIUS: i32 = 10;
const SPAWN_MIN_DISTANCE: i32 = 4;
const ZOMBIE_SPAWN_P: f64 = 0.05;
const ZOMBIE_DESPAWN_P: f64 = 0.05;
const ZOMBIE_CAP: usize = 4;
const ZOMBIE_DAMAGE: u8 = 2;
const ZOMBIE_COOLDOWN: u32 = 5;
const ZOMBIE_CHASE_RADIUS: i32 = 8;
const ZOMBIE_CHASE_P: f64 = 0.8;
const SKELETON_SPAWN_P: f64 = 0.05;
const SKELETON_CAP: usize = 2;
const SKELETON_DAMAGE: u8 = 1;
const SKELETON_COOLDOWN: u32 = 8;
const SKELETON_RANGE: i32 = 3;
const SKELETON_MOVE_P: f64 = 0.2;
const COW_MOVE_P: f64 = 0.2;

/// Night is the second half of each day.
pub fn is_night(step: u64) -> bool {
    step % DAY_LENGTH >= DAY_LENGTH / 2
}

/// `was_sleeping` is the sleep flag before the action phase, so falling
/// asleep this step does not yet restore energy.
pub(super) fn tick(s: &mut GameState, was_sleeping: bool) {
    update_needs(s, was_sleeping);
    update_creatures(s);
    spawn(s);
    if s.is_sleeping() && s.attribute_value(Attribute::Energy) >= Attribute::MAX {
        s.set_sleeping(false);
    }
    s.advance_clock();
}

fn update_needs(s: &mut GameState, was_sleeping: bool) {
    let mut decay = [0u8; 4];
    {
        let clocks = s.clocks_mut();
        clocks.hunger += 1;
        if clocks.hunger >= HUNGER_PERIOD {
            clocks.hunger = 0;
            decay[Attribute::Food.index()] = 1;
        }
        clocks.thirst += 1;
        if clocks.thirst >= THIRST_PERIOD {
            clocks.thirst = 0;
            decay[Attribute::Drink.index()] = 1;
        }
        if was_sleeping {
            clocks.fatigue = 0;
        } else {
            clocks.fatigue += 1;
            if clocks.fatigue >= FATIGUE_PERIOD {
                clocks.fatigue = 0;
                decay[Attribute::Energy.index()] = 1;
            }
        }
    }
    let attrs = s.attributes_mut();
    for a in [Attribute::Food, Attribute::Drink, Attribute::Energy] {
        attrs[a.index()] = attrs[a.index()].saturating_sub(decay[a.index()]);
    }
    if was_sleeping {
        let e = &mut attrs[Attribute::Energy.index()];
        *e = (*e + 1).min(Attribute::MAX);
    }
    let starving = [Attribute::Food, Attribute::Drink, Attribute::Energy]
        .iter()
        .any(|a| attrs[a.index()] == 0);
    let mut health_change = 0i32;
    {
        let clocks = s.clocks_mut();
        if starving {
            clocks.recover = 0;
            clocks.degen += 1;
            if clocks.degen >= DEGEN_PERIOD {
                clocks.degen = 0;
                health_change = -1;
            }
        } else {
            clocks.degen = 0;
            clocks.recover += 1;
            if clocks.recover >= RECOVER_PERIOD {
                clocks.recover = 0;
                health_change = 1;
            }
        }
    }
    let h = &mut s.attributes_mut()[Attribute::Health.index()];
    *h = (*h as i32 + health_change).clamp(0, Attribute::MAX as i32) as u8;
}

fn damage(s: &mut GameState, amount: u8) {
    let h = &mut s.attributes_mut()[Attribute::Health.index()];
    *h = h.saturating_sub(amount);
    s.set_sleeping(false);
}

fn random_direction(s: &mut GameState) -> Direction {
    Direction::ALL[s.rng().gen_range(0..4)]
}

fn try_move(s: &mut GameState, idx: usize, dir: Direction, allowed: fn(Texture) -> bool) {
    let target = s.creatures()[idx].pos.step(dir);
    if s.in_bounds(target) && allowed(s.texture_at(target)) && s.occupant_at(target).is_none() {
        s.creatures_mut()[idx].pos = target;
    }
}

fn toward(from: Pos, to: Pos) -> Direction {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    if dx.abs() >= dy.abs() {
        if dx > 0 {
            Direction::East
        } else {
            Direction::West
        }
    } else if dy > 0 {
        Direction::South
    } else {
        Direction::North
    }
}

fn update_creatures(s: &mut GameState) {
    let mut idx = 0;
    while idx < s.creatures().len() {
        let c = s.creatures()[idx].clone();
        let player = s.player_pos();
        match c.kind {
            Creature::Zombie => {
                if c.pos.manhattan(player) == 1 {
                    if c.cooldown > 0 {
                        s.creatures_mut()[idx].cooldown -= 1;
                    } else {
                        damage(s, ZOMBIE_DAMAGE);
                        s.creatures_mut()[idx].cooldown = ZOMBIE_COOLDOWN;
                    }
                } else {
                    let chase = c.pos.chebyshev(player) <= ZOMBIE_CHASE_RADIUS && s.rng().gen_bool(ZOMBIE_CHASE_P);
                    let dir = if chase { toward(c.pos, player) } else { random_direction(s) };
                    try_move(s, idx, dir, Texture::is_walkable);
                    if s.creatures()[idx].cooldown > 0 {
                        s.creatures_mut()[idx].cooldown -= 1;
                    }
                }
                if !is_night(s.step_count())
                    && c.pos.chebyshev(player) > SPAWN_MIN_DISTANCE
                    && s.rng().gen_bool(ZOMBIE_DESPAWN_P)
                {
                    s.creatures_mut().remove(idx);
                    continue;
                }
            }
            Creature::Skeleton => {
                if in_line_of_fire(s, c.pos, player) {
                    if c.cooldown > 0 {
                        s.creatures_mut()[idx].cooldown -= 1;
                    } else {
                        damage(s, SKELETON_DAMAGE);
                        s.creatures_mut()[idx].cooldown = SKELETON_COOLDOWN;
                    }
                } else {
                    if s.creatures()[idx].cooldown > 0 {
                        s.creatures_mut()[idx].cooldown -= 1;
                    }
                    if s.rng().gen_bool(SKELETON_MOVE_P) {
                        let dir = random_direction(s);
                        try_move(s, idx, dir, |t| t == Texture::Path);
                    }
                }
            }
            Creature::Cow => {
                if s.rng().gen_bool(COW_MOVE_P) {
                    let dir = random_direction(s);
                    try_move(s, idx, dir, Texture::is_walkable);
                }
            }
            Creature::Plant => {
                let g = &mut s.creatures_mut()[idx].grown;
                *g = (*g + 1).min(PLANT_RIPE_TICKS);
            }
            Creature::Player => {}
        }
        idx += 1;
    }
}

/// Same row or column, within range, with only free walkable cells between.
fn in_line_of_fire(s: &GameState, from: Pos, player: Pos) -> bool {
    if from.x != player.x && from.y != player.y {
        return false;
    }
    let dist = from.manhattan(player);
    if dist == 0 || dist > SKELETON_RANGE {
        return false;
    }
    let dir = toward(from, player);
    let mut p = from.step(dir);
    while p != player {
        if !s.is_free_walkable(p) {
            return false;
        }
        p = p.step(dir);
    }
    true
}

fn sample_spawn_cell(s: &mut GameState) -> Pos {
    let dx = s.rng().gen_range(-SPAWN_RADIUS..=SPAWN_RADIUS);
    let dy = s.rng().gen_range(-SPAWN_RADIUS..=SPAWN_RADIUS);
    s.player_pos().offset(dx, dy)
}

fn count(s: &GameState, kind: Creature) -> usize {
    s.creatures().iter().filter(|c| c.kind == kind).count()
}

fn spawn(s: &mut GameState) {
    let player = s.player_pos();
    if is_night(s.step_count()) && s.rng().gen_bool(ZOMBIE_SPAWN_P) {
        let pos = sample_spawn_cell(s);
        if count(s, Creature::Zombie) < ZOMBIE_CAP
            && s.in_bounds(pos)
            && pos.chebyshev(player) >= SPAWN_MIN_DISTANCE
            && s.texture_at(pos) == Texture::Grass
            && s.occupant_at(pos).is_none()
        {
            let mut z = CreatureInstance::new(Creature::Zombie, pos);
            z.cooldown = ZOMBIE_COOLDOWN;
            s.creatures_mut().push(z);
        }
    }
    if s.rng().gen_bool(SKELETON_SPAWN_P) {
        let pos = sample_spawn_cell(s);
        if count(s, Creature::Skeleton) < SKELETON_CAP
            && s.in_bounds(pos)
            && pos.chebyshev(player) >= SPAWN_MIN_DISTANCE
            && s.texture_at(pos) == Texture::Path
            && s.occupant_at(pos).is_none()
            && stone_neighbours(s, pos) >= 2
        {
            let mut k = CreatureInstance::new(Creature::Skeleton, pos);
            k.cooldown = SKELETON_COOLDOWN;
            s.creatures_mut().push(k);
        }
    }
}

pub(super) fn stone_neighbours(s: &GameState, pos: Pos) -> usize {
    Direction::ALL
        .iter()
        .filter(|d| {
            let p = pos.step(**d);
            s.in_bounds(p) && s.texture_at(p) == Texture::Stone
        })
        .count()
}
