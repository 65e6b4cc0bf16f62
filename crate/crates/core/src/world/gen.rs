//! Seeded map generation.
//!
//! The layout is radial: a grass and forest core around the spawn point, a
//! ring of sand and lakes, then a stone shell cut by tunnels and holding the
//! ores, with lava and diamonds toward the edge. After layout every texture
//! an objective needs is checked for reachability from spawn and patched in
//! if missing.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::noise::fbm;
use super::{CreatureInstance, Direction, GameState, Pos, WorldConfig, WorldError};
use crate::laws::{Creature, Texture};

pub const MIN_SIZE: usize = 16;
const MAX_ATTEMPTS: u32 = 8;
const COW_DENSITY: f64 = 0.015;
const REQUIRED: [Texture; 7] = [
    Texture::Grass,
    Texture::Tree,
    Texture::Water,
    Texture::Stone,
    Texture::Coal,
    Texture::Iron,
    Texture::Diamond,
];

struct Grid {
    size: usize,
    cells: Vec<Texture>,
}

impl Grid {
    fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.size && (p.y as usize) < self.size
    }

    fn get(&self, p: Pos) -> Texture {
        self.cells[p.y as usize * self.size + p.x as usize]
    }

    fn set(&mut self, p: Pos, t: Texture) {
        self.cells[p.y as usize * self.size + p.x as usize] = t;
    }

    fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.size as i32).flat_map(move |y| (0..self.size as i32).map(move |x| Pos::new(x, y)))
    }

    fn neighbours(&self, p: Pos) -> impl Iterator<Item = Pos> + '_ {
        Direction::ALL.into_iter().map(move |d| p.step(d)).filter(|q| self.in_bounds(*q))
    }

    fn count_neighbours(&self, p: Pos, t: Texture) -> usize {
        self.neighbours(p).filter(|q| self.get(*q) == t).count()
    }
}

/// Generates a world. The same seed and config always yield the same state.
pub fn generate_world(seed: u64, config: &WorldConfig) -> Result<GameState, WorldError> {
    if config.size < MIN_SIZE {
        return Err(WorldError::InvalidConfig(format!("map size {} is below the minimum {MIN_SIZE}", config.size)));
    }
    if config.step_limit == 0 {
        return Err(WorldError::InvalidConfig("step limit must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let layout_seed: u64 = rng.gen();
        let mut grid = layout(config.size, layout_seed, &mut rng);
        let Some(spawn) = find_spawn(&grid) else { continue };
        if !patch(&mut grid, spawn, &mut rng) {
            continue;
        }
        let creatures = place_cows(&grid, spawn, &mut rng);
        return Ok(GameState::from_parts(config.size, grid.cells, spawn, creatures, config, seed));
    }
    Err(WorldError::GenerationFailed { attempts: MAX_ATTEMPTS })
}

fn layout(size: usize, seed: u64, rng: &mut ChaCha8Rng) -> Grid {
    let mut grid = Grid { size, cells: vec![Texture::Grass; size * size] };
    let half = size as f64 / 2.0;
    let centre = (size as f64 - 1.0) / 2.0;
    let positions: Vec<Pos> = grid.positions().collect();
    for &p in &positions {
        let (x, y) = (p.x as f64, p.y as f64);
        let d = ((x - centre).powi(2) + (y - centre).powi(2)).sqrt() / half;
        let r = d + 0.15 * fbm(seed, x, y, 7.0);
        let m = fbm(seed.wrapping_add(10), x, y, 4.0);
        let t = if r < 0.55 {
            if m > 0.22 {
                Texture::Tree
            } else {
                Texture::Grass
            }
        } else if r < 0.7 {
            if m > 0.2 {
                Texture::Water
            } else if m > -0.15 {
                Texture::Sand
            } else if m > -0.4 {
                Texture::Grass
            } else {
                Texture::Tree
            }
        } else {
            let tunnel = fbm(seed.wrapping_add(20), x, y, 5.0).abs() < 0.07;
            let u: f64 = rng.gen();
            if tunnel {
                Texture::Path
            } else if r > 0.9 && m > 0.35 {
                Texture::Lava
            } else if u < 0.06 {
                Texture::Coal
            } else if d > 0.75 && u < 0.085 {
                Texture::Iron
            } else {
                Texture::Stone
            }
        };
        grid.set(p, t);
    }
    for &p in &positions {
        let x = p.x as f64;
        let y = p.y as f64;
        let d = ((x - centre).powi(2) + (y - centre).powi(2)).sqrt() / half;
        if grid.get(p) == Texture::Stone && d > 0.85 && rng.gen_bool(0.02) {
            try_place_diamond(&mut grid, p);
        }
    }
    grid
}

/// Diamonds sit in stone with at least two stone neighbours and never touch
/// another diamond, so later placements cannot break the rule.
fn try_place_diamond(grid: &mut Grid, p: Pos) -> bool {
    if grid.get(p) != Texture::Stone
        || grid.count_neighbours(p, Texture::Stone) < 2
        || grid.count_neighbours(p, Texture::Diamond) > 0
    {
        return false;
    }
    grid.set(p, Texture::Diamond);
    true
}

fn find_spawn(grid: &Grid) -> Option<Pos> {
    let c = (grid.size as i32 - 1) / 2;
    grid.positions()
        .filter(|p| grid.get(*p) == Texture::Grass)
        .min_by_key(|p| ((p.x - c).pow(2) + (p.y - c).pow(2), p.y, p.x))
}

fn reachable(grid: &Grid, spawn: Pos) -> Vec<bool> {
    let mut seen = vec![false; grid.size * grid.size];
    let idx = |p: Pos| p.y as usize * grid.size + p.x as usize;
    let mut queue = VecDeque::from([spawn]);
    seen[idx(spawn)] = true;
    while let Some(p) = queue.pop_front() {
        for q in grid.neighbours(p) {
            let t = grid.get(q);
            if !seen[idx(q)] && t != Texture::Water && t != Texture::Lava {
                seen[idx(q)] = true;
                queue.push_back(q);
            }
        }
    }
    seen
}

fn has_reachable(grid: &Grid, seen: &[bool], t: Texture) -> bool {
    let idx = |p: Pos| p.y as usize * grid.size + p.x as usize;
    grid.positions().any(|p| {
        if t == Texture::Water {
            grid.get(p) == t && grid.neighbours(p).any(|q| seen[idx(q)])
        } else {
            seen[idx(p)] && grid.get(p) == t
        }
    })
}

fn pick(grid: &Grid, seen: &[bool], rng: &mut ChaCha8Rng, pred: impl Fn(Pos) -> bool) -> Option<Pos> {
    let idx = |p: Pos| p.y as usize * grid.size + p.x as usize;
    let candidates: Vec<Pos> = grid.positions().filter(|p| seen[idx(*p)] && pred(*p)).collect();
    candidates.choose(rng).copied()
}

/// Makes every required texture reachable. Returns false if that failed.
fn patch(grid: &mut Grid, spawn: Pos, rng: &mut ChaCha8Rng) -> bool {
    for _ in 0..16 {
        let seen = reachable(grid, spawn);
        let Some(missing) = REQUIRED.into_iter().find(|t| !has_reachable(grid, &seen, *t)) else {
            return true;
        };
        let far = |p: Pos, d: i32| p.chebyshev(spawn) >= d;
        let g = &*grid;
        let stone_ok = |p: Pos| g.get(p) == Texture::Stone && g.count_neighbours(p, Texture::Diamond) == 0;
        let target = match missing {
            Texture::Grass => return false,
            Texture::Tree | Texture::Water | Texture::Stone => {
                pick(g, &seen, rng, |p| g.get(p) == Texture::Grass && far(p, 3)).map(|p| (p, missing))
            }
            Texture::Coal | Texture::Iron => match pick(g, &seen, rng, stone_ok) {
                Some(p) => Some((p, missing)),
                None => pick(g, &seen, rng, |p| g.get(p) == Texture::Grass && far(p, 3)).map(|p| (p, Texture::Stone)),
            },
            _ => {
                let diamond_ok = |p: Pos| stone_ok(p) && g.count_neighbours(p, Texture::Stone) >= 2;
                match pick(g, &seen, rng, diamond_ok) {
                    Some(p) => Some((p, Texture::Diamond)),
                    None => {
                        let spot = pick(g, &seen, rng, |p| {
                            g.get(p) == Texture::Grass
                                && far(p, 4)
                                && [Direction::East, Direction::South].iter().all(|d| g.in_bounds(p.step(*d)))
                        });
                        match spot {
                            Some(p) => {
                                grid.set(p.step(Direction::East), Texture::Stone);
                                grid.set(p.step(Direction::South), Texture::Stone);
                                Some((p, Texture::Stone))
                            }
                            None => None,
                        }
                    }
                }
            }
        };
        match target {
            Some((p, t)) => grid.set(p, t),
            None => return false,
        }
    }
    let seen = reachable(grid, spawn);
    REQUIRED.into_iter().all(|t| has_reachable(grid, &seen, t))
}

fn place_cows(grid: &Grid, spawn: Pos, rng: &mut ChaCha8Rng) -> Vec<CreatureInstance> {
    let seen = reachable(grid, spawn);
    let mut cows = Vec::new();
    for p in grid.positions() {
        if grid.get(p) == Texture::Grass && seen[p.y as usize * grid.size + p.x as usize] && p.chebyshev(spawn) >= 3 && rng.gen_bool(COW_DENSITY) {
            cows.push(CreatureInstance::new(Creature::Cow, p));
        }
    }
    cows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_maps() {
        let cfg = WorldConfig { size: 8, ..WorldConfig::default() };
        assert!(matches!(generate_world(1, &cfg), Err(WorldError::InvalidConfig(_))));
    }

    #[test]
    fn same_seed_same_world() {
        let cfg = WorldConfig::default();
        assert_eq!(generate_world(11, &cfg).unwrap(), generate_world(11, &cfg).unwrap());
        assert_ne!(generate_world(11, &cfg).unwrap().to_json(), generate_world(12, &cfg).unwrap().to_json());
    }

    #[test]
    fn spawn_is_grass() {
        let s = generate_world(5, &WorldConfig::default()).unwrap();
        assert_eq!(s.texture_at(s.player_pos()), Texture::Grass);
    }
}
