//! Greedy experience-driven planner.
//!
//! Each step the planner picks the deepest unachieved objective it can make
//! progress on, works out which missing precondition to fix first (items,
//! then nearby stations, then the faced cell), and either emits the
//! objective action or walks toward a cell that fixes the next atom. All
//! reasoning uses the mined experience; objective actions are only emitted
//! when the mined preconditions hold in the current state.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Agent, AgentError};
use crate::laws::{Attribute, Condition, Creature, Effect, ItemKind, Objective, Texture};
use crate::miner::Experience;
use crate::world::{Action, Direction, GameState, Pos};

const SEARCH_RADIUS: i32 = 20;
const UNREACHABLE_COOLDOWN: u64 = 40;
const EXPLORE_TICKS: u64 = 40;
const MAX_RECURSION: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum NavGoal {
    /// Stand so that the faced cell matches, with `near` textures in the 3×3 around the standing cell.
    Face { textures: Vec<Texture>, creature: Option<(Creature, bool)>, near: Vec<Texture> },
    /// Stand anywhere with every `near` texture in the 3×3 around.
    Stand { near: Vec<Texture> },
    Explore(Pos),
}

/// What the planner is doing and how it intends to get there.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PlannerState {
    pub subgoal: Option<Objective>,
    pub nav_goal: Option<NavGoal>,
    pub plan: Vec<(Pos, Direction)>,
    pub replans: u32,
    survival: Option<Objective>,
    #[serde(skip)]
    unreachable: HashMap<NavGoal, u64>,
    explore: Option<(Pos, u64)>,
    last_pos: Option<Pos>,
    stuck: u32,
}

enum Step {
    Emit(Action),
    Go(NavGoal),
    Blocked,
}

pub struct Planner {
    experience: Experience,
    depth: BTreeMap<Objective, u32>,
    rng: ChaCha8Rng,
    ps: PlannerState,
}

fn near_ok(state: &GameState, p: Pos, near: &[Texture]) -> bool {
    near.iter().all(|t| (-1..=1).any(|dy| (-1..=1).any(|dx| state.texture_at(p.offset(dx, dy)) == *t && state.in_bounds(p.offset(dx, dy)))))
}

fn goal_met(state: &GameState, goal: &NavGoal, p: Pos, d: Direction) -> bool {
    match goal {
        NavGoal::Face { textures, creature, near } => {
            let f = p.step(d);
            if !state.in_bounds(f) || !near_ok(state, p, near) {
                return false;
            }
            match creature {
                Some((kind, ripe)) => matches!(state.occupant_at(f), Some(o) if o.kind() == *kind && (!ripe || o.is_ripe())),
                None => state.occupant_at(f).is_none() && textures.contains(&state.texture_at(f)),
            }
        }
        NavGoal::Stand { near } => near_ok(state, p, near),
        NavGoal::Explore(target) => p.chebyshev(*target) <= 1,
    }
}

fn dir_index(d: Direction) -> usize {
    Direction::ALL.iter().position(|x| *x == d).unwrap()
}

/// Breadth-first search over (position, facing) within a window around the player.
fn search(state: &GameState, goal: &NavGoal, can_dig: bool) -> Option<Vec<(Pos, Direction)>> {
    let start = (state.player_pos(), state.facing());
    let origin = start.0;
    let side = (2 * SEARCH_RADIUS + 1) as usize;
    let index = |p: Pos, d: Direction| -> Option<usize> {
        let (x, y) = (p.x - origin.x + SEARCH_RADIUS, p.y - origin.y + SEARCH_RADIUS);
        if x < 0 || y < 0 || x as usize >= side || y as usize >= side {
            return None;
        }
        Some(((y as usize * side + x as usize) * 4) + dir_index(d))
    };
    let mut parent: Vec<u32> = vec![u32::MAX; side * side * 4];
    let start_i = index(start.0, start.1)?;
    parent[start_i] = start_i as u32;
    let mut queue = VecDeque::from([start]);
    let decode = |i: usize| -> (Pos, Direction) {
        let d = Direction::ALL[i % 4];
        let cell = i / 4;
        (Pos::new((cell % side) as i32 - SEARCH_RADIUS + origin.x, (cell / side) as i32 - SEARCH_RADIUS + origin.y), d)
    };
    while let Some((p, d)) = queue.pop_front() {
        if goal_met(state, goal, p, d) {
            let mut path = vec![(p, d)];
            let mut i = index(p, d).unwrap();
            while parent[i] as usize != i {
                i = parent[i] as usize;
                path.push(decode(i));
            }
            path.reverse();
            return Some(path);
        }
        let here = index(p, d).unwrap();
        for d2 in Direction::ALL {
            let q = p.step(d2);
            let next = if state.is_free_walkable(q) || (can_dig && state.in_bounds(q) && state.texture_at(q) == Texture::Stone && state.occupant_at(q).is_none()) {
                (q, d2)
            } else {
                (p, d2)
            };
            if let Some(j) = index(next.0, next.1) {
                if parent[j] == u32::MAX {
                    parent[j] = here as u32;
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

impl Planner {
    pub fn new(experience: Experience, seed: u64) -> Planner {
        let depth = dependency_depths(&experience);
        Planner { experience, depth, rng: ChaCha8Rng::seed_from_u64(seed), ps: PlannerState::default() }
    }

    pub fn state(&self) -> &PlannerState {
        &self.ps
    }

    pub fn depth(&self, objective: Objective) -> Option<u32> {
        self.depth.get(&objective).copied()
    }

    fn conditions(&self, g: Objective) -> Option<&[Condition]> {
        self.experience.get(g).and_then(|e| e.preconditions.as_deref())
    }

    fn holds(&self, g: Objective, state: &GameState) -> bool {
        self.experience.get(g).is_some_and(|e| e.holds(state))
    }

    fn producer_of_item(&self, item: ItemKind, exclude: Objective) -> Option<Objective> {
        self.experience
            .entries
            .values()
            .filter(|e| e.objective != exclude && e.preconditions.is_some())
            .filter(|e| e.benefits.iter().any(|b| matches!(b, Effect::Gain { item: i, .. } if *i == item)))
            .min_by_key(|e| (self.depth[&e.objective], e.objective))
            .map(|e| e.objective)
    }

    fn producer_of_texture(&self, texture: Texture) -> Option<Objective> {
        self.experience
            .entries
            .values()
            .filter(|e| e.preconditions.is_some())
            .filter(|e| e.benefits.iter().any(|b| matches!(b, Effect::FaceBecomes { texture: t } if *t == texture)))
            .min_by_key(|e| (self.depth[&e.objective], e.objective))
            .map(|e| e.objective)
    }

    fn is_unreachable(&self, goal: &NavGoal, now: u64) -> bool {
        self.ps.unreachable.get(goal).is_some_and(|until| *until > now)
    }

    /// The next thing to do toward `g`.
    fn resolve(&self, g: Objective, state: &GameState, near_ctx: &[Texture], depth: usize) -> Step {
        if depth > MAX_RECURSION {
            return Step::Blocked;
        }
        let Some(conds) = self.conditions(g) else {
            return Step::Blocked;
        };
        if self.holds(g, state) {
            return Step::Emit(g.action());
        }
        let now = state.step_count();
        for c in conds.iter().filter(|c| !c.holds(state)) {
            let item = match c {
                Condition::HasAtLeast { item, .. } => Some(*item),
                Condition::HasAnyOf { items } => items.iter().copied().find(|i| self.producer_of_item(*i, g).is_some()),
                _ => continue,
            };
            return match item.and_then(|i| self.producer_of_item(i, g)) {
                Some(p) => self.resolve(p, state, &[], depth + 1),
                None => Step::Blocked,
            };
        }
        let need: Vec<Texture> = conds
            .iter()
            .filter_map(|c| match c {
                Condition::NearbyTexture { texture, .. } => Some(*texture),
                _ => None,
            })
            .collect();
        let here = state.player_pos();
        if !near_ok(state, here, &need) {
            let n = need.len();
            let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
            masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
            for mask in masks {
                let subset: Vec<Texture> = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| need[b]).collect();
                let full = subset.len() == n;
                if !full && near_ok(state, here, &subset) {
                    let missing = need.iter().copied().find(|t| !subset.contains(t)).expect("subset is partial");
                    return match self.producer_of_texture(missing) {
                        Some(p) => self.resolve(p, state, &subset, depth + 1),
                        None => Step::Blocked,
                    };
                }
                if !subset.is_empty() {
                    let goal = NavGoal::Stand { near: subset };
                    if !self.is_unreachable(&goal, now) {
                        return Step::Go(goal);
                    }
                }
            }
            return Step::Blocked;
        }
        let mut near: Vec<Texture> = need.iter().chain(near_ctx).copied().collect::<BTreeSet<_>>().into_iter().collect();
        near.sort();
        for c in conds.iter().filter(|c| !c.holds(state)) {
            match c {
                Condition::FacingTexture { allowed } => {
                    return Step::Go(NavGoal::Face { textures: allowed.iter().copied().collect(), creature: None, near });
                }
                Condition::FacingCreature { creature, ripe_required } => {
                    return Step::Go(NavGoal::Face { textures: Vec::new(), creature: Some((*creature, *ripe_required)), near });
                }
                _ => {}
            }
        }
        Step::Blocked
    }

    fn can_dig(&self, state: &GameState) -> bool {
        self.conditions(Objective::CollectStone).is_some_and(|conds| {
            conds.iter().filter(|c| !matches!(c, Condition::FacingTexture { .. } | Condition::FacingCreature { .. })).all(|c| c.holds(state))
        })
    }

    fn survival_target(&mut self, state: &GameState) -> Option<Objective> {
        let rules = [
            (Attribute::Drink, Objective::CollectDrink, 8),
            (Attribute::Food, Objective::EatCow, 6),
            (Attribute::Energy, Objective::Sleep, 3),
        ];
        if let Some(current) = self.ps.survival {
            let (attr, _, exit) = rules.iter().find(|r| r.1 == current).copied().expect("known survival objective");
            if state.attribute_value(attr) >= exit {
                self.ps.survival = None;
            }
        }
        if self.ps.survival.is_none() {
            self.ps.survival = rules
                .iter()
                .filter(|(attr, g, _)| state.attribute_value(*attr) < 3 && self.conditions(*g).is_some())
                .min_by_key(|(attr, _, _)| state.attribute_value(*attr))
                .map(|r| r.1);
        }
        self.ps.survival
    }

    fn threat(&self, state: &GameState) -> Option<Objective> {
        let p = state.player_pos();
        let g = Objective::DefeatZombie;
        let conds = self.conditions(g)?;
        let armed = conds.iter().filter(|c| !matches!(c, Condition::FacingCreature { .. } | Condition::FacingTexture { .. })).all(|c| c.holds(state));
        let close = state.creatures().iter().any(|c| c.kind == Creature::Zombie && c.pos.manhattan(p) <= 2);
        (armed && close).then_some(g)
    }

    fn follow(&mut self, state: &GameState, goal: &NavGoal, can_dig: bool) -> Option<Action> {
        let now = state.step_count();
        let pos = state.player_pos();
        let valid_plan = self.ps.nav_goal.as_ref() == Some(goal)
            && self.ps.plan.last().is_some_and(|(p, d)| goal_met(state, goal, *p, *d))
            && self.ps.plan.iter().any(|(p, _)| *p == pos)
            && self.ps.stuck < 4;
        if !valid_plan {
            self.ps.replans += 1;
            self.ps.stuck = 0;
            match search(state, goal, can_dig) {
                Some(plan) => {
                    self.ps.plan = plan;
                    self.ps.nav_goal = Some(goal.clone());
                }
                None => {
                    self.ps.unreachable.insert(goal.clone(), now + UNREACHABLE_COOLDOWN);
                    self.ps.plan.clear();
                    self.ps.nav_goal = None;
                    return None;
                }
            }
        }
        let i = self.ps.plan.iter().rposition(|(p, _)| *p == pos)?;
        let facing = state.facing();
        let dir = if i + 1 < self.ps.plan.len() {
            let (q, d) = self.ps.plan[i + 1];
            if q == pos {
                d
            } else {
                Direction::ALL.into_iter().find(|d| pos.step(*d) == q)?
            }
        } else {
            let d = self.ps.plan[i].1;
            if d == facing {
                return None;
            }
            d
        };
        let q = pos.step(dir);
        if self.ps.last_pos == Some(pos) {
            self.ps.stuck += 1;
        } else {
            self.ps.stuck = 0;
        }
        self.ps.last_pos = Some(pos);
        if !state.is_free_walkable(q) && state.texture_at(q) == Texture::Stone && facing == dir && i + 1 < self.ps.plan.len() && self.ps.plan[i + 1].0 == q {
            self.ps.stuck = 0;
            if self.holds(Objective::CollectStone, state) {
                return Some(Action::CollectStone);
            }
            self.ps.plan.clear();
            return None;
        }
        Some(dir.move_action())
    }

    fn explore(&mut self, state: &GameState) -> Action {
        let now = state.step_count();
        let p = state.player_pos();
        let fresh = match self.ps.explore {
            Some((t, since)) => now.saturating_sub(since) > EXPLORE_TICKS || p.chebyshev(t) <= 1,
            None => true,
        };
        if fresh {
            let mut target = p;
            for _ in 0..30 {
                let c = p.offset(self.rng.gen_range(-12..=12), self.rng.gen_range(-12..=12));
                if c.chebyshev(p) >= 6 && state.is_free_walkable(c) {
                    target = c;
                    break;
                }
            }
            self.ps.explore = Some((target, now));
        }
        let (target, _) = self.ps.explore.expect("explore target set");
        let goal = NavGoal::Explore(target);
        let dig = self.can_dig(state);
        if let Some(a) = self.follow(state, &goal, dig) {
            return a;
        }
        self.ps.explore = None;
        Direction::ALL[self.rng.gen_range(0..4)].move_action()
    }

    fn step_for(&mut self, state: &GameState, g: Objective, step: Step) -> Option<Action> {
        match step {
            Step::Emit(a) => {
                self.ps.subgoal = Some(g);
                Some(a)
            }
            Step::Go(goal) => {
                if self.is_unreachable(&goal, state.step_count()) {
                    return None;
                }
                let dig = self.can_dig(state);
                let a = self.follow(state, &goal, dig)?;
                self.ps.subgoal = Some(g);
                Some(a)
            }
            Step::Blocked => None,
        }
    }

    /// Chooses the next action for `state`.
    pub fn plan_act(&mut self, state: &GameState) -> Action {
        if state.is_sleeping() {
            return Action::Noop;
        }
        if let Some(g) = self.survival_target(state) {
            let step = self.resolve(g, state, &[], 0);
            if let Some(a) = self.step_for(state, g, step) {
                return a;
            }
        }
        if let Some(g) = self.threat(state) {
            let step = self.resolve(g, state, &[], 0);
            if let Some(a) = self.step_for(state, g, step) {
                return a;
            }
        }
        let mut open: Vec<Objective> = self
            .experience
            .entries
            .keys()
            .copied()
            .filter(|g| !state.unlocked().contains(g) && self.conditions(*g).is_some())
            .collect();
        open.sort_by_key(|g| (std::cmp::Reverse(self.depth[g]), *g));
        if let Some(g) = open.iter().copied().find(|g| self.holds(*g, state)) {
            self.ps.subgoal = Some(g);
            return g.action();
        }
        for g in open {
            let step = self.resolve(g, state, &[], 0);
            if let Some(a) = self.step_for(state, g, step) {
                return a;
            }
        }
        self.ps.subgoal = None;
        self.explore(state)
    }
}

/// Depth of each mined objective in the dependency order implied by the
/// mined experience: one more than the deepest producer of anything it needs.
pub fn dependency_depths(experience: &Experience) -> BTreeMap<Objective, u32> {
    fn visit(g: Objective, e: &Experience, memo: &mut BTreeMap<Objective, u32>, stack: &mut Vec<Objective>) -> u32 {
        if let Some(d) = memo.get(&g) {
            return *d;
        }
        if stack.contains(&g) {
            return 0;
        }
        stack.push(g);
        let conds = e.get(g).and_then(|x| x.preconditions.clone()).unwrap_or_default();
        let producers = |pred: &dyn Fn(&Effect) -> bool| -> Vec<Objective> {
            e.entries.values().filter(|x| x.objective != g && x.benefits.iter().any(pred)).map(|x| x.objective).collect()
        };
        let mut deepest = 0;
        for c in &conds {
            let ps = match c {
                Condition::HasAtLeast { item, .. } => producers(&|b| matches!(b, Effect::Gain { item: i, .. } if i == item)),
                Condition::HasAnyOf { items } => producers(&|b| matches!(b, Effect::Gain { item: i, .. } if items.contains(i))),
                Condition::NearbyTexture { texture, .. } => producers(&|b| matches!(b, Effect::FaceBecomes { texture: t } if t == texture)),
                _ => Vec::new(),
            };
            if let Some(d) = ps.into_iter().map(|p| visit(p, e, memo, stack)).min() {
                deepest = deepest.max(d);
            }
        }
        stack.pop();
        let d = deepest + 1;
        memo.insert(g, d);
        d
    }
    let mut memo = BTreeMap::new();
    for g in experience.entries.keys() {
        visit(*g, experience, &mut memo, &mut Vec::new());
    }
    memo
}

/// Planner wrapped as an [`Agent`]; the planner state resets each episode.
pub struct PlannerAgent {
    experience: Experience,
    planner: Planner,
}

impl PlannerAgent {
    pub fn new(experience: Experience) -> PlannerAgent {
        PlannerAgent { planner: Planner::new(experience.clone(), 0), experience }
    }

    pub fn planner(&self) -> &Planner {
        &self.planner
    }
}

impl Agent for PlannerAgent {
    fn name(&self) -> &str {
        "planner"
    }

    fn reset(&mut self, seed: u64) {
        self.planner = Planner::new(self.experience.clone(), seed);
    }

    fn act(&mut self, state: &GameState) -> Result<Action, AgentError> {
        Ok(self.planner.plan_act(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::builtin_law_table;
    use crate::world::{generate_world, WorldConfig};

    fn exact() -> Experience {
        Experience::from_laws(builtin_law_table())
    }

    #[test]
    fn depths_follow_the_tech_tree() {
        let d = dependency_depths(&exact());
        assert_eq!(d[&Objective::CollectWood], 1);
        assert!(d[&Objective::PlaceTable] > d[&Objective::CollectWood]);
        assert!(d[&Objective::MakeWoodPickaxe] > d[&Objective::PlaceTable]);
        assert!(d[&Objective::CollectDiamond] > d[&Objective::MakeIronPickaxe]);
        let max = d.values().max().unwrap();
        assert_eq!(d[&Objective::CollectDiamond], *max);
    }

    #[test]
    fn crafts_when_standing_at_a_table() {
        let mut s = generate_world(3, &WorldConfig::default()).unwrap();
        s.clear_creatures_within(3);
        let p = s.player_pos();
        for dx in -1..=1 {
            for dy in -1..=1 {
                s.set_texture(p.offset(dx, dy), Texture::Grass);
            }
        }
        s.set_texture(p.offset(1, 0), Texture::Table);
        s.set_count(ItemKind::Wood, 1);
        s.set_facing(Direction::North);
        let mut planner = Planner::new(exact(), 0);
        assert_eq!(planner.plan_act(&s), Action::MakeWoodPickaxe);
    }
}
