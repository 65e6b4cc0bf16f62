use lawcraft_core::collect::StateSampler;
use lawcraft_core::laws::{Attribute, Creature, ItemKind, Objective, Texture};
use lawcraft_core::world::{generate_world, legality, Action, Direction, GameState, WorldConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn objective_actions() -> Vec<Action> {
    Objective::ALL.iter().map(|o| o.action()).collect()
}

/// Illegal objective attempts leave the state exactly as a noop would,
/// including the random stream, both after the action phase and after the full step.
fn assert_gated(state: &GameState, action: Action) -> bool {
    if legality(state, action).unwrap() {
        return false;
    }
    let mut a = state.clone();
    let mut b = state.clone();
    a.apply_action_phase(action);
    b.apply_action_phase(Action::Noop);
    assert_eq!(a, b, "phase 1 of illegal {action} differs from noop");
    let mut a = state.clone();
    let mut b = state.clone();
    let ia = a.step(action).unwrap();
    let ib = b.step(Action::Noop).unwrap();
    assert_eq!(a, b, "step of illegal {action} differs from noop");
    assert!(!ia.valid && ia.unlocked.is_none());
    assert_eq!((ia.attribute_deltas, ia.reward, ia.done), (ib.attribute_deltas, ib.reward, ib.done));
    true
}

#[test]
fn illegal_objective_actions_are_noops() {
    let mut sampler = StateSampler::new(101, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let actions = objective_actions();
    let mut illegal = 0;
    for _ in 0..10_000 {
        let state = sampler.sample();
        let action = actions[rng.gen_range(0..actions.len())];
        if assert_gated(&state, action) {
            illegal += 1;
        }
    }
    assert!(illegal > 5_000, "only {illegal} illegal attempts sampled");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn gating_holds_on_walked_worlds(seed in any::<u64>(), walk in proptest::collection::vec(0usize..27, 0..60), pick in 0usize..22) {
        let mut s = generate_world(seed % 50, &WorldConfig::default()).unwrap();
        for a in walk {
            if s.is_done() { break; }
            s.step(Action::ALL[a]).unwrap();
        }
        prop_assume!(!s.is_done());
        assert_gated(&s, objective_actions()[pick]);
    }
}

#[test]
fn same_seed_same_trajectory() {
    let run = || {
        let mut s = generate_world(9, &WorldConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut infos = Vec::new();
        while !s.is_done() && s.step_count() < 2_000 {
            infos.push(s.step(Action::ALL[rng.gen_range(0..Action::COUNT)]).unwrap());
        }
        (s.to_json(), serde_json::to_string(&infos).unwrap())
    };
    assert_eq!(run(), run());
}

fn staged(face: Texture) -> GameState {
    let mut s = generate_world(4, &WorldConfig::default()).unwrap();
    s.clear_creatures_within(4);
    s.clear_inventory();
    let p = s.player_pos();
    for dy in -1..=1 {
        for dx in -1..=1 {
            s.set_texture(p.offset(dx, dy), Texture::Grass);
        }
    }
    s.set_facing(Direction::North);
    s.set_texture(s.faced_pos(), face);
    s
}

#[test]
fn legality_examples() {
    let mut s = staged(Texture::Tree);
    assert!(legality(&s, Action::CollectWood).unwrap());
    let info = s.step(Action::CollectWood).unwrap();
    assert!(info.valid);
    assert_eq!(info.unlocked, Some(Objective::CollectWood));
    assert_eq!(s.inventory_count(ItemKind::Wood), 1);

    let s = staged(Texture::Stone);
    assert!(!legality(&s, Action::CollectStone).unwrap());
    let mut s = staged(Texture::Stone);
    s.set_count(ItemKind::WoodPickaxe, 1);
    assert!(legality(&s, Action::CollectStone).unwrap());

    for target in [Texture::Water, Texture::Lava, Texture::Grass, Texture::Sand, Texture::Path] {
        let mut s = staged(target);
        s.set_count(ItemKind::Stone, 1);
        assert!(legality(&s, Action::PlaceStone).unwrap(), "place_stone onto {target:?}");
    }
    let mut s = staged(Texture::Tree);
    s.set_count(ItemKind::Stone, 1);
    assert!(!legality(&s, Action::PlaceStone).unwrap());

    let mut s = staged(Texture::Grass);
    s.set_attribute(Attribute::Energy, 9);
    assert!(!legality(&s, Action::Sleep).unwrap());
    s.set_attribute(Attribute::Energy, 8);
    assert!(legality(&s, Action::Sleep).unwrap());

    let mut s = staged(Texture::Grass);
    let faced = s.faced_pos();
    s.spawn_creature(Creature::Zombie, faced, false);
    assert!(!legality(&s, Action::DefeatZombie).unwrap());
    s.set_count(ItemKind::WoodSword, 1);
    assert!(legality(&s, Action::DefeatZombie).unwrap());
    assert!(!legality(&s, Action::CollectSapling).unwrap(), "a creature on grass hides the texture");
}

#[test]
fn crafting_needs_a_nearby_table() {
    let mut s = staged(Texture::Grass);
    s.set_count(ItemKind::Wood, 1);
    assert!(!legality(&s, Action::MakeWoodPickaxe).unwrap());
    let p = s.player_pos();
    s.set_texture(p.offset(1, 1), Texture::Table);
    assert!(legality(&s, Action::MakeWoodPickaxe).unwrap());
    s.step(Action::MakeWoodPickaxe).unwrap();
    assert_eq!(s.inventory_count(ItemKind::WoodPickaxe), 1);
    assert_eq!(s.inventory_count(ItemKind::Wood), 0);
}
