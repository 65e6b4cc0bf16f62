use lawcraft_core::collect::{collect_records, CollectConfig, Diversity};
use lawcraft_core::laws::{builtin_law_table, Condition, ItemKind, Objective};
use lawcraft_core::miner::{mine_symbolic, Experience, MineError};
use lawcraft_core::records::RecordSet;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort();
    v
}

#[test]
fn max_diversity_recovers_every_law() {
    let records = collect_records(&CollectConfig::default()).unwrap();
    let outcome = mine_symbolic(&records);
    assert!(outcome.errors.is_empty(), "{:?}", outcome.errors);
    let table = builtin_law_table();
    for law in table.iter() {
        let e = outcome.experience.get(law.objective).unwrap();
        assert_eq!(e.preconditions.as_deref().unwrap(), sorted(&law.preconditions), "{}", law.objective);
        assert_eq!(e.costs, sorted(&law.costs), "{}", law.objective);
        assert_eq!(e.benefits, sorted(&law.benefits), "{}", law.objective);
    }
    assert_eq!(outcome.experience, {
        let mut exact = Experience::from_laws(table);
        for e in exact.entries.values_mut() {
            e.source = lawcraft_core::miner::ExperienceSource::Symbolic;
        }
        exact
    });
}

#[test]
fn mined_text_matches_expected_lines() {
    let records = collect_records(&CollectConfig::default()).unwrap();
    let text = mine_symbolic(&records).experience.to_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 22);
    assert!(lines[13].starts_with("14. Make Stone Pickaxe: Requires 1 wood and 1 stone and table nearby."), "{}", lines[13]);
    assert!(lines[1].starts_with("2. Place Table: Requires 2 woods and facing grass or sand or path."), "{}", lines[1]);
}

#[test]
fn missing_failures_keep_incidentals() {
    let cfg = CollectConfig { failures: 0, diversity: Diversity::Low, objectives: vec![Objective::CollectWood], seed: 3, ..CollectConfig::default() };
    let records = collect_records(&cfg).unwrap();
    let outcome = mine_symbolic(&records);
    let pre = outcome.experience.get(Objective::CollectWood).unwrap().preconditions.clone().unwrap();
    let truth = &builtin_law_table().get(Objective::CollectWood).preconditions;
    assert!(truth.iter().all(|t| pre.contains(t)));
}

#[test]
fn contradictory_failure_is_reported() {
    let cfg = CollectConfig { objectives: vec![Objective::CollectWood], ..CollectConfig::default() };
    let mut records = collect_records(&cfg).unwrap();
    let mut forged = records.records[0].clone();
    forged.valid = false;
    records.push(forged);
    let outcome = mine_symbolic(&records);
    assert_eq!(
        outcome.errors.get(&Objective::CollectWood),
        Some(&MineError::Inconsistent { objective: Objective::CollectWood, record: 21 })
    );
}

#[test]
fn sword_requirement_is_a_disjunction() {
    let records = collect_records(&CollectConfig::default()).unwrap();
    let pre = mine_symbolic(&records).experience.get(Objective::DefeatZombie).unwrap().preconditions.clone().unwrap();
    assert!(pre.contains(&Condition::any_of(ItemKind::SWORDS)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn record_order_does_not_matter(seed in 0u64..1000) {
        let base = collect_records(&CollectConfig { seed, ..CollectConfig::default() }).unwrap();
        let mut shuffled = base.records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = mine_symbolic(&base).experience;
        let b = mine_symbolic(&RecordSet::new(shuffled)).experience;
        prop_assert_eq!(a, b);
    }
}
