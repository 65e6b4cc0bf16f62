use lawcraft_core::agents::net::{Architecture, Policy};
use lawcraft_core::agents::obs::Observation;
use lawcraft_core::agents::ppo::{ppo_loss, Sample};
use lawcraft_core::agents::{train, Agent, PlannerAgent, PolicyAgent, RandomAgent, TrainConfig};
use lawcraft_core::eval::run_episodes;
use lawcraft_core::laws::builtin_law_table;
use lawcraft_core::miner::Experience;
use lawcraft_core::rewardgen::{PredicateSet, Preset};
use lawcraft_core::world::{generate_world, Action, WorldConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest relative error between analytic and central-difference gradients
/// over 20 random batches of a tiny policy.
pub fn gradient_check_max_rel_error(seed: u64) -> f64 {
    let arch = Architecture { input: 2, hidden: 2, actions: Action::COUNT };
    assert!(arch.param_count() <= 100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = TrainConfig { hidden: 2, ..TrainConfig::default() };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut policy = Policy::new(arch, &mut rng);
        for p in &mut policy.params {
            *p += rng.gen_range(-0.5..0.5);
        }
        let batch: Vec<Sample> = (0..8)
            .map(|_| {
                let obs = Observation::from_dense(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
                let action = rng.gen_range(0..arch.actions);
                let lp = policy.forward(&obs).log_probs[action];
                // Keep the ratio well inside or well outside the clip range so
                // the loss is smooth around the evaluation point.
                let shift = if rng.gen_bool(0.5) { rng.gen_range(-0.1..0.1) } else { rng.gen_range(0.4..0.8) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 } };
                Sample { obs, action, old_log_prob: lp + shift, advantage: rng.gen_range(-2.0..2.0), ret: rng.gen_range(-3.0..3.0) }
            })
            .collect();
        let mut grad = vec![0.0; arch.param_count()];
        ppo_loss(&policy, &batch, &cfg, &mut grad).unwrap();
        let mut scratch = vec![0.0; arch.param_count()];
        let eps = 1e-6;
        for k in 0..arch.param_count() {
            let base = policy.params[k];
            policy.params[k] = base + eps;
            let up = ppo_loss(&policy, &batch, &cfg, &mut scratch).unwrap().total;
            policy.params[k] = base - eps;
            let down = ppo_loss(&policy, &batch, &cfg, &mut scratch).unwrap().total;
            policy.params[k] = base;
            let fd = (up - down) / (2.0 * eps);
            let scale = grad[k].abs().max(fd.abs());
            let rel = if scale < 1e-8 { 0.0 } else { (grad[k] - fd).abs() / scale };
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let worst = gradient_check_max_rel_error(17);
    assert!(worst <= 1e-4, "max relative error {worst:e}");
}

#[test]
fn checkpoints_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let policy = Policy::new(Architecture { input: 10, hidden: 4, actions: Action::COUNT }, &mut rng);
    let json = policy.to_json();
    let back = Policy::from_json(&json).unwrap();
    assert_eq!(back, policy);
    assert_eq!(back.to_json(), json);
    assert!(Policy::from_json("{\"version\":99}").is_err());
}

#[test]
fn short_training_is_deterministic() {
    let preds = PredicateSet::from_laws(builtin_law_table());
    let env = |s: u64| generate_world(s, &WorldConfig::default());
    let cfg = TrainConfig { total_steps: 1_024, rollout: 256, minibatch: 64, hidden: 8, seed: 4, ..TrainConfig::default() };
    let a = train(&env, &cfg, &Preset::HealthAchievementPenalty.config(), &preds, |_| {}).unwrap();
    let b = train(&env, &cfg, &Preset::HealthAchievementPenalty.config(), &preds, |_| {}).unwrap();
    assert_eq!(a.policy, b.policy);
    assert_eq!(a.log.len(), 4);
    let mut agent = PolicyAgent::new(a.policy.clone()).unwrap();
    let report = run_episodes(&mut agent, &env, &[1, 2]).unwrap();
    assert_eq!(report.episodes.len(), 2);

    let parallel = TrainConfig { envs: 4, ..cfg.clone() };
    let c = train(&env, &parallel, &Preset::HealthAchievement.config(), &preds, |_| {}).unwrap();
    let d = train(&env, &parallel, &Preset::HealthAchievement.config(), &preds, |_| {}).unwrap();
    assert_eq!(c.policy, d.policy);
    assert_ne!(c.policy, a.policy);
    let uneven = TrainConfig { envs: 3, ..cfg };
    assert!(train(&env, &uneven, &Preset::HealthOnly.config(), &preds, |_| {}).is_err());
}

#[test]
fn planner_beats_random_on_matched_seeds() {
    let env = |s: u64| generate_world(s, &WorldConfig { step_limit: 3_000, ..WorldConfig::default() });
    let seeds: Vec<u64> = (40..46).collect();
    let mut planner = PlannerAgent::new(Experience::from_laws(builtin_law_table()));
    let mut random = RandomAgent::new();
    let p = run_episodes(&mut planner, &env, &seeds).unwrap();
    let r = run_episodes(&mut random, &env, &seeds).unwrap();
    assert!(p.score > r.score, "planner {} random {}", p.score, r.score);
    assert!(p.median_unlocked().is_superset(&r.median_unlocked()));
    assert_eq!(planner.name(), "planner");
}
