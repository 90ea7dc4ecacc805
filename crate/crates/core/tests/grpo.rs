// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtlseek::grpo::{
    advantages, gradient, objective, policy_objective, train_demo, DemoConfig, GroupBatch, GrpoConfig, SampledGroup,
    SingleBest, ToyPolicy,
};

fn random_case(rng: &mut ChaCha8Rng, beta: f64) -> (ToyPolicy, SampledGroup, GrpoConfig) {
    let vocab = rng.random_range(2..=8);
    let g = rng.random_range(2..=12);
    let logits: Vec<f64> = (0..vocab).map(|_| rng.random_range(-2.0..2.0)).collect();
    let policy = ToyPolicy {
        reference: logits.iter().map(|l| l + rng.random_range(-0.5..0.5)).collect(),
        logits,
    };
    let old: Vec<f64> = policy.logits.iter().map(|l| l + rng.random_range(-0.3..0.3)).collect();
    let old_lp = ToyPolicy::new(old).log_probs();
    let actions = policy.sample(g, rng);
    let rewards: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
    let cfg = GrpoConfig {
        group_size: g,
        clip_eps: 0.2,
        beta,
        ..GrpoConfig::default()
    };
    let group = SampledGroup {
        logprob_old: actions.iter().map(|&a| old_lp[a]).collect(),
        advantages: advantages(&rewards, cfg.adv_eps),
        actions,
        rewards,
    };
    (policy, group, cfg)
}

#[test]
fn vanilla_policy_gradient_when_on_policy_without_penalty() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (policy, mut group, mut cfg) = random_case(&mut rng, 0.0);
        cfg.beta = 0.0;
        let lp = policy.log_probs();
        group.logprob_old = group.actions.iter().map(|&a| lp[a]).collect();
        let p = policy.probs();
        let g = group.actions.len() as f64;
        let mut expected = vec![0.0; p.len()];
        for (&a, adv) in group.actions.iter().zip(&group.advantages) {
            for (j, e) in expected.iter_mut().enumerate() {
                *e += adv * ((j == a) as u8 as f64 - p[j]) / g;
            }
        }
        for (x, y) in gradient(&policy, &group, &cfg).iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn penalty_gradient_vanishes_at_the_reference() {
    let policy = ToyPolicy::new(vec![0.3, -1.0, 2.0]);
    let lp = policy.log_probs();
    let actions = vec![0, 2, 2, 1];
    let group = SampledGroup {
        logprob_old: actions.iter().map(|&a| lp[a]).collect(),
        advantages: vec![0.0; 4],
        rewards: vec![1.0; 4],
        actions,
    };
    let cfg = GrpoConfig {
        group_size: 4,
        beta: 5.0,
        ..GrpoConfig::default()
    };
    assert!(gradient(&policy, &group, &cfg).iter().all(|g| g.abs() < 1e-12));
    assert!(policy_objective(&policy, &group, &cfg).unwrap().abs() < 1e-12);
}

#[test]
fn strong_penalty_keeps_policy_near_reference() {
    let cfg = GrpoConfig {
        beta: 100.0,
        ..GrpoConfig::default()
    };
    let demo = DemoConfig {
        steps: 300,
        lr: 0.01,
        ..DemoConfig::default()
    };
    let curve = train_demo(ToyPolicy::uniform(8), &mut SingleBest { target: 3 }, &cfg, &demo).unwrap();
    assert!(curve.final_policy.tv_to_reference() < 0.01);

    let free = GrpoConfig { beta: 0.0, ..cfg };
    let curve = train_demo(
        ToyPolicy::uniform(8),
        &mut SingleBest { target: 3 },
        &free,
        &DemoConfig { lr: 0.1, ..demo },
    )
    .unwrap();
    assert!(curve.final_policy.tv_to_reference() > 0.3);
}

#[test]
fn demo_is_reproducible_per_seed() {
    let cfg = GrpoConfig::default();
    let demo = DemoConfig {
        steps: 40,
        ..DemoConfig::default()
    };
    let run = |seed| {
        train_demo(
            ToyPolicy::uniform(6),
            &mut SingleBest { target: 1 },
            &cfg,
            &DemoConfig { seed, ..demo },
        )
        .unwrap()
        .to_csv()
    };
    assert_eq!(run(9), run(9));
    assert_ne!(run(9), run(10));
}

fn batch(rewards: Vec<f64>, lp: &[(f64, f64, f64)]) -> GroupBatch {
    GroupBatch {
        advantages: advantages(&rewards, 1e-8),
        rewards,
        logprob_current: lp.iter().map(|t| t.0).collect(),
        logprob_old: lp.iter().map(|t| t.1).collect(),
        logprob_ref: lp.iter().map(|t| t.2).collect(),
    }
}

fn logprobs(n: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    proptest::collection::vec((-4.0..-0.01f64, -4.0..-0.01f64, -4.0..-0.01f64), n)
}

proptest! {
    #[test]
    fn advantages_are_standardized(rewards in proptest::collection::vec(-10.0..10.0f64, 2..32)) {
        let a = advantages(&rewards, 1e-8);
        prop_assert_eq!(a.len(), rewards.len());
        prop_assert!(a.iter().sum::<f64>().abs() < 1e-6);
        let spread = rewards.iter().cloned().fold(f64::MIN, f64::max) - rewards.iter().cloned().fold(f64::MAX, f64::min);
        if spread > 1e-6 {
            let var = a.iter().map(|x| x * x).sum::<f64>() / a.len() as f64;
            prop_assert!((var - 1.0).abs() < 1e-4);
        }
        for i in 0..rewards.len() {
            for j in 0..rewards.len() {
                if rewards[i] < rewards[j] {
                    prop_assert!(a[i] < a[j]);
                }
            }
        }
    }

    #[test]
    fn objective_ignores_a_constant_reward_shift(
        (rewards, lp) in (2usize..16).prop_flat_map(|n| (proptest::collection::vec(0.0..1.0f64, n), logprobs(n))),
        shift in -100.0..100.0f64,
    ) {
        let cfg = GrpoConfig { group_size: rewards.len(), ..GrpoConfig::default() };
        let base = objective(&batch(rewards.clone(), &lp), &cfg).unwrap();
        let moved = objective(&batch(rewards.iter().map(|r| r + shift).collect(), &lp), &cfg).unwrap();
        prop_assert!((base - moved).abs() < 1e-6 * (1.0 + base.abs()));
    }

    #[test]
    fn uniform_rewards_leave_only_the_penalty(n in 2usize..16, r in -5.0..5.0f64, lp in logprobs(16), beta in 0.0..1.0f64) {
        let lp = &lp[..n];
        let cfg = GrpoConfig { group_size: n, beta, ..GrpoConfig::default() };
        let value = objective(&batch(vec![r; n], lp), &cfg).unwrap();
        let penalty: f64 = lp.iter().map(|t| rtlseek::grpo::k3(t.2, t.0)).sum::<f64>() / n as f64;
        prop_assert!((value + beta * penalty).abs() < 1e-12);
        prop_assert!(penalty >= 0.0);
    }
}
