// SPDX-License-Identifier: Apache-2.0

//! Reference GRPO kernel over a toy softmax policy: group-standardized
//! advantages, the clipped-ratio surrogate with a k3 KL penalty, its exact
//! gradient with respect to the logits, and a seeded training demo.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub clip_eps: f64,
    pub beta: f64,
    /// Guard added to the group standard deviation.
    pub adv_eps: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 8,
            clip_eps: 0.2,
            beta: 0.04,
            adv_eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrpoError {
    #[error("group size must be at least 2, got {0}")]
    GroupSize(usize),
    #[error("clip epsilon must lie in (0, 1], got {0}")]
    ClipEps(f64),
    #[error("KL coefficient must be non-negative, got {0}")]
    Beta(f64),
    #[error("advantage epsilon must be non-negative, got {0}")]
    AdvEps(f64),
    #[error("batch arrays must all have length {expected}, `{field}` has {found}")]
    Shape {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite log-probability in `{0}`")]
    NonFinite(&'static str),
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.group_size < 2 {
            return Err(GrpoError::GroupSize(self.group_size));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps <= 1.0) {
            return Err(GrpoError::ClipEps(self.clip_eps));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(GrpoError::Beta(self.beta));
        }
        if !(self.adv_eps.is_finite() && self.adv_eps >= 0.0) {
            return Err(GrpoError::AdvEps(self.adv_eps));
        }
        Ok(())
    }
}

/// `(r_i - mean) / (std + eps)` with the population standard deviation;
/// equal rewards give all zeros.
pub fn advantages(rewards: &[f64], eps: f64) -> Vec<f64> {
    let n = rewards.len() as f64;
    if rewards.is_empty() || rewards.iter().all(|&r| r == rewards[0]) {
        return vec![0.0; rewards.len()];
    }
    let mean = rewards.iter().sum::<f64>() / n;
    let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    rewards.iter().map(|r| (r - mean) / (std + eps)).collect()
}

/// Per-sample k3 estimate of KL(current || ref); non-negative.
pub fn k3(logprob_ref: f64, logprob_current: f64) -> f64 {
    let d = logprob_ref - logprob_current;
    d.exp() - d - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupBatch {
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub logprob_current: Vec<f64>,
    pub logprob_old: Vec<f64>,
    pub logprob_ref: Vec<f64>,
}

impl GroupBatch {
    fn check(&self) -> Result<(), GrpoError> {
        let g = self.advantages.len();
        for (field, v) in [
            ("rewards", &self.rewards),
            ("logprob_current", &self.logprob_current),
            ("logprob_old", &self.logprob_old),
            ("logprob_ref", &self.logprob_ref),
        ] {
            if v.len() != g {
                return Err(GrpoError::Shape {
                    field,
                    expected: g,
                    found: v.len(),
                });
            }
        }
        for (field, v) in [
            ("logprob_current", &self.logprob_current),
            ("logprob_old", &self.logprob_old),
            ("logprob_ref", &self.logprob_ref),
        ] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(GrpoError::NonFinite(field));
            }
        }
        Ok(())
    }
}

fn surrogate(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Mean over the group of the clipped surrogate minus `beta * k3`.
pub fn objective(batch: &GroupBatch, config: &GrpoConfig) -> Result<f64, GrpoError> {
    batch.check()?;
    let g = batch.advantages.len();
    if g == 0 {
        return Ok(0.0);
    }
    let total: f64 = (0..g)
        .map(|i| {
            let ratio = (batch.logprob_current[i] - batch.logprob_old[i]).exp();
            surrogate(ratio, batch.advantages[i], config.clip_eps)
                - config.beta * k3(batch.logprob_ref[i], batch.logprob_current[i])
        })
        .sum();
    Ok(total / g as f64)
}

/// Derivative of one objective term with respect to `logprob_current`.
/// At a clip kink the unclipped branch is taken.
fn term_slope(lp_cur: f64, lp_old: f64, lp_ref: f64, adv: f64, config: &GrpoConfig) -> f64 {
    let ratio = (lp_cur - lp_old).exp();
    let unclipped = ratio * adv;
    let clipped = ratio.clamp(1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
    let surrogate = if unclipped <= clipped { ratio * adv } else { 0.0 };
    surrogate + config.beta * ((lp_ref - lp_cur).exp() - 1.0)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Categorical policy over a finite design vocabulary with a frozen
/// reference copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    pub logits: Vec<f64>,
    pub reference: Vec<f64>,
}

impl ToyPolicy {
    pub fn new(logits: Vec<f64>) -> Self {
        ToyPolicy {
            reference: logits.clone(),
            logits,
        }
    }

    pub fn uniform(vocab: usize) -> Self {
        Self::new(vec![0.0; vocab])
    }

    pub fn vocab(&self) -> usize {
        self.logits.len()
    }

    pub fn probs(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    pub fn log_probs(&self) -> Vec<f64> {
        log_softmax(&self.logits)
    }

    pub fn ref_log_probs(&self) -> Vec<f64> {
        log_softmax(&self.reference)
    }

    pub fn entropy(&self) -> f64 {
        self.probs()
            .iter()
            .zip(self.log_probs())
            .map(|(p, lp)| if *p > 0.0 { -p * lp } else { 0.0 })
            .sum()
    }

    pub fn sample(&self, g: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let dist = WeightedIndex::new(self.probs()).expect("softmax weights are positive");
        (0..g).map(|_| dist.sample(rng)).collect()
    }

    /// Total-variation distance to the reference policy.
    pub fn tv_to_reference(&self) -> f64 {
        0.5 * self
            .probs()
            .iter()
            .zip(softmax(&self.reference))
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }
}

/// A group drawn from the old policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGroup {
    pub actions: Vec<usize>,
    pub logprob_old: Vec<f64>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl SampledGroup {
    pub fn batch(&self, policy: &ToyPolicy) -> GroupBatch {
        let lp = policy.log_probs();
        let lr = policy.ref_log_probs();
        GroupBatch {
            rewards: self.rewards.clone(),
            advantages: self.advantages.clone(),
            logprob_current: self.actions.iter().map(|&a| lp[a]).collect(),
            logprob_old: self.logprob_old.clone(),
            logprob_ref: self.actions.iter().map(|&a| lr[a]).collect(),
        }
    }
}

/// Objective of `policy` on `group`.
pub fn policy_objective(policy: &ToyPolicy, group: &SampledGroup, config: &GrpoConfig) -> Result<f64, GrpoError> {
    objective(&group.batch(policy), config)
}

/// Exact gradient of the objective with respect to the logits, using
/// d log p(a) / d theta_j = 1[j = a] - p_j.
pub fn gradient(policy: &ToyPolicy, group: &SampledGroup, config: &GrpoConfig) -> Vec<f64> {
    let p = policy.probs();
    let lp = policy.log_probs();
    let lr = policy.ref_log_probs();
    let g = group.actions.len();
    let mut grad = vec![0.0; p.len()];
    if g == 0 {
        return grad;
    }
    for (i, &a) in group.actions.iter().enumerate() {
        let c = term_slope(lp[a], group.logprob_old[i], lr[a], group.advantages[i], config) / g as f64;
        for (j, gj) in grad.iter_mut().enumerate() {
            *gj += c * (if j == a { 1.0 } else { 0.0 } - p[j]);
        }
    }
    grad
}

/// Maps a sampled group to per-output rewards.
pub trait Environment {
    fn rewards(&mut self, actions: &[usize]) -> Vec<f64>;
}

/// Reward 1 for one target design, 0 otherwise.
#[derive(Debug, Clone, Copy)]
pub struct SingleBest {
    pub target: usize,
}

impl Environment for SingleBest {
    fn rewards(&mut self, actions: &[usize]) -> Vec<f64> {
        actions.iter().map(|&a| (a == self.target) as u8 as f64).collect()
    }
}

/// Each valid output earns 1 / (its multiplicity in the group), so the
/// group total equals the number of distinct valid designs.
#[derive(Debug, Clone)]
pub struct Diversity {
    pub valid: Vec<bool>,
}

impl Diversity {
    pub fn all_valid(vocab: usize) -> Self {
        Diversity {
            valid: vec![true; vocab],
        }
    }
}

impl Environment for Diversity {
    fn rewards(&mut self, actions: &[usize]) -> Vec<f64> {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &a in actions {
            *counts.entry(a).or_default() += 1;
        }
        actions
            .iter()
            .map(|a| {
                if self.valid.get(*a).copied().unwrap_or(false) {
                    1.0 / counts[a] as f64
                } else {
                    0.0
                }
            })
            .collect()
    }
}

impl<F: FnMut(&[usize]) -> Vec<f64>> Environment for F {
    fn rewards(&mut self, actions: &[usize]) -> Vec<f64> {
        self(actions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub steps: usize,
    pub lr: f64,
    /// Gradient-ascent updates per sampled group.
    pub inner_steps: usize,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            steps: 500,
            lr: 0.1,
            inner_steps: 1,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub step: usize,
    pub mean_reward: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    pub final_policy: ToyPolicy,
}

impl LearningCurve {
    /// `step,mean_reward,entropy` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,mean_reward,entropy\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{:.6},{:.6}", p.step, p.mean_reward, p.entropy);
        }
        s
    }
}

/// Runs `demo.steps` iterations of snapshot, sample, score, standardize
/// and ascend. Point `k` records the policy entropy before update `k` and
/// the mean reward of the group sampled at step `k`.
pub fn train_demo(
    mut policy: ToyPolicy,
    env: &mut dyn Environment,
    config: &GrpoConfig,
    demo: &DemoConfig,
) -> Result<LearningCurve, GrpoError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(demo.seed);
    let mut points = Vec::with_capacity(demo.steps);
    for step in 0..demo.steps {
        let entropy = policy.entropy();
        let old = policy.log_probs();
        let actions = policy.sample(config.group_size, &mut rng);
        let rewards = env.rewards(&actions);
        let group = SampledGroup {
            logprob_old: actions.iter().map(|&a| old[a]).collect(),
            advantages: advantages(&rewards, config.adv_eps),
            actions,
            rewards,
        };
        points.push(CurvePoint {
            step,
            mean_reward: group.rewards.iter().sum::<f64>() / group.rewards.len() as f64,
            entropy,
        });
        for _ in 0..demo.inner_steps.max(1) {
            let grad = gradient(&policy, &group, config);
            policy.logits.iter_mut().zip(&grad).for_each(|(l, g)| *l += demo.lr * g);
        }
    }
    Ok(LearningCurve {
        points,
        final_policy: policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_examples() {
        assert_eq!(advantages(&[1.0; 4], 1e-8), vec![0.0; 4]);
        let a = advantages(&[0.0, 2.0], 0.0);
        assert_eq!(a, vec![-1.0, 1.0]);
        let a = advantages(&[8.0, 0.5, 5.0, 0.5], 1e-8);
        assert!(a.iter().sum::<f64>().abs() < 1e-9);
    }

    fn one(ratio: f64, adv: f64) -> f64 {
        let batch = GroupBatch {
            rewards: vec![0.0],
            advantages: vec![adv],
            logprob_current: vec![ratio.ln()],
            logprob_old: vec![0.0],
            logprob_ref: vec![ratio.ln()],
        };
        objective(
            &batch,
            &GrpoConfig {
                beta: 0.0,
                ..GrpoConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn clip_is_pessimistic() {
        assert!((one(2.0, 1.0) - 1.2).abs() < 1e-12);
        assert!((one(2.0, -1.0) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn on_policy_objective_is_mean_advantage() {
        let adv = advantages(&[3.0, 1.0, 0.0, 2.0], 1e-8);
        let batch = GroupBatch {
            rewards: vec![3.0, 1.0, 0.0, 2.0],
            advantages: adv,
            logprob_current: vec![-1.0; 4],
            logprob_old: vec![-1.0; 4],
            logprob_ref: vec![-1.0; 4],
        };
        assert!(objective(&batch, &GrpoConfig::default()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn non_finite_and_shape_errors() {
        let mut batch = GroupBatch {
            rewards: vec![0.0; 2],
            advantages: vec![0.0; 2],
            logprob_current: vec![f64::NAN, 0.0],
            logprob_old: vec![0.0; 2],
            logprob_ref: vec![0.0; 2],
        };
        assert_eq!(
            objective(&batch, &GrpoConfig::default()),
            Err(GrpoError::NonFinite("logprob_current"))
        );
        batch.logprob_current = vec![0.0];
        assert!(matches!(
            objective(&batch, &GrpoConfig::default()),
            Err(GrpoError::Shape { .. })
        ));
    }

    #[test]
    fn k3_is_non_negative() {
        assert_eq!(k3(-1.0, -1.0), 0.0);
        for d in [-3.0, -0.1, 0.1, 2.0] {
            assert!(k3(d, 0.0) > 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(GrpoConfig::default().validate().is_ok());
        let bad = GrpoConfig {
            group_size: 1,
            ..GrpoConfig::default()
        };
        assert_eq!(bad.validate(), Err(GrpoError::GroupSize(1)));
        let bad = GrpoConfig {
            clip_eps: 1.5,
            ..GrpoConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_advantage_on_policy_gradient_vanishes() {
        let policy = ToyPolicy::new(vec![0.3, -0.2, 1.0]);
        let lp = policy.log_probs();
        let group = SampledGroup {
            actions: vec![0, 2, 2],
            logprob_old: vec![lp[0], lp[2], lp[2]],
            rewards: vec![1.0; 3],
            advantages: vec![0.0; 3],
        };
        let cfg = GrpoConfig {
            beta: 0.0,
            ..GrpoConfig::default()
        };
        assert!(gradient(&policy, &group, &cfg).iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn diversity_rewards_sum_to_distinct_count() {
        let r = Diversity::all_valid(4).rewards(&[0, 0, 1, 2, 2, 2]);
        assert!((r.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn demo_is_deterministic() {
        let run = || {
            train_demo(
                ToyPolicy::uniform(6),
                &mut SingleBest { target: 3 },
                &GrpoConfig::default(),
                &DemoConfig {
                    steps: 20,
                    ..DemoConfig::default()
                },
            )
            .unwrap()
            .to_csv()
        };
        assert_eq!(run(), run());
    }
}
