//! Scenario drivers producing per-step reward/regret traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::env::{make_logistic_env, EnvConfig, LogisticEnv};
use crate::error::{Error, Result};
use crate::policies::{Policy, SelectRequest};
use crate::stats::trailing_mean;
use crate::types::{AdId, Observation, SourceId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Only the first domain is live before `switch_step`, only the second after.
    Transfer,
    /// One domain; the response weights are redrawn at `switch_step`.
    Drift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub total_steps: usize,
    pub switch_step: usize,
    pub num_ads: usize,
    pub ads_per_domain: usize,
    pub num_users: usize,
    pub user_dim: usize,
    pub ad_dim: usize,
    /// `end_epoch` fires after every `discount_interval` steps.
    pub discount_interval: usize,
    /// Trailing window used for reward curves and recovery detection.
    pub window: usize,
    /// Drift scenario only: set false for a no-drift control run.
    pub drift: bool,
}

impl ScenarioConfig {
    /// 10 ads, 5 per domain, second domain opens at step 500 of 1000.
    pub fn transfer() -> Self {
        Self {
            kind: ScenarioKind::Transfer,
            total_steps: 1000,
            switch_step: 500,
            num_ads: 10,
            ads_per_domain: 5,
            num_users: 100,
            user_dim: 5,
            ad_dim: 5,
            discount_interval: 10,
            window: 100,
            drift: false,
        }
    }

    /// 50 ads in one domain, weights redrawn at the midpoint of 1000 steps.
    pub fn drift() -> Self {
        Self {
            kind: ScenarioKind::Drift,
            total_steps: 1000,
            switch_step: 500,
            num_ads: 50,
            ads_per_domain: 50,
            num_users: 100,
            user_dim: 5,
            ad_dim: 5,
            discount_interval: 10,
            window: 100,
            drift: true,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            num_users: self.num_users,
            user_dim: self.user_dim,
            ad_dim: self.ad_dim,
            num_ads: self.num_ads,
            ads_per_source: self.ads_per_domain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid =
            |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(0 < self.switch_step && self.switch_step < self.total_steps) {
            return invalid(
                "switch_step",
                format!(
                    "{} must lie strictly inside (0, {})",
                    self.switch_step, self.total_steps
                ),
            );
        }
        if self.discount_interval == 0 {
            return invalid("discount_interval", "must be at least 1".into());
        }
        if self.window == 0 {
            return invalid("window", "must be at least 1".into());
        }
        if self.kind == ScenarioKind::Transfer && self.num_ads < 2 * self.ads_per_domain {
            return invalid(
                "num_ads",
                format!("transfer needs two domains of {} ads", self.ads_per_domain),
            );
        }
        self.env_config().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub user: UserId,
    pub ad: AdId,
    /// Sampled click, 0 or 1.
    pub reward: f64,
    /// True click probability of the chosen ad.
    pub expected_reward: f64,
    /// `p_best − p_chosen` over the offered candidates.
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn expected_rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.expected_reward).collect()
    }

    pub fn cumulative_rewards(&self) -> Vec<f64> {
        running_sum(self.steps.iter().map(|s| s.reward))
    }

    pub fn cumulative_regret(&self) -> Vec<f64> {
        running_sum(self.steps.iter().map(|s| s.regret))
    }

    /// Mean sampled reward over `steps[range]`.
    pub fn mean_reward(&self, range: std::ops::Range<usize>) -> f64 {
        mean(self.steps[range].iter().map(|s| s.reward))
    }

    pub fn mean_expected_reward(&self, range: std::ops::Range<usize>) -> f64 {
        mean(self.steps[range].iter().map(|s| s.expected_reward))
    }
}

fn running_sum(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    it.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len();
    it.sum::<f64>() / n as f64
}

/// Builds a fresh policy for one replication.
pub type PolicyFactory<'a> = &'a (dyn Fn() -> Result<Box<dyn Policy>> + Sync);

/// Independent random stream `stream` of replication seed `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_ENV: u64 = 0;
const STREAM_ARRIVALS: u64 = 1;
const STREAM_POLICY: u64 = 2;
const STREAM_RESPONSES: u64 = 3;
const STREAM_DRIFT: u64 = 4;

/// Runs one replication. Environment, user arrivals and responses depend only
/// on `seed`, so two policies run with the same seed face the same users and
/// the same response noise.
pub fn run_scenario(config: &ScenarioConfig, policy: &mut dyn Policy, seed: u64) -> Result<Trace> {
    config.validate()?;
    let env_seed: u64 = replication_rng(seed, STREAM_ENV).random();
    let mut env = make_logistic_env(&config.env_config(), env_seed)?;
    run_in_env(config, &mut env, policy, seed)
}

/// Like [`run_scenario`] but on a caller-supplied environment.
pub fn run_in_env(
    config: &ScenarioConfig,
    env: &mut LogisticEnv,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<Trace> {
    config.validate()?;
    let mut arrivals = replication_rng(seed, STREAM_ARRIVALS);
    let mut policy_rng = replication_rng(seed, STREAM_POLICY);
    let mut responses = replication_rng(seed, STREAM_RESPONSES);
    let mut drift_rng = replication_rng(seed, STREAM_DRIFT);

    let domains: Vec<(SourceId, Vec<AdId>)> = env.sources().to_vec();
    let mut steps = Vec::with_capacity(config.total_steps);
    for t in 0..config.total_steps {
        if t == config.switch_step && config.kind == ScenarioKind::Drift && config.drift {
            env.redraw_weights(&mut drift_rng);
        }
        let (source, candidates) = match config.kind {
            ScenarioKind::Transfer if t < config.switch_step => &domains[0],
            ScenarioKind::Transfer => &domains[1],
            ScenarioKind::Drift => &domains[0],
        };
        let user = UserId(arrivals.random_range(0..env.num_users()) as u32);
        let req = SelectRequest {
            source: *source,
            user,
            candidates,
            contexts: env.contexts(),
        };
        let ad = policy.select(&req, &mut policy_rng)?;
        let clicked = env.respond(user, ad, &mut responses)?;
        let p = env.probability(user, ad)?;
        let best = env.best_probability(user, candidates)?;
        policy.update(
            &Observation::new(*source, user, ad, clicked, t as u64),
            env.contexts(),
        )?;
        steps.push(StepRecord {
            step: t,
            user,
            ad,
            reward: if clicked { 1.0 } else { 0.0 },
            expected_reward: p,
            regret: (best - p).max(0.0),
        });
        if (t + 1) % config.discount_interval == 0 {
            policy.end_epoch()?;
        }
    }
    Ok(Trace { steps })
}

fn run_many(
    factory: PolicyFactory<'_>,
    config: &ScenarioConfig,
    seeds: &[u64],
) -> Result<Vec<Trace>> {
    seeds
        .iter()
        .map(|&s| {
            let mut p = factory()?;
            run_scenario(config, p.as_mut(), s)
        })
        .collect()
}

/// One trace per seed for the domain-transfer scenario.
pub fn run_transfer_scenario(
    factory: PolicyFactory<'_>,
    config: &ScenarioConfig,
    seeds: &[u64],
) -> Result<Vec<Trace>> {
    if config.kind != ScenarioKind::Transfer {
        return Err(Error::InvalidParameter {
            name: "scenario",
            reason: "expected the transfer scenario".into(),
        });
    }
    run_many(factory, config, seeds)
}

/// One trace per seed for the preference-drift scenario.
pub fn run_drift_scenario(
    factory: PolicyFactory<'_>,
    config: &ScenarioConfig,
    seeds: &[u64],
) -> Result<Vec<Trace>> {
    if config.kind != ScenarioKind::Drift {
        return Err(Error::InvalidParameter {
            name: "scenario",
            reason: "expected the drift scenario".into(),
        });
    }
    run_many(factory, config, seeds)
}

/// Step at which a trailing-window mean recovers after a change point.
///
/// The plateau is the mean of `series` over the `window` steps before
/// `switch`. Recovery is the first step after the trailing mean has fallen
/// below `fraction × plateau` at which it is back at or above that level.
/// Returns `Some(switch)` when it never falls, `None` when it never recovers.
pub fn recovery_step(series: &[f64], switch: usize, window: usize, fraction: f64) -> Option<usize> {
    if switch == 0 || switch > series.len() {
        return None;
    }
    let start = switch.saturating_sub(window);
    let plateau = series[start..switch].iter().sum::<f64>() / (switch - start) as f64;
    let threshold = fraction * plateau;
    let tm = trailing_mean(series, window);
    let dip = (switch..series.len()).find(|&t| tm[t] < threshold);
    match dip {
        None => Some(switch),
        Some(d) => (d + 1..series.len()).find(|&t| tm[t] >= threshold),
    }
}
