use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::{AdId, ContextStore, ContextVector, SourceId, UserId};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Shape of a synthetic environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub num_users: usize,
    pub user_dim: usize,
    pub ad_dim: usize,
    pub num_ads: usize,
    /// Ads are split into consecutive sources of this size.
    pub ads_per_source: usize,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_users", self.num_users),
            ("num_ads", self.num_ads),
            ("ads_per_source", self.ads_per_source),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        if self.user_dim + self.ad_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "user_dim",
                reason: "user_dim + ad_dim must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Users and ads with standard-normal contexts; a click happens with
/// probability `sigmoid(w · [x_user, y_ad])`.
#[derive(Debug, Clone)]
pub struct LogisticEnv {
    weights: Vec<f64>,
    contexts: ContextStore,
    sources: Vec<(SourceId, Vec<AdId>)>,
    num_users: usize,
    seed: u64,
}

/// Draws contexts and weights from the standard normal. Deterministic in `seed`.
pub fn make_logistic_env(config: &EnvConfig, seed: u64) -> Result<LogisticEnv> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = normal_vec(&mut rng, config.user_dim + config.ad_dim);
    let mut contexts = ContextStore::new(config.user_dim, config.ad_dim);
    for u in 0..config.num_users {
        contexts.insert_user(
            UserId(u as u32),
            ContextVector::new(normal_vec(&mut rng, config.user_dim))?,
        )?;
    }
    let mut sources: Vec<(SourceId, Vec<AdId>)> = Vec::new();
    for a in 0..config.num_ads {
        let ad = AdId(a as u32);
        contexts.insert_ad(ad, ContextVector::new(normal_vec(&mut rng, config.ad_dim))?)?;
        let src = SourceId((a / config.ads_per_source) as u32);
        contexts.set_ad_source(ad, src);
        match sources.last_mut() {
            Some((s, ads)) if *s == src => ads.push(ad),
            _ => sources.push((src, vec![ad])),
        }
    }
    Ok(LogisticEnv {
        weights,
        contexts,
        sources,
        num_users: config.num_users,
        seed,
    })
}

fn normal_vec(rng: &mut dyn RngCore, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

impl LogisticEnv {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: weights.len(),
            });
        }
        self.weights = weights;
        Ok(())
    }

    /// Replaces the whole weight vector with a fresh standard-normal draw.
    pub fn redraw_weights(&mut self, rng: &mut dyn RngCore) {
        self.weights = normal_vec(rng, self.weights.len());
    }

    pub fn contexts(&self) -> &ContextStore {
        &self.contexts
    }

    pub fn sources(&self) -> &[(SourceId, Vec<AdId>)] {
        &self.sources
    }

    pub fn source_ads(&self, source: SourceId) -> Option<&[AdId]> {
        self.sources
            .iter()
            .find(|(s, _)| *s == source)
            .map(|(_, ads)| ads.as_slice())
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn logit(&self, user: UserId, ad: AdId) -> Result<f64> {
        let x = self.contexts.user(user).ok_or(Error::UnknownUser(user))?;
        let y = self.contexts.ad(ad).ok_or(Error::UnknownAd(ad))?;
        let (wu, wa) = self.weights.split_at(x.dim());
        Ok(x.values().iter().zip(wu).map(|(a, b)| a * b).sum::<f64>()
            + y.values().iter().zip(wa).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Click probability, kept inside the open unit interval.
    pub fn probability(&self, user: UserId, ad: AdId) -> Result<f64> {
        let p = sigmoid(self.logit(user, ad)?);
        Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }

    /// One Bernoulli draw: consumes exactly one uniform from `rng`.
    pub fn respond(&self, user: UserId, ad: AdId, rng: &mut dyn RngCore) -> Result<bool> {
        let p = self.probability(user, ad)?;
        Ok(rng.random::<f64>() < p)
    }

    /// Highest click probability among `candidates` for `user`.
    pub fn best_probability(&self, user: UserId, candidates: &[AdId]) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for &ad in candidates {
            best = best.max(self.probability(user, ad)?);
        }
        Ok(best)
    }
}
