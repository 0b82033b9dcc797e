//! Collaborative-filtering Thompson Sampling with discounted, similarity-weighted
//! prior counts.
//!
//! For user `i` and ad `k` the prior mass is
//!
//! ```text
//! α⁰ = Σ_{l≠k} S_ad(k, l)·s_il + Σ_{j≠i} S_user(i, j)·s_jk
//! β⁰ = Σ_{l≠k} S_ad(k, l)·f_il + Σ_{j≠i} S_user(i, j)·f_jk
//! ```
//!
//! and the sampled posterior is
//!
//! ```text
//! α = λ/(s_ik+1)·α⁰ + g·s̄_k + s_ik + 1
//! β = λ/(f_ik+1)·β⁰ + g·f̄_k + f_ik + 1
//! ```
//!
//! where `s̄_k`, `f̄_k` are population means from the ledger. Both sums run
//! over the top-`neighbor_k` neighbors by clamped cosine.

use std::collections::HashMap;

use rand::RngCore;

use super::{argmax_random_tie, check_candidates, BetaParams, Policy, SelectRequest};
use crate::error::{Error, Result};
use crate::ledger::{GlobalMeanDenominator, RewardLedger};
use crate::similarity::{NeighborIndex, NeighborStrategy};
use crate::types::{AdId, ContextStore, Observation, UserId};

#[derive(Debug, Clone, PartialEq)]
pub struct DctsConfig {
    /// Weight of the similarity-transferred prior.
    pub lambda: f64,
    /// Weight of the per-ad population mean.
    pub g: f64,
    /// Discount applied at every epoch boundary.
    pub gamma: f64,
    pub neighbor_k: usize,
    pub neighbors: NeighborStrategy,
    pub global_mean: GlobalMeanDenominator,
    /// When false, ad-ad transfer is restricted to ads of the same source.
    pub cross_source: bool,
}

impl Default for DctsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            g: 1.0,
            gamma: 1.0,
            neighbor_k: 50,
            neighbors: NeighborStrategy::default(),
            global_mean: GlobalMeanDenominator::UsersSeen,
            cross_source: true,
        }
    }
}

impl DctsConfig {
    pub fn new(lambda: f64, g: f64, gamma: f64) -> Self {
        Self {
            lambda,
            g,
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("{} must be a finite value >= 0", self.lambda),
            });
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "g",
                reason: format!("{} must be a finite value >= 0", self.g),
            });
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidGamma(self.gamma));
        }
        if self.neighbor_k == 0 {
            return Err(Error::InvalidParameter {
                name: "neighbor_k",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Transferred prior mass `(α⁰, β⁰)` for `(user, ad)`.
///
/// `user_neighbors` are `(j, S_user(i, j))` and `ad_neighbors` are
/// `(l, S_ad(k, l))`; the user itself and the ad itself are skipped.
pub fn dcts_prior_params(
    ledger: &RewardLedger,
    user_neighbors: &[(UserId, f64)],
    ad_neighbors: &[(AdId, f64)],
    user: UserId,
    ad: AdId,
) -> (f64, f64) {
    let mut alpha0 = 0.0;
    let mut beta0 = 0.0;
    for &(l, sim) in ad_neighbors {
        if l == ad {
            continue;
        }
        let c = ledger.counts(user, l);
        alpha0 += sim * c.success;
        beta0 += sim * c.failure;
    }
    for &(j, sim) in user_neighbors {
        if j == user {
            continue;
        }
        let c = ledger.counts(j, ad);
        alpha0 += sim * c.success;
        beta0 += sim * c.failure;
    }
    (alpha0, beta0)
}

/// Posterior Beta parameters. Both are at least 1 for nonnegative inputs.
pub fn dcts_posterior_params(
    alpha0: f64,
    beta0: f64,
    ledger: &RewardLedger,
    user: UserId,
    ad: AdId,
    lambda: f64,
    g: f64,
) -> BetaParams {
    let own = ledger.counts(user, ad);
    let lambda_s = lambda / (own.success + 1.0);
    let lambda_f = lambda / (own.failure + 1.0);
    BetaParams {
        alpha: lambda_s * alpha0 + g * ledger.global_mean_success(ad) + own.success + 1.0,
        beta: lambda_f * beta0 + g * ledger.global_mean_failure(ad) + own.failure + 1.0,
    }
}

#[derive(Debug, Clone)]
struct Cached<Id> {
    generation: u64,
    index: NeighborIndex<Id>,
    lists: HashMap<Id, Vec<(Id, f64)>>,
}

#[derive(Debug, Clone)]
pub struct Dcts {
    config: DctsConfig,
    ledger: RewardLedger,
    users: Option<Cached<UserId>>,
    ads: Option<Cached<AdId>>,
    params_scratch: Vec<f64>,
}

impl Dcts {
    pub fn new(config: DctsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            ledger: RewardLedger::with_denominator(config.global_mean),
            config,
            users: None,
            ads: None,
            params_scratch: Vec::new(),
        })
    }

    pub fn config(&self) -> &DctsConfig {
        &self.config
    }

    pub fn ledger(&self) -> &RewardLedger {
        &self.ledger
    }

    fn refresh(&mut self, contexts: &ContextStore) -> Result<()> {
        let k = self.config.neighbor_k;
        let strategy = self.config.neighbors;
        if self
            .users
            .as_ref()
            .is_none_or(|c| c.generation != contexts.user_generation())
        {
            let items = contexts.users().map(|(id, v)| (id, v.clone())).collect();
            self.users = Some(Cached {
                generation: contexts.user_generation(),
                index: NeighborIndex::build(items, contexts.user_dim(), k, strategy)?,
                lists: HashMap::new(),
            });
        }
        if self
            .ads
            .as_ref()
            .is_none_or(|c| c.generation != contexts.ad_generation())
        {
            let items = contexts.ads().map(|(id, v)| (id, v.clone())).collect();
            self.ads = Some(Cached {
                generation: contexts.ad_generation(),
                index: NeighborIndex::build(items, contexts.ad_dim(), k, strategy)?,
                lists: HashMap::new(),
            });
        }
        Ok(())
    }

    fn ensure_user_neighbors(&mut self, user: UserId, contexts: &ContextStore) -> Result<()> {
        let cache = self.users.as_mut().expect("refreshed");
        if !cache.lists.contains_key(&user) {
            let list = match contexts.user(user) {
                Some(x) => cache.index.neighbors(x, Some(user))?,
                None => Vec::new(),
            };
            cache.lists.insert(user, list);
        }
        Ok(())
    }

    fn ensure_ad_neighbors(&mut self, ad: AdId, contexts: &ContextStore) -> Result<()> {
        let cross_source = self.config.cross_source;
        let cache = self.ads.as_mut().expect("refreshed");
        if !cache.lists.contains_key(&ad) {
            let mut list = match contexts.ad(ad) {
                Some(y) => cache.index.neighbors(y, Some(ad))?,
                None => Vec::new(),
            };
            if !cross_source {
                let src = contexts.ad_source(ad);
                list.retain(|(l, _)| contexts.ad_source(*l) == src);
            }
            cache.lists.insert(ad, list);
        }
        Ok(())
    }

    /// `(α⁰, β⁰)` for `(user, ad)` under the current contexts.
    pub fn prior_params(
        &mut self,
        user: UserId,
        ad: AdId,
        contexts: &ContextStore,
    ) -> Result<(f64, f64)> {
        self.refresh(contexts)?;
        // Skip neighbor lookups entirely when the prior has no weight.
        if self.config.lambda == 0.0 {
            return Ok((0.0, 0.0));
        }
        self.ensure_user_neighbors(user, contexts)?;
        self.ensure_ad_neighbors(ad, contexts)?;
        let users = &self.users.as_ref().expect("refreshed").lists[&user];
        let ads = &self.ads.as_ref().expect("refreshed").lists[&ad];
        Ok(dcts_prior_params(&self.ledger, users, ads, user, ad))
    }

    pub fn posterior_params(
        &mut self,
        user: UserId,
        ad: AdId,
        contexts: &ContextStore,
    ) -> Result<BetaParams> {
        let (a0, b0) = self.prior_params(user, ad, contexts)?;
        Ok(dcts_posterior_params(
            a0,
            b0,
            &self.ledger,
            user,
            ad,
            self.config.lambda,
            self.config.g,
        ))
    }
}

impl Policy for Dcts {
    fn name(&self) -> &str {
        "dcts"
    }

    fn select(&mut self, req: &SelectRequest<'_>, rng: &mut dyn RngCore) -> Result<AdId> {
        check_candidates(req.candidates)?;
        let mut draws = std::mem::take(&mut self.params_scratch);
        draws.clear();
        for &ad in req.candidates {
            let params = self.posterior_params(req.user, ad, req.contexts)?;
            draws.push(params.sample(rng));
        }
        let pick = req.candidates[argmax_random_tie(&draws, rng)];
        self.params_scratch = draws;
        Ok(pick)
    }

    fn update(&mut self, obs: &Observation, _contexts: &ContextStore) -> Result<()> {
        self.ledger.record(obs);
        Ok(())
    }

    fn end_epoch(&mut self) -> Result<()> {
        self.ledger.apply_discount(self.config.gamma)
    }
}
