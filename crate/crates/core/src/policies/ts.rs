//! Beta-Bernoulli Thompson Sampling over per-ad global counts.

use std::collections::HashMap;

use rand::RngCore;

use super::{argmax_random_tie, check_candidates, BetaParams, Policy, SelectRequest};
use crate::error::Result;
use crate::ledger::Counts;
use crate::types::{AdId, ContextStore, Observation};

/// Samples `Beta(s_k + 1, f_k + 1)` per candidate; no personalization, no discount.
#[derive(Debug, Clone, Default)]
pub struct ThompsonSampling {
    counts: HashMap<AdId, Counts>,
    draws: Vec<f64>,
}

impl ThompsonSampling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn params(&self, ad: AdId) -> BetaParams {
        let c = self.counts.get(&ad).copied().unwrap_or_default();
        BetaParams {
            alpha: c.success + 1.0,
            beta: c.failure + 1.0,
        }
    }
}

impl Policy for ThompsonSampling {
    fn name(&self) -> &str {
        "ts"
    }

    fn select(&mut self, req: &SelectRequest<'_>, rng: &mut dyn RngCore) -> Result<AdId> {
        check_candidates(req.candidates)?;
        self.draws.clear();
        for &ad in req.candidates {
            let d = self.params(ad).sample(rng);
            self.draws.push(d);
        }
        Ok(req.candidates[argmax_random_tie(&self.draws, rng)])
    }

    fn update(&mut self, obs: &Observation, _contexts: &ContextStore) -> Result<()> {
        let c = self.counts.entry(obs.ad).or_default();
        if obs.clicked {
            c.success += 1.0;
        } else {
            c.failure += 1.0;
        }
        Ok(())
    }
}
