use rand::{Rng, RngCore};

use super::{check_candidates, Policy, SelectRequest};
use crate::error::Result;
use crate::types::{AdId, ContextStore, Observation};

/// Uniform choice among the candidates.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl RandomPolicy {
    pub fn new() -> Self {
        Self
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn select(&mut self, req: &SelectRequest<'_>, rng: &mut dyn RngCore) -> Result<AdId> {
        check_candidates(req.candidates)?;
        Ok(req.candidates[rng.random_range(0..req.candidates.len())])
    }

    fn update(&mut self, _obs: &Observation, _contexts: &ContextStore) -> Result<()> {
        Ok(())
    }
}
