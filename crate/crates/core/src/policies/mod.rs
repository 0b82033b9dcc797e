//! Arm-selection policies behind a common select/update interface.

mod dcts;
mod linucb;
mod random;
mod ts;

pub use dcts::{dcts_posterior_params, dcts_prior_params, Dcts, DctsConfig};
pub use linucb::{tlinucb_init_prior, HybridLinUcb, LinUcbConfig, LinearArmState, TransferLinUcb};
pub use random::RandomPolicy;
pub use ts::ThompsonSampling;

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::types::{AdId, ContextStore, Observation, SourceId, UserId};

/// Everything a policy sees when asked to fill one slot.
#[derive(Debug, Clone, Copy)]
pub struct SelectRequest<'a> {
    pub source: SourceId,
    pub user: UserId,
    pub candidates: &'a [AdId],
    pub contexts: &'a ContextStore,
}

pub trait Policy: Send {
    fn name(&self) -> &str;

    /// Picks one of `req.candidates`. Randomness comes only from `rng`.
    fn select(&mut self, req: &SelectRequest<'_>, rng: &mut dyn RngCore) -> Result<AdId>;

    fn update(&mut self, obs: &Observation, contexts: &ContextStore) -> Result<()>;

    /// Batch boundary (discounting, cache refresh). Default: nothing.
    fn end_epoch(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "beta_params",
                reason: format!("alpha={alpha}, beta={beta} must be positive and finite"),
            });
        }
        Ok(Self { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        // parameters are validated on construction
        Beta::new(self.alpha, self.beta)
            .expect("valid beta parameters")
            .sample(rng)
    }
}

/// Index of the largest value; exact ties are broken uniformly with `rng`.
pub(crate) fn argmax_random_tie(values: &[f64], rng: &mut dyn RngCore) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            ties.clear();
            ties.push(i);
        } else if v == best {
            ties.push(i);
        }
    }
    match ties.len() {
        0 => 0,
        1 => ties[0],
        n => ties[rng.random_range(0..n)],
    }
}

pub(crate) fn check_candidates(candidates: &[AdId]) -> Result<()> {
    if candidates.is_empty() {
        Err(Error::EmptyCandidates)
    } else {
        Ok(())
    }
}

/// Policy choice plus its configuration; builds fresh instances.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    Dcts(DctsConfig),
    Ts,
    HybridLinUcb(LinUcbConfig),
    TransferLinUcb(LinUcbConfig),
    Random,
}

impl PolicyKind {
    pub fn build(&self) -> Result<Box<dyn Policy>> {
        Ok(match self {
            Self::Dcts(c) => Box::new(Dcts::new(c.clone())?),
            Self::Ts => Box::new(ThompsonSampling::new()),
            Self::HybridLinUcb(c) => Box::new(HybridLinUcb::new(*c)?),
            Self::TransferLinUcb(c) => Box::new(TransferLinUcb::new(*c)?),
            Self::Random => Box::new(RandomPolicy::new()),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Dcts(_) => "dcts",
            Self::Ts => "ts",
            Self::HybridLinUcb(_) => "hlinucb",
            Self::TransferLinUcb(_) => "tlinucb",
            Self::Random => "random",
        }
    }
}
