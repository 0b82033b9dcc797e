//! Thompson Sampling whose Beta posteriors borrow strength from similar users
//! and similar ads, optionally across ad domains, with discounted rewards.
//!
//! The crate ships the policy together with the baselines it is usually
//! compared against (Beta-Bernoulli TS, hybrid LinUCB, transferable LinUCB,
//! random), synthetic logistic-response environments and an offline
//! carousel-replay evaluator.

pub mod envsim;
pub mod error;
pub mod ledger;
pub mod policies;
pub mod replay;
pub mod similarity;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use ledger::{Counts, GlobalMeanDenominator, RewardLedger};
pub use policies::{
    BetaParams, Dcts, DctsConfig, HybridLinUcb, LinUcbConfig, Policy, PolicyKind, RandomPolicy,
    SelectRequest, ThompsonSampling, TransferLinUcb,
};
pub use similarity::{
    ad_context_from_clicks, clamped_similarity, cosine, LshIndex, NeighborIndex, NeighborStrategy,
    SimilarityScore,
};
pub use types::{AdId, ContextStore, ContextVector, Observation, SourceId, UserId};
