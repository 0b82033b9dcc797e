//! Discount-aware success/failure accumulators.
//!
//! Every `(user, ad)` pair holds `s(t) = Σ γ^(t-τ) s_τ` and the matching
//! failure sum. Discounting is applied in batch epochs by the driver through
//! [`RewardLedger::apply_discount`]; between two calls rewards simply add up.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::types::{AdId, Observation, UserId};

/// Discounted success and failure mass for one pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Counts {
    pub success: f64,
    pub failure: f64,
}

/// Denominator used for the per-ad population mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GlobalMeanDenominator {
    /// Users with at least one impression of the ad.
    #[default]
    UsersSeen,
    /// Users with at least one outcome of the requested kind (a click for the
    /// success mean, a non-click for the failure mean).
    UsersWithOutcome,
    /// Every user the ledger has ever recorded.
    AllUsers,
}

impl std::str::FromStr for GlobalMeanDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "users_seen" => Ok(Self::UsersSeen),
            "users_with_outcome" => Ok(Self::UsersWithOutcome),
            "all_users" => Ok(Self::AllUsers),
            other => Err(Error::InvalidParameter {
                name: "global_mean",
                reason: format!("unknown denominator `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct AdAggregate {
    users_seen: HashSet<UserId>,
    users_clicked: HashSet<UserId>,
    users_skipped: HashSet<UserId>,
    success_sum: f64,
    failure_sum: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RewardLedger {
    cells: HashMap<(UserId, AdId), Counts>,
    ads: HashMap<AdId, AdAggregate>,
    users: HashSet<UserId>,
    denominator: GlobalMeanDenominator,
}

impl RewardLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_denominator(denominator: GlobalMeanDenominator) -> Self {
        Self {
            denominator,
            ..Self::default()
        }
    }

    pub fn denominator(&self) -> GlobalMeanDenominator {
        self.denominator
    }

    pub fn record(&mut self, obs: &Observation) {
        let cell = self.cells.entry((obs.user, obs.ad)).or_default();
        let agg = self.ads.entry(obs.ad).or_default();
        if obs.clicked {
            cell.success += 1.0;
            agg.success_sum += 1.0;
            agg.users_clicked.insert(obs.user);
        } else {
            cell.failure += 1.0;
            agg.failure_sum += 1.0;
            agg.users_skipped.insert(obs.user);
        }
        agg.users_seen.insert(obs.user);
        self.users.insert(obs.user);
    }

    /// Multiplies every accumulator by `gamma`.
    pub fn apply_discount(&mut self, gamma: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidGamma(gamma));
        }
        if gamma == 1.0 {
            return Ok(());
        }
        for c in self.cells.values_mut() {
            c.success *= gamma;
            c.failure *= gamma;
        }
        for agg in self.ads.values_mut() {
            agg.success_sum *= gamma;
            agg.failure_sum *= gamma;
        }
        Ok(())
    }

    #[inline]
    pub fn counts(&self, user: UserId, ad: AdId) -> Counts {
        self.cells.get(&(user, ad)).copied().unwrap_or_default()
    }

    #[inline]
    pub fn success(&self, user: UserId, ad: AdId) -> f64 {
        self.counts(user, ad).success
    }

    #[inline]
    pub fn failure(&self, user: UserId, ad: AdId) -> f64 {
        self.counts(user, ad).failure
    }

    /// Population mean of the discounted success mass for `ad`; 0 when nobody qualifies.
    pub fn global_mean_success(&self, ad: AdId) -> f64 {
        self.global_mean(ad, true)
    }

    pub fn global_mean_failure(&self, ad: AdId) -> f64 {
        self.global_mean(ad, false)
    }

    fn global_mean(&self, ad: AdId, success: bool) -> f64 {
        let Some(agg) = self.ads.get(&ad) else {
            return 0.0;
        };
        let n = match self.denominator {
            GlobalMeanDenominator::UsersSeen => agg.users_seen.len(),
            GlobalMeanDenominator::UsersWithOutcome if success => agg.users_clicked.len(),
            GlobalMeanDenominator::UsersWithOutcome => agg.users_skipped.len(),
            GlobalMeanDenominator::AllUsers => self.users.len(),
        };
        if n == 0 {
            return 0.0;
        }
        let total = if success {
            agg.success_sum
        } else {
            agg.failure_sum
        };
        total / n as f64
    }

    pub fn users_seen(&self, ad: AdId) -> impl Iterator<Item = UserId> + '_ {
        self.ads
            .get(&ad)
            .into_iter()
            .flat_map(|a| a.users_seen.iter().copied())
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((UserId, AdId), Counts)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}
