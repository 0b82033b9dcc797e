use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use super::attribution::CarouselImpression;
use crate::error::{Error, Result};
use crate::policies::{Policy, SelectRequest};
use crate::similarity::ad_context_from_clicks;
use crate::types::{AdId, ContextStore, ContextVector, Observation, UserId};

/// Length of one discount epoch in log time.
pub const EPOCH_SECS: u64 = 3600;

/// Where ad contexts come from during replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdContextMode {
    /// Use whatever ad contexts the store was given; never change them.
    Fixed,
    /// Per-dimension median of the contexts of users who clicked the ad,
    /// recomputed at every epoch boundary for ads with new clickers.
    #[default]
    FromClickers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayStep {
    pub step: usize,
    pub timestamp: u64,
    pub user: UserId,
    pub chosen: AdId,
    pub clicked: bool,
    pub cumulative_clicks: u64,
    pub ctr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplaySummary {
    pub impressions: usize,
    pub clicks: u64,
    pub ctr: f64,
    pub pretrain_observations: usize,
    pub epochs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayResult {
    pub trace: Vec<ReplayStep>,
    pub summary: ReplaySummary,
}

impl ReplayResult {
    /// This run's CTR divided by `baseline`'s (usually the random policy on the same log).
    pub fn relative_ctr(&self, baseline: &ReplayResult) -> f64 {
        self.summary.ctr / baseline.summary.ctr
    }
}

struct Clock {
    hour: Option<u64>,
    epochs: u64,
}

struct ClickerContexts {
    mode: AdContextMode,
    clickers: BTreeMap<AdId, BTreeSet<UserId>>,
    stale: BTreeSet<AdId>,
}

impl ClickerContexts {
    fn record(&mut self, obs: &Observation) {
        if self.mode == AdContextMode::FromClickers
            && obs.clicked
            && self.clickers.entry(obs.ad).or_default().insert(obs.user)
        {
            self.stale.insert(obs.ad);
        }
    }

    fn refresh(&mut self, store: &mut ContextStore) -> Result<()> {
        for ad in std::mem::take(&mut self.stale) {
            let ctxs: Vec<ContextVector> = self.clickers[&ad]
                .iter()
                .filter_map(|u| store.user(*u).cloned())
                .collect();
            if !ctxs.is_empty() {
                let ctx = ad_context_from_clicks(&ctxs, store.ad_dim())?;
                store.insert_ad(ad, ctx)?;
            }
        }
        Ok(())
    }
}

/// Replays logged carousel slots against `policy`.
///
/// `pretrain` slots are absorbed first as fully observed data: every displayed
/// ad yields an observation. Each `impressions` slot then asks the policy to
/// pick one displayed ad, which earns a click iff it is the logged clicked ad,
/// and only the pick is fed back. The policy's epoch hook fires once per
/// elapsed hour of log time across both phases.
///
/// `contexts` must hold the user contexts; with [`AdContextMode::FromClickers`]
/// its ad dimension must equal its user dimension.
pub fn evaluate(
    policy: &mut dyn Policy,
    impressions: &[CarouselImpression],
    pretrain: &[CarouselImpression],
    contexts: &ContextStore,
    mode: AdContextMode,
    rng: &mut dyn RngCore,
) -> Result<ReplayResult> {
    if impressions.is_empty() {
        return Err(Error::EmptyImpressions);
    }
    for (name, slots) in [("impressions", impressions), ("pretrain", pretrain)] {
        if slots.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::InvalidParameter {
                name: "impressions",
                reason: format!("{name} are not in chronological order"),
            });
        }
        if let Some(bad) = slots.iter().find(|s| {
            s.displayed.is_empty() || s.clicked.is_some_and(|c| !s.displayed.contains(&c))
        }) {
            return Err(Error::InvalidParameter {
                name: "impressions",
                reason: format!(
                    "malformed slot for user {} at t={}",
                    bad.user, bad.timestamp
                ),
            });
        }
    }
    if mode == AdContextMode::FromClickers && contexts.ad_dim() != contexts.user_dim() {
        return Err(Error::DimensionMismatch {
            expected: contexts.user_dim(),
            actual: contexts.ad_dim(),
        });
    }

    let mut store = contexts.clone();
    for slot in pretrain.iter().chain(impressions) {
        for &ad in &slot.displayed {
            if store.ad_source(ad).is_none() {
                store.set_ad_source(ad, slot.source);
            }
        }
    }
    let mut clock = Clock {
        hour: None,
        epochs: 0,
    };
    let mut clickers = ClickerContexts {
        mode,
        clickers: BTreeMap::new(),
        stale: BTreeSet::new(),
    };

    let mut advance = |ts: u64,
                       policy: &mut dyn Policy,
                       store: &mut ContextStore,
                       clickers: &mut ClickerContexts|
     -> Result<()> {
        let hour = ts / EPOCH_SECS;
        match clock.hour {
            Some(h) if hour > h => {
                for _ in h..hour {
                    policy.end_epoch()?;
                }
                clock.epochs += hour - h;
                clickers.refresh(store)?;
                clock.hour = Some(hour);
            }
            None => clock.hour = Some(hour),
            _ => {}
        }
        Ok(())
    };

    let mut pretrain_observations = 0;
    for slot in pretrain {
        advance(slot.timestamp, policy, &mut store, &mut clickers)?;
        for &ad in &slot.displayed {
            let obs = Observation::new(slot.source, slot.user, ad, slot.reward(ad), slot.timestamp);
            policy.update(&obs, &store)?;
            clickers.record(&obs);
            pretrain_observations += 1;
        }
    }

    let mut trace = Vec::with_capacity(impressions.len());
    let mut clicks = 0u64;
    for (step, slot) in impressions.iter().enumerate() {
        advance(slot.timestamp, policy, &mut store, &mut clickers)?;
        let req = SelectRequest {
            source: slot.source,
            user: slot.user,
            candidates: &slot.displayed,
            contexts: &store,
        };
        let chosen = policy.select(&req, rng)?;
        let clicked = slot.reward(chosen);
        let obs = Observation::new(slot.source, slot.user, chosen, clicked, slot.timestamp);
        policy.update(&obs, &store)?;
        clickers.record(&obs);
        clicks += u64::from(clicked);
        trace.push(ReplayStep {
            step,
            timestamp: slot.timestamp,
            user: slot.user,
            chosen,
            clicked,
            cumulative_clicks: clicks,
            ctr: clicks as f64 / (step + 1) as f64,
        });
    }

    let epochs = clock.epochs;
    Ok(ReplayResult {
        summary: ReplaySummary {
            impressions: impressions.len(),
            clicks,
            ctr: clicks as f64 / impressions.len() as f64,
            pretrain_observations,
            epochs,
        },
        trace,
    })
}
