use std::collections::HashMap;

use super::log::{EventKind, RawEvent};
use crate::types::{AdId, SourceId, UserId};

/// A click counts for an impression shown at most this many seconds earlier.
pub const ATTRIBUTION_WINDOW_SECS: u64 = 900;
/// Repeat impressions to the same user in the same source within this many
/// seconds of the last retained one are dropped.
pub const DEDUP_WINDOW_SECS: u64 = 300;

/// One carousel render treated as a single decision slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarouselImpression {
    pub timestamp: u64,
    pub source: SourceId,
    pub user: UserId,
    pub displayed: Vec<AdId>,
    pub clicked: Option<AdId>,
}

impl CarouselImpression {
    /// Reward for showing `ad` in this slot.
    pub fn reward(&self, ad: AdId) -> bool {
        self.clicked == Some(ad)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttributionReport {
    pub impressions_read: usize,
    pub impressions_deduplicated: usize,
    pub clicks_read: usize,
    pub clicks_attributed: usize,
    /// Clicks with no retained impression of that ad within the window.
    pub orphan_clicks: usize,
    /// Clicks whose impression already had a click attributed.
    pub duplicate_clicks: usize,
}

/// Folds sorted events into carousel impressions.
///
/// Impressions are deduplicated per (user, source) first; each click then
/// attaches to the latest retained impression of the same user and source that
/// displayed the clicked ad, if it is no more than
/// [`ATTRIBUTION_WINDOW_SECS`] older. Both windows are inclusive.
pub fn attribute_clicks(events: &[RawEvent]) -> (Vec<CarouselImpression>, AttributionReport) {
    let mut out: Vec<CarouselImpression> = Vec::new();
    let mut report = AttributionReport::default();
    // retained impression indices per (user, source), oldest first
    let mut history: HashMap<(UserId, SourceId), Vec<usize>> = HashMap::new();

    for e in events {
        let key = (e.user, e.source);
        match e.kind {
            EventKind::Impression => {
                report.impressions_read += 1;
                let retained = history.entry(key).or_default();
                if let Some(&last) = retained.last() {
                    if e.timestamp.saturating_sub(out[last].timestamp) <= DEDUP_WINDOW_SECS {
                        report.impressions_deduplicated += 1;
                        continue;
                    }
                }
                retained.push(out.len());
                out.push(CarouselImpression {
                    timestamp: e.timestamp,
                    source: e.source,
                    user: e.user,
                    displayed: e.ads.clone(),
                    clicked: None,
                });
            }
            EventKind::Click => {
                report.clicks_read += 1;
                let ad = e.ads[0];
                let target = history.get(&key).and_then(|idx| {
                    idx.iter()
                        .rev()
                        .map(|&i| (i, &out[i]))
                        .filter(|(_, imp)| imp.timestamp <= e.timestamp)
                        .take_while(|(_, imp)| {
                            e.timestamp - imp.timestamp <= ATTRIBUTION_WINDOW_SECS
                        })
                        .find(|(_, imp)| imp.displayed.contains(&ad))
                        .map(|(i, _)| i)
                });
                match target {
                    Some(i) if out[i].clicked.is_none() => {
                        out[i].clicked = Some(ad);
                        report.clicks_attributed += 1;
                    }
                    Some(_) => report.duplicate_clicks += 1,
                    None => report.orphan_clicks += 1,
                }
            }
        }
    }
    (out, report)
}
