//! Offline evaluation on logged carousel impressions.
//!
//! All ads shown together in one carousel render are treated as a single
//! slot: the evaluated policy picks one of them, and since the user's response
//! to every displayed ad is known (at most one was clicked), the pick can be
//! scored whatever it is.

mod attribution;
mod evaluate;
mod log;

pub use attribution::{
    attribute_clicks, AttributionReport, CarouselImpression, ATTRIBUTION_WINDOW_SECS,
    DEDUP_WINDOW_SECS,
};
pub use evaluate::{evaluate, AdContextMode, ReplayResult, ReplayStep, ReplaySummary, EPOCH_SECS};
pub use log::{
    load_contexts, load_log, parse_contexts, parse_log, Catalog, EventKind, RawEvent, ReplayLog,
};
