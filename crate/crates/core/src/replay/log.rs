//! Event log and context file parsing.
//!
//! Event log: one event per line, five tab-separated fields
//!
//! ```text
//! timestamp  source_id  user_id  imp|click  ad_id[,ad_id...]
//! ```
//!
//! `timestamp` is integer epoch seconds. Impressions list the displayed ads,
//! clicks exactly one ad. Blank lines and lines starting with `#` are skipped.
//!
//! Context file: `id` followed by its feature values, tab-separated, every
//! row with the same number of values.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{AdId, ContextVector, SourceId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    // declaration order doubles as the tie-break rank at equal timestamps
    Impression,
    Click,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub timestamp: u64,
    pub source: SourceId,
    pub user: UserId,
    pub kind: EventKind,
    pub ads: Vec<AdId>,
    /// 1-based line in the source file.
    pub line: usize,
}

/// String identifiers mapped to dense numeric ids, in order of first appearance.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    users: Interner,
    ads: Interner,
    sources: Interner,
}

#[derive(Debug, Clone, Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }
}

impl Catalog {
    pub fn user(&self, name: &str) -> Option<UserId> {
        self.users.get(name).map(UserId)
    }

    pub fn ad(&self, name: &str) -> Option<AdId> {
        self.ads.get(name).map(AdId)
    }

    pub fn source(&self, name: &str) -> Option<SourceId> {
        self.sources.get(name).map(SourceId)
    }

    pub fn user_name(&self, id: UserId) -> &str {
        &self.users.names[id.0 as usize]
    }

    pub fn ad_name(&self, id: AdId) -> &str {
        &self.ads.names[id.0 as usize]
    }

    pub fn source_name(&self, id: SourceId) -> &str {
        &self.sources.names[id.0 as usize]
    }

    pub fn num_users(&self) -> usize {
        self.users.names.len()
    }

    pub fn num_ads(&self) -> usize {
        self.ads.names.len()
    }
}

/// Parsed log: chronologically sorted events plus the id catalog.
#[derive(Debug, Clone, Default)]
pub struct ReplayLog {
    pub events: Vec<RawEvent>,
    pub catalog: Catalog,
}

pub fn load_log(path: impl AsRef<Path>) -> Result<ReplayLog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_log(&text, &path.display().to_string())
}

/// Parses and sorts a log. Equal timestamps order impressions before clicks,
/// then by file order.
pub fn parse_log(text: &str, origin: &str) -> Result<ReplayLog> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_owned(),
        line,
        message,
    };
    let mut catalog = Catalog::default();
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 5 {
            return Err(err(
                line,
                format!("expected 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let timestamp: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| err(line, format!("invalid timestamp `{}`", fields[0])))?;
        let kind = match fields[3].trim() {
            "imp" => EventKind::Impression,
            "click" => EventKind::Click,
            other => return Err(err(line, format!("unknown event kind `{other}`"))),
        };
        for (name, v) in [("source_id", fields[1]), ("user_id", fields[2])] {
            if v.trim().is_empty() {
                return Err(err(line, format!("empty {name}")));
            }
        }
        let ad_names: Vec<&str> = fields[4].split(',').map(str::trim).collect();
        if ad_names.iter().any(|a| a.is_empty()) {
            return Err(err(line, "empty ad id".into()));
        }
        match kind {
            EventKind::Click if ad_names.len() != 1 => {
                return Err(err(
                    line,
                    format!("click must carry exactly one ad, found {}", ad_names.len()),
                ));
            }
            EventKind::Impression => {
                let unique: HashSet<&&str> = ad_names.iter().collect();
                if unique.len() != ad_names.len() {
                    return Err(err(line, "duplicate ad in impression".into()));
                }
            }
            _ => {}
        }
        events.push(RawEvent {
            timestamp,
            source: SourceId(catalog.sources.intern(fields[1].trim())),
            user: UserId(catalog.users.intern(fields[2].trim())),
            kind,
            ads: ad_names
                .iter()
                .map(|a| AdId(catalog.ads.intern(a)))
                .collect(),
            line,
        });
    }
    if events.is_empty() {
        return Err(Error::Parse {
            path: origin.to_owned(),
            line: 0,
            message: "log contains no events".into(),
        });
    }
    events.sort_by_key(|e| (e.timestamp, e.kind, e.line));

    // a click must name an ad this user was shown in this source at or before the click
    let mut shown: HashSet<(UserId, SourceId, AdId)> = HashSet::new();
    for e in &events {
        match e.kind {
            EventKind::Impression => {
                shown.extend(e.ads.iter().map(|a| (e.user, e.source, *a)));
            }
            EventKind::Click => {
                let ad = e.ads[0];
                if !shown.contains(&(e.user, e.source, ad)) {
                    return Err(err(
                        e.line,
                        format!(
                            "clicked ad `{}` is not in any set displayed to user `{}` in source `{}`",
                            catalog.ad_name(ad),
                            catalog.user_name(e.user),
                            catalog.source_name(e.source)
                        ),
                    ));
                }
            }
        }
    }
    Ok(ReplayLog { events, catalog })
}

pub fn load_contexts(path: impl AsRef<Path>) -> Result<Vec<(String, ContextVector)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_contexts(&text, &path.display().to_string())
}

/// Parses `id<TAB>v1<TAB>v2...` rows. All rows must share one dimension.
pub fn parse_contexts(text: &str, origin: &str) -> Result<Vec<(String, ContextVector)>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_owned(),
        line,
        message,
    };
    let mut out: Vec<(String, ContextVector)> = Vec::new();
    let mut seen = HashSet::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let id = fields.next().unwrap_or_default().trim();
        if id.is_empty() {
            return Err(err(line, "empty id".into()));
        }
        let values = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| err(line, format!("invalid feature value `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(err(
                    line,
                    format!("expected {d} feature values, found {}", values.len()),
                ));
            }
            _ => {}
        }
        if !seen.insert(id.to_owned()) {
            return Err(err(line, format!("duplicate id `{id}`")));
        }
        let v = ContextVector::new(values).map_err(|e| err(line, e.to_string()))?;
        out.push((id.to_owned(), v));
    }
    Ok(out)
}
