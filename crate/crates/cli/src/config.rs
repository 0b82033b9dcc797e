//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment. Keys are dotted
//! (`policy.dcts.lambda = 10`). Environment variables prefixed `APP_` override
//! file values: the rest of the name is lowercased, `__` becomes `_` and a
//! single `_` becomes `.` (`APP_POLICY_DCTS_NEIGHBOR__K` is
//! `policy.dcts.neighbor_k`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use dcts_core::envsim::{ScenarioConfig, ScenarioKind};
use dcts_core::{DctsConfig, GlobalMeanDenominator, LinUcbConfig, NeighborStrategy, PolicyKind};

pub const ENV_PREFIX: &str = "APP_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Replay,
    Sweep,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Self::Simulate),
            "replay" => Ok(Self::Replay),
            "sweep" => Ok(Self::Sweep),
            other => Err(format!("unknown mode `{other}` (simulate, replay, sweep)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simulate => "simulate",
            Self::Replay => "replay",
            Self::Sweep => "sweep",
        })
    }
}

/// Unvalidated key/value pairs. Later `set` calls win.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`", i + 1);
            };
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            raw.set(key, value.trim());
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_owned(), value.to_owned());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Applies `APP_*` overrides from `vars`.
    pub fn apply_env<I, K, V>(&mut self, vars: I)
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            if let Some(rest) = k.as_ref().strip_prefix(ENV_PREFIX) {
                if !rest.is_empty() {
                    self.set(&env_key(rest), v.as_ref());
                }
            }
        }
    }
}

fn env_key(rest: &str) -> String {
    rest.to_ascii_lowercase()
        .split("__")
        .map(|part| part.replace('_', "."))
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplaySettings {
    pub log: Option<PathBuf>,
    /// Sources whose impressions are used as pretraining data.
    pub pretrain_sources: Vec<String>,
    pub user_contexts: Option<PathBuf>,
    /// When absent, ad contexts are derived from their clickers.
    pub ad_contexts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub scenario: ScenarioConfig,
    pub policies: Vec<PolicyKind>,
    pub replications: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// 0 means one worker per core.
    pub workers: usize,
    pub replay: ReplaySettings,
    /// Mode used for each sweep point.
    pub sweep_base: Mode,
    pub sweep: Vec<(String, Vec<String>)>,
    /// The settings this was built from, for re-validation of sweep points.
    pub raw: RawConfig,
}

const POLICY_NAMES: [&str; 5] = ["dcts", "ts", "hlinucb", "tlinucb", "random"];

const KEYS: &[&str] = &[
    "mode",
    "policies",
    "replications",
    "base_seed",
    "output_dir",
    "workers",
    "scenario.kind",
    "scenario.total_steps",
    "scenario.switch_step",
    "scenario.num_ads",
    "scenario.ads_per_domain",
    "scenario.num_users",
    "scenario.user_dim",
    "scenario.ad_dim",
    "scenario.discount_interval",
    "scenario.window",
    "scenario.drift",
    "policy.dcts.lambda",
    "policy.dcts.g",
    "policy.dcts.gamma",
    "policy.dcts.neighbor_k",
    "policy.dcts.neighbors",
    "policy.dcts.lsh_bits",
    "policy.dcts.lsh_tables",
    "policy.dcts.lsh_seed",
    "policy.dcts.global_mean",
    "policy.dcts.cross_source",
    "policy.hlinucb.alpha",
    "policy.tlinucb.alpha",
    "replay.log",
    "replay.pretrain_sources",
    "replay.user_contexts",
    "replay.ad_contexts",
    "sweep.mode",
];

struct Checker<'a> {
    raw: &'a RawConfig,
    diagnostics: Vec<String>,
}

impl Checker<'_> {
    fn value<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: fmt::Display,
    {
        match self.raw.get(key) {
            None => default,
            Some(v) => match v.parse() {
                Ok(x) => x,
                Err(e) => {
                    self.diagnostics
                        .push(format!("{key}: invalid value `{v}`: {e}"));
                    default
                }
            },
        }
    }

    fn check(&mut self, ok: bool, key: &str, message: impl fmt::Display) {
        if !ok {
            self.diagnostics.push(format!("{key}: {message}"));
        }
    }
}

/// Checks every setting and builds the typed configuration, or returns all
/// problems found.
pub fn validate_config(raw: &RawConfig) -> Result<ExperimentConfig, Vec<String>> {
    let mut c = Checker {
        raw,
        diagnostics: Vec::new(),
    };

    for (key, _) in raw.iter() {
        if !KEYS.contains(&key) && !key.starts_with("sweep.") {
            c.diagnostics.push(format!("{key}: unknown setting"));
        }
    }

    let mode = raw.get("mode").map(|_| c.value("mode", Mode::Simulate));

    let kind = match raw.get("scenario.kind").unwrap_or("transfer") {
        "transfer" => ScenarioKind::Transfer,
        "drift" => ScenarioKind::Drift,
        other => {
            c.diagnostics.push(format!(
                "scenario.kind: unknown scenario `{other}` (transfer, drift)"
            ));
            ScenarioKind::Transfer
        }
    };
    let base = match kind {
        ScenarioKind::Transfer => ScenarioConfig::transfer(),
        ScenarioKind::Drift => ScenarioConfig::drift(),
    };
    let scenario = ScenarioConfig {
        kind,
        total_steps: c.value("scenario.total_steps", base.total_steps),
        switch_step: c.value("scenario.switch_step", base.switch_step),
        num_ads: c.value("scenario.num_ads", base.num_ads),
        ads_per_domain: c.value("scenario.ads_per_domain", base.ads_per_domain),
        num_users: c.value("scenario.num_users", base.num_users),
        user_dim: c.value("scenario.user_dim", base.user_dim),
        ad_dim: c.value("scenario.ad_dim", base.ad_dim),
        discount_interval: c.value("scenario.discount_interval", base.discount_interval),
        window: c.value("scenario.window", base.window),
        drift: c.value("scenario.drift", base.drift),
    };
    if let Err(e) = scenario.validate() {
        c.diagnostics.push(format!("scenario: {e}"));
    }

    let defaults = DctsConfig::default();
    let lambda: f64 = c.value("policy.dcts.lambda", defaults.lambda);
    let g: f64 = c.value("policy.dcts.g", defaults.g);
    let gamma: f64 = c.value("policy.dcts.gamma", defaults.gamma);
    let neighbor_k: usize = c.value("policy.dcts.neighbor_k", defaults.neighbor_k);
    c.check(
        lambda >= 0.0 && lambda.is_finite(),
        "policy.dcts.lambda",
        "lambda must be >= 0",
    );
    c.check(g >= 0.0 && g.is_finite(), "policy.dcts.g", "g must be >= 0");
    c.check(
        (0.0..=1.0).contains(&gamma),
        "policy.dcts.gamma",
        "gamma out of [0,1]",
    );
    c.check(
        neighbor_k >= 1,
        "policy.dcts.neighbor_k",
        "neighbor_k must be at least 1",
    );
    let (bits, tables, lsh_seed) = match defaults.neighbors {
        NeighborStrategy::Lsh {
            num_bits,
            num_tables,
            seed,
        } => (num_bits, num_tables, seed),
        NeighborStrategy::Exhaustive => (16, 8, 0),
    };
    let bits: usize = c.value("policy.dcts.lsh_bits", bits);
    let tables: usize = c.value("policy.dcts.lsh_tables", tables);
    let lsh_seed: u64 = c.value("policy.dcts.lsh_seed", lsh_seed);
    c.check(
        (1..=64).contains(&bits),
        "policy.dcts.lsh_bits",
        "must be in 1..=64",
    );
    c.check(tables >= 1, "policy.dcts.lsh_tables", "must be at least 1");
    let neighbors = match raw.get("policy.dcts.neighbors").unwrap_or("lsh") {
        "lsh" => NeighborStrategy::Lsh {
            num_bits: bits,
            num_tables: tables,
            seed: lsh_seed,
        },
        "exhaustive" => NeighborStrategy::Exhaustive,
        other => {
            c.diagnostics.push(format!(
                "policy.dcts.neighbors: unknown strategy `{other}` (lsh, exhaustive)"
            ));
            NeighborStrategy::Exhaustive
        }
    };
    let global_mean: GlobalMeanDenominator =
        c.value("policy.dcts.global_mean", defaults.global_mean);
    let cross_source: bool = c.value("policy.dcts.cross_source", defaults.cross_source);
    let dcts = DctsConfig {
        lambda,
        g,
        gamma,
        neighbor_k,
        neighbors,
        global_mean,
        cross_source,
    };

    let mut linucb = |key: &str| {
        let alpha: f64 = c.value(key, LinUcbConfig::default().alpha);
        c.check(alpha > 0.0 && alpha.is_finite(), key, "alpha must be > 0");
        LinUcbConfig { alpha }
    };
    let hlin = linucb("policy.hlinucb.alpha");
    let tlin = linucb("policy.tlinucb.alpha");

    let mut policies = Vec::new();
    for name in list(raw.get("policies").unwrap_or("dcts,ts")) {
        let kind = match name {
            "dcts" => PolicyKind::Dcts(dcts.clone()),
            "ts" => PolicyKind::Ts,
            "hlinucb" => PolicyKind::HybridLinUcb(hlin),
            "tlinucb" => PolicyKind::TransferLinUcb(tlin),
            "random" => PolicyKind::Random,
            other => {
                c.diagnostics.push(format!(
                    "policies: unknown policy `{other}` ({})",
                    POLICY_NAMES.join(", ")
                ));
                continue;
            }
        };
        if policies.contains(&kind) {
            c.diagnostics
                .push(format!("policies: `{name}` listed twice"));
            continue;
        }
        policies.push(kind);
    }
    c.check(
        !policies.is_empty(),
        "policies",
        "at least one policy is required",
    );

    let replications: usize = c.value("replications", 10);
    c.check(replications >= 1, "replications", "must be at least 1");
    let base_seed: u64 = c.value("base_seed", 0);
    let output_dir = PathBuf::from(raw.get("output_dir").unwrap_or("out"));
    let workers: usize = c.value("workers", 0);

    let replay = ReplaySettings {
        log: raw.get("replay.log").map(PathBuf::from),
        pretrain_sources: list(raw.get("replay.pretrain_sources").unwrap_or(""))
            .map(str::to_owned)
            .collect(),
        user_contexts: raw.get("replay.user_contexts").map(PathBuf::from),
        ad_contexts: raw.get("replay.ad_contexts").map(PathBuf::from),
    };
    if replay.ad_contexts.is_some() && replay.user_contexts.is_none() {
        c.diagnostics
            .push("replay.ad_contexts: requires replay.user_contexts".to_owned());
    }

    let sweep_base: Mode = c.value("sweep.mode", Mode::Simulate);
    c.check(
        sweep_base != Mode::Sweep,
        "sweep.mode",
        "must be simulate or replay",
    );
    let mut sweep = Vec::new();
    for (key, values) in raw.iter() {
        let Some(target) = key.strip_prefix("sweep.") else {
            continue;
        };
        if target == "mode" {
            continue;
        }
        if !KEYS.contains(&target) || target.starts_with("sweep.") {
            c.diagnostics
                .push(format!("{key}: cannot sweep unknown setting `{target}`"));
            continue;
        }
        let values: Vec<String> = list(values).map(str::to_owned).collect();
        if values.is_empty() {
            c.diagnostics.push(format!("{key}: empty value list"));
            continue;
        }
        // every grid value must itself give a valid configuration
        for v in &values {
            let mut point = raw.clone();
            point.entries.retain(|k, _| !k.starts_with("sweep."));
            point.set("mode", &sweep_base.to_string());
            point.set(target, v);
            if let Err(errs) = validate_config(&point) {
                for e in errs {
                    c.diagnostics.push(format!("{key}={v}: {e}"));
                }
            }
        }
        sweep.push((target.to_owned(), values));
    }

    let effective = mode.unwrap_or(Mode::Simulate);
    if effective == Mode::Sweep && sweep.is_empty() {
        c.diagnostics
            .push("sweep: sweep mode needs at least one `sweep.<key> = v1,v2,...` grid".to_owned());
    }
    let replays =
        effective == Mode::Replay || (effective == Mode::Sweep && sweep_base == Mode::Replay);
    if replays && replay.log.is_none() {
        c.diagnostics
            .push("replay.log: required in replay mode".to_owned());
    }

    if !c.diagnostics.is_empty() {
        return Err(c.diagnostics);
    }
    Ok(ExperimentConfig {
        mode,
        scenario,
        policies,
        replications,
        base_seed,
        output_dir,
        workers,
        replay,
        sweep_base,
        sweep,
        raw: raw.clone(),
    })
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

impl ExperimentConfig {
    /// Cartesian product of the sweep grid, in key order then value order.
    pub fn sweep_points(&self) -> Vec<Vec<(String, String)>> {
        let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (key, values) in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// This configuration with `overrides` applied and the sweep removed.
    pub fn at_point(&self, overrides: &[(String, String)]) -> anyhow::Result<Self> {
        let mut raw = self.raw.clone();
        raw.entries.retain(|k, _| !k.starts_with("sweep."));
        raw.set("mode", &self.sweep_base.to_string());
        for (k, v) in overrides {
            raw.set(k, v);
        }
        validate_config(&raw).map_err(|errs| anyhow::anyhow!(errs.join("\n")))
    }
}
