//! Simulation, replay and sweep drivers.

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;

use dcts_core::envsim::{replication_rng, run_scenario};
use dcts_core::replay::{
    attribute_clicks, evaluate, load_contexts, load_log, AdContextMode, AttributionReport,
    CarouselImpression,
};
use dcts_core::stats::{mean_ci95, MeanCi};
use dcts_core::{ContextStore, PolicyKind};

use crate::config::{ExperimentConfig, Mode, ReplaySettings};

/// Stream of the replication seed that drives replay policies.
const REPLAY_POLICY_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub policy: &'static str,
    pub replication: usize,
    pub step: usize,
    pub reward: f64,
    pub cumulative_reward: f64,
    pub ctr: f64,
    /// Cumulative regret; only known in simulation.
    pub regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: &'static str,
    /// Final CTR across replications.
    pub ctr: MeanCi,
    pub mean_regret: Option<f64>,
    /// Mean CTR over the random policy's, when random was run.
    pub relative_ctr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    /// Rows of every policy, one entry per replication.
    pub traces: Vec<Vec<TraceRow>>,
    pub summary: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub values: Vec<(String, String)>,
    pub summary: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub keys: Vec<String>,
    pub points: Vec<SweepPoint>,
}

/// Attributed impressions and contexts ready for evaluation.
#[derive(Debug, Clone)]
pub struct ReplayData {
    pub target: Vec<CarouselImpression>,
    pub pretrain: Vec<CarouselImpression>,
    pub contexts: ContextStore,
    pub mode: AdContextMode,
    pub report: AttributionReport,
}

pub fn load_replay(settings: &ReplaySettings) -> anyhow::Result<ReplayData> {
    let path = settings
        .log
        .as_ref()
        .ok_or_else(|| anyhow!("replay.log is not set"))?;
    let log = load_log(path)?;
    let mut pretrain_ids = Vec::new();
    for name in &settings.pretrain_sources {
        let id = log.catalog.source(name).ok_or_else(|| {
            anyhow!(
                "pretrain source `{name}` does not appear in {}",
                path.display()
            )
        })?;
        pretrain_ids.push(id);
    }
    let (impressions, report) = attribute_clicks(&log.events);
    let (pretrain, target): (Vec<_>, Vec<_>) = impressions
        .into_iter()
        .partition(|imp| pretrain_ids.contains(&imp.source));
    if target.is_empty() {
        bail!("no target impressions left after removing pretrain sources");
    }

    let users = match &settings.user_contexts {
        Some(p) => load_contexts(p)?,
        None => Vec::new(),
    };
    let user_dim = users.first().map_or(0, |(_, v)| v.dim());
    let (ads, mode) = match &settings.ad_contexts {
        Some(p) => (load_contexts(p)?, AdContextMode::Fixed),
        None => (Vec::new(), AdContextMode::FromClickers),
    };
    let ad_dim = match mode {
        AdContextMode::Fixed => ads.first().map_or(0, |(_, v)| v.dim()),
        AdContextMode::FromClickers => user_dim,
    };
    let mut contexts = ContextStore::new(user_dim, ad_dim);
    // ids that never appear in the log cannot influence the replay
    for (name, v) in users {
        if let Some(id) = log.catalog.user(&name) {
            contexts.insert_user(id, v)?;
        }
    }
    for (name, v) in ads {
        if let Some(id) = log.catalog.ad(&name) {
            contexts.insert_ad(id, v)?;
        }
    }
    Ok(ReplayData {
        target,
        pretrain,
        contexts,
        mode,
        report,
    })
}

struct JobResult {
    rows: Vec<TraceRow>,
    ctr: f64,
    regret: Option<f64>,
}

fn run_job(
    cfg: &ExperimentConfig,
    data: Option<&ReplayData>,
    kind: &PolicyKind,
    replication: usize,
) -> anyhow::Result<JobResult> {
    let seed = cfg.base_seed.wrapping_add(replication as u64);
    let policy_name = kind.label();
    let mut policy = kind.build()?;
    match data {
        None => {
            let trace = run_scenario(&cfg.scenario, policy.as_mut(), seed)
                .with_context(|| format!("{policy_name}, replication {replication}"))?;
            let mut cum = 0.0;
            let mut regret = 0.0;
            let rows: Vec<TraceRow> = trace
                .steps
                .iter()
                .map(|s| {
                    cum += s.reward;
                    regret += s.regret;
                    TraceRow {
                        policy: policy_name,
                        replication,
                        step: s.step,
                        reward: s.reward,
                        cumulative_reward: cum,
                        ctr: cum / (s.step + 1) as f64,
                        regret: Some(regret),
                    }
                })
                .collect();
            Ok(JobResult {
                ctr: cum / rows.len() as f64,
                regret: Some(regret),
                rows,
            })
        }
        Some(d) => {
            let mut rng = replication_rng(seed, REPLAY_POLICY_STREAM);
            let result = evaluate(
                policy.as_mut(),
                &d.target,
                &d.pretrain,
                &d.contexts,
                d.mode,
                &mut rng,
            )
            .with_context(|| format!("{policy_name}, replication {replication}"))?;
            let rows = result
                .trace
                .iter()
                .map(|s| TraceRow {
                    policy: policy_name,
                    replication,
                    step: s.step,
                    reward: if s.clicked { 1.0 } else { 0.0 },
                    cumulative_reward: s.cumulative_clicks as f64,
                    ctr: s.ctr,
                    regret: None,
                })
                .collect();
            Ok(JobResult {
                rows,
                ctr: result.summary.ctr,
                regret: None,
            })
        }
    }
}

fn pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker pool")
}

/// Runs every (unit, replication, policy) job on `workers` threads and
/// assembles the results in a fixed order, so output does not depend on
/// scheduling.
fn execute(
    units: &[(ExperimentConfig, Option<ReplayData>)],
    workers: usize,
    keep_traces: bool,
) -> anyhow::Result<Vec<RunOutput>> {
    let jobs: Vec<(usize, usize, usize)> = units
        .iter()
        .enumerate()
        .flat_map(|(u, (cfg, _))| {
            (0..cfg.replications).flat_map(move |r| (0..cfg.policies.len()).map(move |p| (u, r, p)))
        })
        .collect();
    let results: Vec<JobResult> = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(u, r, p)| {
                let (cfg, data) = &units[u];
                let mut res = run_job(cfg, data.as_ref(), &cfg.policies[p], r)?;
                if !keep_traces {
                    res.rows = Vec::new();
                }
                Ok(res)
            })
            .collect::<anyhow::Result<_>>()
    })?;

    let mut results = results.into_iter();
    let mut outputs = Vec::with_capacity(units.len());
    for (cfg, _) in units {
        let n_pol = cfg.policies.len();
        let mut traces = Vec::with_capacity(cfg.replications);
        let mut ctrs = vec![Vec::new(); n_pol];
        let mut regrets = vec![Vec::new(); n_pol];
        for _ in 0..cfg.replications {
            let mut rows = Vec::new();
            for p in 0..n_pol {
                let res = results.next().expect("one result per job");
                rows.extend(res.rows);
                ctrs[p].push(res.ctr);
                if let Some(g) = res.regret {
                    regrets[p].push(g);
                }
            }
            traces.push(rows);
        }
        let random_ctr = cfg
            .policies
            .iter()
            .position(|k| *k == PolicyKind::Random)
            .map(|p| mean_ci95(&ctrs[p]).mean);
        let summary = cfg
            .policies
            .iter()
            .enumerate()
            .map(|(p, kind)| {
                let ctr = mean_ci95(&ctrs[p]);
                SummaryRow {
                    policy: kind.label(),
                    ctr,
                    mean_regret: (!regrets[p].is_empty())
                        .then(|| regrets[p].iter().sum::<f64>() / regrets[p].len() as f64),
                    relative_ctr: random_ctr.map(|base| ctr.mean / base),
                }
            })
            .collect();
        outputs.push(RunOutput { traces, summary });
    }
    Ok(outputs)
}

fn prepare(cfg: &ExperimentConfig, mode: Mode) -> anyhow::Result<Option<ReplayData>> {
    Ok(match mode {
        Mode::Replay => Some(load_replay(&cfg.replay)?),
        _ => None,
    })
}

pub fn simulate(cfg: &ExperimentConfig) -> anyhow::Result<RunOutput> {
    let units = [(cfg.clone(), None)];
    Ok(execute(&units, cfg.workers, true)?.remove(0))
}

pub fn replay(cfg: &ExperimentConfig) -> anyhow::Result<(RunOutput, AttributionReport)> {
    let data = prepare(cfg, Mode::Replay)?.expect("replay data");
    let report = data.report;
    let units = [(cfg.clone(), Some(data))];
    Ok((execute(&units, cfg.workers, true)?.remove(0), report))
}

/// One summary per grid point; each point runs `cfg.sweep_base` with the
/// point's overrides.
pub fn sweep(cfg: &ExperimentConfig) -> anyhow::Result<SweepOutput> {
    if cfg.sweep.is_empty() {
        bail!("empty sweep grid");
    }
    let points = cfg.sweep_points();
    let mut units = Vec::with_capacity(points.len());
    for p in &points {
        let point_cfg = cfg.at_point(p)?;
        let data = prepare(&point_cfg, cfg.sweep_base)?;
        units.push((point_cfg, data));
    }
    let outputs = execute(&units, cfg.workers, false)?;
    Ok(SweepOutput {
        keys: cfg.sweep.iter().map(|(k, _)| k.clone()).collect(),
        points: points
            .into_iter()
            .zip(outputs)
            .map(|(values, out)| SweepPoint {
                values,
                summary: out.summary,
            })
            .collect(),
    })
}
