//! CSV metric files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;

use crate::run::{RunOutput, SummaryRow, SweepOutput, TraceRow};

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed,
/// scientific notation outside `[1e-4, 1e9)`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_owned()
        } else if x > 0.0 {
            "inf".to_owned()
        } else {
            "-inf".to_owned()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub const TRACE_HEADER: &str = "policy,replication,step,reward,cumulative_reward,ctr,regret";
pub const SUMMARY_HEADER: &str =
    "policy,replications,mean_ctr,ci_half_width,ci_low,ci_high,mean_cumulative_regret,relative_ctr";

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.policy,
            r.replication,
            r.step,
            fmt_float(r.reward),
            fmt_float(r.cumulative_reward),
            fmt_float(r.ctr),
            opt(r.regret)
        );
    }
    out
}

fn summary_fields(s: &SummaryRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        s.policy,
        s.ctr.n,
        fmt_float(s.ctr.mean),
        fmt_float(s.ctr.half_width),
        fmt_float(s.ctr.lower()),
        fmt_float(s.ctr.upper()),
        opt(s.mean_regret),
        opt(s.relative_ctr)
    )
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in rows {
        out.push_str(&summary_fields(s));
        out.push('\n');
    }
    out
}

pub fn sweep_csv(sweep: &SweepOutput) -> String {
    let mut out = String::new();
    for k in &sweep.keys {
        out.push_str(k);
        out.push(',');
    }
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for point in &sweep.points {
        for s in &point.summary {
            for (_, v) in &point.values {
                out.push_str(v);
                out.push(',');
            }
            out.push_str(&summary_fields(s));
            out.push('\n');
        }
    }
    out
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `trace_r{r}.csv` per replication plus `summary.csv`.
pub fn write_run(dir: &Path, run: &RunOutput) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (r, rows) in run.traces.iter().enumerate() {
        write(&dir.join(format!("trace_r{r}.csv")), &trace_csv(rows))?;
    }
    write(&dir.join("summary.csv"), &summary_csv(&run.summary))
}

pub fn write_sweep(dir: &Path, sweep: &SweepOutput) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("summary.csv"), &sweep_csv(sweep))
}
