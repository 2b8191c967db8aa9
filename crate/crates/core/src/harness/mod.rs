//! Experiment runner, metrics, CSV persistence and summaries.

mod config;
mod run;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

pub use config::{ExperimentConfig, KernelChoice, Task};
pub use run::{derive_seed, run_experiment, RunOutcome};

use crate::error::{invalid, Error, Result};

/// One observation made by one policy in one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub replica: usize,
    /// Observation count, initial queries included (1-based).
    pub step: usize,
    pub policy: String,
    pub kind: String,
    pub location: Vec<f64>,
    pub width: f64,
    pub y: f64,
    /// R² for estimation tasks, simple regret for max search.
    pub metric: f64,
    pub ms: f64,
}

pub const CSV_HEADER: [&str; 9] = [
    "replica", "step", "policy", "kind", "location", "width", "y", "metric", "ms",
];

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let loc: Vec<String> = r.location.iter().map(|v| v.to_string()).collect();
        w.write_record([
            r.replica.to_string(),
            r.step.to_string(),
            r.policy.clone(),
            r.kind.clone(),
            loc.join(";"),
            r.width.to_string(),
            r.y.to_string(),
            r.metric.to_string(),
            r.ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_file(path: &Path, records: &[RunRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_records(std::fs::File::create(path)?, records)
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Format(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number '{}'", &rec[k]),
            })
        };
        let int = |k: usize| -> Result<usize> {
            rec[k].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad integer '{}'", &rec[k]),
            })
        };
        let location = if rec[4].is_empty() {
            Vec::new()
        } else {
            rec[4]
                .split(';')
                .map(|s| {
                    s.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("bad location '{s}'"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?
        };
        out.push(RunRecord {
            replica: int(0)?,
            step: int(1)?,
            policy: rec[2].to_string(),
            kind: rec[3].to_string(),
            location,
            width: num(5)?,
            y: num(6)?,
            metric: num(7)?,
            ms: num(8)?,
        });
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<RunRecord>> {
    read_records(std::fs::File::open(path)?)
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn compute_r2(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.len() < 2 {
        return invalid(format!(
            "need two equal-length series of at least 2, got {} and {}",
            predicted.len(),
            truth.len()
        ));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("R² of a constant target".into()));
    }
    let ss_res: f64 = predicted.iter().zip(truth).map(|(p, y)| (p - y).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Simple regret after each observation: `true_max − max_{t ≤ T} y_t`.
pub fn compute_regret(true_max: f64, ys: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    ys.iter()
        .map(|&y| {
            best = best.max(y);
            (true_max - best).max(0.0)
        })
        .collect()
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p / 100.0 * (n - 1) as f64;
    let i = (h.floor() as usize).min(n - 2);
    sorted[i] + (h - i as f64) * (sorted[i + 1] - sorted[i])
}

/// Per-replica metric traces, keyed by policy (in order of first appearance) and replica.
pub fn traces(records: &[RunRecord]) -> Vec<(String, BTreeMap<usize, Vec<(usize, f64)>>)> {
    let mut out: Vec<(String, BTreeMap<usize, Vec<(usize, f64)>>)> = Vec::new();
    for r in records {
        let slot = match out.iter().position(|(p, _)| *p == r.policy) {
            Some(i) => i,
            None => {
                out.push((r.policy.clone(), BTreeMap::new()));
                out.len() - 1
            }
        };
        out[slot].1.entry(r.replica).or_default().push((r.step, r.metric));
    }
    for (_, reps) in &mut out {
        for t in reps.values_mut() {
            t.sort_by_key(|s| s.0);
        }
    }
    out
}

/// Sum of the metric over steps `from..=to` of one trace.
pub fn cumulative_metric(trace: &[(usize, f64)], from: usize, to: usize) -> f64 {
    trace.iter().filter(|(s, _)| (from..=to).contains(s)).map(|s| s.1).sum()
}

/// Median and quartiles of one policy's per-replica scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: String,
    pub replicas: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Default window of the cumulative regret.
pub const REGRET_WINDOW: (usize, usize) = (20, 50);

/// Cumulative regret over `window` per replica, summarized per policy; optionally divided
/// by the median of `normalize_by`.
pub fn summarize(
    records: &[RunRecord],
    window: (usize, usize),
    normalize_by: Option<&str>,
) -> Result<Vec<PolicySummary>> {
    let mut rows = Vec::new();
    for (policy, reps) in traces(records) {
        let mut v: Vec<f64> = reps
            .values()
            .map(|t| cumulative_metric(t, window.0, window.1))
            .collect();
        v.sort_by(f64::total_cmp);
        rows.push(PolicySummary {
            policy,
            replicas: v.len(),
            median: percentile(&v, 50.0),
            p25: percentile(&v, 25.0),
            p75: percentile(&v, 75.0),
        });
    }
    if rows.is_empty() {
        return invalid("no records to summarize");
    }
    if let Some(name) = normalize_by {
        let Some(base) = rows.iter().find(|r| r.policy == name).map(|r| r.median) else {
            return invalid(format!("no records for normalization policy '{name}'"));
        };
        if base == 0.0 || !base.is_finite() {
            return Err(Error::UndefinedMetric(format!("median of '{name}' is {base}")));
        }
        for r in &mut rows {
            r.median /= base;
            r.p25 /= base;
            r.p75 /= base;
        }
    }
    Ok(rows)
}

/// Mean metric per step for every policy.
pub fn mean_metric_by_step(records: &[RunRecord]) -> Vec<(String, Vec<(usize, f64)>)> {
    traces(records)
        .into_iter()
        .map(|(policy, reps)| {
            let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            for t in reps.values() {
                for &(s, m) in t {
                    let e = acc.entry(s).or_default();
                    e.0 += m;
                    e.1 += 1;
                }
            }
            (
                policy,
                acc.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect(),
            )
        })
        .collect()
}

/// First step at which a trace reaches `target`, if ever.
pub fn first_step_reaching(trace: &[(usize, f64)], target: f64) -> Option<usize> {
    trace.iter().find(|(_, m)| *m >= target).map(|s| s.0)
}
