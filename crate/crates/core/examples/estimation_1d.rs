//! Adaptive-width estimation of random curves from interval means.
//!
//! cargo run --release --example estimation_1d -- [replicas] [steps]

use gpdc::harness::{mean_metric_by_step, run_experiment, ExperimentConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let mut cfg = ExperimentConfig::defaults(Task::Estimation1D);
    cfg.replicas = args.first().copied().unwrap_or(2);
    cfg.steps = args.get(1).copied().unwrap_or(18);
    cfg.timing = true;
    let out = run_experiment(&cfg)?;
    for (policy, trace) in mean_metric_by_step(&out.records) {
        let row: Vec<String> = trace.iter().step_by(5).map(|(s, m)| format!("{s}:{m:.3}")).collect();
        println!("{policy:>8}  {}", row.join("  "));
    }
    let ms: f64 = out.records.iter().map(|r| r.ms).sum();
    println!("{} records, {:.1} s of policy time", out.records.len(), ms / 1e3);
    Ok(())
}
