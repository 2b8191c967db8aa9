//! Maximization of random curves; prints mean regret per step for each policy.
//!
//! cargo run --release --example max_search_1d -- [replicas] [policy,policy,...]

use gpdc::harness::{mean_metric_by_step, run_experiment, ExperimentConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::defaults(Task::MaxSearch1D);
    cfg.replicas = args.next().map(|a| a.parse()).transpose()?.unwrap_or(4);
    if let Some(p) = args.next() {
        cfg.policies = p.split(',').map(str::to_string).collect();
    }
    cfg.steps = 28;
    let out = run_experiment(&cfg)?;
    for (policy, trace) in mean_metric_by_step(&out.records) {
        let row: Vec<String> = trace
            .iter()
            .filter(|t| t.0 % 10 == 0)
            .map(|(s, m)| format!("{s}:{m:.4}"))
            .collect();
        println!("{policy:>8}  {}", row.join("  "));
    }
    Ok(())
}
