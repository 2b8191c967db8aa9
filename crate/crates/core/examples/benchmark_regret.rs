//! Cumulative regret on a 2-D benchmark, normalized by the random policy.
//!
//! cargo run --release --example benchmark_regret -- [branin|himmelblau|goldstein-price|eggholder] [replicas]

use gpdc::harness::{run_experiment, summarize, ExperimentConfig, Task, REGRET_WINDOW};
use gpdc::problems::Benchmark;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::defaults(Task::MaxSearchBenchmark);
    cfg.benchmark = Benchmark::parse(&args.next().unwrap_or_else(|| "branin".into()))?;
    cfg.replicas = args.next().map(|a| a.parse()).transpose()?.unwrap_or(3);
    cfg.policies = vec!["gp-dcor".into(), "ei".into(), "gp-ucb".into(), "random".into()];
    let out = run_experiment(&cfg)?;
    println!(
        "{} regret summed over steps {}..{}, random = 1",
        cfg.benchmark.name(),
        REGRET_WINDOW.0,
        REGRET_WINDOW.1
    );
    for s in summarize(&out.records, REGRET_WINDOW, Some("random"))? {
        println!("{:>8}  median {:.3}  [{:.3}, {:.3}]", s.policy, s.median, s.p25, s.p75);
    }
    Ok(())
}
