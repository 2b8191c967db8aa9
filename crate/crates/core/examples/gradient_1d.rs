//! Estimation from smoothed-gradient observations after f(0) and f(1).
//! Slow: each DC step scores nine widths of Gaussian-derivative windows.
//!
//! cargo run --release --example gradient_1d -- [steps]

use gpdc::harness::{run_experiment, ExperimentConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::defaults(Task::Gradient1D);
    cfg.replicas = 1;
    cfg.steps = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(8);
    cfg.draws = 100;
    cfg.policies = vec!["gp-dc".into(), "random".into()];
    let out = run_experiment(&cfg)?;
    for r in &out.records {
        println!(
            "{:>6} step {:>2}  q={:.3} w={:.2}  g={:>8.3}  R2={:.3}",
            r.policy, r.step, r.location[0], r.width, r.y, r.metric
        );
    }
    Ok(())
}
