//! Disk-mean estimation of an elevation surface read from an ASCII grid.
//!
//! cargo run --release --example elevation_2d -- [grid.asc] [steps]
//!
//! Without a file a synthetic 64x64 surface is written to a temporary path first.

use gpdc::harness::{mean_metric_by_step, run_experiment, ExperimentConfig, Task};
use gpdc::problems::ElevationGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = match args.next() {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("gpdc_surface.asc");
            ElevationGrid::synthetic(3, 64, 64)?.write_ascii(&p)?;
            p
        }
    };
    let mut cfg = ExperimentConfig::defaults(Task::Elevation2D);
    cfg.elevation = Some(path);
    cfg.replicas = 1;
    cfg.steps = args.next().map(|a| a.parse()).transpose()?.unwrap_or(10);
    cfg.draws = 150;
    let out = run_experiment(&cfg)?;
    for (policy, trace) in mean_metric_by_step(&out.records) {
        let row: Vec<String> = trace.iter().map(|(s, m)| format!("{s}:{m:.2}")).collect();
        println!("{policy:>8}  {}", row.join(" "));
    }
    let radii: Vec<String> = out
        .records
        .iter()
        .filter(|r| r.policy == "gp-dc")
        .map(|r| format!("{:.2}", r.width))
        .collect();
    println!("gp-dc radii: {}", radii.join(" "));
    Ok(())
}
