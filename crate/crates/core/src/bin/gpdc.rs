use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpdc::harness::{
    mean_metric_by_step, read_records_file, run_experiment, summarize, ExperimentConfig, REGRET_WINDOW,
};
use gpdc::problems::{gen_random_function, load_elevation_grid, GridFormat, RANDOM_FUNCTION_NODES};
use gpdc::Error;

#[derive(Parser)]
#[command(
    name = "gpdc",
    version,
    about = "Distance-correlation Bayesian optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write random test curves as CSV (one column per seed).
    GenFunctions {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load an elevation grid, rescale it to [0, 1] and write it back out.
    IngestGrid {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "ascii")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Median and quartiles of cumulative regret, or mean R² per step.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        normalize_by: Option<String>,
        #[arg(long, default_value_t = REGRET_WINDOW.0)]
        from: usize,
        #[arg(long, default_value_t = REGRET_WINDOW.1)]
        to: usize,
        /// `regret` or `r2`.
        #[arg(long, default_value = "regret")]
        metric: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn execute(cmd: Command) -> gpdc::Result<()> {
    match cmd {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            for (policy, trace) in mean_metric_by_step(&out.records) {
                if let Some((step, m)) = trace.last() {
                    println!("{policy}: mean metric {m:.4} at step {step}");
                }
            }
            if let Some(path) = &cfg.output {
                println!("wrote {} records to {}", out.records.len(), path.display());
            }
            if !out.failures.is_empty() {
                for (p, r, msg) in &out.failures {
                    eprintln!("{p} replica {r}: {msg}");
                }
                return Err(Error::Numerical {
                    message: format!("{} run(s) failed", out.failures.len()),
                    condition: f64::NAN,
                });
            }
            Ok(())
        }
        Command::GenFunctions { seed, count, out } => {
            let fs = (seed..seed + count)
                .map(gen_random_function)
                .collect::<gpdc::Result<Vec<_>>>()?;
            let mut w = csv::Writer::from_path(&out)?;
            let mut header = vec!["x".to_string()];
            header.extend((seed..seed + count).map(|s| format!("seed_{s}")));
            w.write_record(&header)?;
            for i in 0..RANDOM_FUNCTION_NODES {
                let x = i as f64 / (RANDOM_FUNCTION_NODES - 1) as f64;
                let mut row = vec![x.to_string()];
                row.extend(fs.iter().map(|f| f.values()[i].to_string()));
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::IngestGrid { input, format, out } => {
            let grid = load_elevation_grid(&input, GridFormat::parse(&format)?)?;
            grid.write_ascii(&out)?;
            println!("{}x{} grid written to {}", grid.rows(), grid.cols(), out.display());
            Ok(())
        }
        Command::Summarize {
            input,
            normalize_by,
            from,
            to,
            metric,
        } => {
            let records = read_records_file(&input)?;
            match metric.as_str() {
                "regret" => {
                    println!("policy,replicas,median,p25,p75");
                    for s in summarize(&records, (from, to), normalize_by.as_deref())? {
                        println!("{},{},{:.4},{:.4},{:.4}", s.policy, s.replicas, s.median, s.p25, s.p75);
                    }
                }
                "r2" => {
                    println!("policy,step,mean");
                    for (policy, trace) in mean_metric_by_step(&records) {
                        for (step, m) in trace {
                            println!("{policy},{step},{m:.4}");
                        }
                    }
                }
                other => return Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
            }
            Ok(())
        }
    }
}
