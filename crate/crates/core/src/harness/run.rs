use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{compute_r2, write_records_file, ExperimentConfig, RunRecord, Task};
use crate::error::{Error, Result};
use crate::gp::{Dataset, GPModel, Grid, Scaling};
use crate::kernels::{Domain, ObservationOperator, OperatorKind};
use crate::policies::{
    estimation_step, max_search_step, refit, AcquisitionState, EstimationConfig, FitSettings, MaxConstants, MaxPolicy,
    MaxPolicyKind,
};
use crate::problems::{gen_random_function, load_elevation_grid, Benchmark, ElevationGrid, GridFormat, RandomFunction};

/// Starting noise variance of the surrogate before hyperparameter fitting.
const INITIAL_NOISE: f64 = 1e-4;

/// Records of a finished batch plus the `(policy, replica, message)` of failed runs.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<(String, usize, String)>,
}

/// Mix a tag into a seed (FNV-1a, then a splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

enum Truth<'a> {
    Curve(RandomFunction),
    Surface(&'a ElevationGrid),
    Bench(Benchmark),
}

impl Truth<'_> {
    fn observe(&self, op: &ObservationOperator) -> Result<f64> {
        match self {
            Self::Curve(f) => f.observe(op),
            Self::Surface(g) => g.observe(op),
            Self::Bench(b) => b.negated_unit(op.location()),
        }
    }

    fn on_grid(&self, grid: &Grid) -> Vec<f64> {
        grid.points()
            .iter()
            .map(|p| match self {
                Self::Curve(f) => f.eval(p[0]),
                Self::Surface(g) => g.eval(p[0], p[1]),
                Self::Bench(b) => b.negated_unit(p).unwrap_or(f64::NAN),
            })
            .collect()
    }

    fn max(&self) -> f64 {
        match self {
            Self::Curve(f) => f.max().1,
            Self::Surface(g) => g.values().iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Self::Bench(b) => -b.known_min(),
        }
    }
}

/// State shared by every replica of a batch.
struct Env {
    grid: Grid,
    domain: Domain,
    surface: Option<ElevationGrid>,
    adaptive: Option<EstimationConfig>,
    narrow: Option<EstimationConfig>,
    fit: FitSettings,
}

impl Env {
    fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let two_d = matches!(cfg.task, Task::Elevation2D | Task::MaxSearchBenchmark);
        let grid = if two_d {
            Grid::unit_mesh(cfg.grid)?
        } else {
            Grid::unit_line(cfg.grid)?
        };
        let domain = if two_d {
            Domain::unit_square()
        } else {
            Domain::unit_interval()
        };
        let surface = match (cfg.task, &cfg.elevation) {
            (Task::Elevation2D, Some(path)) => Some(load_elevation_grid(path, GridFormat::Ascii)?),
            (Task::Elevation2D, None) => Some(ElevationGrid::synthetic(
                cfg.seed,
                cfg.elevation_size,
                cfg.elevation_size,
            )?),
            _ => None,
        };
        let scaling = if cfg.task == Task::Gradient1D {
            Scaling::Center
        } else {
            Scaling::Standardize
        };
        let fit = FitSettings {
            hyper_budget: cfg.hyper_budget,
            scaling,
            ..Default::default()
        };
        let (mut adaptive, mut narrow) = (None, None);
        if !cfg.task.is_max_search() {
            let kind = match cfg.task {
                Task::Gradient1D => OperatorKind::SmoothedGradient,
                Task::Elevation2D => OperatorKind::DiskMean,
                _ => OperatorKind::IntervalMean,
            };
            let smallest = cfg.widths.iter().copied().fold(f64::INFINITY, f64::min);
            let make = |widths: Vec<f64>| -> Result<EstimationConfig> {
                let c = EstimationConfig::new(widths, kind, cfg.draws, grid.clone(), cfg.alpha)?.with_fit(fit);
                if cfg.task == Task::Elevation2D {
                    c.with_candidate_subset(cfg.candidates)
                } else {
                    Ok(c)
                }
            };
            adaptive = Some(make(cfg.widths.clone())?);
            narrow = Some(make(vec![smallest])?);
        }
        Ok(Self {
            grid,
            domain,
            surface,
            adaptive,
            narrow,
            fit,
        })
    }
}

/// Run every (policy, replica) pair and optionally write the CSV.
///
/// Replica `r` uses seed `cfg.seed + r` for its target and initial queries; each policy
/// draws from its own stream derived from that seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let env = Env::build(cfg)?;
    let jobs: Vec<(String, usize)> = cfg
        .policies
        .iter()
        .flat_map(|p| (0..cfg.replicas).map(move |r| (p.clone(), r)))
        .collect();
    let results: Vec<Result<Vec<RunRecord>>> = jobs.par_iter().map(|(p, r)| run_replica(cfg, &env, p, *r)).collect();
    let mut out = RunOutcome::default();
    for ((policy, replica), res) in jobs.into_iter().zip(results) {
        match res {
            Ok(recs) => out.records.extend(recs),
            Err(e) => {
                log::error!("{policy} replica {replica} failed: {e}");
                out.failures.push((policy, replica, e.to_string()));
            }
        }
    }
    if let Some(path) = &cfg.output {
        write_records_file(path, &out.records)?;
    }
    Ok(out)
}

fn random_operator<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<ObservationOperator> {
    let w = cfg.widths[rng.random_range(0..cfg.widths.len())];
    match cfg.task {
        Task::Estimation1D => ObservationOperator::of_kind(OperatorKind::IntervalMean, vec![rng.random()], w),
        Task::Gradient1D => ObservationOperator::smoothed_gradient(rng.random(), w),
        Task::Elevation2D => ObservationOperator::of_kind(OperatorKind::DiskMean, vec![rng.random(), rng.random()], w),
        _ => Err(Error::Unsupported("random operators are for estimation tasks".into())),
    }
}

fn run_replica(cfg: &ExperimentConfig, env: &Env, policy: &str, replica: usize) -> Result<Vec<RunRecord>> {
    let seed = cfg.seed.wrapping_add(replica as u64);
    let truth = match cfg.task {
        Task::Elevation2D => Truth::Surface(env.surface.as_ref().expect("surface for elevation task")),
        Task::MaxSearchBenchmark => Truth::Bench(cfg.benchmark),
        _ => Truth::Curve(gen_random_function(seed)?),
    };
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "initial"));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("noise/{policy}")));
    let noise = Normal::new(0.0, cfg.noise.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut state = AcquisitionState::new(derive_seed(seed, policy));

    let initial: Vec<ObservationOperator> = match cfg.task {
        Task::Gradient1D => vec![
            ObservationOperator::point(vec![0.0]),
            ObservationOperator::point(vec![1.0]),
        ],
        t if t.is_max_search() => (0..cfg.initial)
            .map(|_| ObservationOperator::point(env.grid.point(init_rng.random_range(0..env.grid.len()))))
            .collect(),
        _ => (0..cfg.initial)
            .map(|_| random_operator(cfg, &mut init_rng))
            .collect::<Result<_>>()?,
    };
    let max_policy = if cfg.task.is_max_search() {
        let c = MaxConstants {
            m: cfg.draws,
            alpha: cfg.alpha,
            ..Default::default()
        };
        Some(
            MaxPolicy::new(MaxPolicyKind::parse(policy)?)
                .with_constants(c)?
                .with_fit(env.fit),
        )
    } else {
        None
    };
    let truth_grid = truth.on_grid(&env.grid);
    let true_max = truth.max();

    let mut model = GPModel::new(cfg.kernel.build(cfg.length_scale)?, INITIAL_NOISE)?;
    let mut data = Dataset::new(env.domain.clone());
    let mut best = f64::NEG_INFINITY;
    let mut records = Vec::with_capacity(initial.len() + cfg.steps);
    for step in 1..=initial.len() + cfg.steps {
        let start = Instant::now();
        let op = if step <= initial.len() {
            initial[step - 1].clone()
        } else if let Some(mp) = &max_policy {
            let choice = max_search_step(&model, &data, mp, &env.grid, &mut state)?;
            model = choice.model;
            ObservationOperator::point(env.grid.point(choice.index))
        } else {
            match policy {
                "random" => {
                    model = refit(&model, &data, &env.fit, &mut state.rng)?.0;
                    state.t += 1;
                    random_operator(cfg, &mut state.rng)?
                }
                name => {
                    let ec = if name == "gp-dc" { &env.adaptive } else { &env.narrow };
                    let choice = estimation_step(&model, &data, ec.as_ref().expect("estimation config"), &mut state)?;
                    model = choice.model;
                    choice.operator
                }
            }
        };
        let mut y = truth.observe(&op)?;
        if cfg.noise > 0.0 {
            y += noise.sample(&mut noise_rng);
        }
        data.push(op.clone(), y)?;
        state.observe(y);
        best = best.max(y);
        let metric = if cfg.task.is_max_search() {
            (true_max - best).max(0.0)
        } else {
            let (_, st, cond) = refit(
                &model,
                &data,
                &FitSettings {
                    hyper_budget: 0,
                    ..env.fit
                },
                &mut state.rng,
            )?;
            let mean = cond.mean(&env.grid)?;
            let pred = st.unscale_values(mean.as_slice());
            compute_r2(&pred, &truth_grid)?
        };
        records.push(RunRecord {
            replica,
            step,
            policy: policy.to_string(),
            kind: op.kind().as_str().to_string(),
            location: op.location().to_vec(),
            width: op.width(),
            y,
            metric,
            ms: if cfg.timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        });
    }
    Ok(records)
}
