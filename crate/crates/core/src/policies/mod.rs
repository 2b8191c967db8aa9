//! Query-selection policies: adaptive-width estimation, distance-correlation max
//! search and the classical acquisition baselines.

pub mod acquisition;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use acquisition::{
    acq_ei, acq_gpmi, acq_mes, acq_pi, acq_ucb, gumbel_max_samples, log_ndtr, mes_term, norm_cdf, norm_pdf, ucb_tau,
};

use crate::depmeasures::{mi_knn, CenteredDistances, DepConfig};
use crate::error::{invalid, Error, Result};
use crate::gp::{
    optimize_hypers, sample_posterior, Conditioned, Dataset, GPModel, Grid, HyperBounds, Posterior, SampleMatrix,
    Scaling, Standardization,
};
use crate::kernels::{ObservationOperator, OperatorKind};

/// How the model is refreshed before every decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    /// Leave-one-out evaluations per step; 0 keeps the incoming hyperparameters.
    pub hyper_budget: usize,
    pub bounds: HyperBounds,
    pub scaling: Scaling,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            hyper_budget: 20,
            bounds: HyperBounds::default(),
            scaling: Scaling::Standardize,
        }
    }
}

/// Settings of the adaptive-width estimation policy.
#[derive(Debug, Clone)]
pub struct EstimationConfig {
    pub widths: Vec<f64>,
    pub operator_kind: OperatorKind,
    /// Number of posterior draws.
    pub m: usize,
    /// Representative points; draws live here and candidates are taken from here.
    pub grid: Grid,
    pub alpha: f64,
    /// Score a fresh random subset of this many grid points per width instead of all.
    pub candidate_subset: Option<usize>,
    pub fit: FitSettings,
}

impl EstimationConfig {
    pub fn new(widths: Vec<f64>, operator_kind: OperatorKind, m: usize, grid: Grid, alpha: f64) -> Result<Self> {
        let cfg = Self {
            widths,
            operator_kind,
            m,
            grid,
            alpha,
            candidate_subset: None,
            fit: FitSettings::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_candidate_subset(mut self, n: usize) -> Result<Self> {
        self.candidate_subset = Some(n);
        self.validate()?;
        Ok(self)
    }

    pub fn with_fit(mut self, fit: FitSettings) -> Self {
        self.fit = fit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() {
            return invalid("width menu is empty");
        }
        if let Some(w) = self.widths.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return invalid(format!("widths must be finite and nonnegative, got {w}"));
        }
        if self.operator_kind == OperatorKind::Point {
            return invalid("estimation operators must be interval, gradient or disk means");
        }
        if self.operator_kind == OperatorKind::SmoothedGradient && self.widths.contains(&0.0) {
            return invalid("smoothed gradients need positive widths");
        }
        if self.m < 2 {
            return invalid(format!("need at least 2 draws, got {}", self.m));
        }
        if self.grid.len() < 2 {
            return invalid("representative grid needs at least 2 points");
        }
        if self.candidate_subset == Some(0) {
            return invalid("candidate subset must be nonempty");
        }
        DepConfig::new(self.alpha, 1).map(|_| ())
    }
}

/// Mutable per-replica bookkeeping shared by all policies.
#[derive(Debug, Clone)]
pub struct AcquisitionState {
    /// Completed policy steps.
    pub t: usize,
    /// Largest observed value so far.
    pub incumbent: f64,
    /// Accumulated predictive variance of the mutual-information rule.
    pub gamma_hat: f64,
    pub rng: ChaCha8Rng,
}

impl AcquisitionState {
    pub fn new(seed: u64) -> Self {
        Self {
            t: 0,
            incumbent: f64::NEG_INFINITY,
            gamma_hat: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Register an observed value.
    pub fn observe(&mut self, y: f64) {
        if y > self.incumbent {
            self.incumbent = y;
        }
    }
}

/// Add the chosen point's predictive variance to `gamma_hat`.
pub fn update_gamma(state: &mut AcquisitionState, sigma_chosen: f64) {
    state.gamma_hat += sigma_chosen * sigma_chosen;
}

/// Index of the largest score, ties broken uniformly with `rng`.
pub fn argmax_random_ties<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> Result<usize> {
    let best = scores
        .iter()
        .copied()
        .filter(|s| !s.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    match ties.len() {
        0 => invalid("no finite score to maximize"),
        1 => Ok(ties[0]),
        n => Ok(ties[rng.random_range(0..n)]),
    }
}

/// Standardize, refit the hyperparameters and condition.
pub fn refit(
    model: &GPModel,
    data: &Dataset,
    fit: &FitSettings,
    rng: &mut ChaCha8Rng,
) -> Result<(GPModel, Standardization, Conditioned)> {
    let st = Standardization::fit(data, fit.scaling);
    let scaled = st.apply(data);
    let model = if fit.hyper_budget > 0 && scaled.len() >= 2 {
        optimize_hypers(model, &scaled, fit.hyper_budget, &fit.bounds, rng)?.model
    } else {
        model.clone()
    };
    let cond = Conditioned::new(&model, &scaled)?;
    Ok((model, st, cond))
}

/// Outcome of one estimation step.
#[derive(Debug, Clone)]
pub struct EstimationChoice {
    pub operator: ObservationOperator,
    pub width: f64,
    pub location: Vec<f64>,
    /// Distance correlation per width; empty for a single-width menu.
    pub scores: Vec<f64>,
    /// Model with the refitted hyperparameters.
    pub model: GPModel,
}

/// Pick the next (width, location) for function estimation.
///
/// Each width proposes its maximal-variance location; the width whose simulated
/// observation has the largest distance correlation with the draws on the grid wins.
pub fn estimation_step(
    model: &GPModel,
    data: &Dataset,
    cfg: &EstimationConfig,
    state: &mut AcquisitionState,
) -> Result<EstimationChoice> {
    cfg.validate()?;
    if data.is_empty() {
        return invalid("estimation step needs at least one observation");
    }
    if cfg.grid.dim() != data.domain().dim() {
        return invalid("grid and data dimensions differ");
    }
    let (model, _, cond) = refit(model, data, &cfg.fit, &mut state.rng)?;

    let mut proposals = Vec::with_capacity(cfg.widths.len());
    for &w in &cfg.widths {
        let cands: Vec<usize> = match cfg.candidate_subset {
            Some(k) if k < cfg.grid.len() => index::sample(&mut state.rng, cfg.grid.len(), k).into_vec(),
            _ => (0..cfg.grid.len()).collect(),
        };
        let ops = cands
            .iter()
            .map(|&i| ObservationOperator::of_kind(cfg.operator_kind, cfg.grid.point(i), w))
            .collect::<Result<Vec<_>>>()?;
        let vars = ops
            .par_iter()
            .map(|op| cond.mean_var(op).map(|(_, v)| v))
            .collect::<Result<Vec<_>>>()?;
        let pick = argmax_random_ties(&vars, &mut state.rng)?;
        proposals.push(ops[pick].clone());
    }

    state.t += 1;
    if proposals.len() == 1 {
        let op = proposals.pop().expect("one proposal");
        return Ok(EstimationChoice {
            width: op.width(),
            location: op.location().to_vec(),
            operator: op,
            scores: Vec::new(),
            model,
        });
    }

    let post = cond.posterior(&cfg.grid)?;
    let draws = sample_posterior(&post, cfg.m, &mut state.rng)?;
    let target = CenteredDistances::from_rows(&draws.values, cfg.alpha)?;
    let scores = proposals
        .par_iter()
        .map(|op| {
            let weights = cfg.grid.operator_weights(op, &model.quadrature)?;
            let y = draws.apply_weights(&weights);
            CenteredDistances::from_scalars(&y, cfg.alpha)?.dcor(&target)
        })
        .collect::<Result<Vec<_>>>()?;
    let j = argmax_random_ties(&scores, &mut state.rng)?;
    let op = proposals.swap_remove(j);
    Ok(EstimationChoice {
        width: cfg.widths[j],
        location: op.location().to_vec(),
        operator: op,
        scores,
        model,
    })
}

/// The twelve max-search rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaxPolicyKind {
    GPdCor,
    GPdCov,
    GPdCorX,
    GPdCovX,
    GPMIS,
    Random,
    VarMax,
    PI,
    EI,
    GPUCB,
    GPMI,
    MES,
}

impl MaxPolicyKind {
    pub const ALL: [MaxPolicyKind; 12] = [
        Self::GPdCor,
        Self::GPdCov,
        Self::GPdCorX,
        Self::GPdCovX,
        Self::GPMIS,
        Self::Random,
        Self::VarMax,
        Self::PI,
        Self::EI,
        Self::GPUCB,
        Self::GPMI,
        Self::MES,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::GPdCor => "gp-dcor",
            Self::GPdCov => "gp-dcov",
            Self::GPdCorX => "gp-dcor-x",
            Self::GPdCovX => "gp-dcov-x",
            Self::GPMIS => "gp-mis",
            Self::Random => "random",
            Self::VarMax => "varmax",
            Self::PI => "pi",
            Self::EI => "ei",
            Self::GPUCB => "gp-ucb",
            Self::GPMI => "gp-mi",
            Self::MES => "mes",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown max-search policy '{s}'")))
    }

    /// Whether the rule scores grid points against posterior draws.
    pub fn uses_draws(&self) -> bool {
        matches!(
            self,
            Self::GPdCor | Self::GPdCov | Self::GPdCorX | Self::GPdCovX | Self::GPMIS
        )
    }
}

/// Numeric constants of the max-search rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxConstants {
    pub xi: f64,
    pub nu: f64,
    pub delta_ucb: f64,
    pub delta_mi: f64,
    pub k_mes: usize,
    pub alpha: f64,
    pub m: usize,
    pub knn_k: usize,
}

impl Default for MaxConstants {
    fn default() -> Self {
        Self {
            xi: 1e-3,
            nu: 1.0,
            delta_ucb: 0.05,
            delta_mi: 1e-10,
            k_mes: 100,
            alpha: 1.0,
            m: 200,
            knn_k: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPolicy {
    pub kind: MaxPolicyKind,
    pub constants: MaxConstants,
    pub fit: FitSettings,
}

impl MaxPolicy {
    pub fn new(kind: MaxPolicyKind) -> Self {
        Self {
            kind,
            constants: MaxConstants::default(),
            fit: FitSettings::default(),
        }
    }

    pub fn with_constants(mut self, constants: MaxConstants) -> Result<Self> {
        self.constants = constants;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fit(mut self, fit: FitSettings) -> Self {
        self.fit = fit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.constants;
        match self.kind {
            k if k.uses_draws() => {
                if c.m < 2 {
                    return invalid(format!("need at least 2 draws, got {}", c.m));
                }
                DepConfig::new(c.alpha, c.knn_k)?;
                if k == MaxPolicyKind::GPMIS && c.m <= c.knn_k {
                    return invalid("mutual information needs more draws than neighbours");
                }
            }
            MaxPolicyKind::PI if !(c.xi >= 0.0) => return invalid("xi must be nonnegative"),
            MaxPolicyKind::GPUCB if !(c.nu > 0.0 && c.delta_ucb > 0.0 && c.delta_ucb < 1.0) => {
                return invalid("UCB needs nu > 0 and delta in (0, 1)")
            }
            MaxPolicyKind::GPMI if !(c.delta_mi > 0.0 && c.delta_mi < 1.0) => {
                return invalid("GP-MI needs delta in (0, 1)")
            }
            MaxPolicyKind::MES if c.k_mes < 1 => return invalid("MES needs at least one max sample"),
            _ => {}
        }
        Ok(())
    }
}

/// Outcome of one max-search step.
#[derive(Debug, Clone)]
pub struct MaxChoice {
    pub index: usize,
    /// Score of every grid point; empty for the random rule.
    pub scores: Vec<f64>,
    pub model: GPModel,
}

/// Score every grid point's draw column against the draws' maxima (or argmax locations).
pub fn draw_scores(draws: &SampleMatrix, grid: &Grid, kind: MaxPolicyKind, c: &MaxConstants) -> Result<Vec<f64>> {
    let n = draws.n_points();
    if n != grid.len() {
        return invalid("draw matrix and grid sizes differ");
    }
    let maxima = draws.row_max();
    if kind == MaxPolicyKind::GPMIS {
        return (0..n)
            .into_par_iter()
            .map(|j| mi_knn(&draws.column(j), &maxima, c.knn_k))
            .collect();
    }
    let target = match kind {
        MaxPolicyKind::GPdCorX | MaxPolicyKind::GPdCovX => {
            let locs = draws.row_argmax();
            let d = grid.dim();
            let rows = DMatrix::from_fn(locs.len(), d, |i, a| grid.point(locs[i])[a]);
            CenteredDistances::from_rows(&rows, c.alpha)?
        }
        MaxPolicyKind::GPdCor | MaxPolicyKind::GPdCov => CenteredDistances::from_scalars(&maxima, c.alpha)?,
        other => return invalid(format!("{} does not score draws", other.name())),
    };
    let correlate = matches!(kind, MaxPolicyKind::GPdCor | MaxPolicyKind::GPdCorX);
    (0..n)
        .into_par_iter()
        .map(|j| {
            let col = CenteredDistances::from_scalars(&draws.column(j), c.alpha)?;
            if correlate {
                col.dcor(&target)
            } else {
                Ok(col.dcov2(&target)?.max(0.0).sqrt())
            }
        })
        .collect()
}

/// Closed-form acquisition values on the grid, in model units.
pub fn analytic_scores<R: Rng + ?Sized>(
    post: &Posterior,
    kind: MaxPolicyKind,
    c: &MaxConstants,
    incumbent: f64,
    t: usize,
    gamma_hat: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let sd = post.std_devs();
    let mu = &post.mean;
    let d = post.grid.dim();
    let n = post.len();
    Ok(match kind {
        MaxPolicyKind::VarMax => (0..n).map(|i| post.variance(i)).collect(),
        MaxPolicyKind::PI => (0..n).map(|i| acq_pi(mu[i], sd[i], incumbent, c.xi)).collect(),
        MaxPolicyKind::EI => (0..n).map(|i| acq_ei(mu[i], sd[i], incumbent)).collect(),
        MaxPolicyKind::GPUCB => (0..n)
            .map(|i| acq_ucb(mu[i], sd[i], t.max(1), d, c.nu, c.delta_ucb))
            .collect(),
        MaxPolicyKind::GPMI => (0..n).map(|i| acq_gpmi(mu[i], sd[i], gamma_hat, c.delta_mi)).collect(),
        MaxPolicyKind::MES => {
            let ys = gumbel_max_samples(post, c.k_mes, rng)?;
            (0..n).map(|i| acq_mes(mu[i], sd[i], &ys)).collect()
        }
        other => return invalid(format!("{} has no closed-form score", other.name())),
    })
}

/// Pick the next grid index for maximization.
pub fn max_search_step(
    model: &GPModel,
    data: &Dataset,
    policy: &MaxPolicy,
    grid: &Grid,
    state: &mut AcquisitionState,
) -> Result<MaxChoice> {
    policy.validate()?;
    if grid.is_empty() {
        return invalid("empty candidate grid");
    }
    if grid.dim() != data.domain().dim() {
        return invalid("grid and data dimensions differ");
    }
    state.t += 1;
    if policy.kind == MaxPolicyKind::Random {
        let index = state.rng.random_range(0..grid.len());
        return Ok(MaxChoice {
            index,
            scores: Vec::new(),
            model: model.clone(),
        });
    }
    let (model, st, cond) = refit(model, data, &policy.fit, &mut state.rng)?;
    let post = cond.posterior(grid)?;
    let c = &policy.constants;
    let scores = if policy.kind.uses_draws() {
        let draws = sample_posterior(&post, c.m, &mut state.rng)?;
        draw_scores(&draws, grid, policy.kind, c)?
    } else {
        let incumbent = if state.incumbent.is_finite() {
            (state.incumbent - st.offset) / st.scale
        } else {
            f64::NEG_INFINITY
        };
        analytic_scores(
            &post,
            policy.kind,
            c,
            incumbent,
            state.t,
            state.gamma_hat,
            &mut state.rng,
        )?
    };
    let index = argmax_random_ties(&scores, &mut state.rng)?;
    if policy.kind == MaxPolicyKind::GPMI {
        update_gamma(state, post.variance(index).sqrt());
    }
    Ok(MaxChoice { index, scores, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_are_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = [0; 4];
        for _ in 0..300 {
            hits[argmax_random_ties(&[1.0, 0.0, 1.0, 1.0], &mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[1], 0);
        assert!([0, 2, 3].iter().all(|&i| hits[i] > 60), "{hits:?}");
        assert_eq!(argmax_random_ties(&[0.0, 2.0, 1.0], &mut rng).unwrap(), 1);
        assert!(argmax_random_ties(&[f64::NAN], &mut rng).is_err());
    }

    #[test]
    fn policy_names_round_trip() {
        for k in MaxPolicyKind::ALL {
            assert_eq!(MaxPolicyKind::parse(k.name()).unwrap(), k);
        }
        assert!(MaxPolicyKind::parse("brent").is_err());
    }

    #[test]
    fn config_validation() {
        let g = Grid::unit_line(10).unwrap();
        assert!(EstimationConfig::new(vec![], OperatorKind::IntervalMean, 10, g.clone(), 1.0).is_err());
        assert!(EstimationConfig::new(vec![0.0], OperatorKind::SmoothedGradient, 10, g.clone(), 1.0).is_err());
        assert!(EstimationConfig::new(vec![0.1], OperatorKind::IntervalMean, 1, g.clone(), 1.0).is_err());
        assert!(EstimationConfig::new(vec![0.1], OperatorKind::IntervalMean, 10, g, 2.5).is_err());
    }
}
