//! Gaussian-process conditioning on operator observations.

mod grid;
mod hyper;
mod linalg;
mod sampling;

pub use grid::{Grid, GridWeights, MIN_SUPPORT_NODES};
pub use hyper::{optimize_hypers, HyperBounds, HyperFit};
pub use linalg::{cholesky_jittered, condition_estimate, DEFAULT_JITTER, JITTER_ESCALATIONS};
pub use sampling::{apply_operator_to_samples, sample_posterior, SampleMatrix};

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{invalid, Result};
use crate::kernels::{
    Domain, Functional, GramCache, KernelSpec, ObservationOperator, OperatorCovariance, OperatorKind,
    QuadratureSettings,
};

/// Ordered observations `(operator, y)` over one domain.
#[derive(Debug, Clone)]
pub struct Dataset {
    domain: Domain,
    records: Vec<(ObservationOperator, f64)>,
}

impl Dataset {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, op: ObservationOperator, y: f64) -> Result<()> {
        if op.dim() != self.domain.dim() {
            return invalid(format!(
                "{}-dimensional operator in a {}-dimensional dataset",
                op.dim(),
                self.domain.dim()
            ));
        }
        if !self.domain.contains(op.location()) {
            return invalid(format!("operator location {:?} outside the domain", op.location()));
        }
        if !y.is_finite() {
            return invalid(format!("observation must be finite, got {y}"));
        }
        self.records.push((op, y));
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn records(&self) -> &[(ObservationOperator, f64)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.1).collect()
    }
}

/// Kernel, observation noise and numerical settings.
#[derive(Debug, Clone)]
pub struct GPModel {
    pub kernel: KernelSpec,
    pub noise_variance: f64,
    /// Relative diagonal jitter for the first factorization attempt.
    pub jitter: f64,
    pub quadrature: QuadratureSettings,
    cache: Option<Arc<GramCache>>,
}

impl GPModel {
    pub fn new(kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return invalid(format!("noise variance must be >= 0, got {noise_variance}"));
        }
        Ok(Self {
            kernel,
            noise_variance,
            jitter: DEFAULT_JITTER,
            quadrature: QuadratureSettings::default(),
            cache: None,
        })
    }

    pub fn with_jitter(mut self, jitter: f64) -> Result<Self> {
        if !(jitter > 0.0) {
            return invalid("jitter must be positive");
        }
        self.jitter = jitter;
        Ok(self)
    }

    pub fn with_quadrature(mut self, settings: QuadratureSettings) -> Result<Self> {
        settings.validate()?;
        self.quadrature = settings;
        Ok(self)
    }

    /// Share a covariance memo between fits (keyed by hyperparameters, so reuse is safe).
    pub fn with_cache(mut self, cache: Arc<GramCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn length_scale(&self) -> f64 {
        self.kernel.min_length_scale()
    }

    pub(crate) fn with_hypers(&self, length_scale: f64, noise_variance: f64) -> Self {
        Self {
            kernel: self.kernel.with_length_scale(length_scale),
            noise_variance,
            ..self.clone()
        }
    }

    pub fn engine(&self, domain: &Domain) -> Result<OperatorCovariance> {
        let e = OperatorCovariance::new(self.kernel.clone(), domain.clone(), self.quadrature)?;
        Ok(match &self.cache {
            Some(c) => e.with_cache(c.clone()),
            None => e,
        })
    }
}

/// Latent-function mean and covariance on a grid.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub grid: Grid,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Posterior {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.cov[(i, i)]
    }

    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.cov[(i, i)].max(0.0).sqrt()).collect()
    }
}

/// A GP conditioned on a dataset, ready to answer mean/variance queries.
pub struct Conditioned {
    engine: OperatorCovariance,
    data: Vec<Functional>,
    factor: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

impl Conditioned {
    pub fn new(model: &GPModel, data: &Dataset) -> Result<Self> {
        let engine = model.engine(data.domain())?;
        let fns = data
            .records()
            .iter()
            .map(|(op, _)| engine.lower(op))
            .collect::<Result<Vec<_>>>()?;
        let n = fns.len();
        if n == 0 {
            return Ok(Self {
                engine,
                data: fns,
                factor: None,
                alpha: DVector::zeros(0),
            });
        }
        let gram = data_gram(&engine, &fns, model.noise_variance);
        let (chol, _) = cholesky_jittered(&gram, model.jitter)?;
        let alpha = chol.solve(&DVector::from_vec(data.values()));
        Ok(Self {
            engine,
            data: fns,
            factor: Some(chol),
            alpha,
        })
    }

    pub fn engine(&self) -> &OperatorCovariance {
        &self.engine
    }

    fn cross(&self, f: &Functional) -> DVector<f64> {
        DVector::from_iterator(self.data.len(), self.data.iter().map(|d| self.engine.cov(d, f)))
    }

    /// Posterior mean and variance of `op[f]`, variance clamped at zero.
    pub fn mean_var(&self, op: &ObservationOperator) -> Result<(f64, f64)> {
        let f = self.engine.lower(op)?;
        let prior = self.engine.cov(&f, &f);
        let Some(chol) = &self.factor else {
            return Ok((0.0, prior.max(0.0)));
        };
        let k = self.cross(&f);
        let mean = k.dot(&self.alpha);
        let v = chol.l_dirty().solve_lower_triangular(&k).expect("nonsingular factor");
        Ok((mean, (prior - v.norm_squared()).max(0.0)))
    }

    /// Posterior mean on every grid point, without the covariance.
    pub fn mean(&self, grid: &Grid) -> Result<DVector<f64>> {
        if grid.dim() != self.engine.domain().dim() {
            return invalid("grid and model dimensions differ");
        }
        Ok(DVector::from_iterator(
            grid.len(),
            grid.points().iter().map(|p| {
                self.data
                    .iter()
                    .zip(self.alpha.iter())
                    .map(|(d, a)| a * self.engine.cov_point(d, p))
                    .sum::<f64>()
            }),
        ))
    }

    pub fn posterior(&self, grid: &Grid) -> Result<Posterior> {
        let dim = self.engine.domain().dim();
        if grid.dim() != dim {
            return invalid(format!("{}-dimensional grid for a {dim}-dimensional model", grid.dim()));
        }
        let pts = grid.points();
        let n = pts.len();
        let kernel = self.engine.kernel();
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            cov[(i, i)] = kernel.signal_variance();
            for j in 0..i {
                let v = kernel.at_distance(crate::kernels::euclidean(&pts[i], &pts[j]));
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let mut mean = DVector::zeros(n);
        if let Some(chol) = &self.factor {
            let m = self.data.len();
            let mut ks = DMatrix::zeros(m, n);
            for (a, d) in self.data.iter().enumerate() {
                for (b, p) in pts.iter().enumerate() {
                    ks[(a, b)] = self.engine.cov_point(d, p);
                }
            }
            mean = ks.tr_mul(&self.alpha);
            let v = chol.l_dirty().solve_lower_triangular(&ks).expect("nonsingular factor");
            cov -= v.tr_mul(&v);
            linalg::symmetrize(&mut cov);
        }
        for i in 0..n {
            if cov[(i, i)] < 0.0 {
                cov[(i, i)] = 0.0;
            }
        }
        Ok(Posterior {
            grid: grid.clone(),
            mean,
            cov,
        })
    }
}

fn data_gram(engine: &OperatorCovariance, fns: &[Functional], noise: f64) -> DMatrix<f64> {
    let n = fns.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = engine.cov(&fns[i], &fns[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        gram[(i, i)] += noise;
    }
    gram
}

/// Posterior of the latent function on `grid` given noisy observations.
pub fn fit_posterior(model: &GPModel, data: &Dataset, grid: &Grid) -> Result<Posterior> {
    Conditioned::new(model, data)?.posterior(grid)
}

/// `Var(candidate[f] | data)`, clamped at zero.
pub fn predictive_variance(model: &GPModel, data: &Dataset, candidate: &ObservationOperator) -> Result<f64> {
    Ok(Conditioned::new(model, data)?.mean_var(candidate)?.1)
}

/// Value returned by [`loo_objective`] when the score is not finite or falls below it.
pub const LOO_FLOOR: f64 = -1e6;

/// Sum of leave-one-out log predictive densities, from the inverse of the full gram.
pub fn loo_objective(model: &GPModel, data: &Dataset) -> Result<f64> {
    if data.len() < 2 {
        return invalid("leave-one-out needs at least 2 observations");
    }
    let engine = model.engine(data.domain())?;
    let fns = data
        .records()
        .iter()
        .map(|(op, _)| engine.lower(op))
        .collect::<Result<Vec<_>>>()?;
    let gram = data_gram(&engine, &fns, model.noise_variance);
    let (chol, _) = cholesky_jittered(&gram, model.jitter)?;
    let inv = chol.inverse();
    let y = DVector::from_vec(data.values());
    let alpha = &inv * &y;
    let mut total = 0.0;
    for i in 0..y.len() {
        let kii = inv[(i, i)];
        total += -0.5 * (-kii.ln()) - 0.5 * alpha[i] * alpha[i] / kii - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    Ok(if total.is_finite() && total > LOO_FLOOR {
        total
    } else {
        LOO_FLOOR
    })
}

/// How observed values are mapped onto the unit-variance prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// Subtract the mean of value-type observations and divide by their spread.
    Standardize,
    /// Subtract the mean only.
    Center,
    None,
}

/// Affine map between raw observations and model units.
///
/// Gradient observations are only scaled: a constant offset has no derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization {
    pub offset: f64,
    pub scale: f64,
}

impl Standardization {
    pub fn identity() -> Self {
        Self {
            offset: 0.0,
            scale: 1.0,
        }
    }

    pub fn fit(data: &Dataset, scaling: Scaling) -> Self {
        let vals: Vec<f64> = data
            .records()
            .iter()
            .filter(|(op, _)| op.kind() != OperatorKind::SmoothedGradient)
            .map(|r| r.1)
            .collect();
        if scaling == Scaling::None || vals.is_empty() {
            return Self::identity();
        }
        let n = vals.len() as f64;
        let offset = vals.iter().sum::<f64>() / n;
        let mut scale = 1.0;
        if scaling == Scaling::Standardize && vals.len() >= 2 {
            let sd = (vals.iter().map(|v| (v - offset).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 1e-12 {
                scale = sd;
            }
        }
        Self { offset, scale }
    }

    fn shift(&self, op: &ObservationOperator) -> f64 {
        if op.kind() == OperatorKind::SmoothedGradient {
            0.0
        } else {
            self.offset
        }
    }

    pub fn to_model(&self, op: &ObservationOperator, y: f64) -> f64 {
        (y - self.shift(op)) / self.scale
    }

    pub fn from_model(&self, op: &ObservationOperator, v: f64) -> f64 {
        v * self.scale + self.shift(op)
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let records = data
            .records()
            .iter()
            .map(|(op, y)| (op.clone(), self.to_model(op, *y)))
            .collect();
        Dataset {
            domain: data.domain().clone(),
            records,
        }
    }

    /// Latent values on a grid back in raw units.
    pub fn unscale_values(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x * self.scale + self.offset).collect()
    }
}
