use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{loo_objective, Dataset, GPModel};
use crate::error::{invalid, Result};

/// Search box for `(length_scale, noise_variance)`, searched in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperBounds {
    pub length_scale: (f64, f64),
    pub noise_variance: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            length_scale: (1e-3, 1.0),
            noise_variance: (1e-8, 1e-1),
        }
    }
}

/// Result of a hyperparameter search.
#[derive(Debug, Clone)]
pub struct HyperFit {
    pub model: GPModel,
    /// Leave-one-out score of `model`; `-inf` if nothing could be evaluated.
    pub score: f64,
    /// Set when every evaluation, including the incoming model, failed numerically.
    pub warning: bool,
}

const LOCAL_LENGTH_FACTOR: f64 = 3.0;
const LOCAL_NOISE_FACTOR: f64 = 30.0;

/// Latin-hypercube sample of `n` points in the log box `lo..hi` per axis.
fn log_lhs<R: Rng + ?Sized>(n: usize, axes: &[(f64, f64)], rng: &mut R) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; axes.len()]; n];
    for (d, &(lo, hi)) in axes.iter().enumerate() {
        let (a, b) = (lo.ln(), hi.ln());
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (i, s) in strata.into_iter().enumerate() {
            let u = (s as f64 + rng.random::<f64>()) / n as f64;
            out[i][d] = (a + u * (b - a)).exp();
        }
    }
    out
}

/// Maximize the leave-one-out score over `budget` candidate `(ℓ, σ_n²)` pairs.
///
/// Half of the candidates come from a box around the incoming values, the rest from the
/// whole search box. The incoming model is scored too and kept unless beaten.
pub fn optimize_hypers<R: Rng + ?Sized>(
    model: &GPModel,
    data: &Dataset,
    budget: usize,
    bounds: &HyperBounds,
    rng: &mut R,
) -> Result<HyperFit> {
    if budget < 1 {
        return invalid("hyperparameter budget must be >= 1");
    }
    let (l_lo, l_hi) = bounds.length_scale;
    let (n_lo, n_hi) = bounds.noise_variance;
    if !(0.0 < l_lo && l_lo < l_hi && 0.0 < n_lo && n_lo < n_hi) {
        return invalid("hyperparameter bounds must be positive, increasing intervals");
    }
    let n_local = budget / 2;
    let l0 = model.length_scale().clamp(l_lo, l_hi);
    let s0 = model.noise_variance.clamp(n_lo, n_hi);
    let local_box = [
        (
            (l0 / LOCAL_LENGTH_FACTOR).max(l_lo),
            (l0 * LOCAL_LENGTH_FACTOR).min(l_hi),
        ),
        ((s0 / LOCAL_NOISE_FACTOR).max(n_lo), (s0 * LOCAL_NOISE_FACTOR).min(n_hi)),
    ];
    let mut cands = log_lhs(n_local, &local_box, rng);
    cands.extend(log_lhs(
        budget - n_local,
        &[bounds.length_scale, bounds.noise_variance],
        rng,
    ));

    let score = |m: &GPModel| loo_objective(m, data).ok().filter(|s| !s.is_nan());
    let incoming = score(model);
    let scored: Vec<(GPModel, Option<f64>)> = cands
        .into_par_iter()
        .map(|c| {
            let m = model.with_hypers(c[0], c[1]);
            let s = score(&m);
            (m, s)
        })
        .collect();

    let mut best = (model.clone(), incoming);
    for (m, s) in scored {
        if let Some(v) = s {
            if best.1.is_none_or(|b| v > b) {
                best = (m, Some(v));
            }
        }
    }
    Ok(match best.1 {
        Some(s) => HyperFit {
            model: best.0,
            score: s,
            warning: false,
        },
        None => {
            log::warn!("all {budget} hyperparameter candidates failed; keeping the incoming model");
            HyperFit {
                model: model.clone(),
                score: f64::NEG_INFINITY,
                warning: true,
            }
        }
    })
}
