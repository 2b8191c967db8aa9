//! Closed-form acquisition functions and max-value sampling.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::gp::Posterior;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Below this argument `log_ndtr` switches to the asymptotic series.
const TAIL_SWITCH: f64 = -35.0;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Standard normal distribution function.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `ln Φ(z)`, accurate in both tails.
pub fn log_ndtr(z: f64) -> f64 {
    if z > 0.0 {
        (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else if z > TAIL_SWITCH {
        norm_cdf(z).ln()
    } else {
        let (_, s) = mills_series(z);
        -0.5 * z * z - LN_SQRT_2PI - (-z).ln() + s.ln()
    }
}

/// For `z ≪ 0`, `Φ(z) = φ(z)/|z| · S` with `S = 1 + Σ (-1)^k (2k-1)!! / z^{2k}`.
/// Returns `(S - 1, S)`.
fn mills_series(z: f64) -> (f64, f64) {
    let z2 = z * z;
    let mut term = 1.0;
    let mut tail = 0.0;
    for k in 1..10 {
        term *= -((2 * k - 1) as f64) / z2;
        tail += term;
    }
    (tail, 1.0 + tail)
}

/// Probability of improvement over `incumbent + xi`.
pub fn acq_pi(mu: f64, sigma: f64, incumbent: f64, xi: f64) -> f64 {
    let gap = mu - incumbent - xi;
    if sigma <= 0.0 {
        return if gap > 0.0 { 1.0 } else { 0.0 };
    }
    norm_cdf(gap / sigma)
}

/// Expected improvement over `incumbent`.
pub fn acq_ei(mu: f64, sigma: f64, incumbent: f64) -> f64 {
    let gap = mu - incumbent;
    if sigma <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    (sigma * (z * norm_cdf(z) + norm_pdf(z))).max(0.0)
}

/// Exploration coefficient `τ_t = 2 ln(t^{d/2+2} π² / (3δ))`.
pub fn ucb_tau(t: usize, d: usize, delta: f64) -> f64 {
    2.0 * ((d as f64 / 2.0 + 2.0) * (t as f64).ln() + (PI * PI / (3.0 * delta)).ln())
}

/// Upper confidence bound `mu + √(ν τ_t) σ`.
pub fn acq_ucb(mu: f64, sigma: f64, t: usize, d: usize, nu: f64, delta: f64) -> f64 {
    mu + (nu * ucb_tau(t, d, delta)).sqrt() * sigma
}

/// Mutual-information rule `mu + √α (√(σ² + γ̂) − √γ̂)` with `α = ln(2/δ)`.
pub fn acq_gpmi(mu: f64, sigma: f64, gamma_hat: f64, delta: f64) -> f64 {
    let s2 = sigma * sigma;
    let bonus = if s2 > 0.0 {
        s2 / ((s2 + gamma_hat).sqrt() + gamma_hat.sqrt())
    } else {
        0.0
    };
    mu + (2.0 / delta).ln().sqrt() * bonus
}

/// One max-value entropy term `γ φ(γ) / (2Φ(γ)) − ln Φ(γ)` with `γ = (y* − mu)/σ`.
pub fn mes_term(mu: f64, sigma: f64, y_star: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let g = (y_star - mu) / sigma;
    if g <= TAIL_SWITCH {
        // φ/Φ = |γ|/S with S the asymptotic series; the γ² terms cancel analytically
        let (tail, s) = mills_series(g);
        return 0.5 * g * g * tail / s + LN_SQRT_2PI + (-g).ln() - s.ln();
    }
    let log_cdf = log_ndtr(g);
    let ratio = (-0.5 * g * g - LN_SQRT_2PI - log_cdf).exp();
    (0.5 * g * ratio - log_cdf).max(0.0)
}

/// Max-value entropy search: mean of [`mes_term`] over sampled maxima.
pub fn acq_mes(mu: f64, sigma: f64, max_samples: &[f64]) -> f64 {
    if sigma <= 0.0 || max_samples.is_empty() {
        return 0.0;
    }
    max_samples.iter().map(|&y| mes_term(mu, sigma, y)).sum::<f64>() / max_samples.len() as f64
}

const BISECTION_STEPS: usize = 100;

/// Draw `k` maxima of the posterior from a Gumbel law fitted at the quartiles of
/// `Π_n Φ((y − μ_n)/σ_n)`. Samples are clamped at the largest posterior mean.
pub fn gumbel_max_samples<R: Rng + ?Sized>(post: &Posterior, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if k < 1 {
        return invalid("need at least one max-value sample");
    }
    if post.is_empty() {
        return invalid("empty posterior");
    }
    let mu: Vec<f64> = post.mean.iter().copied().collect();
    let sd = post.std_devs();
    let mu_max = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sd_max = sd.iter().copied().fold(0.0, f64::max);
    if sd_max == 0.0 {
        return Ok(vec![mu_max; k]);
    }
    let log_f = |y: f64| -> f64 {
        mu.iter()
            .zip(&sd)
            .map(|(&m, &s)| {
                if s > 0.0 {
                    log_ndtr((y - m) / s)
                } else if y >= m {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
            .sum()
    };
    let quantile = |p: f64| -> Result<f64> {
        let target = p.ln();
        let mut lo = mu_max - sd_max;
        while log_f(lo) > target {
            lo -= 2.0 * sd_max;
        }
        let mut hi = mu_max + sd_max;
        while log_f(hi) < target {
            hi += 2.0 * sd_max;
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if log_f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * sd_max {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::Numerical {
            message: format!("max-value quantile {p} did not converge"),
            condition: f64::NAN,
        })
    };
    let y25 = quantile(0.25)?;
    let y75 = quantile(0.75)?;
    let ll4 = 4f64.ln().ln();
    let ll43 = (4f64 / 3.0).ln().ln();
    let b = (y75 - y25) / (ll4 - ll43);
    let a = y25 + b * ll4;
    Ok((0..k)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (a - b * (-u.ln()).ln()).max(mu_max)
        })
        .collect())
}
