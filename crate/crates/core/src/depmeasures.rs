//! Distance covariance / correlation (V-statistics) and a k-nearest-neighbour mutual
//! information estimator.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::digamma;

use crate::error::{invalid, Result};

/// Parameters of the dependence statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepConfig {
    /// Exponent applied to pairwise distances, in `(0, 2)`.
    pub alpha: f64,
    /// Neighbour count for the mutual-information estimator.
    pub knn_k: usize,
}

impl Default for DepConfig {
    fn default() -> Self {
        Self { alpha: 1.0, knn_k: 3 }
    }
}

impl DepConfig {
    pub fn new(alpha: f64, knn_k: usize) -> Result<Self> {
        let cfg = Self { alpha, knn_k };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return invalid(format!("alpha must lie in (0, 2), got {}", self.alpha));
        }
        if self.knn_k == 0 {
            return invalid("knn_k must be positive");
        }
        Ok(())
    }
}

/// Double-centered matrix of pairwise `|x_i - x_j|^α` for one sample.
#[derive(Debug, Clone)]
pub struct CenteredDistances {
    m: usize,
    a: Vec<f64>,
}

impl CenteredDistances {
    /// Rows of `x` are the observations.
    pub fn from_rows(x: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        let m = x.nrows();
        if m < 2 {
            return invalid(format!("need at least 2 observations, got {m}"));
        }
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..i {
                let mut s = 0.0;
                for c in 0..x.ncols() {
                    let t = x[(i, c)] - x[(j, c)];
                    s += t * t;
                }
                let v = pow_alpha(s.sqrt(), alpha);
                d[i * m + j] = v;
                d[j * m + i] = v;
            }
        }
        Ok(Self::center(m, d))
    }

    pub fn from_scalars(x: &[f64], alpha: f64) -> Result<Self> {
        let m = x.len();
        if m < 2 {
            return invalid(format!("need at least 2 observations, got {m}"));
        }
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..i {
                let v = pow_alpha((x[i] - x[j]).abs(), alpha);
                d[i * m + j] = v;
                d[j * m + i] = v;
            }
        }
        Ok(Self::center(m, d))
    }

    fn center(m: usize, mut d: Vec<f64>) -> Self {
        let row: Vec<f64> = (0..m)
            .map(|i| d[i * m..(i + 1) * m].iter().sum::<f64>() / m as f64)
            .collect();
        let grand = row.iter().sum::<f64>() / m as f64;
        for i in 0..m {
            for j in 0..m {
                // symmetric, so column means equal row means
                d[i * m + j] += grand - row[i] - row[j];
            }
        }
        Self { m, a: d }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Squared distance covariance with another sample of the same size.
    pub fn dcov2(&self, other: &Self) -> Result<f64> {
        if self.m != other.m {
            return invalid(format!("row counts differ: {} vs {}", self.m, other.m));
        }
        let s: f64 = self.a.iter().zip(&other.a).map(|(a, b)| a * b).sum();
        Ok(s / (self.m * self.m) as f64)
    }

    pub fn self_dcov2(&self) -> f64 {
        self.a.iter().map(|a| a * a).sum::<f64>() / (self.m * self.m) as f64
    }

    /// Distance correlation with another sample, 0 if either is degenerate.
    pub fn dcor(&self, other: &Self) -> Result<f64> {
        let xy = self.dcov2(other)?;
        Ok(dcor_from_parts(xy, self.self_dcov2(), other.self_dcov2()))
    }
}

fn pow_alpha(d: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        d
    } else {
        d.powf(alpha)
    }
}

pub(crate) fn dcor_from_parts(xy: f64, xx: f64, yy: f64) -> f64 {
    if xx <= 0.0 || yy <= 0.0 {
        return 0.0;
    }
    (xy.max(0.0) / (xx * yy).sqrt()).sqrt().min(1.0)
}

fn check_rows(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &DepConfig) -> Result<()> {
    cfg.validate()?;
    if x.nrows() != y.nrows() {
        return invalid(format!("row counts differ: {} vs {}", x.nrows(), y.nrows()));
    }
    Ok(())
}

/// Distance covariance (V-statistic), rows are observations.
pub fn dist_cov(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &DepConfig) -> Result<f64> {
    check_rows(x, y, cfg)?;
    let a = CenteredDistances::from_rows(x, cfg.alpha)?;
    let b = CenteredDistances::from_rows(y, cfg.alpha)?;
    Ok(a.dcov2(&b)?.max(0.0).sqrt())
}

/// Distance correlation in `[0, 1]`; 0 when either sample is constant.
pub fn dist_cor(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &DepConfig) -> Result<f64> {
    check_rows(x, y, cfg)?;
    let a = CenteredDistances::from_rows(x, cfg.alpha)?;
    let b = CenteredDistances::from_rows(y, cfg.alpha)?;
    a.dcor(&b)
}

const DITHER: f64 = 1e-10;
const DITHER_SEED: u64 = 0x5eed_0f_d17e;

fn standardize_with_dither(v: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    v.iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(rng);
            (x - mean) / scale + DITHER * z
        })
        .collect()
}

/// Kraskov–Stögbauer–Grassberger estimate (first variant) of `I(X; Y)` in nats.
pub fn mi_knn(x: &[f64], y: &[f64], k: usize) -> Result<f64> {
    let m = x.len();
    if y.len() != m {
        return invalid(format!("lengths differ: {m} vs {}", y.len()));
    }
    if k == 0 || m <= k {
        return invalid(format!("need more than k={k} samples, got {m}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DITHER_SEED);
    let xs = standardize_with_dither(x, &mut rng);
    let ys = standardize_with_dither(y, &mut rng);
    let mut dist = Vec::with_capacity(m - 1);
    let mut acc = 0.0;
    for i in 0..m {
        dist.clear();
        dist.extend(
            (0..m)
                .filter(|&j| j != i)
                .map(|j| (xs[i] - xs[j]).abs().max((ys[i] - ys[j]).abs())),
        );
        let (_, eps, _) = dist.select_nth_unstable_by(k - 1, f64::total_cmp);
        let eps = *eps;
        let nx = (0..m).filter(|&j| j != i && (xs[i] - xs[j]).abs() < eps).count();
        let ny = (0..m).filter(|&j| j != i && (ys[i] - ys[j]).abs() < eps).count();
        acc += digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0);
    }
    let mi = digamma(k as f64) + digamma(m as f64) - acc / m as f64;
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn constant_sample_is_uncorrelated() {
        let cfg = DepConfig::default();
        let x = col(&[0.1, 0.5, 0.2, 0.9]);
        let y = col(&[2.0; 4]);
        assert_eq!(dist_cov(&x, &y, &cfg).unwrap(), 0.0);
        assert_eq!(dist_cor(&x, &y, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn two_rows_reduce_to_product_of_gaps() {
        // centered 2×2 matrices are ±d/2, so dCov² = dx·dy/4 and dCor = 1
        let cfg = DepConfig::default();
        let v = dist_cov(&col(&[0.0, 3.0]), &col(&[1.0, -4.0]), &cfg).unwrap();
        assert!((v * v - 3.0 * 5.0 / 4.0).abs() < 1e-12);
        assert!((dist_cor(&col(&[0.0, 3.0]), &col(&[1.0, -4.0]), &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_correlation_is_one() {
        let cfg = DepConfig::new(1.5, 3).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 0.3, 0.2, 2.0, -1.0, 0.5, 0.5]);
        assert!((dist_cor(&x, &x, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = DepConfig::default();
        assert!(dist_cov(&col(&[1.0, 2.0, 3.0]), &col(&[1.0, 2.0]), &cfg).is_err());
        assert!(dist_cov(&col(&[1.0]), &col(&[1.0]), &cfg).is_err());
        assert!(DepConfig::new(2.0, 3).is_err());
        assert!(mi_knn(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 3).is_err());
    }

    #[test]
    fn mi_boundary_neighbour_count() {
        let v = mi_knn(&[0.1, 0.7, 0.3], &[1.0, -2.0, 0.4], 2).unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }
}
