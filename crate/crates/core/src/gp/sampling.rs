use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::Grid;
use super::linalg::{cholesky_jittered, DEFAULT_JITTER};
use super::Posterior;
use crate::error::{invalid, Result};
use crate::kernels::{ObservationOperator, QuadratureSettings};

/// Posterior draws on a grid, one draw per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub values: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn n_draws(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Index of the largest entry in each row (first on ties).
    pub fn row_argmax(&self) -> Vec<usize> {
        (0..self.n_draws())
            .map(|i| {
                let row = self.values.row(i);
                let mut best = 0;
                for j in 1..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn row_max(&self) -> Vec<f64> {
        (0..self.n_draws()).map(|i| self.values.row(i).max()).collect()
    }

    /// Dot each draw with sparse grid weights.
    pub fn apply_weights(&self, weights: &[(usize, f64)]) -> Vec<f64> {
        (0..self.n_draws())
            .map(|i| weights.iter().map(|&(j, w)| w * self.values[(i, j)]).sum())
            .collect()
    }
}

/// `m` i.i.d. draws of the posterior on its grid.
pub fn sample_posterior<R: Rng + ?Sized>(post: &Posterior, m: usize, rng: &mut R) -> Result<SampleMatrix> {
    if m < 2 {
        return invalid(format!("need at least 2 draws, got {m}"));
    }
    let n = post.len();
    let mut values = DMatrix::from_fn(m, n, |_, j| post.mean[j]);
    if post.cov.iter().all(|&v| v == 0.0) {
        return Ok(SampleMatrix { values });
    }
    let (chol, _) = cholesky_jittered(&post.cov, DEFAULT_JITTER)?;
    let mut z = DMatrix::<f64>::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            z[(i, j)] = rng.sample(StandardNormal);
        }
    }
    values += z * chol.l().transpose();
    Ok(SampleMatrix { values })
}

/// Apply `op` to every draw through the piecewise-linear interpolant on `grid`.
pub fn apply_operator_to_samples(samples: &SampleMatrix, grid: &Grid, op: &ObservationOperator) -> Result<Vec<f64>> {
    if samples.n_points() != grid.len() {
        return invalid(format!(
            "sample matrix has {} columns for a {}-point grid",
            samples.n_points(),
            grid.len()
        ));
    }
    let w = grid.operator_weights(op, &QuadratureSettings::default())?;
    Ok(samples.apply_weights(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_covariance_repeats_mean() {
        let grid = Grid::unit_line(4).unwrap();
        let post = Posterior {
            grid,
            mean: DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]),
            cov: DMatrix::zeros(4, 4),
        };
        let s = sample_posterior(&post, 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for i in 0..3 {
            assert_eq!(s.values.row(i).transpose(), post.mean);
        }
    }

    #[test]
    fn needs_two_draws() {
        let post = Posterior {
            grid: Grid::unit_line(2).unwrap(),
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2),
        };
        assert!(sample_posterior(&post, 1, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }
}
