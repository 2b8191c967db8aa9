use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Relative jitter applied before the first factorization attempt.
pub const DEFAULT_JITTER: f64 = 1e-10;
/// Number of ×10 escalations after the first attempt.
pub const JITTER_ESCALATIONS: usize = 3;

/// Cholesky factor of `matrix + jitter·I`, escalating the jitter ×10 up to three times.
/// `relative_jitter` is scaled by the largest diagonal entry.
pub fn cholesky_jittered(matrix: &DMatrix<f64>, relative_jitter: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = matrix.nrows();
    let max_diag = (0..n).map(|i| matrix[(i, i)]).fold(0.0f64, f64::max);
    let scale = if max_diag > 0.0 { max_diag } else { 1.0 };
    let mut jitter = relative_jitter * scale;
    for _ in 0..=JITTER_ESCALATIONS {
        let mut m = matrix.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical {
        message: format!("Cholesky failed for {n}x{n} matrix after jitter {:.3e}", jitter / 10.0),
        condition: condition_estimate(matrix),
    })
}

/// Ratio of extreme eigenvalue magnitudes; infinite for singular or indefinite input.
pub fn condition_estimate(matrix: &DMatrix<f64>) -> f64 {
    if matrix.nrows() == 0 {
        return 1.0;
    }
    let eig = matrix.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
