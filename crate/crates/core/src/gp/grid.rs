//! Representative point sets and the linear functionals that operators induce on
//! values stored at those points.

use crate::error::{invalid, Result};
use crate::kernels::{reflect, Normalization, ObservationOperator, OperatorKind, QuadratureRule, QuadratureSettings};

/// Fewest grid nodes an operator's support must cover.
pub const MIN_SUPPORT_NODES: usize = 4;

/// Representative points of a domain.
///
/// `Line` values continue as constants beyond the end nodes and `Mesh` values are
/// mirrored about the mesh edges. Mesh point `(xs[i], ys[j])` has index `j * xs.len() + i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Line { xs: Vec<f64> },
    Mesh { xs: Vec<f64>, ys: Vec<f64> },
    Scattered { points: Vec<Vec<f64>> },
}

/// Sparse weights over grid nodes: `value = Σ w · f[index]`.
pub type GridWeights = Vec<(usize, f64)>;

fn check_axis(name: &str, xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return invalid(format!("{name} needs at least 2 nodes"));
    }
    if xs.iter().any(|v| !v.is_finite()) || xs.windows(2).any(|p| p[1] <= p[0]) {
        return invalid(format!("{name} nodes must be finite and strictly increasing"));
    }
    Ok(())
}

fn linspace(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

impl Grid {
    pub fn line(xs: Vec<f64>) -> Result<Self> {
        check_axis("line grid", &xs)?;
        Ok(Self::Line { xs })
    }

    pub fn mesh(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_axis("mesh x axis", &xs)?;
        check_axis("mesh y axis", &ys)?;
        Ok(Self::Mesh { xs, ys })
    }

    pub fn scattered(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return invalid("empty grid");
        };
        let d = first.len();
        if d == 0 || points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
            return invalid("scattered points must share a positive dimension and be finite");
        }
        Ok(Self::Scattered { points })
    }

    /// `n` equispaced nodes covering `[0, 1]`.
    pub fn unit_line(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid("line grid needs at least 2 nodes");
        }
        Ok(Self::Line { xs: linspace(n) })
    }

    /// `n × n` equispaced mesh covering `[0, 1]²`.
    pub fn unit_mesh(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid("mesh needs at least 2 nodes per axis");
        }
        Ok(Self::Mesh {
            xs: linspace(n),
            ys: linspace(n),
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Line { xs } => xs.len(),
            Self::Mesh { xs, ys } => xs.len() * ys.len(),
            Self::Scattered { points } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Line { .. } => 1,
            Self::Mesh { .. } => 2,
            Self::Scattered { points } => points[0].len(),
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        match self {
            Self::Line { xs } => vec![xs[index]],
            Self::Mesh { xs, ys } => vec![xs[index % xs.len()], ys[index / xs.len()]],
            Self::Scattered { points } => points[index].clone(),
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Sub-grid made of the listed nodes.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= self.len()) {
            return invalid("subset index out of range");
        }
        Self::scattered(indices.iter().map(|&i| self.point(i)).collect())
    }

    /// Weights expressing `op` applied to the piecewise-linear interpolant of node values.
    pub fn operator_weights(&self, op: &ObservationOperator, settings: &QuadratureSettings) -> Result<GridWeights> {
        if op.dim() != self.dim() {
            return invalid(format!(
                "{}-dimensional operator on a {}-dimensional grid",
                op.dim(),
                self.dim()
            ));
        }
        let weights = match self {
            Self::Scattered { points } => {
                if !op.is_pointwise() {
                    return invalid("scattered grids support point operators only");
                }
                match points.iter().position(|p| p.as_slice() == op.location()) {
                    Some(i) => vec![(i, 1.0)],
                    None => return invalid("point operator does not sit on a scattered grid node"),
                }
            }
            Self::Line { xs } => {
                let q = op.location()[0];
                let w = op.width();
                match op.kind() {
                    _ if op.is_pointwise() => {
                        let (i, t) = locate(xs, q);
                        vec![(i, 1.0 - t), (i + 1, t)]
                    }
                    OperatorKind::IntervalMean => {
                        let (a, b) = (q - 0.5 * w, q + 0.5 * w);
                        require_support(xs.iter().filter(|&&x| x >= a && x <= b).count(), op)?;
                        line_interval_weights(xs, a, b)
                    }
                    OperatorKind::SmoothedGradient => {
                        let (a, b) = (q - 2.0 * w, q + 2.0 * w);
                        require_support(xs.iter().filter(|&&x| x >= a && x <= b).count(), op)?;
                        line_gradient_weights(xs, q, w)
                    }
                    _ => return invalid("disk operators need a two-dimensional grid"),
                }
            }
            Self::Mesh { xs, ys } => {
                let c = op.location();
                if op.is_pointwise() {
                    mesh_point_weights(xs, ys, c[0], c[1]).to_vec()
                } else {
                    let r = op.width();
                    let inside = ys
                        .iter()
                        .flat_map(|y| xs.iter().map(move |x| (x - c[0]).hypot(y - c[1])))
                        .filter(|&d| d <= r)
                        .count();
                    require_support(inside, op)?;
                    let rule = QuadratureRule::disk(r, [c[0], c[1]], settings.disk_degree, Normalization::Mean)?;
                    let mut dense = vec![0.0; xs.len() * ys.len()];
                    for (p, wt) in rule.nodes() {
                        for (i, v) in mesh_point_weights(xs, ys, p[0], p[1]) {
                            dense[i] += wt * v;
                        }
                    }
                    dense.into_iter().enumerate().collect()
                }
            }
        };
        Ok(weights.into_iter().filter(|&(_, w)| w != 0.0).collect())
    }
}

fn require_support(count: usize, op: &ObservationOperator) -> Result<()> {
    if count < MIN_SUPPORT_NODES {
        return invalid(format!(
            "grid too coarse for {} operator of width {}: {count} nodes in support",
            op.kind().as_str(),
            op.width()
        ));
    }
    Ok(())
}

/// Cell index and fractional position of `v`, clamped to the axis.
fn locate(xs: &[f64], v: f64) -> (usize, f64) {
    let n = xs.len();
    if v <= xs[0] {
        return (0, 0.0);
    }
    if v >= xs[n - 1] {
        return (n - 2, 1.0);
    }
    let k = (xs.partition_point(|&x| x <= v) - 1).min(n - 2);
    (k, (v - xs[k]) / (xs[k + 1] - xs[k]))
}

fn mesh_point_weights(xs: &[f64], ys: &[f64], x: f64, y: f64) -> [(usize, f64); 4] {
    let nx = xs.len();
    let x = reflect(x, xs[0], xs[nx - 1]);
    let y = reflect(y, ys[0], ys[ys.len() - 1]);
    let (i, tx) = locate(xs, x);
    let (j, ty) = locate(ys, y);
    [
        (j * nx + i, (1.0 - tx) * (1.0 - ty)),
        (j * nx + i + 1, tx * (1.0 - ty)),
        ((j + 1) * nx + i, (1.0 - tx) * ty),
        ((j + 1) * nx + i + 1, tx * ty),
    ]
}

fn line_interval_weights(xs: &[f64], a: f64, b: f64) -> GridWeights {
    let n = xs.len();
    let mut w = vec![0.0; n];
    if a < xs[0] {
        w[0] += b.min(xs[0]) - a;
    }
    if b > xs[n - 1] {
        w[n - 1] += b - a.max(xs[n - 1]);
    }
    for i in 0..n - 1 {
        let s = a.max(xs[i]);
        let e = b.min(xs[i + 1]);
        if e <= s {
            continue;
        }
        let h = xs[i + 1] - xs[i];
        let ts = (s - xs[i]) / h;
        let te = (e - xs[i]) / h;
        w[i] += 0.5 * (e - s) * (2.0 - ts - te);
        w[i + 1] += 0.5 * (e - s) * (ts + te);
    }
    let len = b - a;
    w.into_iter().enumerate().map(|(i, v)| (i, v / len)).collect()
}

fn line_gradient_weights(xs: &[f64], q: f64, w: f64) -> GridWeights {
    let n = xs.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let mass = normal_cdf((xs[i + 1] - q) / w) - normal_cdf((xs[i] - q) / w);
        if mass == 0.0 {
            continue;
        }
        let slope = mass / (xs[i + 1] - xs[i]);
        out[i] -= slope;
        out[i + 1] += slope;
    }
    out.into_iter().enumerate().collect()
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(w: &GridWeights, f: &[f64]) -> f64 {
        w.iter().map(|&(i, v)| v * f[i]).sum()
    }

    #[test]
    fn interval_weights_integrate_linear_exactly() {
        let grid = Grid::unit_line(11).unwrap();
        let Grid::Line { xs } = &grid else { unreachable!() };
        let f: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let op = ObservationOperator::interval_mean(0.37, 0.41).unwrap();
        let w = grid.operator_weights(&op, &QuadratureSettings::default()).unwrap();
        assert!((apply(&w, &f) - (3.0 * 0.37 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn interval_overhang_uses_end_value() {
        let grid = Grid::unit_line(21).unwrap();
        let Grid::Line { xs } = &grid else { unreachable!() };
        let f: Vec<f64> = xs.to_vec();
        // mean of max(x,0) over [-0.2, 0.2] = 0.2²/2 / 0.4
        let op = ObservationOperator::interval_mean(0.0, 0.4).unwrap();
        let w = grid.operator_weights(&op, &QuadratureSettings::default()).unwrap();
        assert!((apply(&w, &f) - 0.05).abs() < 1e-13);
    }

    #[test]
    fn gradient_of_linear_draw_is_slope() {
        let grid = Grid::unit_line(201).unwrap();
        let Grid::Line { xs } = &grid else { unreachable!() };
        let f: Vec<f64> = xs.iter().map(|x| 2.5 * x).collect();
        let op = ObservationOperator::smoothed_gradient(0.5, 0.05).unwrap();
        let w = grid.operator_weights(&op, &QuadratureSettings::default()).unwrap();
        assert!((apply(&w, &f) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        let grid = Grid::unit_line(11).unwrap();
        let op = ObservationOperator::interval_mean(0.5, 0.15).unwrap();
        assert!(grid.operator_weights(&op, &QuadratureSettings::default()).is_err());
    }

    #[test]
    fn mesh_indexing_and_reflection() {
        let grid = Grid::unit_mesh(5).unwrap();
        assert_eq!(grid.point(7), vec![0.5, 0.25]);
        let f: Vec<f64> = grid.points().iter().map(|p| p[0] + 10.0 * p[1]).collect();
        let s = QuadratureSettings::default();
        let inside = grid
            .operator_weights(&ObservationOperator::point(vec![0.1, 0.3]), &s)
            .unwrap();
        let outside = grid
            .operator_weights(&ObservationOperator::point(vec![-0.1, 0.3]), &s)
            .unwrap();
        assert!((apply(&inside, &f) - apply(&outside, &f)).abs() < 1e-14);
        assert!((apply(&inside, &f) - 3.1).abs() < 1e-13);
    }

    #[test]
    fn disk_on_bilinear_draw() {
        let grid = Grid::unit_mesh(30).unwrap();
        let f: Vec<f64> = grid.points().iter().map(|p| 2.0 * p[0] - p[1]).collect();
        let op = ObservationOperator::disk_mean([0.5, 0.4], 0.2).unwrap();
        let w = grid.operator_weights(&op, &QuadratureSettings::default()).unwrap();
        assert!((apply(&w, &f) - 0.6).abs() < 1e-12);
        let sum: f64 = w.iter().map(|p| p.1).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
