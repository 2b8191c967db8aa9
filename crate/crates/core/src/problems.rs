//! Ground-truth targets and their exact observation oracles.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::gp::cholesky_jittered;
use crate::kernels::quadrature::gl8;
use crate::kernels::{reflect, KernelSpec, Normalization, ObservationOperator, OperatorKind, QuadratureRule};

/// Dense-grid size of generated random functions.
pub const RANDOM_FUNCTION_NODES: usize = 1200;
/// Length scale of both summed kernels of the random-function prior.
pub const RANDOM_FUNCTION_LENGTH_SCALE: f64 = 0.02;
/// Polynomial degree of the disk rule used for ground truth.
pub const ORACLE_DISK_DEGREE: usize = 30;

/// Oracle panels break at multiples of this spacing, the node spacing of random functions.
const ORACLE_PANEL: f64 = 1.0 / (RANDOM_FUNCTION_NODES - 1) as f64;
const GAUSS_SPAN: f64 = 8.0;

/// Piecewise-linear function on equispaced nodes over `[0, 1]`, constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFunction {
    values: Vec<f64>,
}

impl RandomFunction {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return invalid("a random function needs at least 2 finite node values");
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let g = self.values.len();
        let s = x.clamp(0.0, 1.0) * (g - 1) as f64;
        let i = (s.floor() as usize).min(g - 2);
        let t = s - i as f64;
        (1.0 - t) * self.values[i] + t * self.values[i + 1]
    }

    /// Location and value of the maximum (attained at a node).
    pub fn max(&self) -> (f64, f64) {
        let (i, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        (i as f64 / (self.values.len() - 1) as f64, v)
    }

    pub fn on_points(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Noise-free value of a one-dimensional operator.
    pub fn observe(&self, op: &ObservationOperator) -> Result<f64> {
        let f = |x| self.eval(x);
        observe_1d(&f, op)
    }
}

/// Exact prior draws of the random-function GP on a dense grid.
#[derive(Debug, Clone)]
pub struct RandomFunctionSampler {
    factor: DMatrix<f64>,
}

impl RandomFunctionSampler {
    pub fn new(kernel: &KernelSpec, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return invalid("need at least 2 nodes");
        }
        let h = 1.0 / (nodes - 1) as f64;
        let gram = DMatrix::from_fn(nodes, nodes, |i, j| kernel.at_distance((i as f64 - j as f64).abs() * h));
        let (chol, _) = cholesky_jittered(&gram, crate::gp::DEFAULT_JITTER)?;
        Ok(Self { factor: chol.unpack() })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> RandomFunction {
        let n = self.factor.nrows();
        let z = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        RandomFunction {
            values: (&self.factor * z).iter().copied().collect(),
        }
    }
}

fn default_sampler() -> Result<&'static RandomFunctionSampler> {
    static SAMPLER: OnceLock<std::result::Result<RandomFunctionSampler, String>> = OnceLock::new();
    SAMPLER
        .get_or_init(|| {
            let k = KernelSpec::rq_plus_matern32(RANDOM_FUNCTION_LENGTH_SCALE).map_err(|e| e.to_string())?;
            RandomFunctionSampler::new(&k, RANDOM_FUNCTION_NODES).map_err(|e| e.to_string())
        })
        .as_ref()
        .map_err(|m| Error::Numerical {
            message: m.clone(),
            condition: f64::INFINITY,
        })
}

/// Random test curve: a prior draw of RQ(0.02) + Matérn 3/2(0.02), unit variances.
pub fn gen_random_function(seed: u64) -> Result<RandomFunction> {
    Ok(default_sampler()?.draw(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// 8-point Gauss–Legendre over `[a, b]` with panel breaks on the oracle lattice.
fn lattice_integral(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = gl8();
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let mut next = ((lo / ORACLE_PANEL).floor() + 1.0) * ORACLE_PANEL;
        if next <= lo + 1e-12 * ORACLE_PANEL {
            next += ORACLE_PANEL;
        }
        let hi = next.min(b);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        total += r * nodes.iter().zip(weights).map(|(t, w)| w * f(c + r * t)).sum::<f64>();
        lo = hi;
    }
    total
}

/// Mean of `f` over `[q - w/2, q + w/2]`, with `f` held constant outside `[0, 1]`.
pub fn true_interval_mean(f: &dyn Fn(f64) -> f64, q: f64, w: f64) -> Result<f64> {
    if !(w >= 0.0) || !w.is_finite() {
        return invalid(format!("width must be >= 0, got {w}"));
    }
    let g = |x: f64| f(x.clamp(0.0, 1.0));
    if w == 0.0 {
        return Ok(g(q));
    }
    Ok(lattice_integral(q - 0.5 * w, q + 0.5 * w, g) / w)
}

/// Derivative in `q` of the Gaussian-filtered `f` (standard deviation `w`), with `f`
/// held constant outside `[0, 1]`.
pub fn true_smoothed_gradient(f: &dyn Fn(f64) -> f64, q: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) || !w.is_finite() {
        return invalid(format!("smoothed gradient needs a positive width, got {w}"));
    }
    let norm = 1.0 / (w * w * w * (2.0 * std::f64::consts::PI).sqrt());
    let span = GAUSS_SPAN * w;
    Ok(lattice_integral(q - span, q + span, |x| {
        let u = x - q;
        f(x.clamp(0.0, 1.0)) * u * (-0.5 * u * u / (w * w)).exp() * norm
    }))
}

/// Mean of `f` over the disk, with `f` mirrored about the edges of `[0, 1]²`.
pub fn true_disk_mean(f: &dyn Fn(f64, f64) -> f64, q: [f64; 2], r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("radius must be >= 0, got {r}"));
    }
    let g = |x: f64, y: f64| f(reflect(x, 0.0, 1.0), reflect(y, 0.0, 1.0));
    if r == 0.0 {
        return Ok(g(q[0], q[1]));
    }
    let rule = QuadratureRule::disk(r, q, ORACLE_DISK_DEGREE, Normalization::Mean)?;
    Ok(rule.integrate(|p| g(p[0], p[1])))
}

fn observe_1d(f: &dyn Fn(f64) -> f64, op: &ObservationOperator) -> Result<f64> {
    let q = op.location()[0];
    match op.kind() {
        OperatorKind::Point => Ok(f(q.clamp(0.0, 1.0))),
        OperatorKind::IntervalMean => true_interval_mean(f, q, op.width()),
        OperatorKind::SmoothedGradient => true_smoothed_gradient(f, q, op.width()),
        OperatorKind::DiskMean => invalid("disk operators need a two-dimensional target"),
    }
}

/// Two-dimensional test functions, in their usual minimization form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Himmelblau,
    Eggholder,
    Branin,
    GoldsteinPrice,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [Self::Himmelblau, Self::Eggholder, Self::Branin, Self::GoldsteinPrice];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Himmelblau => "himmelblau",
            Self::Eggholder => "eggholder",
            Self::Branin => "branin",
            Self::GoldsteinPrice => "goldstein-price",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown benchmark `{s}`")))
    }

    /// `[(x1_lo, x1_hi), (x2_lo, x2_hi)]`.
    pub fn domain(&self) -> [(f64, f64); 2] {
        match self {
            Self::Himmelblau => [(-6.0, 6.0), (-6.0, 6.0)],
            Self::Eggholder => [(-512.0, 512.0), (-512.0, 512.0)],
            Self::Branin => [(-5.0, 10.0), (0.0, 15.0)],
            Self::GoldsteinPrice => [(-2.0, 2.0), (-2.0, 2.0)],
        }
    }

    pub fn known_min(&self) -> f64 {
        match self {
            Self::Himmelblau => 0.0,
            Self::Eggholder => -959.640663,
            Self::Branin => 0.39788736,
            Self::GoldsteinPrice => 3.0,
        }
    }

    /// One location attaining the minimum.
    pub fn known_argmin(&self) -> [f64; 2] {
        match self {
            Self::Himmelblau => [3.0, 2.0],
            Self::Eggholder => [512.0, 404.2319],
            Self::Branin => [std::f64::consts::PI, 2.275],
            Self::GoldsteinPrice => [0.0, -1.0],
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 2 {
            return invalid(format!("benchmarks take 2 coordinates, got {}", x.len()));
        }
        let [d1, d2] = self.domain();
        let (x1, x2) = (x[0], x[1]);
        if !(x1 >= d1.0 && x1 <= d1.1 && x2 >= d2.0 && x2 <= d2.1) {
            return invalid(format!("({x1}, {x2}) outside the {} domain", self.name()));
        }
        Ok(match self {
            Self::Himmelblau => (x1 * x1 + x2 - 11.0).powi(2) + (x1 + x2 * x2 - 7.0).powi(2),
            Self::Eggholder => {
                -(x2 + 47.0) * (x2 + 0.5 * x1 + 47.0).abs().sqrt().sin() - x1 * (x1 - (x2 + 47.0)).abs().sqrt().sin()
            }
            Self::Branin => {
                use std::f64::consts::PI;
                let b = 5.1 / (4.0 * PI * PI);
                let c = 5.0 / PI;
                let t = 1.0 / (8.0 * PI);
                (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
            }
            Self::GoldsteinPrice => {
                let u = 19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2;
                let v = 18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2;
                (1.0 + (x1 + x2 + 1.0).powi(2) * u) * (30.0 + (2.0 * x1 - 3.0 * x2).powi(2) * v)
            }
        })
    }

    /// Map a point of `[0, 1]²` onto the domain box.
    pub fn from_unit(&self, u: &[f64]) -> [f64; 2] {
        let [d1, d2] = self.domain();
        [d1.0 + u[0] * (d1.1 - d1.0), d2.0 + u[1] * (d2.1 - d2.0)]
    }

    /// Negated value at a unit-square point (the maximization target).
    pub fn negated_unit(&self, u: &[f64]) -> Result<f64> {
        Ok(-self.eval(&self.from_unit(u))?)
    }
}

/// File formats accepted for elevation grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Ascii,
}

impl GridFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(Self::Ascii),
            other => Err(Error::Format(format!("unknown grid format `{other}`"))),
        }
    }
}

/// Height field on `[0, 1]²`, stored row-major with row 0 along the top edge (`y = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ElevationGrid {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::Format(format!("grid must be at least 2x2, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(Error::Format(format!(
                "{} values for a {rows}x{cols} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("grid values must be finite".into()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Affine rescale to `[0, 1]`; a flat grid becomes all zeros.
    pub fn rescaled(&self) -> Self {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let values = self
            .values
            .iter()
            .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
            .collect();
        Self { values, ..*self }
    }

    pub fn parse_ascii(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty file".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: hl + 1,
                message: format!("bad dimension `{s}`"),
            })
        };
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: hl + 1,
                message: "header must be `H W`".into(),
            });
        }
        let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        let mut values = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (ln, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .enumerate()
                .map(|(k, tok)| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: ln + 1,
                        message: format!("bad number `{tok}` in column {}", k + 1),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Format(format!(
                    "line {}: expected {cols} values, found {}",
                    ln + 1,
                    row.len()
                )));
            }
            values.extend(row);
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Format(format!("expected {rows} rows, found {seen}")));
        }
        Self::from_values(rows, cols, values)
    }

    /// Text form that parses back to identical values.
    pub fn to_ascii(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    s.push(' ');
                }
                write!(s, "{}", self.get(r, c)).expect("write to string");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_ascii(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ascii())?;
        Ok(())
    }

    /// Bilinear value at `(x, y)`, mirrored about the edges of the unit square.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let x = reflect(x, 0.0, 1.0);
        let y = reflect(y, 0.0, 1.0);
        let cs = x * (self.cols - 1) as f64;
        let rs = (1.0 - y) * (self.rows - 1) as f64;
        let c = (cs.floor() as usize).min(self.cols - 2);
        let r = (rs.floor() as usize).min(self.rows - 2);
        let (tc, tr) = (cs - c as f64, rs - r as f64);
        (1.0 - tr) * ((1.0 - tc) * self.get(r, c) + tc * self.get(r, c + 1))
            + tr * ((1.0 - tc) * self.get(r + 1, c) + tc * self.get(r + 1, c + 1))
    }

    pub fn disk_mean(&self, q: [f64; 2], r: f64) -> Result<f64> {
        true_disk_mean(&|x, y| self.eval(x, y), q, r)
    }

    /// Noise-free value of a two-dimensional operator.
    pub fn observe(&self, op: &ObservationOperator) -> Result<f64> {
        let l = op.location();
        match op.kind() {
            OperatorKind::Point => Ok(self.eval(l[0], l[1])),
            OperatorKind::DiskMean => self.disk_mean([l[0], l[1]], op.width()),
            _ => invalid("elevation grids take point or disk operators"),
        }
    }

    /// Smooth random surface: a sum of low-frequency Fourier modes, rescaled to `[0, 1]`.
    pub fn synthetic(seed: u64, rows: usize, cols: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for kx in 0..=4i32 {
            for ky in -4..=4i32 {
                if kx == 0 && ky <= 0 {
                    continue;
                }
                let k2 = (kx * kx + ky * ky) as f64;
                let amp = rng.sample::<f64, _>(StandardNormal) / (1.0 + k2);
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                modes.push((kx as f64, ky as f64, amp, phase));
            }
        }
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let y = 1.0 - r as f64 / (rows - 1).max(1) as f64;
            for c in 0..cols {
                let x = c as f64 / (cols - 1).max(1) as f64;
                let v: f64 = modes
                    .iter()
                    .map(|&(kx, ky, a, p)| a * (std::f64::consts::PI * (kx * x + ky * y) + p).cos())
                    .sum();
                values.push(v);
            }
        }
        Ok(Self::from_values(rows, cols, values)?.rescaled())
    }
}

/// Read a grid file and rescale its values to `[0, 1]`.
pub fn load_elevation_grid(path: &Path, format: GridFormat) -> Result<ElevationGrid> {
    let text = std::fs::read_to_string(path)?;
    match format {
        GridFormat::Ascii => Ok(ElevationGrid::parse_ascii(&text)?.rescaled()),
    }
}
