//! Gauss–Legendre rules on intervals and a product-type rule on disks.
//!
//! The disk rule integrates along `n` parallel chords placed at the zeros of the
//! Chebyshev polynomial of the second kind, `x_i = cos(iπ/(n+1))`, and each chord
//! integral is evaluated with an `n`-point Gauss–Legendre rule. The result is exact
//! for bivariate polynomials of total degree `2n - 1`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{invalid, Result};

/// Smallest node count accepted for an interval rule.
pub const MIN_INTERVAL_NODES: usize = 2;

/// How the weights of a rule are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Weights sum to one: the rule computes the mean over the region.
    Mean,
    /// Weights sum to the measure of the region.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    Interval { n_nodes: usize },
    Disk { degree: usize },
}

/// A set of nodes with weights in `dim` dimensions. Nodes are stored flat.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss–Legendre rule on `[a, b]`.
    pub fn interval(a: f64, b: f64, n_nodes: usize, norm: Normalization) -> Result<Self> {
        if n_nodes < MIN_INTERVAL_NODES {
            return invalid(format!(
                "interval rule needs at least {MIN_INTERVAL_NODES} nodes, got {n_nodes}"
            ));
        }
        if !(b >= a) {
            return invalid(format!("interval [{a}, {b}] is reversed"));
        }
        let (x, w) = gauss_legendre(n_nodes)?;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let scale = match norm {
            Normalization::Mean => 0.5,
            Normalization::Raw => half,
        };
        Ok(Self {
            kind: QuadratureKind::Interval { n_nodes },
            dim: 1,
            coords: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|v| v * scale).collect(),
        })
    }

    /// Rule over the disk of `radius` around `center`, exact to total degree `degree`.
    pub fn disk(radius: f64, center: [f64; 2], degree: usize, norm: Normalization) -> Result<Self> {
        if degree < 1 {
            return invalid("disk rule degree must be >= 1");
        }
        if !(radius > 0.0) {
            return invalid(format!("disk radius must be positive, got {radius}"));
        }
        let unit = unit_disk(degree);
        let scale = match norm {
            Normalization::Mean => 1.0 / PI,
            Normalization::Raw => radius * radius,
        };
        let mut coords = Vec::with_capacity(unit.coords.len());
        for p in unit.coords.chunks_exact(2) {
            coords.push(center[0] + radius * p[0]);
            coords.push(center[1] + radius * p[1]);
        }
        Ok(Self {
            kind: QuadratureKind::Disk { degree },
            dim: 2,
            coords,
            weights: unit.weights.iter().map(|w| w * scale).collect(),
        })
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes().map(|(p, w)| w * f(p)).sum()
    }
}

/// Disk rule of the given degree around `center`.
pub fn disk_quadrature_nodes(
    radius: f64,
    center: [f64; 2],
    degree: usize,
    norm: Normalization,
) -> Result<QuadratureRule> {
    QuadratureRule::disk(radius, center, degree, norm)
}

struct UnitDisk {
    coords: Vec<f64>,
    weights: Vec<f64>,
}

fn unit_disk(degree: usize) -> UnitDisk {
    // 2n - 1 >= degree
    let n = degree / 2 + 1;
    let (s, v) = gauss_legendre(n).expect("n >= 1");
    let mut coords = Vec::with_capacity(2 * n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 1..=n {
        let theta = i as f64 * PI / (n as f64 + 1.0);
        let x = theta.cos();
        let half_chord = theta.sin();
        // Gauss–Chebyshev (second kind) weight for the chord position.
        let chord_weight = PI / (n as f64 + 1.0) * half_chord * half_chord;
        for (sk, vk) in s.iter().zip(&v) {
            coords.push(x);
            coords.push(half_chord * sk);
            weights.push(chord_weight * vk);
        }
    }
    UnitDisk { coords, weights }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return invalid("Gauss-Legendre rule needs at least one node");
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Cached 8-point rule used by composite panel integration.
pub(crate) fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8).expect("8 nodes"))
}

/// Composite 8-point Gauss–Legendre integral of `f` over `[a, b]` split into `panels`.
pub(crate) fn composite(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = gl8();
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            acc += wi * f(mid + 0.5 * h * xi);
        }
        total += 0.5 * h * acc;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=40 {
            let (x, w) = gauss_legendre(n).unwrap();
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-12, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn interval_rule_rejects_too_few_nodes() {
        assert!(QuadratureRule::interval(0.0, 1.0, 1, Normalization::Mean).is_err());
    }

    #[test]
    fn disk_constant_mean_is_one() {
        let rule = disk_quadrature_nodes(0.3, [0.2, -0.4], 20, Normalization::Mean).unwrap();
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn disk_odd_moment_vanishes() {
        let rule = disk_quadrature_nodes(0.7, [0.0, 0.0], 20, Normalization::Raw).unwrap();
        assert!(rule.integrate(|p| p[0]).abs() < 1e-12);
    }

    #[test]
    fn disk_second_moment_is_half_pi() {
        let rule = disk_quadrature_nodes(1.0, [0.0, 0.0], 20, Normalization::Raw).unwrap();
        let got = rule.integrate(|p| p[0] * p[0] + p[1] * p[1]);
        assert!((got - PI / 2.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn disk_rule_exact_to_its_degree() {
        // Monomial moments of the unit disk: x^i y^j, both even.
        fn moment(i: i32, j: i32) -> f64 {
            if i % 2 == 1 || j % 2 == 1 {
                return 0.0;
            }
            // 2 Γ((i+1)/2) Γ((j+1)/2) / ((i+j+2) Γ((i+j+2)/2))
            let g = statrs::function::gamma::gamma;
            let a = (i as f64 + 1.0) / 2.0;
            let b = (j as f64 + 1.0) / 2.0;
            2.0 * g(a) * g(b) / ((i + j + 2) as f64 * g(a + b))
        }
        for degree in [1usize, 4, 9, 20] {
            let rule = disk_quadrature_nodes(1.0, [0.0, 0.0], degree, Normalization::Raw).unwrap();
            for i in 0..=degree as i32 {
                for j in 0..=(degree as i32 - i) {
                    let got = rule.integrate(|p| p[0].powi(i) * p[1].powi(j));
                    assert!((got - moment(i, j)).abs() < 1e-12, "deg {degree} x^{i} y^{j}");
                }
            }
        }
    }

    #[test]
    fn degree_twenty_rule_has_121_nodes() {
        let rule = disk_quadrature_nodes(1.0, [0.0, 0.0], 20, Normalization::Mean).unwrap();
        assert_eq!(rule.len(), 121);
    }
}
