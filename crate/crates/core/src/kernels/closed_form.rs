//! Closed-form antiderivatives of one-dimensional stationary kernels.
//!
//! `F(r) = ∫_0^r k` is odd and `G(r) = ∫_0^{|r|} (|r| - s) k(s) ds` is even with
//! `G'' = k`, which turns interval integrals of `k` into differences of `F` and `G`.
//! Half-integer Matérn kernels read `k(r) = σ² p(u) e^{-u}` with `u = a|r|`; the
//! rational quadratic with unit mixture is `σ² c² / (c² + r²)` with `c = √2 ℓ`.

use super::KernelSpec;

const MATERN52_POLY: [f64; 3] = [1.0, 1.0, 1.0 / 3.0];
const MATERN32_POLY: [f64; 2] = [1.0, 1.0];
const FACTORIAL: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
const SERIES_CUTOFF: f64 = 2.0;

#[derive(Debug, Clone, Copy)]
enum Shape {
    Matern { rate: f64, poly: &'static [f64] },
    Cauchy { c: f64 },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ClosedForm {
    shape: Shape,
    variance: f64,
}

impl ClosedForm {
    pub(crate) fn from_spec(spec: &KernelSpec) -> Option<Self> {
        let (shape, variance) = match *spec {
            KernelSpec::Matern52 { length_scale, variance } => (
                Shape::Matern {
                    rate: 5f64.sqrt() / length_scale,
                    poly: &MATERN52_POLY,
                },
                variance,
            ),
            KernelSpec::Matern32 { length_scale, variance } => (
                Shape::Matern {
                    rate: 3f64.sqrt() / length_scale,
                    poly: &MATERN32_POLY,
                },
                variance,
            ),
            KernelSpec::RationalQuadratic {
                length_scale,
                variance,
                mixture,
            } if mixture == 1.0 => (
                Shape::Cauchy {
                    c: 2f64.sqrt() * length_scale,
                },
                variance,
            ),
            _ => return None,
        };
        Some(Self { shape, variance })
    }

    /// `∫_0^r k(s) ds`.
    pub(crate) fn first(&self, r: f64) -> f64 {
        match self.shape {
            Shape::Matern { rate, poly } => {
                let u = rate * r.abs();
                let v: f64 = poly.iter().enumerate().map(|(n, c)| c * lower_gamma(n, u)).sum();
                r.signum() * self.variance / rate * v
            }
            Shape::Cauchy { c } => self.variance * c * (r / c).atan(),
        }
    }

    /// `∫_0^{|r|} (|r| - s) k(s) ds`.
    pub(crate) fn second(&self, r: f64) -> f64 {
        match self.shape {
            Shape::Matern { rate, poly } => {
                let u = rate * r.abs();
                let v: f64 = poly
                    .iter()
                    .enumerate()
                    .map(|(n, c)| c * iterated_lower_gamma(n, u))
                    .sum();
                self.variance / (rate * rate) * v
            }
            Shape::Cauchy { c } => {
                let t = r.abs() / c;
                self.variance * c * c * (t * t.atan() - 0.5 * (t * t).ln_1p())
            }
        }
    }

    /// Mean of `k(p - x)` for `x` uniform on `[a, b]`.
    pub(crate) fn box_point(&self, a: f64, b: f64, p: f64) -> f64 {
        (self.first(p - a) - self.first(p - b)) / (b - a)
    }

    /// Mean of `k(x - y)` for `x` uniform on `[a, b]` and `y` uniform on `[c, d]`.
    pub(crate) fn box_box(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        let g = |r| self.second(r);
        (g(b - c) - g(b - d) - g(a - c) + g(a - d)) / ((b - a) * (d - c))
    }

    /// Distance over which the kernel decays appreciably.
    pub(crate) fn length_scale_proxy(&self) -> f64 {
        match self.shape {
            Shape::Matern { rate, .. } => 1.0 / rate,
            Shape::Cauchy { c } => c,
        }
    }
}

/// `∫_0^u t^n e^{-t} dt` for small integer `n`.
fn lower_gamma(n: usize, u: f64) -> f64 {
    if u < SERIES_CUTOFF {
        let mut sum = 0.0;
        let mut pow = u.powi(n as i32 + 1);
        let mut m = 0usize;
        loop {
            let term = pow / (n + m + 1) as f64;
            sum += if m % 2 == 0 { term } else { -term };
            m += 1;
            pow *= u / m as f64;
            if term.abs() <= 1e-18 * sum.abs() || m > 80 {
                break;
            }
        }
        sum
    } else {
        let mut partial = 0.0;
        let mut t = 1.0;
        for k in 0..=n {
            if k > 0 {
                t *= u / k as f64;
            }
            partial += t;
        }
        FACTORIAL[n] * (1.0 - (-u).exp() * partial)
    }
}

/// `∫_0^u lower_gamma(n, v) dv`.
fn iterated_lower_gamma(n: usize, u: f64) -> f64 {
    if u < SERIES_CUTOFF {
        let mut sum = 0.0;
        let mut pow = u.powi(n as i32 + 2);
        let mut m = 0usize;
        loop {
            let term = pow / ((n + m + 1) * (n + m + 2)) as f64;
            sum += if m % 2 == 0 { term } else { -term };
            m += 1;
            pow *= u / m as f64;
            if term.abs() <= 1e-18 * sum.abs() || m > 80 {
                break;
            }
        }
        sum
    } else {
        let inner: f64 = (0..=n).map(|k| lower_gamma(k, u) / FACTORIAL[k]).sum();
        FACTORIAL[n] * (u - inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::quadrature::composite;

    #[test]
    fn lower_gamma_branches_agree_at_cutoff() {
        for n in 0..3 {
            let below = lower_gamma(n, SERIES_CUTOFF - 1e-12);
            let above = lower_gamma(n, SERIES_CUTOFF + 1e-12);
            assert!((below - above).abs() < 1e-11, "n={n}");
            let below = iterated_lower_gamma(n, SERIES_CUTOFF - 1e-12);
            let above = iterated_lower_gamma(n, SERIES_CUTOFF + 1e-12);
            assert!((below - above).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        for spec in [
            KernelSpec::matern52(0.3, 1.7).unwrap(),
            KernelSpec::matern32(0.05, 0.4).unwrap(),
            KernelSpec::rational_quadratic(0.07, 1.3, 1.0).unwrap(),
        ] {
            let cf = ClosedForm::from_spec(&spec).unwrap();
            for r in [-0.9, -0.2, 0.0, 0.01, 0.17, 0.6, 2.5] {
                let f = composite(0.0, r, 400, |s| spec.at_distance(s.abs()));
                assert!((cf.first(r) - f).abs() < 1e-12, "F({r}) {} vs {f}", cf.first(r));
                let g = composite(0.0, r.abs(), 400, |s| (r.abs() - s) * spec.at_distance(s));
                assert!((cf.second(r) - g).abs() < 1e-12, "G({r}) {} vs {g}", cf.second(r));
            }
        }
    }
}
