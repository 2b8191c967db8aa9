//! Covariances between linear functionals of a Gaussian process.
//!
//! Every [`ObservationOperator`] is lowered to a [`Functional`]: a weighted sum of
//! atoms (point evaluations, interval means, Gaussian-derivative filters and weighted
//! node sets). The domain's extension rule is applied during lowering, so a constant
//! continuation turns the overhang of an interval into point masses at the boundary
//! and a mirror continuation folds disk quadrature nodes back into the box.
//!
//! Interval atoms use closed forms for Matérn and unit-mixture RQ kernels and composite
//! Gauss–Legendre rules otherwise. Gaussian-derivative atoms reduce to one 1-D
//! integral against the derivative of the filter, split at the kernel's kink.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use super::closed_form::ClosedForm;
use super::quadrature::{composite, gauss_legendre, Normalization, QuadratureRule, MIN_INTERVAL_NODES};
use super::{euclidean, Domain, Extension, KernelSpec, ObservationOperator, OperatorKind};
use crate::error::{invalid, Error, Result};

/// Node counts for the numerical rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSettings {
    /// Gauss–Legendre nodes per panel for interval integrals without a closed form.
    pub interval_nodes: usize,
    /// Polynomial degree of the disk rule.
    pub disk_degree: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            interval_nodes: 32,
            disk_degree: 20,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if self.interval_nodes < MIN_INTERVAL_NODES {
            return invalid(format!(
                "interval quadrature needs at least {MIN_INTERVAL_NODES} nodes, got {}",
                self.interval_nodes
            ));
        }
        if self.disk_degree < 1 {
            return invalid("disk quadrature degree must be >= 1");
        }
        Ok(())
    }
}

const MAX_GAUSS_PANELS: usize = 512;
const GAUSS_SPAN: f64 = 8.0;
const MAX_BOX_PANELS: usize = 16;

#[derive(Debug, Clone)]
enum Atom {
    Point(Vec<f64>),
    /// Mean over `[a, b]`.
    Box {
        a: f64,
        b: f64,
    },
    /// Derivative in `q` of the Gaussian-filtered value at `q`.
    GaussDeriv {
        q: f64,
        w: f64,
    },
    Nodes {
        dim: usize,
        coords: Vec<f64>,
        weights: Vec<f64>,
    },
}

/// An operator lowered onto a fixed domain: `Σ weight · atom`.
#[derive(Debug, Clone)]
pub struct Functional {
    terms: Vec<(f64, Atom)>,
    key: u64,
}

impl Functional {
    pub fn key(&self) -> u64 {
        self.key
    }
}

/// Memo of operator covariances keyed by (operator, operator, hyperparameters).
#[derive(Debug, Default)]
pub struct GramCache {
    map: Mutex<HashMap<(u64, u64, u64), f64>>,
}

const CACHE_LIMIT: usize = 4_000_000;

impl GramCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &(u64, u64, u64)) -> Option<f64> {
        self.map.lock().expect("cache lock").get(key).copied()
    }

    fn insert(&self, key: (u64, u64, u64), v: f64) {
        let mut map = self.map.lock().expect("cache lock");
        if map.len() >= CACHE_LIMIT {
            map.clear();
        }
        map.insert(key, v);
    }
}

/// A kernel bound to a domain: lowers operators and evaluates their covariances.
#[derive(Debug, Clone)]
pub struct OperatorCovariance {
    kernel: KernelSpec,
    domain: Domain,
    settings: QuadratureSettings,
    leaves: Vec<Leaf>,
    interval_rule: (Vec<f64>, Vec<f64>),
    hyper_key: u64,
    cache: Option<Arc<GramCache>>,
}

#[derive(Debug, Clone)]
struct Leaf {
    spec: KernelSpec,
    closed: Option<ClosedForm>,
}

impl OperatorCovariance {
    pub fn new(kernel: KernelSpec, domain: Domain, settings: QuadratureSettings) -> Result<Self> {
        kernel.validate()?;
        settings.validate()?;
        let leaves = kernel
            .leaves()
            .into_iter()
            .map(|spec| Leaf {
                spec: spec.clone(),
                closed: ClosedForm::from_spec(spec),
            })
            .collect();
        let interval_rule = gauss_legendre(settings.interval_nodes)?;
        let hyper_key = {
            use std::hash::{Hash, Hasher};
            let mut h = std::collections::hash_map::DefaultHasher::new();
            kernel.fingerprint().hash(&mut h);
            settings.interval_nodes.hash(&mut h);
            settings.disk_degree.hash(&mut h);
            (domain.extension() as u8).hash(&mut h);
            for v in domain.lower().iter().chain(domain.upper()) {
                v.to_bits().hash(&mut h);
            }
            h.finish()
        };
        Ok(Self {
            kernel,
            domain,
            settings,
            leaves,
            interval_rule,
            hyper_key,
            cache: None,
        })
    }

    pub fn with_cache(mut self, cache: Arc<GramCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn settings(&self) -> QuadratureSettings {
        self.settings
    }

    /// Lower an operator onto this domain.
    pub fn lower(&self, op: &ObservationOperator) -> Result<Functional> {
        let dim = self.domain.dim();
        if op.dim() != dim {
            return Err(Error::Unsupported(format!(
                "{}-dimensional {} operator on a {dim}-dimensional domain",
                op.dim(),
                op.kind().as_str()
            )));
        }
        let key = op.fingerprint();
        let terms = if op.is_pointwise() {
            let mut x = op.location().to_vec();
            self.domain.fold(&mut x);
            vec![(1.0, Atom::Point(x))]
        } else {
            match op.kind() {
                OperatorKind::IntervalMean => self.lower_interval(op.location()[0], op.width()),
                OperatorKind::SmoothedGradient => {
                    vec![(
                        1.0,
                        Atom::GaussDeriv {
                            q: op.location()[0],
                            w: op.width(),
                        },
                    )]
                }
                OperatorKind::DiskMean => {
                    let c = [op.location()[0], op.location()[1]];
                    let rule = QuadratureRule::disk(op.width(), c, self.settings.disk_degree, Normalization::Mean)?;
                    let mut coords = rule.coords().to_vec();
                    for p in coords.chunks_exact_mut(2) {
                        self.domain.fold(p);
                    }
                    vec![(
                        1.0,
                        Atom::Nodes {
                            dim: 2,
                            coords,
                            weights: rule.weights().to_vec(),
                        },
                    )]
                }
                OperatorKind::Point => unreachable!("handled by is_pointwise"),
            }
        };
        Ok(Functional { terms, key })
    }

    fn lower_interval(&self, q: f64, w: f64) -> Vec<(f64, Atom)> {
        let (a, b) = (q - 0.5 * w, q + 0.5 * w);
        let (lo, hi) = (self.domain.lower()[0], self.domain.upper()[0]);
        match self.domain.extension() {
            Extension::None => vec![(1.0, Atom::Box { a, b })],
            Extension::Constant => {
                let mut terms = Vec::with_capacity(3);
                let (ca, cb) = (a.max(lo), b.min(hi));
                if cb > ca {
                    terms.push(((cb - ca) / w, Atom::Box { a: ca, b: cb }));
                }
                if a < lo {
                    terms.push(((lo - a) / w, Atom::Point(vec![lo])));
                }
                if b > hi {
                    terms.push(((b - hi) / w, Atom::Point(vec![hi])));
                }
                terms
            }
            Extension::Reflect => {
                // Cut at every mirror line and map each piece back into the box.
                let span = hi - lo;
                let mut terms = Vec::new();
                let mut cell = ((a - lo) / span).floor();
                loop {
                    let cell_lo = lo + cell * span;
                    let (pa, pb) = (a.max(cell_lo), b.min(cell_lo + span));
                    if pb > pa {
                        let (ma, mb) = if (cell as i64).rem_euclid(2) == 0 {
                            (lo + (pa - cell_lo), lo + (pb - cell_lo))
                        } else {
                            (hi - (pb - cell_lo), hi - (pa - cell_lo))
                        };
                        terms.push(((pb - pa) / w, Atom::Box { a: ma, b: mb }));
                    }
                    cell += 1.0;
                    if lo + cell * span >= b {
                        break;
                    }
                }
                terms
            }
        }
    }

    /// `Cov(a[f], b[f])`.
    pub fn cov(&self, a: &Functional, b: &Functional) -> f64 {
        // Fixed argument order keeps the result bitwise symmetric.
        let (a, b) = if a.key <= b.key { (a, b) } else { (b, a) };
        let cache_key = self.cache.as_ref().map(|_| (a.key, b.key, self.hyper_key));
        if let (Some(cache), Some(k)) = (&self.cache, &cache_key) {
            if let Some(v) = cache.get(k) {
                return v;
            }
        }
        let mut total = 0.0;
        for (wa, aa) in &a.terms {
            for (wb, ab) in &b.terms {
                total += wa * wb * self.atom_cov(aa, ab);
            }
        }
        if let (Some(cache), Some(k)) = (&self.cache, cache_key) {
            cache.insert(k, total);
        }
        total
    }

    /// Covariance between a functional and the point evaluation at `x`.
    pub fn cov_point(&self, a: &Functional, x: &[f64]) -> f64 {
        a.terms.iter().map(|(w, atom)| w * self.atom_point(atom, x)).sum()
    }

    /// Lower and evaluate in one go.
    pub fn cross_cov(&self, a: &ObservationOperator, b: &ObservationOperator) -> Result<f64> {
        if a.dim() != b.dim() {
            return Err(Error::Unsupported(format!(
                "{} vs {} operators of different dimension",
                a.kind().as_str(),
                b.kind().as_str()
            )));
        }
        let fa = self.lower(a)?;
        let fb = self.lower(b)?;
        Ok(self.cov(&fa, &fb))
    }

    fn atom_cov(&self, a: &Atom, b: &Atom) -> f64 {
        match (a, b) {
            (Atom::Point(x), other) | (other, Atom::Point(x)) => self.atom_point(other, x),
            (Atom::Box { a, b }, Atom::Box { a: c, b: d }) => self
                .leaves
                .iter()
                .map(|leaf| self.leaf_box_box(leaf, *a, *b, *c, *d))
                .sum(),
            (Atom::GaussDeriv { q: q1, w: w1 }, Atom::GaussDeriv { q: q2, w: w2 }) => {
                self.gauss_deriv_pair(*q1, *w1, *q2, *w2)
            }
            (Atom::GaussDeriv { q, w }, other) | (other, Atom::GaussDeriv { q, w }) => {
                self.gauss_deriv_against(*q, *w, other)
            }
            (Atom::Nodes { dim, coords, weights }, other) | (other, Atom::Nodes { dim, coords, weights }) => {
                if let Atom::Nodes {
                    dim: d2,
                    coords: c2,
                    weights: w2,
                } = other
                {
                    debug_assert_eq!(dim, d2);
                    let mut total = 0.0;
                    for (p, wp) in coords.chunks_exact(*dim).zip(weights) {
                        let mut row = 0.0;
                        for (q, wq) in c2.chunks_exact(*d2).zip(w2) {
                            row += wq * self.kernel.at_distance(euclidean(p, q));
                        }
                        total += wp * row;
                    }
                    total
                } else {
                    coords
                        .chunks_exact(*dim)
                        .zip(weights)
                        .map(|(p, w)| w * self.atom_point(other, p))
                        .sum()
                }
            }
        }
    }

    fn atom_point(&self, atom: &Atom, x: &[f64]) -> f64 {
        match atom {
            Atom::Point(y) => self.kernel.at_distance(euclidean(x, y)),
            Atom::Box { a, b } => self
                .leaves
                .iter()
                .map(|leaf| self.leaf_box_point(leaf, *a, *b, x[0]))
                .sum(),
            Atom::Nodes { dim, coords, weights } => coords
                .chunks_exact(*dim)
                .zip(weights)
                .map(|(p, w)| w * self.kernel.at_distance(euclidean(p, x)))
                .sum(),
            Atom::GaussDeriv { q, w } => {
                let kink = x[0] - q;
                self.gauss_integral(*w, Some(kink), |u| {
                    self.kernel.at_distance((kink - u).abs()) * u / (w * w)
                })
            }
        }
    }

    fn leaf_box_point(&self, leaf: &Leaf, a: f64, b: f64, p: f64) -> f64 {
        if let Some(cf) = &leaf.closed {
            return cf.box_point(a, b, p);
        }
        let panels = self.box_panels(b - a, leaf.spec.min_length_scale());
        self.interval_mean(a, b, panels, |x| leaf.spec.at_distance((p - x).abs()))
    }

    fn leaf_box_box(&self, leaf: &Leaf, a: f64, b: f64, c: f64, d: f64) -> f64 {
        if let Some(cf) = &leaf.closed {
            let small = 0.25 * cf.length_scale_proxy();
            let (wa, wb) = (b - a, d - c);
            return match (wa < small, wb < small) {
                (false, false) => cf.box_box(a, b, c, d),
                (true, false) => self.interval_mean(a, b, 1, |x| cf.box_point(c, d, x)),
                (false, true) => self.interval_mean(c, d, 1, |x| cf.box_point(a, b, x)),
                (true, true) => self.interval_mean(a, b, 1, |x| {
                    self.interval_mean(c, d, 1, |y| leaf.spec.at_distance((x - y).abs()))
                }),
            };
        }
        let ls = leaf.spec.min_length_scale();
        let pa = self.box_panels(b - a, ls);
        let pc = self.box_panels(d - c, ls);
        self.interval_mean(a, b, pa, |x| {
            self.interval_mean(c, d, pc, |y| leaf.spec.at_distance((x - y).abs()))
        })
    }

    fn box_panels(&self, width: f64, length_scale: f64) -> usize {
        ((width / length_scale).ceil() as usize).clamp(1, MAX_BOX_PANELS)
    }

    /// Mean of `f` over `[a, b]` with a composite rule of `interval_nodes` per panel.
    fn interval_mean(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = &self.interval_rule;
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            total += x.iter().zip(w).map(|(xi, wi)| wi * f(mid + 0.5 * h * xi)).sum::<f64>();
        }
        // Weights of each panel sum to 2.
        total / (2.0 * panels as f64)
    }

    /// `∫ g(u) φ_s(u) du` over `|u| <= 8s`, split at `kink` when it falls inside.
    fn gauss_integral(&self, s: f64, kink: Option<f64>, g: impl Fn(f64) -> f64) -> f64 {
        let lim = GAUSS_SPAN * s;
        let h = 0.5 * s.min(self.kernel.min_length_scale());
        let density = |u: f64| (-0.5 * (u / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
        let integrand = |u: f64| g(u) * density(u);
        let panels_for = |len: f64| ((len / h).ceil() as usize).clamp(1, MAX_GAUSS_PANELS);
        match kink {
            Some(k) if k > -lim && k < lim => {
                let total_panels = panels_for(2.0 * lim);
                let left = ((k + lim) / (2.0 * lim) * total_panels as f64).ceil() as usize;
                let right = total_panels.saturating_sub(left).max(1);
                composite(-lim, k, left.max(1), integrand) + composite(k, lim, right, integrand)
            }
            _ => composite(-lim, lim, panels_for(2.0 * lim), integrand),
        }
    }

    fn gauss_deriv_pair(&self, q1: f64, w1: f64, q2: f64, w2: f64) -> f64 {
        let s2 = w1 * w1 + w2 * w2;
        let s = s2.sqrt();
        let d = q1 - q2;
        self.gauss_integral(s, Some(d), |u| {
            self.kernel.at_distance((d - u).abs()) * (1.0 / s2 - u * u / (s2 * s2))
        })
    }

    fn gauss_deriv_against(&self, q: f64, w: f64, other: &Atom) -> f64 {
        self.gauss_integral(w, None, |u| self.atom_point(other, &[q + u]) * u / (w * w))
    }
}

/// Covariance of two operators under a GP prior with `spec` on `domain`.
pub fn operator_cross_cov(
    spec: &KernelSpec,
    domain: &Domain,
    a: &ObservationOperator,
    b: &ObservationOperator,
    settings: QuadratureSettings,
) -> Result<f64> {
    OperatorCovariance::new(spec.clone(), domain.clone(), settings)?.cross_cov(a, b)
}

/// `Cov(f_w(q), f(x))` where `f_w` is the Gaussian-filtered value (not its derivative)
/// on the whole line.
pub fn smoothed_value_point_cov(spec: &KernelSpec, q: f64, w: f64, x: f64) -> Result<f64> {
    if !(w > 0.0) {
        return invalid("filter width must be positive");
    }
    let engine = OperatorCovariance::new(
        spec.clone(),
        Domain::unit_interval().with_extension(Extension::None),
        QuadratureSettings::default(),
    )?;
    let kink = x - q;
    Ok(engine.gauss_integral(w, Some(kink), |u| spec.at_distance((kink - u).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(ext: Extension) -> OperatorCovariance {
        OperatorCovariance::new(
            KernelSpec::matern52(0.2, 1.3).unwrap(),
            Domain::unit_interval().with_extension(ext),
            QuadratureSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn point_pair_is_kernel_value() {
        let e = engine(Extension::Constant);
        let k = e
            .cross_cov(
                &ObservationOperator::point(vec![0.1]),
                &ObservationOperator::point(vec![0.45]),
            )
            .unwrap();
        let direct = super::super::eval_kernel(e.kernel(), &[0.1], &[0.45]).unwrap();
        assert_eq!(k, direct);
    }

    #[test]
    fn narrow_interval_tends_to_point() {
        let e = engine(Extension::Constant);
        let iv = ObservationOperator::interval_mean(0.4, 1e-5).unwrap();
        let p = ObservationOperator::point(vec![0.55]);
        let got = e.cross_cov(&iv, &p).unwrap();
        let want = e.kernel().at_distance(0.15);
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn constant_extension_puts_mass_on_boundary() {
        // Interval [-0.1, 0.3] with constant continuation: 3/4 box on [0, 0.3], 1/4 at 0.
        let e = engine(Extension::Constant);
        let f = e.lower(&ObservationOperator::interval_mean(0.1, 0.4).unwrap()).unwrap();
        let w: f64 = f.terms.iter().map(|(w, _)| w).sum();
        assert!((w - 1.0).abs() < 1e-15);
        assert_eq!(f.terms.len(), 2);
        assert!((f.terms[0].0 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn reflected_interval_folds_overhang() {
        let e = engine(Extension::Reflect);
        let f = e
            .lower(&ObservationOperator::interval_mean(0.05, 0.3).unwrap())
            .unwrap();
        // [-0.1, 0.2] -> [0, 0.2] with weight 2/3 and mirrored [0, 0.1] with weight 1/3.
        let total: f64 = f.terms.iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let x = [0.7];
        let got = e.cov_point(&f, &x);
        let want = (2.0 / 3.0) * e.atom_point(&Atom::Box { a: 0.0, b: 0.2 }, &x)
            + (1.0 / 3.0) * e.atom_point(&Atom::Box { a: 0.0, b: 0.1 }, &x);
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn mismatched_dimensions_are_unsupported() {
        let e = engine(Extension::Constant);
        let d = ObservationOperator::disk_mean([0.5, 0.5], 0.1).unwrap();
        assert!(matches!(e.lower(&d), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cache_returns_identical_values() {
        let cache = Arc::new(GramCache::new());
        let e = engine(Extension::Constant).with_cache(cache.clone());
        let a = e.lower(&ObservationOperator::interval_mean(0.3, 0.2).unwrap()).unwrap();
        let b = e
            .lower(&ObservationOperator::interval_mean(0.6, 0.35).unwrap())
            .unwrap();
        let first = e.cov(&a, &b);
        assert_eq!(cache.len(), 1);
        assert_eq!(e.cov(&b, &a), first);
    }

    #[test]
    fn too_few_nodes_rejected() {
        let s = QuadratureSettings {
            interval_nodes: 1,
            disk_degree: 20,
        };
        assert!(OperatorCovariance::new(KernelSpec::matern52(0.2, 1.0).unwrap(), Domain::unit_interval(), s).is_err());
    }
}
