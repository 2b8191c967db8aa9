//! Covariance functions and their images under linear observation operators.

mod closed_form;
mod operator;
pub mod quadrature;

pub use operator::{
    operator_cross_cov, smoothed_value_point_cov, Functional, GramCache, OperatorCovariance, QuadratureSettings,
};
pub use quadrature::{disk_quadrature_nodes, Normalization, QuadratureKind, QuadratureRule};

use crate::error::{invalid, Result};

/// Stationary isotropic covariance function.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Matern52 {
        length_scale: f64,
        variance: f64,
    },
    Matern32 {
        length_scale: f64,
        variance: f64,
    },
    RationalQuadratic {
        length_scale: f64,
        variance: f64,
        mixture: f64,
    },
    Sum(Vec<KernelSpec>),
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

impl KernelSpec {
    pub fn matern52(length_scale: f64, variance: f64) -> Result<Self> {
        check_positive("length_scale", length_scale)?;
        check_positive("signal variance", variance)?;
        Ok(Self::Matern52 { length_scale, variance })
    }

    pub fn matern32(length_scale: f64, variance: f64) -> Result<Self> {
        check_positive("length_scale", length_scale)?;
        check_positive("signal variance", variance)?;
        Ok(Self::Matern32 { length_scale, variance })
    }

    pub fn rational_quadratic(length_scale: f64, variance: f64, mixture: f64) -> Result<Self> {
        check_positive("length_scale", length_scale)?;
        check_positive("signal variance", variance)?;
        check_positive("rq mixture", mixture)?;
        Ok(Self::RationalQuadratic {
            length_scale,
            variance,
            mixture,
        })
    }

    pub fn sum(children: Vec<KernelSpec>) -> Result<Self> {
        if children.len() < 2 {
            return invalid("a sum kernel needs at least two children");
        }
        for c in &children {
            c.validate()?;
        }
        Ok(Self::Sum(children))
    }

    /// The kernel used to generate the random test curves: RQ + Matérn 3/2, both at `length_scale`.
    pub fn rq_plus_matern32(length_scale: f64) -> Result<Self> {
        Self::sum(vec![
            Self::rational_quadratic(length_scale, 1.0, 1.0)?,
            Self::matern32(length_scale, 1.0)?,
        ])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Matern52 { length_scale, variance } | Self::Matern32 { length_scale, variance } => {
                check_positive("length_scale", *length_scale)?;
                check_positive("signal variance", *variance)
            }
            Self::RationalQuadratic {
                length_scale,
                variance,
                mixture,
            } => {
                check_positive("length_scale", *length_scale)?;
                check_positive("signal variance", *variance)?;
                check_positive("rq mixture", *mixture)
            }
            Self::Sum(children) => {
                if children.len() < 2 {
                    return invalid("a sum kernel needs at least two children");
                }
                children.iter().try_for_each(|c| c.validate())
            }
        }
    }

    /// Covariance at Euclidean distance `r`.
    #[inline]
    pub fn at_distance(&self, r: f64) -> f64 {
        match *self {
            Self::Matern52 { length_scale, variance } => {
                let u = 5f64.sqrt() * r / length_scale;
                variance * (1.0 + u + u * u / 3.0) * (-u).exp()
            }
            Self::Matern32 { length_scale, variance } => {
                let u = 3f64.sqrt() * r / length_scale;
                variance * (1.0 + u) * (-u).exp()
            }
            Self::RationalQuadratic {
                length_scale,
                variance,
                mixture,
            } => {
                let s = r / length_scale;
                variance * (1.0 + s * s / (2.0 * mixture)).powf(-mixture)
            }
            Self::Sum(ref children) => children.iter().map(|c| c.at_distance(r)).sum(),
        }
    }

    /// `k(x, x)`, the total signal variance.
    pub fn signal_variance(&self) -> f64 {
        match self {
            Self::Matern52 { variance, .. }
            | Self::Matern32 { variance, .. }
            | Self::RationalQuadratic { variance, .. } => *variance,
            Self::Sum(children) => children.iter().map(|c| c.signal_variance()).sum(),
        }
    }

    /// Smallest length scale over all leaves.
    pub fn min_length_scale(&self) -> f64 {
        match self {
            Self::Matern52 { length_scale, .. }
            | Self::Matern32 { length_scale, .. }
            | Self::RationalQuadratic { length_scale, .. } => *length_scale,
            Self::Sum(children) => children
                .iter()
                .map(|c| c.min_length_scale())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Same family with every leaf's length scale replaced.
    pub fn with_length_scale(&self, length_scale: f64) -> Self {
        let mut out = self.clone();
        out.visit_leaves(&mut |leaf| match leaf {
            Self::Matern52 { length_scale: l, .. }
            | Self::Matern32 { length_scale: l, .. }
            | Self::RationalQuadratic { length_scale: l, .. } => *l = length_scale,
            Self::Sum(_) => unreachable!(),
        });
        out
    }

    fn visit_leaves(&mut self, f: &mut impl FnMut(&mut KernelSpec)) {
        match self {
            Self::Sum(children) => children.iter_mut().for_each(|c| c.visit_leaves(f)),
            leaf => f(leaf),
        }
    }

    pub(crate) fn leaves(&self) -> Vec<&KernelSpec> {
        match self {
            Self::Sum(children) => children.iter().flat_map(|c| c.leaves()).collect(),
            leaf => vec![leaf],
        }
    }

    /// Hash of the hyperparameters, used as a cache key.
    pub(crate) fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        fn walk(k: &KernelSpec, h: &mut impl Hasher) {
            match k {
                KernelSpec::Matern52 { length_scale, variance } => {
                    0u8.hash(h);
                    length_scale.to_bits().hash(h);
                    variance.to_bits().hash(h);
                }
                KernelSpec::Matern32 { length_scale, variance } => {
                    1u8.hash(h);
                    length_scale.to_bits().hash(h);
                    variance.to_bits().hash(h);
                }
                KernelSpec::RationalQuadratic {
                    length_scale,
                    variance,
                    mixture,
                } => {
                    2u8.hash(h);
                    length_scale.to_bits().hash(h);
                    variance.to_bits().hash(h);
                    mixture.to_bits().hash(h);
                }
                KernelSpec::Sum(children) => {
                    3u8.hash(h);
                    children.len().hash(h);
                    children.iter().for_each(|c| walk(c, h));
                }
            }
        }
        walk(self, &mut h);
        h.finish()
    }
}

/// `k(x, x2)` for points of equal dimension.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], x2: &[f64]) -> Result<f64> {
    if x.len() != x2.len() {
        return invalid(format!("dimension mismatch: {} vs {}", x.len(), x2.len()));
    }
    Ok(spec.at_distance(euclidean(x, x2)))
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// How a function is continued outside its box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// No continuation; the latent process lives on all of space.
    None,
    /// Clamp to the nearest boundary point.
    Constant,
    /// Mirror about the nearest edge.
    Reflect,
}

/// Axis-aligned box plus its extension rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    extension: Extension,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, extension: Extension) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return invalid("domain bounds must be non-empty and of equal dimension");
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return invalid("domain upper bounds must exceed lower bounds");
        }
        Ok(Self {
            lower,
            upper,
            extension,
        })
    }

    /// `[0, 1]` with constant continuation.
    pub fn unit_interval() -> Self {
        Self {
            lower: vec![0.0],
            upper: vec![1.0],
            extension: Extension::Constant,
        }
    }

    /// `[0, 1]^2` with mirror continuation.
    pub fn unit_square() -> Self {
        Self {
            lower: vec![0.0; 2],
            upper: vec![1.0; 2],
            extension: Extension::Reflect,
        }
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l - 1e-12 && *v <= *u + 1e-12)
    }

    /// Map a coordinate along axis `axis` into the box according to the extension rule.
    #[inline]
    pub fn fold_coord(&self, axis: usize, v: f64) -> f64 {
        let (l, u) = (self.lower[axis], self.upper[axis]);
        match self.extension {
            Extension::None => v,
            Extension::Constant => v.clamp(l, u),
            Extension::Reflect => reflect(v, l, u),
        }
    }

    pub fn fold(&self, x: &mut [f64]) {
        for (axis, v) in x.iter_mut().enumerate() {
            *v = self.fold_coord(axis, *v);
        }
    }
}

/// Mirror `v` into `[l, u]`, repeating as often as needed.
#[inline]
pub fn reflect(v: f64, l: f64, u: f64) -> f64 {
    if v >= l && v <= u {
        return v;
    }
    let span = u - l;
    if v < l && v >= l - span {
        return 2.0 * l - v;
    }
    if v > u && v <= u + span {
        return 2.0 * u - v;
    }
    let period = 2.0 * span;
    let mut t = (v - l).rem_euclid(period);
    if t > span {
        t = period - t;
    }
    l + t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Point,
    IntervalMean,
    SmoothedGradient,
    DiskMean,
}

impl OperatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Point => "point",
            Self::IntervalMean => "interval",
            Self::SmoothedGradient => "gradient",
            Self::DiskMean => "disk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "point" => Ok(Self::Point),
            "interval" => Ok(Self::IntervalMean),
            "gradient" => Ok(Self::SmoothedGradient),
            "disk" => Ok(Self::DiskMean),
            other => invalid(format!("unknown operator kind `{other}`")),
        }
    }
}

/// One linear measurement of the unknown function.
///
/// `width` is the interval length for [`OperatorKind::IntervalMean`], the Gaussian
/// filter standard deviation for [`OperatorKind::SmoothedGradient`] and the radius for
/// [`OperatorKind::DiskMean`]. Mean-type operators of zero width are point evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationOperator {
    kind: OperatorKind,
    location: Vec<f64>,
    width: f64,
}

impl ObservationOperator {
    pub fn new(kind: OperatorKind, location: Vec<f64>, width: f64) -> Result<Self> {
        if !(width >= 0.0) || !width.is_finite() {
            return invalid(format!("width must be finite and >= 0, got {width}"));
        }
        if location.is_empty() || location.iter().any(|v| !v.is_finite()) {
            return invalid("location must be a non-empty finite vector");
        }
        match kind {
            OperatorKind::Point if width != 0.0 => {
                return invalid("point operators have zero width");
            }
            OperatorKind::IntervalMean | OperatorKind::SmoothedGradient if location.len() != 1 => {
                return invalid(format!("{} operators are one-dimensional", kind.as_str()));
            }
            OperatorKind::SmoothedGradient if width == 0.0 => {
                return invalid("smoothed gradient needs a positive filter width");
            }
            OperatorKind::DiskMean if location.len() != 2 => {
                return invalid("disk operators are two-dimensional");
            }
            _ => {}
        }
        Ok(Self { kind, location, width })
    }

    pub fn point(location: Vec<f64>) -> Self {
        Self::new(OperatorKind::Point, location, 0.0).expect("finite point")
    }

    pub fn interval_mean(center: f64, width: f64) -> Result<Self> {
        Self::new(OperatorKind::IntervalMean, vec![center], width)
    }

    pub fn smoothed_gradient(center: f64, width: f64) -> Result<Self> {
        Self::new(OperatorKind::SmoothedGradient, vec![center], width)
    }

    pub fn disk_mean(center: [f64; 2], radius: f64) -> Result<Self> {
        Self::new(OperatorKind::DiskMean, center.to_vec(), radius)
    }

    /// Build an operator of the given kind at `location`; mean-type kinds of zero width
    /// become points.
    pub fn of_kind(kind: OperatorKind, location: Vec<f64>, width: f64) -> Result<Self> {
        match kind {
            OperatorKind::IntervalMean | OperatorKind::DiskMean if width == 0.0 => Ok(Self::point(location)),
            _ => Self::new(kind, location, width),
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    /// True for point evaluation, including zero-width mean operators.
    pub fn is_pointwise(&self) -> bool {
        matches!(self.kind, OperatorKind::Point)
            || (matches!(self.kind, OperatorKind::IntervalMean | OperatorKind::DiskMean) && self.width == 0.0)
    }

    pub(crate) fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.kind.hash(&mut h);
        self.width.to_bits().hash(&mut h);
        for v in &self.location {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}
