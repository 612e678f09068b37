//! Distortion functions on `[0, 1]`.
//!
//! A distortion `g` is non-decreasing with `g(0) = 0` and `g(1) = 1`; it
//! reweights tail probabilities inside a Choquet integral. Concave `g`
//! overweight the tail (risk aversion), convex `g` underweight it. The
//! closed families here are the identity, Average Value-at-Risk
//! `min(αp, 1)`, the proportional hazards transform `p^c`, the dual power
//! `1 − (1−p)^d`, and explicit piecewise-linear graphs.
//!
//! Parameter domains for the power families are `c > 0` and `d > 0`, wider
//! than the concave ranges `c ∈ (0,1)` and `d > 1`, so that duality
//! `g̃(p) = 1 − g(1−p)` stays inside the family set: the dual of `p^c` is
//! `1 − (1−p)^c` and vice versa. Concavity is tracked per instance.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::pwl::{self, Points};
use crate::scalar::Real;

/// Shape classification computed at construction.
///
/// Affine distortions (only the identity, given the endpoint pins) count as
/// `Concave`: every chord lies on the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concavity {
    Concave,
    Convex,
    Neither,
}

/// One-sided derivative of a distortion at an endpoint of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeLimit<R> {
    Finite(R),
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
enum Family<R> {
    Identity,
    Avar { alpha: R },
    ProportionalHazards { c: R },
    DualPower { d: R },
    Pwl { points: Points<R> },
}

/// A distortion function together with its concavity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion<R> {
    family: Family<R>,
    concavity: Concavity,
}

impl<R: Real> Distortion<R> {
    pub fn identity() -> Self {
        Self { family: Family::Identity, concavity: Concavity::Concave }
    }

    /// `g(p) = min(αp, 1)` for `α > 1` (AVaR at level `1 − 1/α`).
    pub fn avar(alpha: R) -> Result<Self> {
        if !(alpha > R::one()) || !alpha.is_finite() {
            return Err(CoreError::InvalidDistortion(format!(
                "avar requires alpha > 1, got {alpha}"
            )));
        }
        Ok(Self { family: Family::Avar { alpha }, concavity: Concavity::Concave })
    }

    /// `g(p) = p^c` for `c > 0`; concave iff `c ≤ 1`.
    pub fn proportional_hazards(c: R) -> Result<Self> {
        if !(c > R::zero()) || !c.is_finite() {
            return Err(CoreError::InvalidDistortion(format!(
                "proportional hazards requires c > 0, got {c}"
            )));
        }
        let concavity = if c < R::one() {
            Concavity::Concave
        } else if c > R::one() {
            Concavity::Convex
        } else {
            Concavity::Concave
        };
        Ok(Self { family: Family::ProportionalHazards { c }, concavity })
    }

    /// `g(p) = 1 − (1−p)^d` for `d > 0`; concave iff `d ≥ 1`.
    pub fn dual_power(d: R) -> Result<Self> {
        if !(d > R::zero()) || !d.is_finite() {
            return Err(CoreError::InvalidDistortion(format!(
                "dual power requires d > 0, got {d}"
            )));
        }
        let concavity = if d > R::one() {
            Concavity::Concave
        } else if d < R::one() {
            Concavity::Convex
        } else {
            Concavity::Concave
        };
        Ok(Self { family: Family::DualPower { d }, concavity })
    }

    /// Piecewise-linear distortion through the given `(p, value)` vertices.
    ///
    /// Requires the first vertex `(0, 0)`, the last `(1, 1)`, strictly
    /// increasing `p` (duplicates rejected) and non-decreasing values.
    pub fn pwl(points: Vec<(R, R)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(CoreError::InvalidDistortion(
                "piecewise-linear distortion needs at least two vertices".into(),
            ));
        }
        pwl::check_strictly_increasing(&points)
            .map_err(|e| CoreError::InvalidDistortion(e.to_string()))?;
        let first = points[0];
        let last = points[points.len() - 1];
        if first != (R::zero(), R::zero()) || last != (R::one(), R::one()) {
            return Err(CoreError::InvalidDistortion(
                "vertices must start at (0,0) and end at (1,1)".into(),
            ));
        }
        for w in points.windows(2) {
            if w[1].1 < w[0].1 {
                return Err(CoreError::InvalidDistortion(
                    "vertex values must be non-decreasing".into(),
                ));
            }
        }
        for &(_, v) in &points {
            if v < R::zero() || v > R::one() {
                return Err(CoreError::InvalidDistortion(
                    "vertex values must lie in [0, 1]".into(),
                ));
            }
        }
        let concavity = pwl_concavity(&points);
        Ok(Self { family: Family::Pwl { points }, concavity })
    }

    pub fn concavity(&self) -> Concavity {
        self.concavity
    }

    pub fn is_concave(&self) -> bool {
        self.concavity == Concavity::Concave
    }

    /// Evaluate `g(p)`; `p` outside `[0, 1]` is a domain error.
    pub fn eval(&self, p: R) -> Result<R> {
        if p < R::zero() || p > R::one() || !p.is_finite() {
            return Err(CoreError::Domain(format!("p = {p} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(p))
    }

    /// Evaluate without the domain check (callers guarantee `p ∈ [0, 1]`).
    pub fn eval_unchecked(&self, p: R) -> R {
        match &self.family {
            Family::Identity => p,
            Family::Avar { alpha } => (*alpha * p).min(R::one()),
            Family::ProportionalHazards { c } => p.powf(*c),
            Family::DualPower { d } => {
                if p == R::one() {
                    R::one()
                } else {
                    // 1 - (1-p)^d, stable near p = 0
                    -((*d) * (-p).ln_1p()).exp_m1()
                }
            }
            Family::Pwl { points } => pwl::eval(points, p),
        }
    }

    /// `g(p) − p`, computed stably near both endpoints.
    ///
    /// Direct subtraction loses all precision for `p` near 0 or 1 (the two
    /// terms agree to machine precision); the tail analysis of deductible
    /// solvers needs this difference to full relative accuracy.
    pub fn excess(&self, p: R) -> R {
        match &self.family {
            Family::Identity => R::zero(),
            Family::Avar { alpha } => {
                if *alpha * p <= R::one() {
                    (*alpha - R::one()) * p
                } else {
                    R::one() - p
                }
            }
            Family::ProportionalHazards { c } => {
                if p == R::zero() || p == R::one() {
                    R::zero()
                } else {
                    // p^c - p = -p^c expm1((1-c) ln p)
                    -p.powf(*c) * ((R::one() - *c) * p.ln()).exp_m1()
                }
            }
            Family::DualPower { d } => {
                if p == R::zero() || p == R::one() {
                    R::zero()
                } else {
                    // (1-p) - (1-p)^d = -(1-p) expm1((d-1) ln(1-p))
                    let ln1p = (-p).ln_1p();
                    -(R::one() - p) * ((*d - R::one()) * ln1p).exp_m1()
                }
            }
            Family::Pwl { points } => {
                // segment-local form keeps cancellation mild
                let n = points.len();
                if p <= points[0].0 || p >= points[n - 1].0 {
                    return R::zero();
                }
                let mut lo = 0;
                let mut hi = n - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if points[mid].0 <= p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (x0, y0) = points[lo];
                let (x1, y1) = points[lo + 1];
                let slope = (y1 - y0) / (x1 - x0);
                (y0 - x0) + (slope - R::one()) * (p - x0)
            }
        }
    }

    /// The dual distortion `g̃(p) = 1 − g(1−p)`.
    ///
    /// Closed families map onto closed families: the dual of AVaR is an
    /// explicit piecewise-linear graph, proportional hazards and dual power
    /// exchange, and the identity is self-dual. `dual` is an involution.
    pub fn dual(&self) -> Self {
        match &self.family {
            Family::Identity => Self::identity(),
            Family::Avar { alpha } => {
                let kink = R::one() - R::one() / *alpha;
                Self::pwl(vec![
                    (R::zero(), R::zero()),
                    (kink, R::zero()),
                    (R::one(), R::one()),
                ])
                .expect("dual of avar is a valid pwl distortion")
            }
            Family::ProportionalHazards { c } => {
                Self::dual_power(*c).expect("parameter stays positive")
            }
            Family::DualPower { d } => {
                Self::proportional_hazards(*d).expect("parameter stays positive")
            }
            Family::Pwl { points } => {
                let mirrored: Vec<(R, R)> = points
                    .iter()
                    .rev()
                    .map(|&(p, v)| (R::one() - p, R::one() - v))
                    .collect();
                Self::pwl(mirrored).expect("mirror of a valid pwl is valid")
            }
        }
    }

    /// Exact `∫_{lo}^{hi} g(p) dp`.
    pub fn integral(&self, lo: R, hi: R) -> R {
        if hi <= lo {
            return R::zero();
        }
        match &self.family {
            Family::Identity => (hi * hi - lo * lo) / R::two(),
            Family::Avar { alpha } => {
                let kink = R::one() / *alpha;
                let mut acc = R::zero();
                let a = lo.min(kink);
                let b = hi.min(kink);
                if b > a {
                    acc = acc + *alpha * (b * b - a * a) / R::two();
                }
                if hi > kink {
                    acc = acc + (hi - lo.max(kink));
                }
                acc
            }
            Family::ProportionalHazards { c } => {
                let e = *c + R::one();
                (hi.powf(e) - lo.powf(e)) / e
            }
            Family::DualPower { d } => {
                // antiderivative p + (1-p)^{d+1}/(d+1)
                let e = *d + R::one();
                let f = |p: R| p + (R::one() - p).powf(e) / e;
                f(hi) - f(lo)
            }
            Family::Pwl { points } => pwl::integral(points, lo, hi),
        }
    }

    /// The proportional-hazards exponent, if `g(p) = p^c`.
    pub fn ph_exponent(&self) -> Option<R> {
        match &self.family {
            Family::ProportionalHazards { c } => Some(*c),
            _ => None,
        }
    }

    /// The AVaR slope, if `g(p) = min(αp, 1)`.
    pub fn avar_alpha(&self) -> Option<R> {
        match &self.family {
            Family::Avar { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Exact piecewise-linear vertex list, when the family has one.
    pub fn as_pwl(&self) -> Option<Points<R>> {
        match &self.family {
            Family::Identity => Some(vec![(R::zero(), R::zero()), (R::one(), R::one())]),
            Family::Avar { alpha } => Some(vec![
                (R::zero(), R::zero()),
                (R::one() / *alpha, R::one()),
                (R::one(), R::one()),
            ]),
            Family::Pwl { points } => Some(points.clone()),
            _ => None,
        }
    }

    /// Sample onto a uniform grid of `n` segments, returning a
    /// piecewise-linear distortion. Explicit, never applied silently.
    pub fn linearize(&self, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(CoreError::Domain("grid must have at least one segment".into()));
        }
        let n_r = R::from_usize(n).expect("grid size fits scalar");
        let mut points = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let p = if k == n { R::one() } else { R::from_usize(k).unwrap() / n_r };
            points.push((p, self.eval_unchecked(p)));
        }
        Self::pwl(points)
    }

    /// One-sided derivative limit at `p → 0+`.
    pub fn slope_at_zero(&self) -> SlopeLimit<R> {
        match &self.family {
            Family::Identity => SlopeLimit::Finite(R::one()),
            Family::Avar { alpha } => SlopeLimit::Finite(*alpha),
            Family::ProportionalHazards { c } => {
                if *c < R::one() {
                    SlopeLimit::Infinite
                } else if *c == R::one() {
                    SlopeLimit::Finite(R::one())
                } else {
                    SlopeLimit::Finite(R::zero())
                }
            }
            Family::DualPower { d } => SlopeLimit::Finite(*d),
            Family::Pwl { points } => {
                let (x0, y0) = points[0];
                let (x1, y1) = points[1];
                SlopeLimit::Finite((y1 - y0) / (x1 - x0))
            }
        }
    }

    /// One-sided derivative limit at `p → 1−`.
    pub fn slope_at_one(&self) -> SlopeLimit<R> {
        match &self.family {
            Family::Identity => SlopeLimit::Finite(R::one()),
            Family::Avar { .. } => SlopeLimit::Finite(R::zero()),
            Family::ProportionalHazards { c } => SlopeLimit::Finite(*c),
            Family::DualPower { d } => {
                if *d > R::one() {
                    SlopeLimit::Finite(R::zero())
                } else if *d == R::one() {
                    SlopeLimit::Finite(R::one())
                } else {
                    SlopeLimit::Infinite
                }
            }
            Family::Pwl { points } => {
                let n = points.len();
                let (x0, y0) = points[n - 2];
                let (x1, y1) = points[n - 1];
                SlopeLimit::Finite((y1 - y0) / (x1 - x0))
            }
        }
    }

    /// Structured validity report; never panics.
    pub fn validate(&self) -> ValidityReport {
        let g0 = self.eval_unchecked(R::zero());
        let g1 = self.eval_unchecked(R::one());
        let mut issues = Vec::new();
        let boundary_ok = g0 == R::zero() && g1 == R::one();
        if !boundary_ok {
            issues.push(format!("boundary values g(0) = {g0}, g(1) = {g1}"));
        }
        let monotone_ok = match &self.family {
            Family::Pwl { points } => points.windows(2).all(|w| w[1].1 >= w[0].1),
            // closed families are monotone by parameter validation
            _ => true,
        };
        if !monotone_ok {
            issues.push("values decrease somewhere".into());
        }
        ValidityReport { boundary_ok, monotone_ok, concavity: self.concavity, issues }
    }
}

fn pwl_concavity<R: Real>(points: &[(R, R)]) -> Concavity {
    let slopes: Vec<R> = points
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let non_increasing = slopes.windows(2).all(|w| w[1] <= w[0]);
    let non_decreasing = slopes.windows(2).all(|w| w[1] >= w[0]);
    if non_increasing {
        Concavity::Concave
    } else if non_decreasing {
        Concavity::Convex
    } else {
        Concavity::Neither
    }
}

/// Outcome of [`Distortion::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub boundary_ok: bool,
    pub monotone_ok: bool,
    pub concavity: Concavity,
    pub issues: Vec<String>,
}

impl ValidityReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

// --- serialization (f64 only; the wire format is IEEE double) ---

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
enum RawDistortion {
    Identity,
    Avar { alpha: f64 },
    Ph { c: f64 },
    Dualpower { d: f64 },
    Pwl { points: Vec<[f64; 2]> },
}

impl From<&Distortion<f64>> for RawDistortion {
    fn from(g: &Distortion<f64>) -> Self {
        match &g.family {
            Family::Identity => RawDistortion::Identity,
            Family::Avar { alpha } => RawDistortion::Avar { alpha: *alpha },
            Family::ProportionalHazards { c } => RawDistortion::Ph { c: *c },
            Family::DualPower { d } => RawDistortion::Dualpower { d: *d },
            Family::Pwl { points } => RawDistortion::Pwl {
                points: points.iter().map(|&(p, v)| [p, v]).collect(),
            },
        }
    }
}

impl TryFrom<RawDistortion> for Distortion<f64> {
    type Error = CoreError;
    fn try_from(raw: RawDistortion) -> Result<Self> {
        match raw {
            RawDistortion::Identity => Ok(Distortion::identity()),
            RawDistortion::Avar { alpha } => Distortion::avar(alpha),
            RawDistortion::Ph { c } => Distortion::proportional_hazards(c),
            RawDistortion::Dualpower { d } => Distortion::dual_power(d),
            RawDistortion::Pwl { points } => {
                Distortion::pwl(points.into_iter().map(|[p, v]| (p, v)).collect())
            }
        }
    }
}

impl Serialize for Distortion<f64> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawDistortion::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Distortion<f64> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawDistortion::deserialize(deserializer)?;
        Distortion::try_from(raw).map_err(D::Error::custom)
    }
}
