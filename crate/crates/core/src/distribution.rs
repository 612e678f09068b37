//! Loss distributions: survival function, right-continuous pseudo-inverse
//! quantile, and mean.
//!
//! The quantile convention follows the survival-function inverse
//! `S⁻¹(p) = sup { t : S(t) > p }`, which is right continuous in `p`. At
//! `p = 1` the quantile returns the essential infimum (left end of the
//! support), so the quantile integral over `[0, 1]` stays well defined.
//! Negative support is allowed everywhere.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::pwl::{self, Points};
use crate::scalar::Real;

/// Finite discrete law with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel<R> {
    atoms: Vec<R>,
    probs: Vec<R>,
    /// `tail[j] = P(X > atoms[j])`; strictly decreasing, ends at exactly 0.
    tail: Vec<R>,
}

impl<R: Real> DiscreteModel<R> {
    pub fn new(atoms: Vec<R>, probs: Vec<R>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(CoreError::InvalidDistribution(
                "atoms and probs must be non-empty and equal length".into(),
            ));
        }
        for w in atoms.windows(2) {
            if w[1] <= w[0] {
                return Err(CoreError::InvalidDistribution(
                    "atoms must strictly increase".into(),
                ));
            }
        }
        let mut total = R::zero();
        for &q in &probs {
            if !(q > R::zero()) {
                return Err(CoreError::InvalidDistribution(
                    "probabilities must be positive".into(),
                ));
            }
            total = total + q;
        }
        if (total - R::one()).abs() > R::of(1e-12) {
            return Err(CoreError::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let m = atoms.len();
        let mut tail = vec![R::zero(); m];
        for j in (0..m.saturating_sub(1)).rev() {
            tail[j] = tail[j + 1] + probs[j + 1];
        }
        Ok(Self { atoms, probs, tail })
    }

    /// Build from unsorted `(value, prob)` pairs, merging duplicate values.
    pub fn from_pairs(mut pairs: Vec<(R, R)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atoms"));
        let mut atoms: Vec<R> = Vec::new();
        let mut probs: Vec<R> = Vec::new();
        for (v, q) in pairs {
            if q == R::zero() {
                continue;
            }
            if atoms.last() == Some(&v) {
                let last = probs.len() - 1;
                probs[last] = probs[last] + q;
            } else {
                atoms.push(v);
                probs.push(q);
            }
        }
        Self::new(atoms, probs)
    }

    pub fn atoms(&self) -> &[R] {
        &self.atoms
    }

    pub fn probs(&self) -> &[R] {
        &self.probs
    }

    /// `P(X > atoms[j])`.
    pub fn tail(&self) -> &[R] {
        &self.tail
    }

    /// `P(X > atoms[j-1])` with the `j = 0` convention of exactly one.
    pub fn tail_before(&self, j: usize) -> R {
        if j == 0 {
            R::one()
        } else {
            self.tail[j - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Loss distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel<R> {
    Discrete(DiscreteModel<R>),
    Exponential { rate: R },
    /// Table of `(p, S⁻¹(p))` rows spanning `p ∈ [0, 1]`, linearly
    /// interpolated; values non-increasing in `p`.
    EmpiricalQuantile { points: Points<R> },
}

impl<R: Real> LossModel<R> {
    pub fn discrete(atoms: Vec<R>, probs: Vec<R>) -> Result<Self> {
        Ok(LossModel::Discrete(DiscreteModel::new(atoms, probs)?))
    }

    pub fn exponential(rate: R) -> Result<Self> {
        if !(rate > R::zero()) || !rate.is_finite() {
            return Err(CoreError::InvalidDistribution(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(LossModel::Exponential { rate })
    }

    pub fn empirical_quantile(points: Vec<(R, R)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(CoreError::InvalidDistribution(
                "quantile table needs at least two rows".into(),
            ));
        }
        pwl::check_strictly_increasing(&points)
            .map_err(|e| CoreError::InvalidDistribution(e.to_string()))?;
        if points[0].0 != R::zero() || points[points.len() - 1].0 != R::one() {
            return Err(CoreError::InvalidDistribution(
                "quantile table must span p = 0 to p = 1".into(),
            ));
        }
        for w in points.windows(2) {
            if w[1].1 > w[0].1 {
                return Err(CoreError::InvalidDistribution(
                    "quantile values must be non-increasing in p".into(),
                ));
            }
        }
        for &(_, v) in &points {
            if !v.is_finite() {
                return Err(CoreError::InvalidDistribution(
                    "quantile values must be finite".into(),
                ));
            }
        }
        Ok(LossModel::EmpiricalQuantile { points })
    }

    /// `P(X > t)`.
    pub fn survival(&self, t: R) -> R {
        match self {
            LossModel::Discrete(d) => {
                if t < d.atoms[0] {
                    return R::one();
                }
                // rightmost atom <= t
                let mut lo = 0;
                let mut hi = d.atoms.len();
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if d.atoms[mid] <= t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                d.tail[lo]
            }
            LossModel::Exponential { rate } => {
                if t < R::zero() {
                    R::one()
                } else {
                    (-*rate * t).exp()
                }
            }
            LossModel::EmpiricalQuantile { points } => {
                let n = points.len();
                if t < points[n - 1].1 {
                    return R::one();
                }
                if t >= points[0].1 {
                    return R::zero();
                }
                // S(t) = sup { p : q(p) > t }; q non-increasing pwl.
                // Find the first segment where q drops to or below t.
                let mut lo = 0; // q(points[lo].0) > t
                let mut hi = n - 1; // q(points[hi].0) <= t
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if points[mid].1 > t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (p0, v0) = points[lo];
                let (p1, v1) = points[lo + 1];
                if v0 == v1 {
                    p0
                } else {
                    p0 + (p1 - p0) * (v0 - t) / (v0 - v1)
                }
            }
        }
    }

    /// Right-continuous pseudo-inverse `S⁻¹(p) = sup { t : S(t) > p }` for
    /// `p ∈ [0, 1)`; `p = 1` returns the essential infimum by convention.
    pub fn quantile(&self, p: R) -> Result<R> {
        if p < R::zero() || p > R::one() || !p.is_finite() {
            return Err(CoreError::Domain(format!("p = {p} outside [0, 1]")));
        }
        Ok(match self {
            LossModel::Discrete(d) => {
                if p >= R::one() {
                    return Ok(d.atoms[0]);
                }
                // first j with tail[j] <= p
                let mut lo = 0;
                let mut hi = d.len();
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if d.tail[mid] <= p {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                d.atoms[lo]
            }
            LossModel::Exponential { rate } => {
                if p == R::zero() {
                    R::infinity()
                } else if p >= R::one() {
                    R::zero()
                } else {
                    -p.ln() / *rate
                }
            }
            LossModel::EmpiricalQuantile { points } => pwl::eval(points, p),
        })
    }

    /// `E X`; exact for every variant.
    pub fn mean(&self) -> Result<R> {
        Ok(match self {
            LossModel::Discrete(d) => {
                let mut acc = R::zero();
                for (&y, &q) in d.atoms.iter().zip(&d.probs) {
                    acc = acc + y * q;
                }
                acc
            }
            LossModel::Exponential { rate } => R::one() / *rate,
            LossModel::EmpiricalQuantile { points } => {
                pwl::integral(points, R::zero(), R::one())
            }
        })
    }

    /// Left end of the support.
    pub fn support_min(&self) -> R {
        match self {
            LossModel::Discrete(d) => d.atoms[0],
            LossModel::Exponential { .. } => R::zero(),
            LossModel::EmpiricalQuantile { points } => points[points.len() - 1].1,
        }
    }

    /// Right end of the support (`∞` for the exponential).
    pub fn support_max(&self) -> R {
        match self {
            LossModel::Discrete(d) => d.atoms[d.len() - 1],
            LossModel::Exponential { .. } => R::infinity(),
            LossModel::EmpiricalQuantile { points } => points[0].1,
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteModel<R>> {
        match self {
            LossModel::Discrete(d) => Some(d),
            _ => None,
        }
    }
}

// --- serialization (f64 only) ---

#[derive(Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
enum RawLossModel {
    Exp { mu: f64 },
    Discrete { atoms: Vec<f64>, probs: Vec<f64> },
    Equant { points: Vec<[f64; 2]> },
}

impl From<&LossModel<f64>> for RawLossModel {
    fn from(x: &LossModel<f64>) -> Self {
        match x {
            LossModel::Discrete(d) => RawLossModel::Discrete {
                atoms: d.atoms.clone(),
                probs: d.probs.clone(),
            },
            LossModel::Exponential { rate } => RawLossModel::Exp { mu: *rate },
            LossModel::EmpiricalQuantile { points } => RawLossModel::Equant {
                points: points.iter().map(|&(p, v)| [p, v]).collect(),
            },
        }
    }
}

impl Serialize for LossModel<f64> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawLossModel::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LossModel<f64> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawLossModel::deserialize(deserializer)?;
        match raw {
            RawLossModel::Exp { mu } => LossModel::exponential(mu),
            RawLossModel::Discrete { atoms, probs } => LossModel::discrete(atoms, probs),
            RawLossModel::Equant { points } => {
                LossModel::empirical_quantile(points.into_iter().map(|[p, v]| (p, v)).collect())
            }
        }
        .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli(q: f64) -> LossModel<f64> {
        LossModel::discrete(vec![0.0, 1.0], vec![1.0 - q, q]).unwrap()
    }

    #[test]
    fn survival_closed_forms() {
        let exp = LossModel::exponential(1.0).unwrap();
        assert!((exp.survival(2.0_f64.ln()) - 0.5).abs() < 1e-15);
        assert_eq!(bernoulli(0.25).survival(0.5), 0.25);
        assert_eq!(bernoulli(0.25).survival(-3.0), 1.0);
        assert_eq!(exp.survival(-1.0), 1.0);
    }

    #[test]
    fn quantile_closed_forms() {
        let exp = LossModel::exponential(1.0).unwrap();
        assert!((exp.quantile(0.5).unwrap() - 2.0_f64.ln()).abs() < 1e-15);
        let b = bernoulli(0.25);
        assert_eq!(b.quantile(0.1).unwrap(), 1.0);
        assert_eq!(b.quantile(0.3).unwrap(), 0.0);
        // sup{t : S(t) > 0.25} for {0: 0.5, 2: 0.25, 5: 0.25}
        let x = LossModel::discrete(vec![0.0, 2.0, 5.0], vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(x.quantile(0.25).unwrap(), 2.0);
        // p = 1 returns the essential infimum
        assert_eq!(x.quantile(1.0).unwrap(), 0.0);
        assert_eq!(exp.quantile(1.0).unwrap(), 0.0);
        assert_eq!(exp.quantile(0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn means() {
        assert_eq!(LossModel::exponential(2.0).unwrap().mean().unwrap(), 0.5);
        let x = LossModel::discrete(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(x.mean().unwrap(), 2.0);
        assert_eq!(bernoulli(0.25).mean().unwrap(), 0.25);
    }

    #[test]
    fn galois_consistency_on_discrete() {
        let x = LossModel::discrete(
            vec![-2.0, 0.5, 1.0, 4.0],
            vec![0.1, 0.3, 0.4, 0.2],
        )
        .unwrap();
        // survival(quantile(p)) <= p and quantile(survival(t)) <= t
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            assert!(x.survival(x.quantile(p).unwrap()) <= p + 1e-15);
        }
        for &t in &[-3.0, -2.0, 0.0, 0.5, 0.9, 1.0, 2.0, 4.0, 5.0] {
            let s = x.survival(t);
            if s < 1.0 {
                assert!(x.quantile(s).unwrap() <= t);
            }
        }
    }

    #[test]
    fn empirical_quantile_interpolates() {
        // uniform-like table: quantile(p) = 1 - p
        let x = LossModel::<f64>::empirical_quantile(vec![(0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(x.quantile(0.25).unwrap(), 0.75);
        assert!((x.survival(0.25) - 0.75).abs() < 1e-15);
        assert_eq!(x.mean().unwrap(), 0.5);
        assert_eq!(x.support_min(), 0.0);
        assert_eq!(x.support_max(), 1.0);
    }

    #[test]
    fn from_pairs_merges_duplicates() {
        let d = DiscreteModel::from_pairs(vec![(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        assert_eq!(d.atoms(), &[0.0, 1.0]);
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn serde_round_trip() {
        let x = LossModel::exponential(1.0).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"dist":"exp","mu":1.0}"#);
        let back: LossModel<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);

        let d: LossModel<f64> =
            serde_json::from_str(r#"{"dist":"discrete","atoms":[0,2],"probs":[0.75,0.25]}"#)
                .unwrap();
        assert_eq!(d.survival(1.0), 0.25);

        assert!(serde_json::from_str::<LossModel<f64>>(
            r#"{"dist":"discrete","atoms":[0,2],"probs":[0.5,0.25]}"#
        )
        .is_err());
    }
}
