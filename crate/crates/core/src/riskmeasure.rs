//! Distortion risk measures and agent value functionals.
//!
//! The central quantity is the Choquet integral
//!
//! ```text
//! H_g(Y) = ∫_0^1 S_Y⁻¹(p) dg(p)
//!        = ∫_{-∞}^0 (g[S_Y(t)] − 1) dt + ∫_0^∞ g[S_Y(t)] dt,
//! ```
//!
//! evaluated exactly wherever the model allows it: a finite jump sum for
//! discrete laws, closed forms for piecewise-linear distortions and the
//! proportional hazards family against exponential losses, exact
//! Stieltjes sums for quantile tables, and adaptive quadrature on the
//! `t`-integral otherwise.
//!
//! An agent values a position `Y_i` at
//! `V_i(Y_i) = (1+b_i) H_{g_i}(Y_i) + c_i E[Y_i]`. The fixed cost `a_i` is
//! cash-equivariant and drops out of every comparison, but it is kept on
//! the spec for rationality reporting.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distortion::Distortion;
use crate::distribution::{DiscreteModel, LossModel};
use crate::error::{CoreError, Result};
use crate::numeric::adaptive_simpson;
use crate::pwl::MonotonePwl;
use crate::scalar::Real;

/// Default absolute tolerance for quadrature fallbacks.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// An agent: concave distortion plus linear cost coefficients.
///
/// The derived factor `s = 1 + b + c` drives solvability: Pareto optima
/// exist only when every agent's `s` carries the same strict sign.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec<R> {
    g: Distortion<R>,
    a: R,
    b: R,
    c: R,
}

impl<R: Real> AgentSpec<R> {
    pub fn new(g: Distortion<R>, a: R, b: R, c: R) -> Result<Self> {
        if !g.is_concave() {
            return Err(CoreError::NonConcave(format!(
                "agent distortion must be concave, found {:?}",
                g.concavity()
            )));
        }
        if !(a >= R::zero()) {
            return Err(CoreError::Domain(format!("fixed cost a must be >= 0, got {a}")));
        }
        if !(b >= R::zero()) {
            return Err(CoreError::Domain(format!(
                "proportional cost b must be >= 0, got {b}"
            )));
        }
        if !c.is_finite() {
            return Err(CoreError::Domain(format!("expected-size cost c must be finite, got {c}")));
        }
        Ok(Self { g, a, b, c })
    }

    /// Costless agent with the given distortion.
    pub fn plain(g: Distortion<R>) -> Result<Self> {
        Self::new(g, R::zero(), R::zero(), R::zero())
    }

    /// Insurer in the premium convention: `a = 0`, cost `b`, and
    /// `c = −(1+θ)` netting out the premium received.
    pub fn insurer(g: Distortion<R>, b: R, theta: R) -> Result<Self> {
        Self::new(g, R::zero(), b, -(R::one() + theta))
    }

    /// Insurance buyer: pays premium `(1+θ) E f(X)`, fixed part `a = (1+θ) E X`.
    pub fn buyer(g: Distortion<R>, theta: R, expected_loss: R) -> Result<Self> {
        Self::new(
            g,
            (R::one() + theta) * expected_loss,
            R::zero(),
            -(R::one() + theta),
        )
    }

    pub fn g(&self) -> &Distortion<R> {
        &self.g
    }

    pub fn a(&self) -> R {
        self.a
    }

    pub fn b(&self) -> R {
        self.b
    }

    pub fn c(&self) -> R {
        self.c
    }

    /// `s = 1 + b + c`.
    pub fn s(&self) -> R {
        R::one() + self.b + self.c
    }
}

/// `H_g(X)` for a loss model.
pub fn distorted_expectation<R: Real>(
    g: &Distortion<R>,
    x: &LossModel<R>,
    tol: R,
) -> Result<R> {
    match x {
        LossModel::Discrete(d) => Ok(discrete_choquet(g, d.atoms(), d)),
        LossModel::EmpiricalQuantile { points } => {
            // ∫ q dg = q(1) − Σ_segments q' ∫ g(p) dp  (q continuous pwl)
            let n = points.len();
            let mut acc = points[n - 1].1; // q(1) * g(1)
            for w in points.windows(2) {
                let (p0, v0) = w[0];
                let (p1, v1) = w[1];
                let slope = (v1 - v0) / (p1 - p0);
                acc = acc - slope * g.integral(p0, p1);
            }
            Ok(acc)
        }
        LossModel::Exponential { .. } => {
            exponential_layer(g, x, R::zero(), R::infinity(), tol)
        }
    }
}

/// Jump-sum Choquet integral of monotone payouts against a discrete law.
///
/// `values[j]` is the payout at atom `j`; the sequence must be
/// non-decreasing so that the pushforward law keeps the atom order.
fn discrete_choquet<R: Real>(g: &Distortion<R>, values: &[R], d: &DiscreteModel<R>) -> R {
    let mut acc = R::zero();
    for (j, &v) in values.iter().enumerate() {
        let hi = g.eval_unchecked(d.tail_before(j));
        let lo = g.eval_unchecked(d.tail()[j]);
        acc = acc + v * (hi - lo);
    }
    acc
}

/// `∫_{t_lo}^{t_hi} g(S_X(t)) dt` for a non-negative loss.
///
/// This is the marginal cost of a unit-slope layer `[t_lo, t_hi]` under the
/// distortion `g`; every tranche integral reduces to sums of these.
pub fn layer_distorted<R: Real>(
    g: &Distortion<R>,
    x: &LossModel<R>,
    t_lo: R,
    t_hi: R,
    tol: R,
) -> Result<R> {
    if x.support_min() < R::zero() {
        return Err(CoreError::NegativeSupport(
            num_traits::ToPrimitive::to_f64(&x.support_min()).unwrap_or(f64::NAN),
        ));
    }
    if !(t_lo >= R::zero()) || t_hi < t_lo {
        return Err(CoreError::Domain(format!(
            "layer bounds must satisfy 0 <= t_lo <= t_hi, got [{t_lo}, {t_hi}]"
        )));
    }
    if t_lo == t_hi {
        return Ok(R::zero());
    }
    match x {
        LossModel::Discrete(d) => {
            let mut acc = R::zero();
            let mut prev = R::zero(); // left edge of current constancy interval
            for (j, &y) in d.atoms().iter().enumerate() {
                // on [prev, y): S = tail_before(j)
                let a = t_lo.max(prev);
                let b = t_hi.min(y);
                if b > a {
                    acc = acc + (b - a) * g.eval_unchecked(d.tail_before(j));
                }
                prev = y;
            }
            // past the last atom S = 0, g(0) = 0: no contribution
            Ok(acc)
        }
        LossModel::Exponential { .. } => exponential_layer(g, x, t_lo, t_hi, tol),
        LossModel::EmpiricalQuantile { points } => {
            let mut acc = R::zero();
            // below the essential infimum S = 1
            let ess_inf = x.support_min();
            let b = t_hi.min(ess_inf);
            if b > t_lo {
                acc = acc + (b - t_lo);
            }
            // table segments: t in [v_{k+1}, v_k], S linear from p_{k+1} to p_k
            for w in points.windows(2) {
                let (p0, v0) = w[0];
                let (p1, v1) = w[1];
                if v0 == v1 {
                    continue; // quantile jump: zero-width in t
                }
                let (a, b) = (t_lo.max(v1), t_hi.min(v0));
                if b > a {
                    let slope = (p0 - p1) / (v0 - v1); // dS/dt < 0
                    let s_a = p1 + slope * (a - v1);
                    let s_b = p1 + slope * (b - v1);
                    // ∫ g(S(t)) dt = (Δt/Δp) ∫ g over the p-range
                    acc = acc + g.integral(s_b.min(s_a), s_b.max(s_a)) / (-slope);
                }
            }
            Ok(acc)
        }
    }
}

/// Exponential-model layer `∫ g(e^{-μt}) dt`, exact for families with a
/// piecewise-linear graph and for proportional hazards, quadrature otherwise.
fn exponential_layer<R: Real>(
    g: &Distortion<R>,
    x: &LossModel<R>,
    t_lo: R,
    t_hi: R,
    tol: R,
) -> Result<R> {
    let mu = match x {
        LossModel::Exponential { rate } => *rate,
        _ => unreachable!("exponential layer called on exponential models only"),
    };
    let p_hi = if t_hi.is_infinite() { R::zero() } else { (-mu * t_hi).exp() };
    let p_lo = (-mu * t_lo).exp(); // p_lo >= p_hi

    if let Some(points) = g.as_pwl() {
        // Σ over g-segments of ∫ (a + s p) / (μ p) dp on [p_hi, p_lo]
        let mut acc = R::zero();
        for w in points.windows(2) {
            let (q0, y0) = w[0];
            let (q1, y1) = w[1];
            let s = (y1 - y0) / (q1 - q0);
            let a = y0 - s * q0;
            let lo = p_hi.max(q0);
            let hi = p_lo.min(q1);
            if hi > lo {
                let linear = s * (hi - lo);
                let log_term = if a == R::zero() {
                    R::zero()
                } else if lo == R::zero() {
                    return Err(CoreError::DivergentIntegral(
                        "distortion has non-zero intercept at p = 0".into(),
                    ));
                } else {
                    a * (hi / lo).ln()
                };
                acc = acc + (linear + log_term) / mu;
            }
        }
        return Ok(acc);
    }

    // proportional hazards: ∫ p^{c-1} dp / μ = [p^c / c] / μ
    if let Some(c) = g.ph_exponent() {
        return Ok((p_lo.powf(c) - p_hi.powf(c)) / (c * mu));
    }

    // quadrature on the t-integral with an analytic tail bound
    let integrand = |t: R| g.eval_unchecked((-mu * t).exp());
    let tail_bound = |t_cut: R| {
        let s = (-mu * t_cut).exp();
        g.eval_unchecked(s).max(s) / mu
    };
    let mut cut = t_hi;
    if t_hi.is_infinite() {
        cut = t_lo.max(R::one() / mu);
        for _ in 0..4000 {
            if tail_bound(cut) < tol / R::of(10.0) {
                break;
            }
            cut = cut * R::two();
        }
    }
    Ok(adaptive_simpson(&integrand, t_lo, cut, tol))
}

/// `E[f(X)]` for a monotone transform.
pub fn expected_value_of<R: Real>(f: &MonotonePwl<R>, x: &LossModel<R>) -> Result<R> {
    distorted_value_of(&Distortion::identity(), f, x, R::of(DEFAULT_QUAD_TOL))
}

/// `H_g(f(X))` for a non-decreasing transform of the loss.
///
/// Uses the pushforward identity `S⁻¹_{f(X)}(p) = f(S⁻¹_X(p))`: a jump sum
/// on discrete models, a layer decomposition elsewhere (which needs
/// non-negative support).
pub fn distorted_value_of<R: Real>(
    g: &Distortion<R>,
    f: &MonotonePwl<R>,
    x: &LossModel<R>,
    tol: R,
) -> Result<R> {
    match x {
        LossModel::Discrete(d) => {
            if d.atoms()[0] < R::zero() {
                return Err(CoreError::NegativeSupport(
                    num_traits::ToPrimitive::to_f64(&d.atoms()[0]).unwrap_or(f64::NAN),
                ));
            }
            let values: Vec<R> = d.atoms().iter().map(|&y| f.eval(y)).collect();
            Ok(discrete_choquet(g, &values, d))
        }
        _ => {
            let offset = f.eval(R::zero());
            let mut acc = offset;
            for (t0, t1, slope) in f.segments() {
                if slope != R::zero() {
                    acc = acc + slope * layer_distorted(g, x, t0, t1, tol)?;
                }
            }
            Ok(acc)
        }
    }
}

/// Agent value `V(f(X)) = (1+b) H_g(f(X)) + c E[f(X)]`.
pub fn value_functional<R: Real>(
    agent: &AgentSpec<R>,
    f: &MonotonePwl<R>,
    x: &LossModel<R>,
    tol: R,
) -> Result<R> {
    let h = distorted_value_of(agent.g(), f, x, tol)?;
    let e = distorted_value_of(&Distortion::identity(), f, x, tol)?;
    Ok((R::one() + agent.b()) * h + agent.c() * e)
}

/// Agent value of an explicit finite law given as `(value, prob)` pairs.
///
/// No monotonicity is required: the law is sorted internally. This is the
/// entry point for oracle evaluations of arbitrary (even non-comonotone)
/// payout vectors.
pub fn value_of_law<R: Real>(agent: &AgentSpec<R>, pairs: &[(R, R)]) -> Result<R> {
    let h = distorted_expectation_of_law(agent.g(), pairs)?;
    let mut e = R::zero();
    for &(v, q) in pairs {
        e = e + v * q;
    }
    Ok((R::one() + agent.b()) * h + agent.c() * e)
}

/// `H_g` of an explicit finite law.
pub fn distorted_expectation_of_law<R: Real>(
    g: &Distortion<R>,
    pairs: &[(R, R)],
) -> Result<R> {
    let d = DiscreteModel::from_pairs(pairs.to_vec())?;
    Ok(discrete_choquet(g, d.atoms(), &d))
}

/// `∫_0^∞ [(1+b) g + c](S_X(t)) df(t)` for a layer function with `f(0) = 0`.
///
/// Coincides with [`value_functional`] whenever `f(0) = 0`; the integral
/// form is what the solvers work with tranche by tranche.
pub fn tranche_integral<R: Real>(
    g: &Distortion<R>,
    b: R,
    c: R,
    f: &MonotonePwl<R>,
    x: &LossModel<R>,
    tol: R,
) -> Result<R> {
    if f.eval(R::zero()).abs() > R::of(1e-12) {
        return Err(CoreError::Domain(format!(
            "tranche integral needs f(0) = 0, got {}",
            f.eval(R::zero())
        )));
    }
    if x.support_min() < R::zero() {
        return Err(CoreError::NegativeSupport(
            num_traits::ToPrimitive::to_f64(&x.support_min()).unwrap_or(f64::NAN),
        ));
    }
    let id = Distortion::identity();
    let mut acc = R::zero();
    for (t0, t1, slope) in f.segments() {
        if slope != R::zero() {
            let lg = layer_distorted(g, x, t0, t1, tol)?;
            let le = layer_distorted(&id, x, t0, t1, tol)?;
            acc = acc + slope * ((R::one() + b) * lg + c * le);
        }
    }
    Ok(acc)
}

/// Per-agent rationality outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalityRow {
    /// `H_{g_i}(original_i) − a_i − V_i(proposed_i)`; the allocation is
    /// individually rational when this is non-negative.
    pub margin: f64,
    pub ok: bool,
}

/// Rationality (participation) check of a proposed allocation against the
/// original one: `H_{g_i}(X_i) ≥ a_i + V_i(Y_i)` for each agent.
pub fn rationality_check<R: Real>(
    agents: &[AgentSpec<R>],
    original: &[MonotonePwl<R>],
    proposed: &[MonotonePwl<R>],
    x: &LossModel<R>,
    tol: R,
) -> Result<Vec<RationalityRow>> {
    if agents.len() != original.len() || agents.len() != proposed.len() {
        return Err(CoreError::InvalidConfig(
            "agents, original, and proposed allocations must have equal length".into(),
        ));
    }
    let mut rows = Vec::with_capacity(agents.len());
    for ((agent, orig), prop) in agents.iter().zip(original).zip(proposed) {
        let h_orig = distorted_value_of(agent.g(), orig, x, tol)?;
        let v_prop = value_functional(agent, prop, x, tol)?;
        let margin = h_orig - agent.a() - v_prop;
        rows.push(RationalityRow {
            margin: num_traits::ToPrimitive::to_f64(&margin).unwrap_or(f64::NAN),
            ok: margin >= -R::of(1e-9),
        });
    }
    Ok(rows)
}

/// Insurer-side rationality margin `(1+θ) E f(X) − (1+b₁) H_{g₁}(f(X))`.
pub fn insurer_rationality_margin<R: Real>(
    g1: &Distortion<R>,
    b1: R,
    theta: R,
    f: &MonotonePwl<R>,
    x: &LossModel<R>,
    tol: R,
) -> Result<R> {
    let h = distorted_value_of(g1, f, x, tol)?;
    let e = expected_value_of(f, x)?;
    Ok((R::one() + theta) * e - (R::one() + b1) * h)
}

/// Buyer-side rationality margin `H_{g₂}(f(X)) − (1+θ) E f(X)`.
pub fn buyer_rationality_margin<R: Real>(
    g2: &Distortion<R>,
    theta: R,
    f: &MonotonePwl<R>,
    x: &LossModel<R>,
    tol: R,
) -> Result<R> {
    let h = distorted_value_of(g2, f, x, tol)?;
    let e = expected_value_of(f, x)?;
    Ok(h - (R::one() + theta) * e)
}

// --- AgentSpec serialization (f64 only) ---

#[derive(Serialize, Deserialize)]
struct RawAgent {
    g: Distortion<f64>,
    #[serde(default)]
    a: f64,
    #[serde(default)]
    b: f64,
    #[serde(default)]
    c: f64,
}

impl Serialize for AgentSpec<f64> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawAgent { g: self.g.clone(), a: self.a, b: self.b, c: self.c }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AgentSpec<f64> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawAgent::deserialize(deserializer)?;
        AgentSpec::new(raw.g, raw.a, raw.b, raw.c).map_err(D::Error::custom)
    }
}
