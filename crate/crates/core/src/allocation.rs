//! Comonotone allocations as ladders of the total loss.
//!
//! A [`Ladder`] partitions the loss axis `[0, ∞)` into segments; within a
//! segment the marginal loss is split according to a fixed weight vector on
//! the agent simplex. Per-agent constant offsets (side payments summing to
//! zero) shift the allocation without touching Pareto optimality.
//!
//! Agent components `f_i(x) = β_i + ∫_0^x w_i(t) dt` are continuous and
//! non-decreasing with `Σ_i f_i(x) = x + Σ_i β_i = x`.

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::pwl::MonotonePwl;
use crate::riskmeasure::{value_functional, AgentSpec};
use crate::distribution::LossModel;
use crate::scalar::{sum, Real};

/// Comonotone allocation of a non-negative total loss among `n` agents.
///
/// The final weight row extends past `t_K` when `t_K` is finite, so the
/// allocation covers the whole axis and `Σ_i f_i(x) = x` holds for every
/// `x ≥ 0` (a finite `t_K` typically marks the top of a bounded support).
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder<R> {
    /// Segment boundaries `0 = t_0 < t_1 < … < t_K`; `t_K` may be `+∞`.
    breakpoints: Vec<R>,
    /// One simplex weight vector per segment (`breakpoints.len() − 1` rows).
    weights: Vec<Vec<R>>,
    /// Per-agent constants summing to zero.
    offsets: Vec<R>,
}

impl<R: Real> Ladder<R> {
    pub fn new(breakpoints: Vec<R>, weights: Vec<Vec<R>>, offsets: Vec<R>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(CoreError::InvalidPwl(
                "a ladder needs at least one segment".into(),
            ));
        }
        if breakpoints[0] != R::zero() {
            return Err(CoreError::InvalidPwl("breakpoints must start at 0".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::InvalidPwl(
                    "breakpoints must strictly increase".into(),
                ));
            }
        }
        if weights.len() + 1 != breakpoints.len() {
            return Err(CoreError::InvalidPwl(format!(
                "expected {} weight rows, got {}",
                breakpoints.len() - 1,
                weights.len()
            )));
        }
        let n = offsets.len();
        if n == 0 {
            return Err(CoreError::InvalidPwl("at least one agent required".into()));
        }
        for row in &weights {
            if row.len() != n {
                return Err(CoreError::InvalidPwl(
                    "weight rows must match the agent count".into(),
                ));
            }
            let mut total = R::zero();
            for &w in row {
                if w < R::zero() || w > R::one() {
                    return Err(CoreError::InvalidPwl(format!(
                        "weights must lie in [0, 1], got {w}"
                    )));
                }
                total = total + w;
            }
            if (total - R::one()).abs() > R::of(1e-12) {
                return Err(CoreError::InvalidPwl(format!(
                    "segment weights must sum to 1, got {total}"
                )));
            }
        }
        let off_sum = sum::<R, _>(offsets.iter().copied());
        if off_sum.abs() > R::of(1e-12) {
            return Err(CoreError::NonZeroSum(
                num_traits::ToPrimitive::to_f64(&off_sum).unwrap_or(f64::NAN),
            ));
        }
        Ok(Self { breakpoints, weights, offsets }.canonical())
    }

    /// Single-owner ladder from `(t_lo, owner)` runs ending at `end`.
    pub fn single_owner(
        cuts: Vec<R>,
        owners: Vec<usize>,
        n_agents: usize,
    ) -> Result<Self> {
        if cuts.len() != owners.len() + 1 {
            return Err(CoreError::InvalidPwl("cuts/owners length mismatch".into()));
        }
        let weights = owners
            .iter()
            .map(|&o| {
                let mut row = vec![R::zero(); n_agents];
                if o >= n_agents {
                    return Err(CoreError::AgentIndex(o, n_agents));
                }
                row[o] = R::one();
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cuts, weights, vec![R::zero(); n_agents])
    }

    /// Trivial ladder: agent `owner` takes the whole loss.
    pub fn whole_to(owner: usize, n_agents: usize) -> Result<Self> {
        Self::single_owner(vec![R::zero(), R::infinity()], vec![owner], n_agents)
    }

    /// Merge adjacent segments carrying identical weight rows.
    fn canonical(mut self) -> Self {
        let mut bps = vec![self.breakpoints[0]];
        let mut ws: Vec<Vec<R>> = Vec::new();
        for (i, row) in self.weights.drain(..).enumerate() {
            if ws.last().map(|prev| prev == &row).unwrap_or(false) {
                *bps.last_mut().unwrap() = self.breakpoints[i + 1];
            } else {
                ws.push(row);
                bps.push(self.breakpoints[i + 1]);
            }
        }
        Ladder { breakpoints: bps, weights: ws, offsets: self.offsets }
    }

    pub fn n_agents(&self) -> usize {
        self.offsets.len()
    }

    pub fn breakpoints(&self) -> &[R] {
        &self.breakpoints
    }

    pub fn weights(&self) -> &[Vec<R>] {
        &self.weights
    }

    pub fn offsets(&self) -> &[R] {
        &self.offsets
    }

    /// Agent `i`'s payout at total loss `x ≥ 0`.
    pub fn apply(&self, agent: usize, x: R) -> Result<R> {
        if agent >= self.n_agents() {
            return Err(CoreError::AgentIndex(agent, self.n_agents()));
        }
        if x < R::zero() {
            return Err(CoreError::Domain(format!("loss must be >= 0, got {x}")));
        }
        let mut acc = self.offsets[agent];
        let last = self.weights.len() - 1;
        for (k, row) in self.weights.iter().enumerate() {
            let lo = self.breakpoints[k];
            let hi = if k == last { R::infinity() } else { self.breakpoints[k + 1] };
            let overlap = (x.min(hi) - lo).max(R::zero());
            if overlap > R::zero() {
                acc = acc + row[agent] * overlap;
            }
        }
        Ok(acc)
    }

    /// Agent `i`'s component as a monotone piecewise-linear function.
    pub fn component(&self, agent: usize) -> Result<MonotonePwl<R>> {
        if agent >= self.n_agents() {
            return Err(CoreError::AgentIndex(agent, self.n_agents()));
        }
        let k = self.weights.len();
        let mut xs = Vec::with_capacity(k);
        let mut ys = Vec::with_capacity(k);
        let mut y = self.offsets[agent];
        for (i, row) in self.weights.iter().enumerate() {
            xs.push(self.breakpoints[i]);
            ys.push(y);
            if i + 1 < k {
                y = y + row[agent] * (self.breakpoints[i + 1] - self.breakpoints[i]);
            }
        }
        MonotonePwl::new(xs, ys, self.weights[k - 1][agent])
    }

    /// All agent components.
    pub fn components(&self) -> Result<Vec<MonotonePwl<R>>> {
        (0..self.n_agents()).map(|i| self.component(i)).collect()
    }

    /// Shift offsets by constants summing to zero (Pareto optimality is
    /// preserved; each `V_i` moves by exactly `(1+b_i+c_i) δ_i`).
    pub fn shift(&self, deltas: &[R]) -> Result<Self> {
        if deltas.len() != self.n_agents() {
            return Err(CoreError::AgentIndex(deltas.len(), self.n_agents()));
        }
        let total = sum::<R, _>(deltas.iter().copied());
        if total.abs() > R::of(1e-12) {
            return Err(CoreError::NonZeroSum(
                num_traits::ToPrimitive::to_f64(&total).unwrap_or(f64::NAN),
            ));
        }
        let offsets = self
            .offsets
            .iter()
            .zip(deltas)
            .map(|(&o, &d)| o + d)
            .collect();
        Ok(Self {
            breakpoints: self.breakpoints.clone(),
            weights: self.weights.clone(),
            offsets,
        })
    }
}

/// Pairwise comonotonicity of payout rows across states sorted by the loss.
///
/// True iff for every pair of agents and every pair of states the payout
/// differences never move in opposite directions.
pub fn comonotone_check<R: Real>(payouts: &[Vec<R>]) -> bool {
    let n = payouts.len();
    if n == 0 {
        return true;
    }
    let m = payouts[0].len();
    for i in 0..n {
        for j in (i + 1)..n {
            for s in 0..m {
                for t in (s + 1)..m {
                    let di = payouts[i][t] - payouts[i][s];
                    let dj = payouts[j][t] - payouts[j][s];
                    if di * dj < R::zero() {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Result of searching for rationality-restoring side payments.
#[derive(Debug, Clone, PartialEq)]
pub enum SidePayments<R> {
    /// Deltas summing to zero; the analytic center of the feasible system.
    Feasible(Vec<R>),
    /// No constants can restore rationality; carries the per-agent margins.
    Infeasible { margins: Vec<R> },
}

/// Find side payments that make `ladder` individually rational against the
/// original allocation, i.e. `H_{g_i}(orig_i) ≥ a_i + V_i(f_i + δ_i)` with
/// `Σ δ_i = 0`.
///
/// Writing `u_i` for the margin measured in units of `s_i = 1+b_i+c_i`, the
/// feasible set is `{δ : Σδ = 0, sign(s)·δ_i ≤ sign(s)·u_i}`; its analytic
/// center is `δ_i = u_i − mean(u)`, feasible iff `sign(s)·mean(u) ≥ 0`.
pub fn side_payments<R: Real>(
    agents: &[AgentSpec<R>],
    ladder: &Ladder<R>,
    original: &[MonotonePwl<R>],
    x: &LossModel<R>,
    tol: R,
) -> Result<SidePayments<R>> {
    let n = agents.len();
    if ladder.n_agents() != n || original.len() != n {
        return Err(CoreError::InvalidConfig(
            "agents, ladder, and original allocation must agree on n".into(),
        ));
    }
    let mut margins = Vec::with_capacity(n);
    let mut units = Vec::with_capacity(n);
    let mut sign = R::zero();
    for (i, agent) in agents.iter().enumerate() {
        let s = agent.s();
        if s == R::zero() {
            return Err(CoreError::ZeroNormalizer(false));
        }
        let this_sign = s.signum();
        if sign == R::zero() {
            sign = this_sign;
        } else if sign != this_sign {
            return Err(CoreError::Unsolvable);
        }
        let h_orig =
            crate::riskmeasure::distorted_value_of(agent.g(), &original[i], x, tol)?;
        let v = value_functional(agent, &ladder.component(i)?, x, tol)?;
        let m = h_orig - agent.a() - v;
        margins.push(m);
        units.push(m / s);
    }
    let mean = sum::<R, _>(units.iter().copied()) / R::from_usize(n).unwrap();
    if sign * mean < -R::of(1e-12) {
        return Ok(SidePayments::Infeasible { margins });
    }
    let mut deltas: Vec<R> = units.iter().map(|&u| u - mean).collect();
    // pin the sum to exactly zero against rounding
    let resid = sum::<R, _>(deltas.iter().copied());
    deltas[0] = deltas[0] - resid;
    Ok(SidePayments::Feasible(deltas))
}

// --- serialization (f64 only) ---
//
// JSON schema: {"breakpoints": [...], "weights": [[...], ...], "offsets": [...]}
// An infinite final breakpoint is emitted as the string "inf" so the
// document stays valid JSON and round-trips.

impl Serialize for Ladder<f64> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(untagged)]
        enum Bp {
            Num(f64),
            Inf(&'static str),
        }
        let bps: Vec<Bp> = self
            .breakpoints
            .iter()
            .map(|&b| if b.is_finite() { Bp::Num(b) } else { Bp::Inf("inf") })
            .collect();
        let mut st = serializer.serialize_struct("Ladder", 3)?;
        st.serialize_field("breakpoints", &bps)?;
        st.serialize_field("weights", &self.weights)?;
        st.serialize_field("offsets", &self.offsets)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Ladder<f64> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Bp {
            Num(f64),
            Word(String),
        }
        #[derive(Deserialize)]
        struct Raw {
            breakpoints: Vec<Bp>,
            weights: Vec<Vec<f64>>,
            offsets: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let bps = raw
            .breakpoints
            .into_iter()
            .map(|b| match b {
                Bp::Num(v) => Ok(v),
                Bp::Word(w) if w == "inf" => Ok(f64::INFINITY),
                Bp::Word(w) => Err(D::Error::custom(format!("bad breakpoint: {w}"))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ladder::new(bps, raw.weights, raw.offsets).map_err(D::Error::custom)
    }
}

/// CSV rows `t_lo,t_hi,w_1..w_n`, one per segment.
pub fn ladder_to_csv(ladder: &Ladder<f64>) -> String {
    let n = ladder.n_agents();
    let mut out = String::from("t_lo,t_hi");
    for i in 1..=n {
        out.push_str(&format!(",w_{i}"));
    }
    out.push('\n');
    for (k, row) in ladder.weights().iter().enumerate() {
        let hi = ladder.breakpoints()[k + 1];
        out.push_str(&format!(
            "{:.16e},{}",
            ladder.breakpoints()[k],
            if hi.is_finite() { format!("{hi:.16e}") } else { "inf".to_string() }
        ));
        for w in row {
            out.push_str(&format!(",{w:.16e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::Distortion;
    use crate::riskmeasure::DEFAULT_QUAD_TOL;

    fn example1_ladder() -> Ladder<f64> {
        Ladder::single_owner(
            vec![0.0, 1.5_f64.ln(), 3.0_f64.ln(), f64::INFINITY],
            vec![0, 1, 0],
            2,
        )
        .unwrap()
    }

    #[test]
    fn apply_single_segment() {
        let l = Ladder::whole_to(0, 2).unwrap();
        assert_eq!(l.apply(0, 3.0).unwrap(), 3.0);
        assert_eq!(l.apply(1, 3.0).unwrap(), 0.0);
        assert!(l.apply(2, 0.0).is_err());
        assert!(l.apply(0, -1.0).is_err());
    }

    #[test]
    fn example1_component_values() {
        let l = example1_ladder();
        // f_1(ln 3) = ln(3/2): covered [0, ln 1.5), idle [ln 1.5, ln 3)
        let x = 3.0_f64.ln();
        assert!((l.apply(0, x).unwrap() - 1.5_f64.ln()).abs() < 1e-15);
        // f_1(2 ln 2) = 2 ln 2 + ln(1/2)
        let x = 2.0 * 2.0_f64.ln();
        let expected = x + 0.5_f64.ln();
        assert!((l.apply(0, x).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn components_sum_to_identity() {
        let l = example1_ladder();
        for k in 0..=40 {
            let x = k as f64 * 0.1;
            let total: f64 = (0..2).map(|i| l.apply(i, x).unwrap()).sum();
            assert!((total - x).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_moves_offsets_and_composes() {
        let l = example1_ladder();
        let l2 = l.shift(&[1.0, -1.0]).unwrap();
        assert_eq!(l2.offsets(), &[1.0, -1.0]);
        let l3 = l2.shift(&[0.5, -0.5]).unwrap();
        assert_eq!(l3.offsets(), &[1.5, -1.5]);
        assert!(l.shift(&[0.1, 0.2]).is_err());
        assert_eq!(l.shift(&[0.0, 0.0]).unwrap(), l);
        // values shift by exactly delta
        assert!((l3.apply(0, 2.0).unwrap() - l.apply(0, 2.0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn shift_moves_value_by_s_times_delta() {
        let x = crate::distribution::LossModel::exponential(1.0).unwrap();
        let agent = AgentSpec::new(
            Distortion::avar(2.0).unwrap(),
            0.0,
            0.25,
            -1.5,
        )
        .unwrap();
        let l = example1_ladder();
        let tol = DEFAULT_QUAD_TOL;
        let v0 = value_functional(&agent, &l.component(0).unwrap(), &x, tol).unwrap();
        let shifted = l.shift(&[0.7, -0.7]).unwrap();
        let v1 = value_functional(&agent, &shifted.component(0).unwrap(), &x, tol).unwrap();
        assert!((v1 - v0 - agent.s() * 0.7).abs() < 1e-10);
    }

    #[test]
    fn canonicalization_merges_equal_segments() {
        let l = Ladder::single_owner(vec![0.0, 1.0, 2.0, 3.0], vec![0, 0, 1], 2).unwrap();
        assert_eq!(l.breakpoints(), &[0.0, 2.0, 3.0]);
        assert_eq!(l.weights().len(), 2);
    }

    #[test]
    fn comonotone_check_examples() {
        // ladder payouts are comonotone by construction
        let l = example1_ladder();
        let atoms = [0.1, 0.5, 1.0, 1.3, 2.0];
        let payouts: Vec<Vec<f64>> = (0..2)
            .map(|i| atoms.iter().map(|&x| l.apply(i, x).unwrap()).collect())
            .collect();
        assert!(comonotone_check(&payouts));
        // opposite movements fail
        assert!(!comonotone_check(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        // constants are comonotone with anything
        assert!(comonotone_check(&[vec![2.0, 2.0], vec![0.0, 1.0]]));
    }

    #[test]
    fn serde_round_trip_with_infinite_tail() {
        let l = example1_ladder();
        let s = serde_json::to_string(&l).unwrap();
        assert!(s.contains("\"inf\""));
        let back: Ladder<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn csv_has_one_row_per_segment() {
        let csv = ladder_to_csv(&example1_ladder());
        let rows: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(rows[0], "t_lo,t_hi,w_1,w_2");
        assert_eq!(rows.len(), 4);
        assert!(rows[3].ends_with("1.0000000000000000e0,0.0000000000000000e0"));
    }
}
