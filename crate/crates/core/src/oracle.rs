//! Brute-force verification on small discrete instances.
//!
//! The enumeration assigns every inter-atom increment of the loss wholly to
//! one agent — the optimizer is known to live in this class — and evaluates
//! `Σ_i V_i / |s_i|` through exact discrete jump sums, independently of the
//! envelope solver it cross-checks. Convex-order and comonotone-dominance
//! checks support the structural lemmas behind the solver.

use crate::distortion::Distortion;
use crate::distribution::DiscreteModel;
use crate::error::{CoreError, Result};
use crate::riskmeasure::{value_of_law, AgentSpec};
use crate::scalar::Real;

/// Default caps keeping the worst case at `4^7` evaluations.
pub const DEFAULT_MAX_ATOMS: usize = 8;
pub const DEFAULT_MAX_AGENTS: usize = 4;

/// A small instance for exhaustive search.
#[derive(Debug, Clone)]
pub struct DiscreteInstance<R> {
    x: DiscreteModel<R>,
    agents: Vec<AgentSpec<R>>,
    max_atoms: usize,
    max_agents: usize,
}

impl<R: Real> DiscreteInstance<R> {
    pub fn new(x: DiscreteModel<R>, agents: Vec<AgentSpec<R>>) -> Result<Self> {
        Self::with_caps(x, agents, DEFAULT_MAX_ATOMS, DEFAULT_MAX_AGENTS)
    }

    pub fn with_caps(
        x: DiscreteModel<R>,
        agents: Vec<AgentSpec<R>>,
        max_atoms: usize,
        max_agents: usize,
    ) -> Result<Self> {
        if x.atoms()[0] < R::zero() {
            return Err(CoreError::NegativeSupport(
                num_traits::ToPrimitive::to_f64(&x.atoms()[0]).unwrap_or(f64::NAN),
            ));
        }
        if agents.is_empty() {
            return Err(CoreError::InvalidConfig("at least one agent required".into()));
        }
        Ok(Self { x, agents, max_atoms, max_agents })
    }

    pub fn x(&self) -> &DiscreteModel<R> {
        &self.x
    }

    pub fn agents(&self) -> &[AgentSpec<R>] {
        &self.agents
    }
}

/// Best assignment found by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult<R> {
    /// Minimal `Σ_i V_i/|s_i|`.
    pub objective: R,
    /// Owner of each inter-atom increment (lexicographically first optimum).
    pub assignment: Vec<usize>,
}

/// Exhaustively minimize `Σ_i V_i(Y_i)/|1 + b_i + c_i|` over whole-increment
/// assignments. The base layer `[0, atom_0]` is value-neutral across agents
/// (every curve equals `±1` at `p = 1`) and is pinned to agent 0.
pub fn brute_force_discrete<R: Real>(inst: &DiscreteInstance<R>) -> Result<BruteForceResult<R>> {
    let m = inst.x.len();
    let n = inst.agents.len();
    if m > inst.max_atoms || n > inst.max_agents {
        return Err(CoreError::CapsExceeded(format!(
            "instance has {m} atoms and {n} agents (caps {} and {})",
            inst.max_atoms, inst.max_agents
        )));
    }
    for a in &inst.agents {
        if a.s() == R::zero() {
            return Err(CoreError::ZeroNormalizer(false));
        }
    }
    let atoms = inst.x.atoms();
    let probs = inst.x.probs();
    let gaps = m.saturating_sub(1);

    let mut assignment = vec![0usize; gaps];
    let mut best: Option<(R, Vec<usize>)> = None;
    loop {
        // payout of each agent at each atom under this assignment
        let mut objective = R::zero();
        for (i, agent) in inst.agents.iter().enumerate() {
            let mut level = if i == 0 { atoms[0] } else { R::zero() };
            let mut pairs: Vec<(R, R)> = Vec::with_capacity(m);
            pairs.push((level, probs[0]));
            for j in 0..gaps {
                if assignment[j] == i {
                    level = level + (atoms[j + 1] - atoms[j]);
                }
                pairs.push((level, probs[j + 1]));
            }
            let v = value_of_law(agent, &pairs)?;
            objective = objective + v / agent.s().abs();
        }
        let better = match &best {
            None => true,
            Some((obj, _)) => objective < *obj,
        };
        if better {
            best = Some((objective, assignment.clone()));
        }
        // odometer
        let mut k = gaps;
        loop {
            if k == 0 {
                let (objective, assignment) = best.expect("at least one assignment");
                return Ok(BruteForceResult { objective, assignment });
            }
            k -= 1;
            assignment[k] += 1;
            if assignment[k] < n {
                break;
            }
            assignment[k] = 0;
        }
    }
}

/// Verdict of the partial-quantile-integral comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexOrder {
    /// Identical partial integrals: each precedes the other.
    Equal,
    /// First argument precedes (`Y ≤_cx Z`).
    FirstPrecedes,
    /// Second argument precedes (`Z ≤_cx Y`).
    SecondPrecedes,
    Incomparable,
}

/// Partial quantile integral `q ↦ ∫_0^q S⁻¹(p) dp` sampled at the survival
/// kinks of a discrete law (the integral is piecewise linear between them).
fn partial_integrals<R: Real>(d: &DiscreteModel<R>, grid: &[R]) -> Vec<R> {
    // quantile is the atom ladder read from the top: value atoms[j] on
    // [tail[j], tail_before(j)).
    let mut out = Vec::with_capacity(grid.len());
    for &q in grid {
        let mut acc = R::zero();
        for j in (0..d.len()).rev() {
            let lo = d.tail()[j];
            let hi = d.tail_before(j);
            let a = lo.min(q);
            let b = hi.min(q);
            if b > a {
                acc = acc + d.atoms()[j] * (b - a);
            }
        }
        out.push(acc);
    }
    out
}

/// Compare two discrete laws in convex order via partial quantile integrals
/// on the merged survival grid. An ordered verdict requires equal means
/// (within `1e-12`).
pub fn convex_order_check<R: Real>(y: &DiscreteModel<R>, z: &DiscreteModel<R>) -> ConvexOrder {
    let mut grid: Vec<R> = y
        .tail()
        .iter()
        .chain(z.tail().iter())
        .copied()
        .chain([R::one()])
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite probabilities"));
    grid.dedup_by(|a, b| *a == *b);

    let iy = partial_integrals(y, &grid);
    let iz = partial_integrals(z, &grid);
    let tol = R::of(1e-12);
    let means_equal = (iy.last().copied().unwrap() - iz.last().copied().unwrap()).abs() <= tol;
    if !means_equal {
        return ConvexOrder::Incomparable;
    }
    let first = iy.iter().zip(&iz).all(|(a, b)| *a <= *b + tol);
    let second = iy.iter().zip(&iz).all(|(a, b)| *b <= *a + tol);
    match (first, second) {
        (true, true) => ConvexOrder::Equal,
        (true, false) => ConvexOrder::FirstPrecedes,
        (false, true) => ConvexOrder::SecondPrecedes,
        (false, false) => ConvexOrder::Incomparable,
    }
}

/// Outcome of the comonotone-rearrangement dominance check.
#[derive(Debug, Clone)]
pub struct DominanceReport<R> {
    /// `V_i(rearranged) − V_i(original)` per agent.
    pub v_delta: Vec<R>,
    /// `H_{h_i}(rearranged) − H_{h_i}(original)` when measures were given.
    pub h_delta: Option<Vec<R>>,
    /// Rearranged payouts, states sorted by the total loss.
    pub rearranged: Vec<Vec<R>>,
    /// The rearranged allocation passes the pairwise comonotonicity check.
    pub comonotone: bool,
    /// No value or constraint measure increased beyond `1e-10`.
    pub dominated: bool,
}

/// Sort each agent's payouts to align with the total loss's order.
///
/// On equal-probability spaces this permutation preserves every marginal
/// law, so no `V_i` or `H_{h_i}` can increase; with unequal probabilities
/// the rearranged law differs and individual values may move either way.
pub fn comonotone_dominance_check<R: Real>(
    x_values: &[R],
    probs: &[R],
    payouts: &[Vec<R>],
    agents: &[AgentSpec<R>],
    constraint_measures: Option<&[Distortion<R>]>,
) -> Result<DominanceReport<R>> {
    let m = x_values.len();
    let n = payouts.len();
    if n != agents.len() || probs.len() != m || payouts.iter().any(|row| row.len() != m) {
        return Err(CoreError::InvalidConfig(
            "payout matrix, probabilities, and agents must agree on dimensions".into(),
        ));
    }
    for j in 0..m {
        let total = crate::scalar::sum::<R, _>(payouts.iter().map(|row| row[j]));
        if (total - x_values[j]).abs() > R::of(1e-9) {
            return Err(CoreError::InvalidConfig(format!(
                "statewise payout sum {total} does not match the loss {} in state {j}",
                x_values[j]
            )));
        }
    }

    // states sorted by the loss, stable on the original index
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        x_values[a]
            .partial_cmp(&x_values[b])
            .expect("finite losses")
            .then(a.cmp(&b))
    });

    let mut rearranged: Vec<Vec<R>> = Vec::with_capacity(n);
    for row in payouts {
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite payouts"));
        rearranged.push(sorted);
    }
    let sorted_probs: Vec<R> = order.iter().map(|&j| probs[j]).collect();

    let tol = R::of(1e-10);
    let mut v_delta = Vec::with_capacity(n);
    let mut dominated = true;
    for (i, agent) in agents.iter().enumerate() {
        let orig: Vec<(R, R)> = payouts[i].iter().copied().zip(probs.iter().copied()).collect();
        let rear: Vec<(R, R)> =
            rearranged[i].iter().copied().zip(sorted_probs.iter().copied()).collect();
        let dv = value_of_law(agent, &rear)? - value_of_law(agent, &orig)?;
        if dv > tol {
            dominated = false;
        }
        v_delta.push(dv);
    }
    let h_delta = match constraint_measures {
        None => None,
        Some(hs) => {
            if hs.len() != n {
                return Err(CoreError::InvalidConfig(
                    "one constraint measure per agent required".into(),
                ));
            }
            let mut out = Vec::with_capacity(n);
            for (i, h) in hs.iter().enumerate() {
                let orig: Vec<(R, R)> =
                    payouts[i].iter().copied().zip(probs.iter().copied()).collect();
                let rear: Vec<(R, R)> =
                    rearranged[i].iter().copied().zip(sorted_probs.iter().copied()).collect();
                let dh = crate::riskmeasure::distorted_expectation_of_law(h, &rear)?
                    - crate::riskmeasure::distorted_expectation_of_law(h, &orig)?;
                if dh > tol {
                    dominated = false;
                }
                out.push(dh);
            }
            Some(out)
        }
    };
    let comonotone = crate::allocation::comonotone_check(&rearranged);
    Ok(DominanceReport { v_delta, h_delta, rearranged, comonotone, dominated })
}

/// Evaluate a ladder on a discrete instance with the exact jump sums; used
/// to confirm that enumeration dominates any feasible ladder.
pub fn ladder_objective_on_instance<R: Real>(
    inst: &DiscreteInstance<R>,
    ladder: &crate::allocation::Ladder<R>,
) -> Result<R> {
    let mut objective = R::zero();
    for (i, agent) in inst.agents.iter().enumerate() {
        let pairs: Vec<(R, R)> = inst
            .x
            .atoms()
            .iter()
            .zip(inst.x.probs())
            .map(|(&y, &q)| Ok((ladder.apply(i, y)?, q)))
            .collect::<Result<Vec<_>>>()?;
        objective = objective + value_of_law(agent, &pairs)? / agent.s().abs();
    }
    Ok(objective)
}
