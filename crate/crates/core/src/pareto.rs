//! Unconstrained Pareto solver.
//!
//! Existence requires every agent's factor `s_i = 1 + b_i + c_i` to carry
//! the same strict sign; mixed signs admit unbounded improvement chains and
//! no optimum exists. When solvable, each agent contributes a normalized
//! risk-load curve
//!
//! ```text
//! Q_k(p) = [(1+b_k) g_k(p) + λ_k h_k(p) + c_k p] / |1 + b_k + c_k + λ_k|
//! ```
//!
//! and the optimal allocation gives the loss layer at level `t` entirely to
//! an agent minimizing `Q_k(S_X(t))`. The solver computes the lower envelope
//! of the curves on the probability axis (exactly for piecewise-linear
//! curves, by grid scan plus bisection refinement otherwise) and maps the
//! cells through the quantile function into a ladder of tranches.

use serde::{Deserialize, Serialize};

use crate::allocation::Ladder;
use crate::distortion::{Distortion, SlopeLimit};
use crate::distribution::LossModel;
use crate::error::{CoreError, Result};
use crate::numeric::bisect_boundary;
use crate::pwl::{self, Points};
use crate::riskmeasure::{
    distorted_value_of, layer_distorted, AgentSpec, DEFAULT_QUAD_TOL,
};
use crate::scalar::Real;

/// Outcome of the sign analysis of the `s_i = 1 + b_i + c_i` factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solvability {
    /// All factors share one strict sign: a Pareto optimum exists.
    Solvable,
    /// Every factor vanishes; optima form the delta family (two agents).
    DegenerateAllZero,
    /// Mixed signs (or zero next to non-zero): no Pareto optimum exists.
    Unsolvable,
}

/// Sign analysis over the agent list.
pub fn existence_check<R: Real>(agents: &[AgentSpec<R>]) -> Solvability {
    let mut pos = 0usize;
    let mut neg = 0usize;
    let mut zero = 0usize;
    for a in agents {
        let s = a.s();
        if s > R::zero() {
            pos += 1;
        } else if s < R::zero() {
            neg += 1;
        } else {
            zero += 1;
        }
    }
    if zero == agents.len() {
        Solvability::DegenerateAllZero
    } else if (pos > 0 && neg == 0 && zero == 0) || (neg > 0 && pos == 0 && zero == 0) {
        Solvability::Solvable
    } else {
        Solvability::Unsolvable
    }
}

/// How a tranche tied between several agents is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    #[default]
    Lowest,
    Highest,
    Split,
}

/// Solver knobs; the defaults match the documented tolerances.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Grid cells for analytic (non-piecewise-linear) curve envelopes.
    pub grid_size: usize,
    pub tie_rule: TieRule,
    /// Two curves within this of the minimum count as tied.
    pub tie_tol: f64,
    /// Absolute tolerance for quadrature fallbacks.
    pub quad_tol: f64,
    /// Absolute tolerance on Lagrange multipliers.
    pub tol_lambda: f64,
    /// Absolute tolerance on constraint residuals.
    pub tol_residual: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_size: 2048,
            tie_rule: TieRule::Lowest,
            tie_tol: 1e-12,
            quad_tol: DEFAULT_QUAD_TOL,
            tol_lambda: 1e-10,
            tol_residual: 1e-8,
        }
    }
}

/// Normalized marginal-cost curve of one agent on the probability axis.
#[derive(Debug, Clone)]
pub struct RiskLoadCurve<R> {
    g: Distortion<R>,
    one_plus_b: R,
    c: R,
    lambda: R,
    h: Option<Distortion<R>>,
    normalizer: R,
    graph: Option<Points<R>>,
}

impl<R: Real> RiskLoadCurve<R> {
    /// Build `Q(p) = [(1+b) g(p) + λ h(p) + c p] / |1+b+c+λ|`.
    pub fn new(agent: &AgentSpec<R>, lambda: R, h: Option<&Distortion<R>>) -> Result<Self> {
        if lambda < R::zero() {
            return Err(CoreError::Domain(format!("multiplier must be >= 0, got {lambda}")));
        }
        if lambda > R::zero() && h.is_none() {
            return Err(CoreError::InvalidConfig(
                "a positive multiplier needs a constraint distortion".into(),
            ));
        }
        let norm = (agent.s() + lambda).abs();
        if norm == R::zero() {
            return Err(CoreError::ZeroNormalizer(lambda > R::zero()));
        }
        let one_plus_b = R::one() + agent.b();
        let c = agent.c();
        let h = h.cloned();
        let graph = Self::build_graph(agent.g(), one_plus_b, c, lambda, h.as_ref(), norm);
        Ok(Self { g: agent.g().clone(), one_plus_b, c, lambda, h, normalizer: norm, graph })
    }

    fn build_graph(
        g: &Distortion<R>,
        one_plus_b: R,
        c: R,
        lambda: R,
        h: Option<&Distortion<R>>,
        norm: R,
    ) -> Option<Points<R>> {
        let g_pwl = g.as_pwl()?;
        let h_pwl = match h {
            Some(h) => Some(h.as_pwl()?),
            None => None,
        };
        let mut lists: Vec<&[(R, R)]> = vec![&g_pwl];
        if let Some(hp) = h_pwl.as_ref() {
            lists.push(hp);
        }
        let axis = pwl::merged_axis(&lists);
        let graph = axis
            .into_iter()
            .map(|p| {
                let mut v = one_plus_b * pwl::eval(&g_pwl, p) + c * p;
                if let Some(hp) = h_pwl.as_ref() {
                    v = v + lambda * pwl::eval(hp, p);
                }
                (p, v / norm)
            })
            .collect();
        Some(graph)
    }

    pub fn eval(&self, p: R) -> R {
        let mut v = self.one_plus_b * self.g.eval_unchecked(p) + self.c * p;
        if let Some(h) = &self.h {
            v = v + self.lambda * h.eval_unchecked(p);
        }
        v / self.normalizer
    }

    pub fn normalizer(&self) -> R {
        self.normalizer
    }

    /// Exact piecewise-linear graph, when every ingredient has one.
    pub fn graph(&self) -> Option<&Points<R>> {
        self.graph.as_ref()
    }

    /// `∫_{t0}^{t1} [(1+b) g + λ h + c](S_X(t)) dt / |1+b+c+λ|`.
    pub fn layer_value(&self, x: &LossModel<R>, t0: R, t1: R, tol: R) -> Result<R> {
        let id = Distortion::identity();
        let mut v = self.one_plus_b * layer_distorted(&self.g, x, t0, t1, tol)?
            + self.c * layer_distorted(&id, x, t0, t1, tol)?;
        if let Some(h) = &self.h {
            v = v + self.lambda * layer_distorted(h, x, t0, t1, tol)?;
        }
        Ok(v / self.normalizer)
    }
}

/// Convenience wrapper matching the module-level operation.
pub fn risk_load_curve<R: Real>(
    agent: &AgentSpec<R>,
    lambda: R,
    h: Option<&Distortion<R>>,
) -> Result<RiskLoadCurve<R>> {
    RiskLoadCurve::new(agent, lambda, h)
}

/// A maximal probability interval on which several curves tie for the
/// minimum (degenerate intervals mark discrete survival levels).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TieCell {
    pub p_lo: f64,
    pub p_hi: f64,
    pub owners: Vec<usize>,
}

/// Per-agent solve outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentReport {
    /// `V_i` of the agent's ladder component.
    pub v: f64,
    /// `H_{g_i}(f_i(X))`.
    pub h_g: f64,
    /// `E f_i(X)`.
    pub expected: f64,
    /// `s_i = 1 + b_i + c_i`.
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rationality: Option<crate::riskmeasure::RationalityRow>,
}

/// Full solve report. Numbers are IEEE doubles regardless of the solver's
/// scalar type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub agents: Vec<AgentReport>,
    /// `Σ_i V_i / |s_i|` of the reported ladder.
    pub objective: f64,
    /// `∫_0^∞ min_k Q_k(S_X(t)) dt` over the active (possibly
    /// multiplier-augmented) curves.
    pub min_integral: f64,
    pub lambda: Vec<f64>,
    pub ladder: Ladder<f64>,
    pub tie_cells: Vec<TieCell>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub case_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub side_payments: Option<Vec<f64>>,
    pub converged: bool,
}

fn to_f64<R: Real>(v: R) -> f64 {
    num_traits::ToPrimitive::to_f64(&v).unwrap_or(f64::NAN)
}

pub(crate) fn ladder_to_f64<R: Real>(l: &Ladder<R>) -> Ladder<f64> {
    Ladder::new(
        l.breakpoints().iter().map(|&b| to_f64(b)).collect(),
        l.weights()
            .iter()
            .map(|row| row.iter().map(|&w| to_f64(w)).collect())
            .collect(),
        l.offsets().iter().map(|&o| to_f64(o)).collect(),
    )
    .expect("valid ladder converts losslessly")
}

fn weight_row<R: Real>(owners: &[usize], n: usize, rule: TieRule) -> Vec<R> {
    let mut row = vec![R::zero(); n];
    match rule {
        TieRule::Lowest => row[owners[0]] = R::one(),
        TieRule::Highest => row[*owners.last().unwrap()] = R::one(),
        TieRule::Split => {
            let share = R::one() / R::from_usize(owners.len()).unwrap();
            for &o in owners {
                row[o] = share;
            }
        }
    }
    row
}

/// Envelope cells (ascending in `p`) with owner sets, plus tie records.
fn envelope_cells<R: Real>(
    curves: &[RiskLoadCurve<R>],
    opts: &SolverOptions,
) -> (pwl::Envelope<R>, Vec<TieCell>) {
    let tie_tol = R::of(opts.tie_tol);
    let all_pwl = curves.iter().all(|c| c.graph().is_some());
    let env = if all_pwl {
        let graphs: Vec<&[(R, R)]> = curves.iter().map(|c| c.graph().unwrap().as_slice()).collect();
        pwl::lower_envelope_exact(&graphs, R::zero(), R::one(), tie_tol)
    } else {
        let evals: Vec<Box<dyn Fn(R) -> R>> = curves
            .iter()
            .map(|c| {
                let c = c.clone();
                Box::new(move |p: R| c.eval(p)) as Box<dyn Fn(R) -> R>
            })
            .collect();
        let refs: Vec<&dyn Fn(R) -> R> = evals.iter().map(|b| b.as_ref()).collect();
        pwl::lower_envelope_grid(&refs, R::zero(), R::one(), opts.grid_size, tie_tol)
    };
    let ties = env
        .cuts
        .windows(2)
        .zip(&env.owners)
        .filter(|(_, own)| own.len() > 1)
        .map(|(w, own)| TieCell {
            p_lo: to_f64(w[0]),
            p_hi: to_f64(w[1]),
            owners: own.clone(),
        })
        .collect();
    (env, ties)
}

/// Build the ladder for a set of active curves against a loss model.
pub(crate) fn solve_with_curves<R: Real>(
    agents: &[AgentSpec<R>],
    curves: &[RiskLoadCurve<R>],
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<(Ladder<R>, Vec<TieCell>)> {
    let n = agents.len();
    if x.support_min() < R::zero() {
        return Err(CoreError::NegativeSupport(to_f64(x.support_min())));
    }
    match x {
        LossModel::Discrete(d) => {
            let tie_tol = R::of(opts.tie_tol);
            let mut cuts = vec![R::zero()];
            let mut rows: Vec<Vec<R>> = Vec::new();
            let mut ties = Vec::new();
            let m = d.len();
            for j in 0..=m {
                // gap j: [lo, hi) carries survival tail_before(j)
                let lo = if j == 0 { R::zero() } else { d.atoms()[j - 1] };
                let hi = if j == m { R::infinity() } else { d.atoms()[j] };
                if !(hi > lo) {
                    continue;
                }
                let s = if j == m { R::zero() } else { d.tail_before(j) };
                let values: Vec<R> = curves.iter().map(|c| c.eval(s)).collect();
                let mut min = values[0];
                for &v in &values[1..] {
                    if v < min {
                        min = v;
                    }
                }
                let owners: Vec<usize> = values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v - min <= tie_tol)
                    .map(|(i, _)| i)
                    .collect();
                if owners.len() > 1 && s > R::zero() {
                    ties.push(TieCell {
                        p_lo: to_f64(s),
                        p_hi: to_f64(s),
                        owners: owners.clone(),
                    });
                }
                cuts.push(hi);
                rows.push(weight_row(&owners, n, opts.tie_rule));
            }
            Ok((Ladder::new(cuts, rows, vec![R::zero(); n])?, ties))
        }
        _ => {
            let (env, ties) = envelope_cells(curves, opts);
            let mut cuts = vec![R::zero()];
            let mut rows: Vec<Vec<R>> = Vec::new();
            // walk cells from p = 1 downward: t runs upward
            for (k, own) in env.owners.iter().enumerate().rev() {
                let p_lo = env.cuts[k];
                let t_hi = if p_lo == R::zero() {
                    x.support_max()
                } else {
                    x.quantile(p_lo)?
                };
                if t_hi > *cuts.last().unwrap() {
                    cuts.push(t_hi);
                    rows.push(weight_row(own, n, opts.tie_rule));
                }
            }
            if rows.is_empty() {
                // the whole axis collapsed (point mass); fall back to one segment
                cuts.push(x.support_max().max(R::one()));
                rows.push(weight_row(&[0], n, opts.tie_rule));
            }
            Ok((Ladder::new(cuts, rows, vec![R::zero(); n])?, ties))
        }
    }
}

/// Assemble the report for a solved ladder.
#[allow(clippy::too_many_arguments)]
pub(crate) fn build_report<R: Real>(
    agents: &[AgentSpec<R>],
    curves: &[RiskLoadCurve<R>],
    ladder: &Ladder<R>,
    ties: Vec<TieCell>,
    x: &LossModel<R>,
    lambda: Vec<f64>,
    converged: bool,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let tol = R::of(opts.quad_tol);
    let mut rows = Vec::with_capacity(agents.len());
    let mut objective = R::zero();
    for (i, agent) in agents.iter().enumerate() {
        let comp = ladder.component(i)?;
        let h = distorted_value_of(agent.g(), &comp, x, tol)?;
        let e = distorted_value_of(&Distortion::identity(), &comp, x, tol)?;
        let v = (R::one() + agent.b()) * h + agent.c() * e;
        if agent.s() != R::zero() {
            objective = objective + v / agent.s().abs();
        }
        rows.push(AgentReport {
            v: to_f64(v),
            h_g: to_f64(h),
            expected: to_f64(e),
            s: to_f64(agent.s()),
            rationality: None,
        });
    }
    // minimized integral: active-curve value of each owned layer
    let mut min_integral = R::zero();
    let last = ladder.weights().len() - 1;
    for (k, row) in ladder.weights().iter().enumerate() {
        let t0 = ladder.breakpoints()[k];
        let t1 = if k == last { R::infinity() } else { ladder.breakpoints()[k + 1] };
        for (i, &w) in row.iter().enumerate() {
            if w > R::zero() {
                min_integral = min_integral + w * curves[i].layer_value(x, t0, t1, tol)?;
            }
        }
    }
    Ok(SolveReport {
        agents: rows,
        objective: to_f64(objective),
        min_integral: to_f64(min_integral),
        lambda,
        ladder: ladder_to_f64(ladder),
        tie_cells: ties,
        case_label: None,
        side_payments: None,
        converged,
    })
}

/// Solve the unconstrained Pareto problem.
///
/// Errors with [`CoreError::Unsolvable`] on mixed signs and
/// [`CoreError::DegenerateAllZero`] when every `s_i` vanishes (route the
/// two-agent case through [`delta_family_solve`]).
pub fn pareto_solve<R: Real>(
    agents: &[AgentSpec<R>],
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<(Ladder<R>, SolveReport)> {
    if agents.is_empty() {
        return Err(CoreError::InvalidConfig("at least one agent required".into()));
    }
    match existence_check(agents) {
        Solvability::Unsolvable => return Err(CoreError::Unsolvable),
        Solvability::DegenerateAllZero => return Err(CoreError::DegenerateAllZero),
        Solvability::Solvable => {}
    }
    let curves = agents
        .iter()
        .map(|a| RiskLoadCurve::new(a, R::zero(), None))
        .collect::<Result<Vec<_>>>()?;
    let (ladder, ties) = solve_with_curves(agents, &curves, x, opts)?;
    let n = agents.len();
    let report =
        build_report(agents, &curves, &ladder, ties, x, vec![0.0; n], true, opts)?;
    Ok((ladder, report))
}

/// The hyperplane of Pareto optimal value vectors
/// `{x : Σ_i (V_i* − x_i)/s_i = 0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperplane {
    /// `1/s_i`.
    pub coefficients: Vec<f64>,
    /// `Σ_i V_i*/s_i`.
    pub constant: f64,
    pub tolerance: f64,
}

impl Hyperplane {
    pub fn contains(&self, point: &[f64]) -> bool {
        let lhs: f64 = self
            .coefficients
            .iter()
            .zip(point)
            .map(|(c, x)| c * x)
            .sum();
        (lhs - self.constant).abs() <= self.tolerance
    }
}

/// Hyperplane descriptor from a solved report.
pub fn hyperplane<R: Real>(agents: &[AgentSpec<R>], report: &SolveReport) -> Result<Hyperplane> {
    if agents.len() != report.agents.len() {
        return Err(CoreError::InvalidConfig("report does not match agents".into()));
    }
    let mut coefficients = Vec::with_capacity(agents.len());
    let mut constant = 0.0;
    for (a, row) in agents.iter().zip(&report.agents) {
        let s = to_f64(a.s());
        if s == 0.0 {
            return Err(CoreError::ZeroNormalizer(false));
        }
        coefficients.push(1.0 / s);
        constant += row.v / s;
    }
    Ok(Hyperplane { coefficients, constant, tolerance: 1e-9 })
}

/// Two-agent solver for the fully degenerate configuration
/// `1 + b_i + c_i = 0`: minimize
/// `[H_{g1}(f(X)) − E f(X)] + δ [E f(X) − H_{g2}(f(X))]` over layer
/// functions `f`. Agent 0 receives `f(X)`, agent 1 the rest.
///
/// The cost coefficients only rescale the family parameter `δ`, so they do
/// not enter the pointwise rule.
pub fn delta_family_solve<R: Real>(
    g1: &Distortion<R>,
    g2: &Distortion<R>,
    delta: R,
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<Ladder<R>> {
    if !(delta >= R::zero()) {
        return Err(CoreError::Domain(format!("delta must be >= 0, got {delta}")));
    }
    if !g1.is_concave() || !g2.is_concave() {
        return Err(CoreError::NonConcave("delta family needs concave distortions".into()));
    }
    if x.support_min() < R::zero() {
        return Err(CoreError::NegativeSupport(to_f64(x.support_min())));
    }
    let tie_tol = R::of(opts.tie_tol);
    // curve 0: g1(p) − p (marginal cost of assigning to agent 0)
    // curve 1: δ (g2(p) − p)
    let excess_graph = |g: &Distortion<R>, scale: R| -> Option<Points<R>> {
        g.as_pwl().map(|pts| pts.into_iter().map(|(p, v)| (p, scale * (v - p))).collect())
    };
    let cells = match (excess_graph(g1, R::one()), excess_graph(g2, delta)) {
        (Some(a), Some(b)) => pwl::lower_envelope_exact(
            &[a.as_slice(), b.as_slice()],
            R::zero(),
            R::one(),
            tie_tol,
        ),
        _ => {
            let f0 = |p: R| g1.excess(p);
            let f1 = |p: R| delta * g2.excess(p);
            pwl::lower_envelope_grid(
                &[&f0 as &dyn Fn(R) -> R, &f1],
                R::zero(),
                R::one(),
                opts.grid_size,
                tie_tol,
            )
        }
    };
    let mut cuts = vec![R::zero()];
    let mut rows: Vec<Vec<R>> = Vec::new();
    for (k, own) in cells.owners.iter().enumerate().rev() {
        let p_lo = cells.cuts[k];
        let t_hi = if p_lo == R::zero() { x.support_max() } else { x.quantile(p_lo)? };
        if t_hi > *cuts.last().unwrap() {
            cuts.push(t_hi);
            rows.push(weight_row(own, 2, opts.tie_rule));
        }
    }
    if rows.is_empty() {
        cuts.push(x.support_max().max(R::one()));
        rows.push(weight_row(&[0], 2, opts.tie_rule));
    }
    Ladder::new(cuts, rows, vec![R::zero(); 2])
}

/// Report for a delta-family solution: the two agents' values plus the
/// weighted objective `[H_{g1}(f) − E f] + δ [E f − H_{g2}(f)]` evaluated on
/// agent 0's component `f`.
pub fn delta_family_report<R: Real>(
    g1: &Distortion<R>,
    g2: &Distortion<R>,
    agents: &[AgentSpec<R>],
    delta: R,
    ladder: &Ladder<R>,
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let tol = R::of(opts.quad_tol);
    let mut rows = Vec::with_capacity(2);
    for (i, agent) in agents.iter().enumerate() {
        let comp = ladder.component(i)?;
        let h = distorted_value_of(agent.g(), &comp, x, tol)?;
        let e = distorted_value_of(&Distortion::identity(), &comp, x, tol)?;
        let v = (R::one() + agent.b()) * h + agent.c() * e;
        rows.push(AgentReport {
            v: to_f64(v),
            h_g: to_f64(h),
            expected: to_f64(e),
            s: to_f64(agent.s()),
            rationality: None,
        });
    }
    let f = ladder.component(0)?;
    let h1 = distorted_value_of(g1, &f, x, tol)?;
    let h2 = distorted_value_of(g2, &f, x, tol)?;
    let e = distorted_value_of(&Distortion::identity(), &f, x, tol)?;
    let objective = (h1 - e) + delta * (e - h2);
    Ok(SolveReport {
        agents: rows,
        objective: to_f64(objective),
        min_integral: to_f64(objective),
        lambda: Vec::new(),
        ladder: ladder_to_f64(ladder),
        tie_cells: Vec::new(),
        case_label: Some(format!("delta_family(delta={})", to_f64(delta))),
        side_payments: None,
        converged: true,
    })
}

/// Shape of the optimal two-agent insurance contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeductibleResult<R> {
    /// Full coverage (`d = 0`).
    Full,
    /// No coverage at any level.
    Zero,
    /// Deductible contract `f(x) = (x − d)_+`.
    Deductible(R),
}

/// Closed-form deductible route for the two-agent insurance configuration
/// (`b_2 = 0`, `c_1 = c_2 = −(1+θ)`, `0 ≤ b_1 < θ`).
///
/// Requires `(g1(p) − p)/(g2(p) − p)` non-decreasing on `(0, 1)` (verified
/// on a grid); then the optimal contract is `f(x) = (x − d)_+` with
/// `d = inf { t : ratio(S_X(t)) ≤ (θ−b₁)/(θ(1+b₁)) }`, found by monotone
/// bisection on `t`. If no such `t` exists the optimal coverage is zero.
pub fn deductible_two_agent<R: Real>(
    g1: &Distortion<R>,
    g2: &Distortion<R>,
    theta: R,
    b1: R,
    x: &LossModel<R>,
) -> Result<DeductibleResult<R>> {
    if !(theta > b1) || !(b1 >= R::zero()) {
        return Err(CoreError::Domain(format!(
            "requires 0 <= b1 < theta, got b1 = {b1}, theta = {theta}"
        )));
    }
    if !g1.is_concave() || !g2.is_concave() {
        return Err(CoreError::NonConcave("deductible route needs concave distortions".into()));
    }
    if x.support_min() < R::zero() {
        return Err(CoreError::NegativeSupport(to_f64(x.support_min())));
    }
    let kappa = (theta - b1) / (theta * (R::one() + b1));

    // ratio monotonicity on an interior grid
    let grid = 512usize;
    let mut prev: Option<R> = None;
    let slack = R::of(1e-9);
    for k in 1..grid {
        let p = R::from_usize(k).unwrap() / R::from_usize(grid).unwrap();
        let e2 = g2.excess(p);
        if e2 <= R::of(1e-15) {
            continue;
        }
        let r = g1.excess(p) / e2;
        if let Some(q) = prev {
            if r < q - slack {
                return Err(CoreError::RatioNotMonotone);
            }
        }
        prev = Some(r);
    }

    // limits of the ratio at the endpoints
    let r0 = ratio_limit_at_zero(g1, g2);
    let r1 = ratio_limit_at_one(g1, g2);
    if let Some(r0) = r0 {
        if r0 > kappa {
            return Ok(DeductibleResult::Zero);
        }
    } else {
        return Ok(DeductibleResult::Zero); // ratio → ∞ in the tail
    }
    if let Some(r1) = r1 {
        if r1 < kappa {
            return Ok(DeductibleResult::Full);
        }
    }

    // covered set is {t : e1(S(t)) <= κ e2(S(t))}; bisect its left edge
    let covered = |t: R| -> bool {
        let p = x.survival(t);
        g1.excess(p) <= kappa * g2.excess(p)
    };
    // at S(0) = 1 the comparison degenerates to 0 <= 0; the r1 limit above
    // already decided whether coverage starts at zero
    if x.survival(R::zero()) < R::one() && covered(R::zero()) {
        return Ok(DeductibleResult::Full);
    }
    let sup = x.support_max();
    let mut hi = if sup.is_finite() { sup } else { R::one() };
    let mut expansions = 0;
    while !covered(hi) {
        if hi >= sup {
            return Ok(DeductibleResult::Zero);
        }
        hi = (hi * R::two()).min(sup);
        expansions += 1;
        if expansions > 400 {
            return Ok(DeductibleResult::Zero);
        }
    }
    let (lo, hi) = bisect_boundary(&covered, R::zero(), hi, R::of(1e-13), R::of(1e-13));
    Ok(DeductibleResult::Deductible(R::midpoint(lo, hi)))
}

/// `lim_{p→0+} (g1(p) − p)/(g2(p) − p)`, `None` meaning `+∞`.
fn ratio_limit_at_zero<R: Real>(g1: &Distortion<R>, g2: &Distortion<R>) -> Option<R> {
    use SlopeLimit::*;
    match (g1.slope_at_zero(), g2.slope_at_zero()) {
        (Finite(a), Finite(b)) => {
            let (ea, eb) = (a - R::one(), b - R::one());
            if eb > R::zero() {
                Some(ea / eb)
            } else if ea > R::zero() {
                None
            } else {
                // both excess slopes vanish: sample deep in the tail
                sample_ratio(g1, g2, R::of(1e-8))
            }
        }
        (Infinite, Finite(_)) => None,
        (Finite(_), Infinite) => Some(R::zero()),
        (Infinite, Infinite) => match (g1.ph_exponent(), g2.ph_exponent()) {
            (Some(c1), Some(c2)) => {
                if c1 > c2 {
                    Some(R::zero())
                } else if c1 < c2 {
                    None
                } else {
                    Some(R::one())
                }
            }
            _ => sample_ratio(g1, g2, R::of(1e-10)),
        },
    }
}

/// `lim_{p→1−} (g1(p) − p)/(g2(p) − p)`, `None` meaning `+∞`.
fn ratio_limit_at_one<R: Real>(g1: &Distortion<R>, g2: &Distortion<R>) -> Option<R> {
    use SlopeLimit::*;
    // e(p)/(1−p) → 1 − g'(1−); concave distortions have finite slope here
    match (g1.slope_at_one(), g2.slope_at_one()) {
        (Finite(a), Finite(b)) => {
            let (ea, eb) = (R::one() - a, R::one() - b);
            if eb > R::zero() {
                Some(ea / eb)
            } else if ea > R::zero() {
                None
            } else {
                sample_ratio(g1, g2, R::one() - R::of(1e-8))
            }
        }
        _ => sample_ratio(g1, g2, R::one() - R::of(1e-8)),
    }
}

fn sample_ratio<R: Real>(g1: &Distortion<R>, g2: &Distortion<R>, p: R) -> Option<R> {
    let e2 = g2.excess(p);
    if e2 <= R::zero() {
        return if g1.excess(p) > R::zero() { None } else { Some(R::one()) };
    }
    Some(g1.excess(p) / e2)
}
