//! Constrained solvers: regulator budgets `H_{h_i}(Y_i) ≤ B_i`.
//!
//! A binding constraint augments the affected agent's risk-load curve with a
//! Lagrange term: `Q_i(p) = [(1+b_i) g_i(p) + λ h_i(p) + c_i p]/|s_i + λ|`.
//! The multiplier is found by bisection on the monotone residual
//! `H_{h}(f^λ(X)) − B`, with complementary slackness holding at the result.
//! Piecewise-linear distortions can make the residual jump across the budget
//! at a critical multiplier (the curves tie on a set of positive measure);
//! the solver then completes the allocation inside the tied region, filling
//! layers from the deep tail first, which reproduces the canonical
//! deductible representative of the degenerate case.
//!
//! The buyer problem (one decision maker purchasing insurance under a
//! regulator cap) is a direct variant: coverage holds exactly where
//! `(1+b) g(S_X(t)) > (1+θ) S_X(t) + λ h(S_X(t))`, and the classifier for
//! exponential losses with AVaR distortions enumerates the closed-form case
//! table.

use serde::{Deserialize, Serialize};

use crate::allocation::Ladder;
use crate::distortion::Distortion;
use crate::distribution::LossModel;
use crate::error::{CoreError, Result};
use crate::pareto::{
    build_report, existence_check, pareto_solve, solve_with_curves, RiskLoadCurve,
    Solvability, SolveReport, SolverOptions, TieCell,
};
use crate::pwl;
use crate::riskmeasure::{distorted_value_of, layer_distorted};
use crate::scalar::Real;

/// A regulator constraint `H_h(Y_i) ≤ B` on one agent's share.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec<R> {
    h: Distortion<R>,
    budget: R,
    agent: usize,
}

impl<R: Real> ConstraintSpec<R> {
    pub fn new(h: Distortion<R>, budget: R, agent: usize) -> Result<Self> {
        if !h.is_concave() {
            return Err(CoreError::NonConcave(
                "constraint distortion must be concave".into(),
            ));
        }
        if !(budget > R::zero()) {
            return Err(CoreError::Domain(format!("budget must be > 0, got {budget}")));
        }
        Ok(Self { h, budget, agent })
    }

    pub fn h(&self) -> &Distortion<R> {
        &self.h
    }

    pub fn budget(&self) -> R {
        self.budget
    }

    pub fn agent(&self) -> usize {
        self.agent
    }
}

fn to_f64<R: Real>(v: R) -> f64 {
    num_traits::ToPrimitive::to_f64(&v).unwrap_or(f64::NAN)
}

/// Solve the multi-agent problem under regulator constraints.
///
/// One constraint is solved by outer bisection on its multiplier; several
/// constraints go through cyclic coordinate-wise multiplier sweeps and the
/// report is flagged best-effort via `converged`.
pub fn constrained_pareto_solve<R: Real>(
    agents: &[crate::riskmeasure::AgentSpec<R>],
    constraints: &[ConstraintSpec<R>],
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<(Ladder<R>, SolveReport)> {
    for c in constraints {
        if c.agent >= agents.len() {
            return Err(CoreError::AgentIndex(c.agent, agents.len()));
        }
    }
    match existence_check(agents) {
        Solvability::Unsolvable => return Err(CoreError::Unsolvable),
        Solvability::DegenerateAllZero => return Err(CoreError::DegenerateAllZero),
        Solvability::Solvable => {}
    }
    if constraints.is_empty() {
        return pareto_solve(agents, x, opts);
    }

    let mut lambdas = vec![R::zero(); constraints.len()];
    let mut converged = true;
    if constraints.len() == 1 {
        let (lam, ladder, ties, ok) =
            solve_single_multiplier(agents, constraints, 0, &lambdas, x, opts)?;
        lambdas[0] = lam;
        let curves = curves_for(agents, constraints, &lambdas)?;
        let mut report = build_report(
            agents,
            &curves,
            &ladder,
            ties,
            x,
            lambda_by_agent(agents.len(), constraints, &lambdas),
            ok,
            opts,
        )?;
        report.converged = ok;
        return Ok((ladder, report));
    }

    // cyclic best-effort sweeps for several constraints
    let mut result: Option<(Ladder<R>, Vec<TieCell>)> = None;
    for _sweep in 0..100 {
        let mut max_step = R::zero();
        for k in 0..constraints.len() {
            let (lam, ladder, ties, ok) =
                solve_single_multiplier(agents, constraints, k, &lambdas, x, opts)?;
            max_step = max_step.max((lam - lambdas[k]).abs());
            lambdas[k] = lam;
            converged = ok;
            result = Some((ladder, ties));
        }
        if max_step <= R::of(opts.tol_lambda) {
            break;
        }
        converged = false;
    }
    let (ladder, ties) = result.expect("at least one sweep ran");
    // final feasibility audit
    for (k, c) in constraints.iter().enumerate() {
        let rho = constraint_residual(&ladder, c, x, opts)?;
        if rho > c.budget + R::of(opts.tol_residual)
            || (lambdas[k] * (rho - c.budget)).abs() > R::of(opts.tol_residual)
        {
            converged = false;
        }
    }
    let curves = curves_for(agents, constraints, &lambdas)?;
    let mut report = build_report(
        agents,
        &curves,
        &ladder,
        ties,
        x,
        lambda_by_agent(agents.len(), constraints, &lambdas),
        converged,
        opts,
    )?;
    report.converged = converged;
    Ok((ladder, report))
}

fn lambda_by_agent<R: Real>(
    n: usize,
    constraints: &[ConstraintSpec<R>],
    lambdas: &[R],
) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (c, &l) in constraints.iter().zip(lambdas) {
        out[c.agent] += to_f64(l);
    }
    out
}

fn curves_for<R: Real>(
    agents: &[crate::riskmeasure::AgentSpec<R>],
    constraints: &[ConstraintSpec<R>],
    lambdas: &[R],
) -> Result<Vec<RiskLoadCurve<R>>> {
    agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            match constraints.iter().position(|c| c.agent == i) {
                Some(k) if lambdas[k] > R::zero() => {
                    RiskLoadCurve::new(a, lambdas[k], Some(&constraints[k].h))
                }
                _ => RiskLoadCurve::new(a, R::zero(), None),
            }
        })
        .collect()
}

fn constraint_residual<R: Real>(
    ladder: &Ladder<R>,
    cons: &ConstraintSpec<R>,
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<R> {
    let comp = ladder.component(cons.agent)?;
    distorted_value_of(&cons.h, &comp, x, R::of(opts.quad_tol))
}

/// Bisection on the `k`-th multiplier with the others frozen. Returns the
/// multiplier, the solved ladder, its tie cells and a convergence flag.
#[allow(clippy::type_complexity)]
fn solve_single_multiplier<R: Real>(
    agents: &[crate::riskmeasure::AgentSpec<R>],
    constraints: &[ConstraintSpec<R>],
    k: usize,
    lambdas: &[R],
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<(R, Ladder<R>, Vec<TieCell>, bool)> {
    let cons = &constraints[k];
    let budget = cons.budget;
    let tol_res = R::of(opts.tol_residual);
    let s_i = agents[cons.agent].s();

    let eval = |lam: R| -> Result<(Ladder<R>, Vec<TieCell>, R)> {
        let mut lams = lambdas.to_vec();
        lams[k] = lam;
        let curves = curves_for(agents, constraints, &lams)?;
        let (ladder, ties) = solve_with_curves(agents, &curves, x, opts)?;
        let rho = constraint_residual(&ladder, cons, x, opts)?;
        Ok((ladder, ties, rho))
    };

    let (ladder0, ties0, rho0) = eval(R::zero())?;
    if rho0 <= budget + tol_res {
        return Ok((R::zero(), ladder0, ties0, true));
    }

    // the multiplier may not push the normalizer through zero
    let cap = if s_i < R::zero() {
        (-s_i) * (R::one() - R::of(1e-12))
    } else {
        R::infinity()
    };
    let mut hi = if cap.is_finite() { cap * R::of(0.5) } else { R::one() };
    let mut feasible_hi = None;
    for _ in 0..200 {
        let (_, _, rho) = eval(hi)?;
        if rho <= budget {
            feasible_hi = Some(hi);
            break;
        }
        if cap.is_finite() {
            if hi >= cap {
                break;
            }
            hi = (hi * R::two()).min(cap);
        } else {
            hi = hi * R::two();
            if hi > R::of(1e12) {
                break;
            }
        }
    }
    let hi = match feasible_hi {
        Some(h) => h,
        None => {
            return Err(CoreError::Infeasible(format!(
                "no multiplier in [0, {}) brings H_h down to the budget {}",
                to_f64(cap),
                to_f64(budget)
            )));
        }
    };

    let mut lo = R::zero();
    let mut hi = hi;
    let tol_lam = R::of(opts.tol_lambda);
    for _ in 0..300 {
        if hi - lo <= tol_lam {
            break;
        }
        let mid = R::midpoint(lo, hi);
        let (_, _, rho) = eval(mid)?;
        if rho <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lam = hi;
    let (ladder, ties, rho) = eval(lam)?;
    if (lam * (rho - budget)).abs() <= tol_res {
        return Ok((lam, ladder, ties, true));
    }

    // residual jumped across the budget: complete inside the tied region
    let (donor, _, _) = eval(lo)?;
    if let Some(completed) =
        fill_to_budget(&ladder, &donor, cons.agent, &cons.h, x, budget - rho, opts)?
    {
        return Ok((lam, completed, ties, true));
    }
    Ok((lam, ladder, ties, false))
}

/// Reassign layers from `donor` to `base` for `agent`, deepest tail first,
/// until the constraint measure gains exactly `need`. Returns `None` when
/// the donor does not hold enough mass.
fn fill_to_budget<R: Real>(
    base: &Ladder<R>,
    donor: &Ladder<R>,
    agent: usize,
    h: &Distortion<R>,
    x: &LossModel<R>,
    need: R,
    opts: &SolverOptions,
) -> Result<Option<Ladder<R>>> {
    let tol = R::of(opts.quad_tol);
    if need <= R::zero() {
        return Ok(None);
    }
    // elementary cells over both ladders' breakpoints
    let mut cuts: Vec<R> = base
        .breakpoints()
        .iter()
        .chain(donor.breakpoints().iter())
        .copied()
        .filter(|t| t.is_finite())
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    cuts.dedup_by(|a, b| *a == *b);
    cuts.push(R::infinity());

    let row_at = |l: &Ladder<R>, t: R| -> Vec<R> {
        let bp = l.breakpoints();
        let mut k = 0;
        while k + 1 < l.weights().len() && !(t < bp[k + 1]) {
            k += 1;
        }
        l.weights()[k].clone()
    };

    // candidate cells where the donor gives the agent strictly more
    struct Cell<R> {
        t0: R,
        t1: R,
        donor_row: Vec<R>,
        delta: R,
    }
    let mut cells: Vec<Cell<R>> = Vec::new();
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let probe = if t1.is_finite() { R::midpoint(t0, t1) } else { t0 + R::one() };
        let b_row = row_at(base, probe);
        let d_row = row_at(donor, probe);
        let delta = d_row[agent] - b_row[agent];
        if delta > R::of(1e-12) {
            cells.push(Cell { t0, t1, donor_row: d_row, delta });
        }
    }

    // fill from the deepest tail
    let mut remaining = need;
    let mut taken: Vec<(R, R, Vec<R>)> = Vec::new(); // (t_from, t_to, new row)
    for cell in cells.iter().rev() {
        if remaining <= R::zero() {
            break;
        }
        let gain = cell.delta * layer_distorted(h, x, cell.t0, cell.t1, tol)?;
        if gain <= remaining + R::of(opts.tol_residual) * R::of(0.5) && gain > R::zero() {
            taken.push((cell.t0, cell.t1, cell.donor_row.clone()));
            remaining = remaining - gain;
        } else if gain > R::zero() {
            // partial: suffix [t', t1) of this cell
            let target = remaining / cell.delta;
            let pred = |t: R| -> bool {
                layer_distorted(h, x, t, cell.t1, tol).map(|v| v <= target).unwrap_or(false)
            };
            let upper = if cell.t1.is_finite() {
                cell.t1
            } else {
                // beyond this point the layer integral is below target
                let mut u = cell.t0.max(R::one());
                for _ in 0..200 {
                    if pred(u) {
                        break;
                    }
                    u = u * R::two();
                }
                u
            };
            let (lo, hi) =
                crate::numeric::bisect_boundary(&pred, cell.t0, upper, R::of(1e-13), R::of(1e-13));
            let t_cut = R::midpoint(lo, hi);
            taken.push((t_cut, cell.t1, cell.donor_row.clone()));
            remaining = R::zero();
        }
    }
    if remaining > R::of(opts.tol_residual) {
        return Ok(None);
    }

    // rebuild: base rows with taken intervals overridden
    let mut all_cuts: Vec<R> = cuts.clone();
    for (a, b, _) in &taken {
        all_cuts.push(*a);
        all_cuts.push(*b);
    }
    all_cuts.retain(|t| t.is_finite());
    all_cuts.push(R::infinity());
    all_cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    all_cuts.dedup_by(|a, b| *a == *b);

    let mut new_cuts = vec![R::zero()];
    let mut rows: Vec<Vec<R>> = Vec::new();
    for w in all_cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if !(t1 > t0) {
            continue;
        }
        let probe = if t1.is_finite() { R::midpoint(t0, t1) } else { t0 + R::one() };
        let row = taken
            .iter()
            .find(|(a, b, _)| probe >= *a && probe < *b)
            .map(|(_, _, r)| r.clone())
            .unwrap_or_else(|| row_at(base, probe));
        new_cuts.push(t1);
        rows.push(row);
    }
    Ok(Some(Ladder::new(new_cuts, rows, vec![R::zero(); base.n_agents()])?))
}

/// Outcome of the single-buyer constrained problem.
#[derive(Debug, Clone)]
pub struct BuyerSolution<R> {
    /// Two-component ladder: component 0 is the buyer-retained share
    /// `X − f(X)`, component 1 the insured payout `f(X)`.
    pub ladder: Ladder<R>,
    pub lambda: R,
    /// `H_h(f(X))` at the solution.
    pub residual: R,
    pub converged: bool,
}

/// Minimize `(1+b) H_g(X − f(X)) + (1+θ) E f(X)` subject to `H_h(f(X)) ≤ B`.
///
/// Coverage at level `t` holds exactly where
/// `(1+b) g(S_X(t)) > (1+θ) S_X(t) + λ h(S_X(t))`; `λ` is found by
/// bisection with complementary slackness, and a residual jump (possible for
/// piecewise-linear distortions, where the inequality degenerates to
/// equality on a region) is resolved by tail-first filling of the tied set.
pub fn buyer_solve<R: Real>(
    g: &Distortion<R>,
    h: &Distortion<R>,
    b: R,
    theta: R,
    budget: R,
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<BuyerSolution<R>> {
    if !g.is_concave() || !h.is_concave() {
        return Err(CoreError::NonConcave("buyer problem needs concave distortions".into()));
    }
    if !(budget > R::zero()) {
        return Err(CoreError::Domain(format!("budget must be > 0, got {budget}")));
    }
    if !(b >= R::zero()) || !(theta > R::zero()) {
        return Err(CoreError::Domain(
            "buyer problem needs b >= 0 and theta > 0".into(),
        ));
    }
    if x.support_min() < R::zero() {
        return Err(CoreError::NegativeSupport(to_f64(x.support_min())));
    }
    let tol_res = R::of(opts.tol_residual);

    let eval = |lam: R| -> Result<(Vec<(R, R)>, R)> {
        let cover = buyer_coverage(g, h, b, theta, lam, opts);
        let rho = coverage_measure(&cover, h, x, opts)?;
        Ok((cover, rho))
    };

    let (cover0, rho0) = eval(R::zero())?;
    if rho0 <= budget + tol_res {
        let ladder = buyer_ladder(&cover0, x)?;
        return Ok(BuyerSolution { ladder, lambda: R::zero(), residual: rho0, converged: true });
    }

    let mut hi = R::one();
    for _ in 0..200 {
        let (_, rho) = eval(hi)?;
        if rho <= budget {
            break;
        }
        hi = hi * R::two();
        if hi > R::of(1e12) {
            return Err(CoreError::Infeasible(
                "no multiplier brings the buyer constraint down to the budget".into(),
            ));
        }
    }
    let mut lo = R::zero();
    let tol_lam = R::of(opts.tol_lambda);
    for _ in 0..300 {
        if hi - lo <= tol_lam {
            break;
        }
        let mid = R::midpoint(lo, hi);
        let (_, rho) = eval(mid)?;
        if rho <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lam = hi;
    let (cover, rho) = eval(lam)?;
    if (lam * (rho - budget)).abs() <= tol_res {
        let ladder = buyer_ladder(&cover, x)?;
        return Ok(BuyerSolution { ladder, lambda: lam, residual: rho, converged: true });
    }

    // jump across the budget: fill the difference region tail-first
    let (cover_lo, _) = eval(lo)?;
    let filled = fill_coverage(&cover, &cover_lo, h, x, budget - rho, opts)?;
    match filled {
        Some(cover) => {
            let rho = coverage_measure(&cover, h, x, opts)?;
            let ladder = buyer_ladder(&cover, x)?;
            Ok(BuyerSolution {
                ladder,
                lambda: lam,
                residual: rho,
                converged: (rho - budget).abs() <= tol_res,
            })
        }
        None => {
            let ladder = buyer_ladder(&cover, x)?;
            Ok(BuyerSolution { ladder, lambda: lam, residual: rho, converged: false })
        }
    }
}

/// Probability intervals where `(1+b) g(p) − (1+θ) p − λ h(p) > 0`.
fn buyer_coverage<R: Real>(
    g: &Distortion<R>,
    h: &Distortion<R>,
    b: R,
    theta: R,
    lam: R,
    opts: &SolverOptions,
) -> Vec<(R, R)> {
    let tie_tol = R::of(opts.tie_tol);
    let env = match (g.as_pwl(), h.as_pwl()) {
        (Some(gp), Some(hp)) => {
            let axis = pwl::merged_axis(&[gp.as_slice(), hp.as_slice()]);
            let neg_d: Vec<(R, R)> = axis
                .into_iter()
                .map(|p| {
                    let v = (R::one() + b) * pwl::eval(&gp, p)
                        - (R::one() + theta) * p
                        - lam * pwl::eval(&hp, p);
                    (p, -v)
                })
                .collect();
            let zero: Vec<(R, R)> = vec![(R::zero(), R::zero()), (R::one(), R::zero())];
            pwl::lower_envelope_exact(&[&neg_d, &zero], R::zero(), R::one(), tie_tol)
        }
        _ => {
            let f0 = |p: R| {
                -((R::one() + b) * g.eval_unchecked(p)
                    - (R::one() + theta) * p
                    - lam * h.eval_unchecked(p))
            };
            let f1 = |_: R| R::zero();
            pwl::lower_envelope_grid(
                &[&f0 as &dyn Fn(R) -> R, &f1],
                R::zero(),
                R::one(),
                opts.grid_size,
                tie_tol,
            )
        }
    };
    // covered where curve 0 (−D) is strictly the minimum
    let mut out: Vec<(R, R)> = Vec::new();
    for (k, own) in env.owners.iter().enumerate() {
        if own == &[0usize] {
            let (a, b) = (env.cuts[k], env.cuts[k + 1]);
            if let Some(last) = out.last_mut() {
                if last.1 == a {
                    last.1 = b;
                    continue;
                }
            }
            out.push((a, b));
        }
    }
    out
}

/// `H_h` of the union of covered probability intervals.
fn coverage_measure<R: Real>(
    cover: &[(R, R)],
    h: &Distortion<R>,
    x: &LossModel<R>,
    opts: &SolverOptions,
) -> Result<R> {
    let tol = R::of(opts.quad_tol);
    let mut acc = R::zero();
    for &(p_lo, p_hi) in cover {
        let t_hi = if p_lo == R::zero() { x.support_max() } else { x.quantile(p_lo)? };
        let t_lo = x.quantile(p_hi)?;
        if t_hi > t_lo {
            acc = acc + layer_distorted(h, x, t_lo, t_hi, tol)?;
        }
    }
    Ok(acc)
}

/// Extend `base` coverage with parts of `donor` coverage (tail first in `t`,
/// i.e. smallest probabilities first) until the measure grows by `need`.
fn fill_coverage<R: Real>(
    base: &[(R, R)],
    donor: &[(R, R)],
    h: &Distortion<R>,
    x: &LossModel<R>,
    need: R,
    opts: &SolverOptions,
) -> Result<Option<Vec<(R, R)>>> {
    if need <= R::zero() {
        return Ok(None);
    }
    let tol = R::of(opts.quad_tol);
    // difference intervals donor \ base, in ascending p
    let mut diff: Vec<(R, R)> = Vec::new();
    for &(d0, d1) in donor {
        let mut lo = d0;
        for &(b0, b1) in base {
            if b1 <= lo || b0 >= d1 {
                continue;
            }
            if b0 > lo {
                diff.push((lo, b0.min(d1)));
            }
            lo = lo.max(b1);
        }
        if lo < d1 {
            diff.push((lo, d1));
        }
    }
    diff.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite intervals"));

    let mut remaining = need;
    let mut extra: Vec<(R, R)> = Vec::new();
    for &(p0, p1) in diff.iter() {
        if remaining <= R::zero() {
            break;
        }
        let t_hi = if p0 == R::zero() { x.support_max() } else { x.quantile(p0)? };
        let t_lo = x.quantile(p1)?;
        if !(t_hi > t_lo) {
            continue;
        }
        let gain = layer_distorted(h, x, t_lo, t_hi, tol)?;
        if gain <= remaining + R::of(opts.tol_residual) * R::of(0.5) {
            extra.push((p0, p1));
            remaining = remaining - gain;
        } else {
            // partial from the tail side: keep [p0, p'] (largest t)
            let pred = |p: R| -> bool {
                let tb = if p0 == R::zero() {
                    x.support_max()
                } else {
                    x.quantile(p0).unwrap_or(R::infinity())
                };
                match x.quantile(p) {
                    Ok(ta) => layer_distorted(h, x, ta, tb, tol)
                        .map(|v| v >= remaining)
                        .unwrap_or(false),
                    Err(_) => false,
                }
            };
            // measure from (p0, p) grows with p
            let (lo_p, hi_p) =
                crate::numeric::bisect_boundary(&pred, p0, p1, R::of(1e-15), R::of(1e-13));
            extra.push((p0, R::midpoint(lo_p, hi_p)));
            remaining = R::zero();
        }
    }
    if remaining > R::of(opts.tol_residual) {
        return Ok(None);
    }
    let mut all: Vec<(R, R)> = base.iter().chain(extra.iter()).copied().collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite intervals"));
    // merge touching intervals
    let mut merged: Vec<(R, R)> = Vec::new();
    for (a, b) in all {
        if let Some(last) = merged.last_mut() {
            if a <= last.1 + R::of(1e-15) {
                last.1 = last.1.max(b);
                continue;
            }
        }
        merged.push((a, b));
    }
    Ok(Some(merged))
}

/// Two-component ladder from covered probability intervals: component 0 is
/// the retained share, component 1 the insured payout.
fn buyer_ladder<R: Real>(cover: &[(R, R)], x: &LossModel<R>) -> Result<Ladder<R>> {
    // convert covered p-intervals to t-intervals
    let mut t_intervals: Vec<(R, R)> = Vec::new();
    for &(p_lo, p_hi) in cover {
        let t_hi = if p_lo == R::zero() { x.support_max() } else { x.quantile(p_lo)? };
        let t_lo = x.quantile(p_hi)?;
        if t_hi > t_lo {
            t_intervals.push((t_lo, t_hi));
        }
    }
    t_intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite intervals"));
    let mut cuts = vec![R::zero()];
    let mut rows: Vec<Vec<R>> = Vec::new();
    for (t0, t1) in t_intervals {
        if t0 > *cuts.last().unwrap() {
            cuts.push(t0);
            rows.push(vec![R::one(), R::zero()]);
        }
        if t1 > *cuts.last().unwrap() {
            cuts.push(t1);
            rows.push(vec![R::zero(), R::one()]);
        }
    }
    let top = x.support_max();
    if *cuts.last().unwrap() < top || rows.is_empty() {
        let next = if top.is_finite() {
            top.max(*cuts.last().unwrap() + R::one())
        } else {
            R::infinity()
        };
        cuts.push(next);
        rows.push(vec![R::one(), R::zero()]);
    }
    Ladder::new(cuts, rows, vec![R::zero(); 2])
}

// --- ConstraintSpec serialization (f64 only) ---

#[derive(Serialize, Deserialize)]
struct RawConstraint {
    h: Distortion<f64>,
    budget: f64,
    agent: usize,
}

impl Serialize for ConstraintSpec<f64> {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        RawConstraint { h: self.h.clone(), budget: self.budget, agent: self.agent }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConstraintSpec<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawConstraint::deserialize(deserializer)?;
        ConstraintSpec::new(raw.h, raw.budget, raw.agent).map_err(D::Error::custom)
    }
}

/// Table rows of the exponential/AVaR buyer classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    C1,
    C2a,
    C2b1,
    C2b2,
    C3a,
    C3b,
    C4a,
    C4b,
    C5,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseLabel::C1 => "C1",
            CaseLabel::C2a => "C2a",
            CaseLabel::C2b1 => "C2b1",
            CaseLabel::C2b2 => "C2b2",
            CaseLabel::C3a => "C3a",
            CaseLabel::C3b => "C3b",
            CaseLabel::C4a => "C4a",
            CaseLabel::C4b => "C4b",
            CaseLabel::C5 => "C5",
        };
        f.write_str(s)
    }
}

/// Canonical representatives of the degenerate (non-unique) case.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DegenerateRepresentatives {
    /// Pure deductible `(x − d)_+`.
    pub deductible: f64,
    /// Proportional coverage `r (x − ln α/μ)_+`.
    pub proportional_rate: f64,
    /// Capped deductible `min(r'(x − d')_+, m − d')` with `d' = ln α/μ`,
    /// `r' = 1`: the cap parameter `m`.
    pub capped_limit: f64,
}

/// Serialize a possibly-infinite deductible as the JSON string `"inf"`,
/// keeping the document valid and round-trippable.
mod inf_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum V {
            Num(f64),
            Word(String),
        }
        match V::deserialize(d)? {
            V::Num(v) => Ok(v),
            V::Word(w) if w == "inf" => Ok(f64::INFINITY),
            V::Word(w) => Err(serde::de::Error::custom(format!("bad number: {w}"))),
        }
    }
}

/// Closed-form classification of the exponential/AVaR buyer problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub case: CaseLabel,
    /// Deductible level (`+∞` means zero coverage; for degenerate cases the
    /// pure-deductible representative).
    #[serde(with = "inf_f64")]
    pub d: f64,
    pub lambda: f64,
    pub non_unique: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub representatives: Option<DegenerateRepresentatives>,
}

/// Classify `min (1+b) H_g(X − f) + (1+θ) E f` s.t. `H_h(f) ≤ B` for
/// `g = AVaR(α)`, `h = AVaR(β)`, `α > β > 1`, `X ~ Exp(μ)`.
pub fn classify_exponential_avar(
    theta: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
    budget: f64,
) -> Result<Classification> {
    if !(alpha > beta && beta > 1.0) {
        return Err(CoreError::Domain(format!(
            "classification requires alpha > beta > 1, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(mu > 0.0) || !(budget > 0.0) || !(b >= 0.0) || !(theta > 0.0) {
        return Err(CoreError::Domain(
            "classification requires mu > 0, B > 0, b >= 0, theta > 0".into(),
        ));
    }
    let ba = (1.0 + b) * alpha - 1.0;
    let bb = (1.0 + b) * beta - 1.0;
    let mb = mu * budget;

    if theta > ba {
        return Ok(Classification {
            case: CaseLabel::C5,
            d: f64::INFINITY,
            lambda: 0.0,
            non_unique: false,
            representatives: None,
        });
    }
    if theta == ba {
        let d = (beta / mb).ln().max(alpha.ln()) / mu;
        return Ok(Classification {
            case: CaseLabel::C4a,
            d,
            lambda: 0.0,
            non_unique: true,
            representatives: degenerate_representatives(alpha, beta, mu, budget),
        });
    }
    if mb <= beta / alpha {
        let lambda = ((1.0 + b) * alpha - (1.0 + theta)) / beta;
        let d = (beta / mb).ln() / mu;
        return Ok(Classification {
            case: CaseLabel::C4b,
            d,
            lambda,
            non_unique: true,
            representatives: degenerate_representatives(alpha, beta, mu, budget),
        });
    }
    let c3b = || Classification {
        case: CaseLabel::C3b,
        d: (beta / mb).ln() / mu,
        lambda: (1.0 + b) / mb - (1.0 + theta) / beta,
        non_unique: false,
        representatives: None,
    };
    let c2b = |case: CaseLabel| Classification {
        case,
        d: -budget + (1.0 + beta.ln()) / mu,
        lambda: (1.0 + b) - ((1.0 + theta) / beta) * (mb - 1.0).exp(),
        non_unique: false,
        representatives: None,
    };
    if theta >= bb {
        if mb < (1.0 + b) * beta / (1.0 + theta) {
            return Ok(c3b());
        }
        return Ok(Classification {
            case: CaseLabel::C3a,
            d: ((1.0 + theta) / (1.0 + b)).ln() / mu,
            lambda: 0.0,
            non_unique: false,
            representatives: None,
        });
    }
    if theta > b {
        if mb < 1.0 {
            return Ok(c3b());
        }
        if mb < 1.0 + (beta * (1.0 + b) / (1.0 + theta)).ln() {
            return Ok(c2b(CaseLabel::C2b2));
        }
        return Ok(Classification {
            case: CaseLabel::C2a,
            d: ((1.0 + theta) / (1.0 + b)).ln() / mu,
            lambda: 0.0,
            non_unique: false,
            representatives: None,
        });
    }
    // theta <= b
    if mb < 1.0 {
        return Ok(c3b());
    }
    if mb < 1.0 + beta.ln() {
        return Ok(c2b(CaseLabel::C2b1));
    }
    Ok(Classification {
        case: CaseLabel::C1,
        d: 0.0,
        lambda: 0.0,
        non_unique: false,
        representatives: None,
    })
}

fn degenerate_representatives(
    alpha: f64,
    beta: f64,
    mu: f64,
    budget: f64,
) -> Option<DegenerateRepresentatives> {
    let mb = mu * budget;
    if mb > beta / alpha {
        return None;
    }
    let capped_limit = (alpha * beta / (beta - mb * alpha)).ln() / mu;
    Some(DegenerateRepresentatives {
        deductible: (beta / mb).ln() / mu,
        proportional_rate: mb * alpha / beta,
        capped_limit,
    })
}

/// Coverage regime of the two-agent AVaR problem with a regulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingRegime {
    Zero,
    DeductibleA,
    DeductibleB,
    Capped,
}

/// Crossing probabilities of the two normalized AVaR risk curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvarCrossings {
    pub regime: CrossingRegime,
    /// Lower crossing (deeper tail edge) when present.
    pub p_star_1: Option<f64>,
    /// Upper crossing when present.
    pub p_star_2: Option<f64>,
    /// Survival-probability mass of the covered band, `Σ (p_hi − p_lo)`.
    /// For a binding capped contract this equals the budget figure implied
    /// by the worked constrained example.
    pub covered_mass: f64,
}

/// Crossing analysis for `g₁ = AVaR(α₁)` (insurer, cost `b₁`, constrained by
/// `h = AVaR(β)` at multiplier `λ`) against `g₂ = AVaR(α₂)` (buyer), both
/// with premium loading `θ` and `θ > λ + b₁` (large transaction costs).
pub fn avar_two_agent_crossings(
    alpha1: f64,
    alpha2: f64,
    beta: f64,
    theta: f64,
    b1: f64,
    lambda: f64,
) -> Result<AvarCrossings> {
    if !(alpha1 > 1.0 && alpha2 > alpha1 && beta > 1.0) {
        return Err(CoreError::Domain(format!(
            "requires alpha2 > alpha1 > 1 and beta > 1, got {alpha1}, {alpha2}, {beta}"
        )));
    }
    if !(theta > lambda + b1) || !(b1 >= 0.0) || lambda < 0.0 {
        return Err(CoreError::Domain(format!(
            "requires theta > lambda + b1 >= 0, got theta = {theta}, lambda = {lambda}, b1 = {b1}"
        )));
    }
    let opts = SolverOptions::default();
    let insurer = crate::riskmeasure::AgentSpec::<f64>::insurer(
        Distortion::avar(alpha1)?,
        b1,
        theta,
    )?;
    let buyer = crate::riskmeasure::AgentSpec::<f64>::insurer(
        Distortion::avar(alpha2)?,
        0.0,
        theta,
    )?;
    let h = Distortion::avar(beta)?;
    let q1 = RiskLoadCurve::new(&insurer, lambda, if lambda > 0.0 { Some(&h) } else { None })?;
    let q2 = RiskLoadCurve::new(&buyer, 0.0, None)?;
    let graphs = [q1.graph().unwrap().as_slice(), q2.graph().unwrap().as_slice()];
    let env = pwl::lower_envelope_exact(&graphs, 0.0, 1.0, opts.tie_tol);

    // insurer-covered intervals (strict ownership)
    let mut cover: Vec<(f64, f64)> = Vec::new();
    for (k, own) in env.owners.iter().enumerate() {
        if own == &[0usize] {
            let (a, b) = (env.cuts[k], env.cuts[k + 1]);
            if let Some(last) = cover.last_mut() {
                if last.1 == a {
                    last.1 = b;
                    continue;
                }
            }
            cover.push((a, b));
        }
    }
    let covered_mass: f64 = cover.iter().map(|(a, b)| b - a).sum();

    let eps = 1e-9;
    match cover.as_slice() {
        [] => Ok(AvarCrossings {
            regime: CrossingRegime::Zero,
            p_star_1: None,
            p_star_2: None,
            covered_mass: 0.0,
        }),
        [(lo, hi)] if *lo <= eps => {
            // deductible: covered from the deep tail up to p*
            let p = *hi;
            let regime = if p > 1.0 / beta {
                CrossingRegime::DeductibleA
            } else {
                CrossingRegime::DeductibleB
            };
            let (p1, p2) = match regime {
                CrossingRegime::DeductibleA => (None, Some(p)),
                _ => (Some(p), None),
            };
            Ok(AvarCrossings { regime, p_star_1: p1, p_star_2: p2, covered_mass })
        }
        [(lo, hi)] => Ok(AvarCrossings {
            regime: CrossingRegime::Capped,
            p_star_1: Some(*lo),
            p_star_2: Some(*hi),
            covered_mass,
        }),
        _ => {
            // multiple bands: report the extreme edges, still "capped"
            let lo = cover.first().unwrap().0;
            let hi = cover.last().unwrap().1;
            Ok(AvarCrossings {
                regime: CrossingRegime::Capped,
                p_star_1: Some(lo),
                p_star_2: Some(hi),
                covered_mass,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riskmeasure::AgentSpec;

    fn exp1() -> LossModel<f64> {
        LossModel::exponential(1.0).unwrap()
    }

    fn example4_agents() -> Vec<AgentSpec<f64>> {
        vec![
            AgentSpec::insurer(Distortion::avar(1.1).unwrap(), 0.3, 1.2).unwrap(),
            AgentSpec::insurer(Distortion::avar(1.5).unwrap(), 0.0, 1.2).unwrap(),
        ]
    }

    #[test]
    fn example4_crossings_match_the_worked_numbers() {
        let c = avar_two_agent_crossings(1.1, 1.5, 2.0, 1.2, 0.3, 0.18).unwrap();
        assert_eq!(c.regime, CrossingRegime::Capped);
        let p1 = c.p_star_1.unwrap();
        let p2 = c.p_star_2.unwrap();
        assert!((p1 - 0.5143).abs() < 5e-4, "p1 = {p1}");
        assert!((p2 - 0.7636).abs() < 5e-4, "p2 = {p2}");
        assert!((c.covered_mass - 0.249).abs() < 5e-4, "mass = {}", c.covered_mass);
        // closed forms from the same configuration
        let (theta, b1, lam, a1, a2) = (1.2, 0.3, 0.18, 1.1, 1.5);
        let p2_closed = (lam * (1.0 + theta) - theta + b1)
            / ((1.0 + theta) * (b1 + lam) - (1.0 + b1) * a1 * theta);
        assert!((p2 - p2_closed).abs() < 1e-10);
        let p1_closed = lam * theta
            / ((1.0 + theta) * (b1 + lam) - (1.0 + b1) * a1 * theta
                + a2 * (theta - b1 - lam));
        assert!((p1 - p1_closed).abs() < 1e-10);
    }

    #[test]
    fn crossing_curves_end_at_minus_one() {
        let insurer = AgentSpec::<f64>::insurer(Distortion::avar(1.1).unwrap(), 0.3, 1.2).unwrap();
        let h = Distortion::avar(2.0).unwrap();
        let q1 = RiskLoadCurve::new(&insurer, 0.18, Some(&h)).unwrap();
        assert!((q1.eval(1.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_regime_below_threshold() {
        // λ = 0, α₂ below (1+θ) + [(1+b₁)α₁ − (1+θ)]θ/(θ−b₁)
        let (theta, b1, a1) = (1.2f64, 0.3, 1.8);
        let threshold =
            (1.0 + theta) + ((1.0 + b1) * a1 - (1.0 + theta)) * theta / (theta - b1);
        let a2 = (a1 + 0.05).max(threshold - 0.5); // below threshold, above a1
        assert!(a2 < threshold && a2 > a1);
        let c = avar_two_agent_crossings(a1, a2, 2.0, theta, b1, 0.0).unwrap();
        assert_eq!(c.regime, CrossingRegime::Zero);
    }

    #[test]
    fn nonbinding_constraint_reduces_to_unconstrained() {
        let agents = example4_agents();
        let x = exp1();
        let opts = SolverOptions::default();
        let cons =
            vec![ConstraintSpec::new(Distortion::avar(2.0).unwrap(), 10.0, 0).unwrap()];
        let (l_con, rep_con) = constrained_pareto_solve(&agents, &cons, &x, &opts).unwrap();
        let (l_unc, rep_unc) = pareto_solve(&agents, &x, &opts).unwrap();
        assert_eq!(l_con, l_unc);
        assert_eq!(rep_con.lambda, vec![0.0, 0.0]);
        assert!((rep_con.objective - rep_unc.objective).abs() < 1e-12);
    }

    #[test]
    fn binding_constraint_recovers_the_worked_multiplier() {
        // with the budget stated as the true H_h of the λ = 0.18 contract
        let agents = example4_agents();
        let x = exp1();
        let opts = SolverOptions::default();
        // H = ln(p2/p1) for the capped band entirely above 1/β
        let c = avar_two_agent_crossings(1.1, 1.5, 2.0, 1.2, 0.3, 0.18).unwrap();
        let budget = (c.p_star_2.unwrap() / c.p_star_1.unwrap()).ln();
        let cons =
            vec![ConstraintSpec::new(Distortion::avar(2.0).unwrap(), budget, 0).unwrap()];
        let (ladder, report) = constrained_pareto_solve(&agents, &cons, &x, &opts).unwrap();
        assert!(report.converged);
        assert!((report.lambda[0] - 0.18).abs() < 1e-6, "lambda = {}", report.lambda[0]);
        // breakpoints map to the crossings through S_X
        let bp = ladder.breakpoints();
        assert_eq!(ladder.weights().len(), 3);
        let s_lo = (-bp[2]).exp();
        let s_hi = (-bp[1]).exp();
        assert!((s_lo - c.p_star_1.unwrap()).abs() < 1e-8);
        assert!((s_hi - c.p_star_2.unwrap()).abs() < 1e-8);
    }

    #[test]
    fn residual_is_monotone_on_a_grid() {
        let agents = example4_agents();
        let x = exp1();
        let opts = SolverOptions::default();
        let h = Distortion::avar(2.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let lam = 0.015 * k as f64;
            let curves = vec![
                RiskLoadCurve::new(&agents[0], lam, Some(&h)).unwrap(),
                RiskLoadCurve::new(&agents[1], 0.0, None).unwrap(),
            ];
            let (ladder, _) = solve_with_curves(&agents, &curves, &x, &opts).unwrap();
            let rho = num_traits::ToPrimitive::to_f64(
                &distorted_value_of(&h, &ladder.component(0).unwrap(), &x, 1e-10).unwrap(),
            )
            .unwrap();
            assert!(rho <= prev + 1e-9, "residual increased at lambda = {lam}");
            prev = rho;
        }
    }

    #[test]
    fn shrinking_budget_shrinks_coverage() {
        let agents = example4_agents();
        let x = exp1();
        let opts = SolverOptions::default();
        let h = Distortion::avar(2.0).unwrap();
        let mut prev_cover = f64::INFINITY;
        let mut prev_objective = f64::NEG_INFINITY;
        for budget in [1.0, 0.5, 0.3, 0.2, 0.1, 0.05] {
            let cons = vec![ConstraintSpec::new(h.clone(), budget, 0).unwrap()];
            let (ladder, report) = constrained_pareto_solve(&agents, &cons, &x, &opts).unwrap();
            let cover = num_traits::ToPrimitive::to_f64(
                &crate::riskmeasure::expected_value_of(&ladder.component(0).unwrap(), &x)
                    .unwrap(),
            )
            .unwrap();
            assert!(cover <= prev_cover + 1e-9);
            // tightening the budget never improves the attainable objective
            assert!(report.objective >= prev_objective - 1e-9);
            assert!(report.converged);
            prev_cover = cover;
            prev_objective = report.objective;
        }
    }

    #[test]
    fn two_constraints_via_cyclic_sweeps() {
        let agents = vec![
            AgentSpec::insurer(Distortion::avar(1.1).unwrap(), 0.3, 1.2).unwrap(),
            AgentSpec::insurer(Distortion::avar(1.5).unwrap(), 0.0, 1.2).unwrap(),
            AgentSpec::insurer(Distortion::avar(2.5).unwrap(), 0.1, 1.2).unwrap(),
        ];
        let x = exp1();
        let opts = SolverOptions::default();
        let cons = vec![
            ConstraintSpec::new(Distortion::avar(2.0).unwrap(), 0.35, 0).unwrap(),
            ConstraintSpec::new(Distortion::avar(1.8).unwrap(), 0.6, 2).unwrap(),
        ];
        let (ladder, report) = constrained_pareto_solve(&agents, &cons, &x, &opts).unwrap();
        for c in &cons {
            let rho = constraint_residual(&ladder, c, &x, &opts).unwrap();
            assert!(rho <= c.budget() + 1e-8, "residual {rho} above {}", c.budget());
            if report.converged {
                let lam = report.lambda[c.agent()];
                assert!((lam * (rho - c.budget())).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn table_spot_checks() {
        // C5: theta above (1+b)α − 1
        let c = classify_exponential_avar(3.0, 0.1, 2.0, 1.5, 1.0, 0.7).unwrap();
        assert_eq!(c.case, CaseLabel::C5);
        assert!(c.d.is_infinite() && c.lambda == 0.0);

        // C1: theta <= b and μB >= 1 + ln β
        let c = classify_exponential_avar(0.05, 0.1, 2.0, 1.5, 1.0, 2.0).unwrap();
        assert_eq!(c.case, CaseLabel::C1);
        assert_eq!(c.d, 0.0);
        assert_eq!(c.lambda, 0.0);

        // C2b2 worked row
        let (theta, b, alpha, beta, mu) = (0.5f64, 0.2, 3.0, 1.5, 1.0);
        assert!(b < theta && theta < (1.0 + b) * beta - 1.0);
        let budget = 1.05; // 1 <= μB < 1 + ln(β(1+b)/(1+θ))
        assert!(1.0 <= mu * budget
            && mu * budget < 1.0 + (beta * (1.0 + b) / (1.0 + theta)).ln());
        let c = classify_exponential_avar(theta, b, alpha, beta, mu, budget).unwrap();
        assert_eq!(c.case, CaseLabel::C2b2);
        assert!((c.d - (-budget + (1.0 + beta.ln()) / mu)).abs() < 1e-15);
        let expected_lambda =
            (1.0 + b) - ((1.0 + theta) / beta) * (mu * budget - 1.0).exp();
        assert!((c.lambda - expected_lambda).abs() < 1e-15);

        assert!(classify_exponential_avar(1.0, 0.0, 1.5, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn buyer_case1_full_insurance() {
        // λ + θ − b <= 0 at λ = 0 and B >= H_h(X) = (1 + ln β)/μ
        let g = Distortion::avar(2.0).unwrap();
        let h = Distortion::avar(1.5).unwrap();
        let (b, theta, mu) = (0.5, 0.3, 1.0);
        let budget = (1.0 + 1.5f64.ln()) / mu + 0.1;
        let sol = buyer_solve(&g, &h, b, theta, budget, &exp1(), &SolverOptions::default())
            .unwrap();
        assert_eq!(sol.lambda, 0.0);
        // full insurance: component 1 is the identity
        assert_eq!(sol.ladder.weights(), &[vec![0.0, 1.0]]);
    }

    #[test]
    fn buyer_case5_no_insurance() {
        // θ > (1+b)α − 1: any insurance is too expensive
        let g = Distortion::avar(1.4).unwrap();
        let h = Distortion::avar(1.2).unwrap();
        let sol = buyer_solve(&g, &h, 0.0, 0.6, 0.5, &exp1(), &SolverOptions::default())
            .unwrap();
        assert_eq!(sol.lambda, 0.0);
        assert_eq!(sol.ladder.weights(), &[vec![1.0, 0.0]]);
    }

    #[test]
    fn buyer_case3b_closed_form() {
        let (theta, b, alpha, beta, mu) = (1.0, 0.1, 3.0, 1.5, 1.0);
        let budget = 0.8; // β/α = 0.5 < μB = 0.8 < 1
        let cls = classify_exponential_avar(theta, b, alpha, beta, mu, budget).unwrap();
        assert_eq!(cls.case, CaseLabel::C3b);
        let g = Distortion::avar(alpha).unwrap();
        let h = Distortion::avar(beta).unwrap();
        let x = LossModel::exponential(mu).unwrap();
        let sol = buyer_solve(&g, &h, b, theta, budget, &x, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.lambda - cls.lambda).abs() < 1e-8, "{} vs {}", sol.lambda, cls.lambda);
        // deductible = first breakpoint of the insured component
        let d = sol.ladder.breakpoints()[1];
        assert!((d - cls.d).abs() < 1e-8, "{d} vs {}", cls.d);
        // complementary slackness
        assert!((sol.lambda * (sol.residual - budget)).abs() < 1e-8);
    }

    #[test]
    fn buyer_case4b_completion_returns_the_deductible_representative() {
        let (theta, b, alpha, beta, mu) = (1.0, 0.1, 3.0, 1.5, 1.0);
        let budget = 0.3; // μB <= β/α = 0.5
        let cls = classify_exponential_avar(theta, b, alpha, beta, mu, budget).unwrap();
        assert_eq!(cls.case, CaseLabel::C4b);
        let g = Distortion::avar(alpha).unwrap();
        let h = Distortion::avar(beta).unwrap();
        let x = LossModel::exponential(mu).unwrap();
        let sol = buyer_solve(&g, &h, b, theta, budget, &x, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.lambda - cls.lambda).abs() < 1e-8);
        assert!((sol.residual - budget).abs() < 1e-8);
        let d = sol.ladder.breakpoints()[1];
        assert!((d - cls.d).abs() < 1e-7, "{d} vs {}", cls.d);
    }
}
