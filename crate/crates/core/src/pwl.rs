//! Piecewise-linear function algebra.
//!
//! Two representations live here:
//!
//! * [`Points`] — a graph `(x, y)` with strictly increasing `x`, linearly
//!   interpolated. Distortion functions and risk-load curves use this form
//!   on the probability axis `[0, 1]`.
//! * [`MonotonePwl`] — a non-decreasing function on `[x_0, ∞)` with a final
//!   slope that extends the last segment to infinity. Allocation components
//!   (`f_i` in a ladder) use this form on the loss axis.
//!
//! The lower-envelope routines compute, for a family of curves on `[0, 1]`,
//! the partition of the axis into cells on which the argmin set is constant.
//! Crossings of linear pieces are solved exactly; analytic curves go through
//! a grid scan plus bisection refinement.

use crate::error::CoreError;
use crate::scalar::Real;

/// A piecewise-linear graph: `(x, y)` pairs with strictly increasing `x`.
pub type Points<R> = Vec<(R, R)>;

/// Validate that `x` coordinates strictly increase.
pub fn check_strictly_increasing<R: Real>(points: &[(R, R)]) -> Result<(), CoreError> {
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(CoreError::InvalidPwl(format!(
                "x coordinates must strictly increase, got {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(())
}

/// Evaluate a point list at `x` by linear interpolation.
///
/// `x` outside the span clamps to the endpoint values.
pub fn eval<R: Real>(points: &[(R, R)], x: R) -> R {
    let n = points.len();
    if x <= points[0].0 {
        return points[0].1;
    }
    if x >= points[n - 1].0 {
        return points[n - 1].1;
    }
    // rightmost segment with x_lo <= x
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if points[mid].0 <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (x0, y0) = points[lo];
    let (x1, y1) = points[lo + 1];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Exact integral of a point list over `[lo, hi]` (trapezoid per segment).
pub fn integral<R: Real>(points: &[(R, R)], lo: R, hi: R) -> R {
    if hi <= lo {
        return R::zero();
    }
    let mut acc = R::zero();
    for w in points.windows(2) {
        let (x0, _) = w[0];
        let (x1, _) = w[1];
        let a = lo.max(x0);
        let b = hi.min(x1);
        if b > a {
            let ya = eval(points, a);
            let yb = eval(points, b);
            acc = acc + (ya + yb) * (b - a) / R::two();
        }
    }
    acc
}

/// Merge the x-grids of several point lists into one sorted, deduplicated axis.
pub fn merged_axis<R: Real>(lists: &[&[(R, R)]]) -> Vec<R> {
    let mut xs: Vec<R> = lists.iter().flat_map(|l| l.iter().map(|p| p.0)).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite axis"));
    xs.dedup_by(|a, b| *a == *b);
    xs
}

/// Non-decreasing piecewise-linear function on `[x_0, ∞)`.
///
/// Between knots the function interpolates linearly; past the last knot it
/// continues with `final_slope`. Below `x_0` it is held constant at `y_0`
/// (callers in this crate never evaluate there).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonePwl<R> {
    xs: Vec<R>,
    ys: Vec<R>,
    final_slope: R,
}

impl<R: Real> MonotonePwl<R> {
    pub fn new(xs: Vec<R>, ys: Vec<R>, final_slope: R) -> Result<Self, CoreError> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(CoreError::InvalidPwl(
                "knot and value lists must be non-empty and equal length".into(),
            ));
        }
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(CoreError::InvalidPwl("knots must strictly increase".into()));
            }
        }
        for w in ys.windows(2) {
            if w[1] < w[0] {
                return Err(CoreError::NonMonotone);
            }
        }
        if final_slope < R::zero() {
            return Err(CoreError::NonMonotone);
        }
        Ok(Self { xs, ys, final_slope })
    }

    /// The identity function on `[0, ∞)`.
    pub fn identity() -> Self {
        Self { xs: vec![R::zero()], ys: vec![R::zero()], final_slope: R::one() }
    }

    /// The zero function on `[0, ∞)`.
    pub fn zero() -> Self {
        Self { xs: vec![R::zero()], ys: vec![R::zero()], final_slope: R::zero() }
    }

    /// Constant function `y` on `[0, ∞)`.
    pub fn constant(y: R) -> Self {
        Self { xs: vec![R::zero()], ys: vec![y], final_slope: R::zero() }
    }

    pub fn knots(&self) -> &[R] {
        &self.xs
    }

    pub fn values(&self) -> &[R] {
        &self.ys
    }

    pub fn final_slope(&self) -> R {
        self.final_slope
    }

    pub fn eval(&self, x: R) -> R {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.final_slope * (x - self.xs[n - 1]);
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (x - self.xs[lo]) / (self.xs[lo + 1] - self.xs[lo]);
        self.ys[lo] + (self.ys[lo + 1] - self.ys[lo]) * t
    }

    /// Add a constant offset.
    pub fn shifted(&self, delta: R) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|&y| y + delta).collect(),
            final_slope: self.final_slope,
        }
    }

    /// Iterate segments as `(x_lo, x_hi, slope)`; the last has `x_hi = ∞`.
    pub fn segments(&self) -> impl Iterator<Item = (R, R, R)> + '_ {
        let n = self.xs.len();
        (0..n).map(move |i| {
            if i + 1 < n {
                let slope =
                    (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]);
                (self.xs[i], self.xs[i + 1], slope)
            } else {
                (self.xs[n - 1], R::infinity(), self.final_slope)
            }
        })
    }
}

/// Argmin partition of `[lo, hi]` for a family of curves.
#[derive(Debug, Clone)]
pub struct Envelope<R> {
    /// Cell boundaries `lo = c_0 < c_1 < … < c_M = hi`.
    pub cuts: Vec<R>,
    /// Per cell, the sorted set of curve indices attaining the minimum.
    pub owners: Vec<Vec<usize>>,
}

impl<R: Real> Envelope<R> {
    /// Merge adjacent cells whose owner sets coincide.
    fn coalesce(mut self) -> Self {
        let mut cuts = vec![self.cuts[0]];
        let mut owners: Vec<Vec<usize>> = Vec::new();
        for (i, own) in self.owners.drain(..).enumerate() {
            if owners.last().map(|prev| prev == &own).unwrap_or(false) {
                *cuts.last_mut().unwrap() = self.cuts[i + 1];
            } else {
                owners.push(own);
                cuts.push(self.cuts[i + 1]);
            }
        }
        Envelope { cuts, owners }
    }
}

fn owners_at<R: Real>(values: &[R], tie_tol: R) -> Vec<usize> {
    let mut min = values[0];
    for &v in values.iter().skip(1) {
        if v < min {
            min = v;
        }
    }
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v - min <= tie_tol)
        .map(|(i, _)| i)
        .collect()
}

/// Exact lower envelope of piecewise-linear curves on `[lo, hi]`.
///
/// All pairwise crossings inside merged-grid cells are solved in closed form,
/// so the resulting cells carry a constant argmin set. `tie_tol` controls
/// when two curves count as tied at a cell midpoint.
pub fn lower_envelope_exact<R: Real>(
    curves: &[&[(R, R)]],
    lo: R,
    hi: R,
    tie_tol: R,
) -> Envelope<R> {
    let mut cuts: Vec<R> = merged_axis(curves)
        .into_iter()
        .filter(|&x| x > lo && x < hi)
        .collect();
    cuts.insert(0, lo);
    cuts.push(hi);

    // Crossings within each merged cell, where every curve is linear.
    let mut extra: Vec<R> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let va: Vec<R> = curves.iter().map(|c| eval(c, a)).collect();
        let vb: Vec<R> = curves.iter().map(|c| eval(c, b)).collect();
        for i in 0..curves.len() {
            for j in (i + 1)..curves.len() {
                let da = va[i] - va[j];
                let db = vb[i] - vb[j];
                if (da < R::zero() && db > R::zero()) || (da > R::zero() && db < R::zero()) {
                    let t = da / (da - db);
                    let x = a + (b - a) * t;
                    if x > a && x < b {
                        extra.push(x);
                    }
                }
            }
        }
    }
    cuts.extend(extra);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= R::of(1e-15) * (R::one() + a.abs()));

    let owners = cuts
        .windows(2)
        .map(|w| {
            let mid = R::midpoint(w[0], w[1]);
            let values: Vec<R> = curves.iter().map(|c| eval(c, mid)).collect();
            owners_at(&values, tie_tol)
        })
        .collect();
    Envelope { cuts, owners }.coalesce()
}

/// Grid-scan lower envelope for arbitrary curves on `[lo, hi]`.
///
/// The argmin is sampled on `grid_n + 1` equispaced nodes; where it changes
/// between neighbours, the crossing of the two curves involved is refined by
/// bisection to relative precision near machine epsilon. Crossings narrower
/// than one grid cell can be missed, which is the documented trade-off.
pub fn lower_envelope_grid<R: Real>(
    curves: &[&dyn Fn(R) -> R],
    lo: R,
    hi: R,
    grid_n: usize,
    tie_tol: R,
) -> Envelope<R> {
    assert!(grid_n >= 2, "grid must have at least two cells");
    let step = (hi - lo) / R::from_usize(grid_n).expect("grid size fits scalar");
    let argmin = |p: R| -> usize {
        let mut best = 0usize;
        let mut best_v = curves[0](p);
        for (k, c) in curves.iter().enumerate().skip(1) {
            let v = c(p);
            if v < best_v {
                best_v = v;
                best = k;
            }
        }
        best
    };

    let mut cuts = vec![lo];
    let mut prev_p = lo + step * R::of(0.5); // midpoints drive ownership
    let mut prev_owner = argmin(prev_p);
    for k in 1..grid_n {
        let p = lo + step * (R::from_usize(k).unwrap() + R::of(0.5));
        let p = p.min(hi);
        let owner = argmin(p);
        if owner != prev_owner {
            // refine the crossing of the two winners between prev_p and p
            let (i, j) = (prev_owner, owner);
            let f = |x: R| curves[i](x) - curves[j](x);
            let mut a = prev_p;
            let mut b = p;
            let rel = R::epsilon() * R::of(4.0);
            for _ in 0..200 {
                if (b - a) <= rel * (R::one() + b.abs()) {
                    break;
                }
                let m = R::midpoint(a, b);
                if f(m) <= R::zero() {
                    a = m;
                } else {
                    b = m;
                }
            }
            cuts.push(R::midpoint(a, b));
            prev_owner = owner;
        }
        prev_p = p;
    }
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= R::of(1e-15) * (R::one() + a.abs()));

    let owners = cuts
        .windows(2)
        .map(|w| {
            let mid = R::midpoint(w[0], w[1]);
            let values: Vec<R> = curves.iter().map(|c| c(mid)).collect();
            owners_at(&values, tie_tol)
        })
        .collect();
    Envelope { cuts, owners }.coalesce()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_clamps() {
        let pts: Points<f64> = vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)];
        assert_eq!(eval(&pts, 0.25), 0.5);
        assert_eq!(eval(&pts, 0.75), 1.0);
        assert_eq!(eval(&pts, -1.0), 0.0);
        assert_eq!(eval(&pts, 2.0), 1.0);
    }

    #[test]
    fn integral_is_exact_on_segments() {
        let pts: Points<f64> = vec![(0.0, 0.0), (1.0, 1.0)];
        assert!((integral(&pts, 0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((integral(&pts, 0.25, 0.75) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn monotone_pwl_extends_with_final_slope() {
        let f = MonotonePwl::new(vec![0.0, 1.0], vec![0.0, 2.0], 0.5).unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(3.0), 3.0);
    }

    #[test]
    fn monotone_pwl_rejects_decreasing_values() {
        assert!(MonotonePwl::new(vec![0.0, 1.0], vec![1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn exact_envelope_finds_crossing() {
        // f(p) = p and g(p) = 1 - p cross at 1/2
        let f: Points<f64> = vec![(0.0, 0.0), (1.0, 1.0)];
        let g: Points<f64> = vec![(0.0, 1.0), (1.0, 0.0)];
        let env = lower_envelope_exact(&[&f, &g], 0.0, 1.0, 1e-12);
        assert_eq!(env.owners, vec![vec![0], vec![1]]);
        assert!((env.cuts[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn grid_envelope_matches_exact_for_lines() {
        let f = |p: f64| p;
        let g = |p: f64| 1.0 - p;
        let env = lower_envelope_grid(&[&f, &g], 0.0, 1.0, 64, 1e-12);
        assert_eq!(env.owners, vec![vec![0], vec![1]]);
        assert!((env.cuts[1] - 0.5).abs() < 1e-12);
    }
}
