//! Small numeric kernels: adaptive Simpson quadrature and bisection.

use crate::scalar::Real;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance.
///
/// Uses the classic Richardson check `|S_left + S_right − S_whole| ≤ 15 tol`
/// with the fifth-order correction term added on acceptance.
pub fn adaptive_simpson<R: Real, F: Fn(R) -> R>(f: &F, a: R, b: R, tol: R) -> R {
    if b <= a {
        return R::zero();
    }
    let m = R::midpoint(a, b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_recurse(f, a, m, b, fa, fm, fb, whole, tol, 60)
}

fn simpson_rule<R: Real>(a: R, b: R, fa: R, fm: R, fb: R) -> R {
    (b - a) / R::of(6.0) * (fa + R::of(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<R: Real, F: Fn(R) -> R>(
    f: &F,
    a: R,
    m: R,
    b: R,
    fa: R,
    fm: R,
    fb: R,
    whole: R,
    tol: R,
    depth: u32,
) -> R {
    let lm = R::midpoint(a, m);
    let rm = R::midpoint(m, b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= R::of(15.0) * tol {
        left + right + delta / R::of(15.0)
    } else {
        let half = tol / R::two();
        simpson_recurse(f, a, lm, m, fa, flm, fm, left, half, depth - 1)
            + simpson_recurse(f, m, rm, b, fm, frm, fb, right, half, depth - 1)
    }
}

/// Bisection for the boundary of a monotone predicate.
///
/// Requires `pred(hi)` true and `pred(lo)` false; returns the bracket
/// `(lo, hi)` narrowed until `hi − lo ≤ abs_tol + rel_tol·|hi|`.
pub fn bisect_boundary<R: Real, P: Fn(R) -> bool>(
    pred: &P,
    mut lo: R,
    mut hi: R,
    abs_tol: R,
    rel_tol: R,
) -> (R, R) {
    for _ in 0..300 {
        if hi - lo <= abs_tol + rel_tol * hi.abs() {
            break;
        }
        let mid = R::midpoint(lo, hi);
        if mid <= lo || mid >= hi {
            break; // exhausted precision
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_exponential() {
        let v = adaptive_simpson(&|t: f64| (-t).exp(), 0.0, 30.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_handles_kinks() {
        let v = adaptive_simpson(&|t: f64| (2.0 * t).min(1.0), 0.0, 1.0, 1e-12);
        assert!((v - 0.75).abs() < 1e-10);
    }

    #[test]
    fn bisect_finds_threshold() {
        let (lo, hi) = bisect_boundary(&|x: f64| x * x >= 2.0, 0.0, 2.0, 0.0, 1e-15);
        assert!((f64::midpoint(lo, hi) - 2.0_f64.sqrt()).abs() < 1e-16 * 4.0);
    }
}
