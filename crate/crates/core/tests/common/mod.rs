//! Shared generators and independent oracles for the integration suites.
//!
//! The quadrature oracle here is deliberately primitive (composite Simpson
//! on the `t`-integral with a doubling tail cutoff) and shares no code with
//! the library's evaluation paths.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use riskshare::distortion::Distortion;
use riskshare::distribution::DiscreteModel;
use riskshare::riskmeasure::AgentSpec;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Composite-Simpson oracle for `H_g` of an exponential loss: integrates
/// `g(e^{-μt})` on `[0, T]` with `T` grown until the concavity tail bound
/// `g(S(T))/μ` drops below the tolerance.
pub fn oracle_h_exponential(g: &Distortion<f64>, mu: f64, tol: f64) -> f64 {
    let mut t_max = 1.0 / mu;
    while g.eval(( -mu * t_max ).exp()).unwrap().max((-mu * t_max).exp()) / mu > tol / 10.0 {
        t_max *= 2.0;
        if t_max > 1e9 {
            break;
        }
    }
    let n = 200_000;
    let h = t_max / n as f64;
    let f = |t: f64| g.eval((-mu * t).exp()).unwrap();
    let mut acc = f(0.0) + f(t_max);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(k as f64 * h);
    }
    acc * h / 3.0
}

/// Same oracle for `∫_a^b g(S_X(t)) dt` of an exponential loss.
pub fn oracle_layer_exponential(g: &Distortion<f64>, mu: f64, a: f64, b: f64) -> f64 {
    let n = 100_000;
    let h = (b - a) / n as f64;
    let f = |t: f64| g.eval((-mu * t).exp()).unwrap();
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Random concave distortion across all families.
pub fn random_concave_distortion(rng: &mut ChaCha8Rng) -> Distortion<f64> {
    match rng.gen_range(0..4) {
        0 => Distortion::avar(1.0 + rng.gen_range(0.05..4.0)).unwrap(),
        1 => Distortion::proportional_hazards(rng.gen_range(0.1..0.95)).unwrap(),
        2 => Distortion::dual_power(1.0 + rng.gen_range(0.05..4.0)).unwrap(),
        _ => random_concave_pwl(rng),
    }
}

/// Random concave piecewise-linear distortion: non-increasing positive
/// slopes over random segment widths, normalized to end at (1, 1).
pub fn random_concave_pwl(rng: &mut ChaCha8Rng) -> Distortion<f64> {
    let k = rng.gen_range(2..=5);
    // widths
    let mut widths: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = widths.iter().sum();
    for w in &mut widths {
        *w /= total;
    }
    // slopes sorted descending
    let mut slopes: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..3.0)).collect();
    slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rise: f64 = widths.iter().zip(&slopes).map(|(w, s)| w * s).sum();
    let mut points = vec![(0.0, 0.0)];
    let (mut p, mut v) = (0.0, 0.0);
    for (w, s) in widths.iter().zip(&slopes) {
        p += w;
        v += w * s / rise;
        points.push((p, v));
    }
    let last = points.len() - 1;
    points[last] = (1.0, 1.0);
    Distortion::pwl(points).unwrap()
}

/// Random discrete loss, optionally restricted to non-negative atoms.
pub fn random_discrete(rng: &mut ChaCha8Rng, max_atoms: usize, non_negative: bool) -> DiscreteModel<f64> {
    let m = rng.gen_range(2..=max_atoms);
    loop {
        let mut atoms: Vec<f64> = (0..m)
            .map(|_| {
                if non_negative {
                    rng.gen_range(0.0..10.0)
                } else {
                    rng.gen_range(-5.0..10.0)
                }
            })
            .collect();
        atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        atoms.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        if atoms.len() < 2 {
            continue;
        }
        let probs = random_simplex(rng, atoms.len());
        return DiscreteModel::new(atoms, probs).unwrap();
    }
}

/// Random probability vector.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut out: Vec<f64> = raw.iter().map(|r| r / total).collect();
    // pin the sum to exactly one
    let sum_head: f64 = out[..n - 1].iter().sum();
    out[n - 1] = 1.0 - sum_head;
    out
}

/// Random agents whose factors `1+b+c` share one strict sign.
pub fn random_admissible_agents(
    rng: &mut ChaCha8Rng,
    n: usize,
    families: &str,
) -> Vec<AgentSpec<f64>> {
    let negative = rng.gen_bool(0.5);
    (0..n)
        .map(|_| {
            let g = match families {
                "avar" => Distortion::avar(1.0 + rng.gen_range(0.05..3.0)).unwrap(),
                "mixed" => match rng.gen_range(0..3) {
                    0 => Distortion::avar(1.0 + rng.gen_range(0.05..3.0)).unwrap(),
                    1 => Distortion::proportional_hazards(rng.gen_range(0.15..0.9)).unwrap(),
                    _ => random_concave_pwl(rng),
                },
                _ => random_concave_distortion(rng),
            };
            let b = rng.gen_range(0.0..0.5);
            let margin = rng.gen_range(0.05..1.5);
            let c = if negative { -(1.0 + b) - margin } else { -(1.0 + b) + margin };
            AgentSpec::new(g, 0.0, b, c).unwrap()
        })
        .collect()
}
