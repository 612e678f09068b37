//! Worked end-to-end scenarios: the two-agent insurance examples with
//! rationality and side payments, and the regulator-crossing formulas.

mod common;

use common::*;

use riskshare::allocation::{side_payments, Ladder, SidePayments};
use riskshare::constrained::{avar_two_agent_crossings, CrossingRegime};
use riskshare::distortion::Distortion;
use riskshare::distribution::LossModel;
use riskshare::pareto::{pareto_solve, risk_load_curve, SolverOptions};
use riskshare::riskmeasure::{
    buyer_rationality_margin, insurer_rationality_margin, rationality_check, AgentSpec,
};

fn example1_agents() -> Vec<AgentSpec<f64>> {
    let g1 = Distortion::pwl(vec![(0.0, 0.0), (0.5, 0.5625), (1.0, 1.0)]).unwrap();
    let g2 = Distortion::pwl(vec![
        (0.0, 0.0),
        (0.25, 1.0 / 3.0),
        (0.75, 5.0 / 6.0),
        (1.0, 1.0),
    ])
    .unwrap();
    vec![
        AgentSpec::new(g1, 0.0, 1.0 / 3.0, -2.0).unwrap(),
        AgentSpec::new(g2, 0.0, 0.0, -2.0).unwrap(),
    ]
}

#[test]
fn example1_contract_is_individually_rational() {
    let agents = example1_agents();
    let x = LossModel::exponential(1.0).unwrap();
    let (ladder, _) = pareto_solve(&agents, &x, &SolverOptions::default()).unwrap();

    // original endowment: the buyer holds the whole loss
    let original = Ladder::whole_to(1, 2).unwrap();
    let rows = rationality_check(
        &agents,
        &original.components().unwrap(),
        &ladder.components().unwrap(),
        &x,
        1e-10,
    )
    .unwrap();
    assert!(rows.iter().all(|r| r.ok), "margins: {rows:?}");

    // cross-check the margins against the independent quadrature oracle:
    // insurer margin = −V1(f1) = −(4/3) H_{g1}(f1) + 2 E f1
    let f1 = ladder.component(0).unwrap();
    let h1_layers = oracle_layer_exponential(agents[0].g(), 1.0, 0.0, 1.5f64.ln())
        + oracle_layer_exponential(agents[0].g(), 1.0, 3.0f64.ln(), 60.0);
    let e1 = (1.0 - 2.0 / 3.0) + 1.0 / 3.0;
    let margin_oracle = -((4.0 / 3.0) * h1_layers - 2.0 * e1);
    assert!((rows[0].margin - margin_oracle).abs() < 1e-6);
    let _ = f1;
}

#[test]
fn example1_insurance_forms_and_side_payments() {
    // with the premium convention a2 = (1+θ) E X, plain rationality fails
    // for the buyer at zero offsets and side payments restore it
    let theta = 1.0;
    let x = LossModel::exponential(1.0).unwrap();
    let ex = x.mean().unwrap();
    let base = example1_agents();
    let agents = vec![
        base[0].clone(),
        AgentSpec::buyer(base[1].g().clone(), theta, ex).unwrap(),
    ];
    let (ladder, _) = pareto_solve(&agents, &x, &SolverOptions::default()).unwrap();
    let f1 = ladder.component(0).unwrap();

    // the specialization margins of the insurance forms
    let ins =
        insurer_rationality_margin(agents[0].g(), 1.0 / 3.0, theta, &f1, &x, 1e-10).unwrap();
    let buy = buyer_rationality_margin(agents[1].g(), theta, &f1, &x, 1e-10).unwrap();
    assert!(ins > 0.0, "insurer margin {ins}");
    assert!(buy < 0.0, "full-premium deductible is too dear for this buyer: {buy}");

    // side payments summing to zero restore feasibility
    let original = Ladder::whole_to(1, 2).unwrap();
    let pay = side_payments(
        &agents,
        &ladder,
        &original.components().unwrap(),
        &x,
        1e-10,
    )
    .unwrap();
    let SidePayments::Feasible(deltas) = pay else {
        panic!("expected a feasible transfer, got {pay:?}");
    };
    assert!(deltas.iter().sum::<f64>().abs() < 1e-12);
    let shifted = ladder.shift(&deltas).unwrap();
    let rows = rationality_check(
        &agents,
        &original.components().unwrap(),
        &shifted.components().unwrap(),
        &x,
        1e-10,
    )
    .unwrap();
    assert!(rows.iter().all(|r| r.ok), "after transfer: {rows:?}");
}

#[test]
fn side_payment_interval_midpoint_for_two_agents() {
    // with slack margins m1, m2 the feasible deltas form an interval and the
    // analytic center is its midpoint
    let agents = vec![
        AgentSpec::new(Distortion::avar(1.6).unwrap(), 0.0, 0.1, -0.4).unwrap(),
        AgentSpec::new(Distortion::avar(2.0).unwrap(), 0.0, 0.0, -0.3).unwrap(),
    ];
    let x = LossModel::exponential(1.0).unwrap();
    let (ladder, _) = pareto_solve(&agents, &x, &SolverOptions::default()).unwrap();
    let original = Ladder::single_owner(vec![0.0, 0.8, f64::INFINITY], vec![0, 1], 2).unwrap();
    match side_payments(&agents, &ladder, &original.components().unwrap(), &x, 1e-10).unwrap()
    {
        SidePayments::Feasible(deltas) => {
            // direct interval oracle: margins in units of s_i
            let margin = |i: usize| -> f64 {
                let h = riskshare::riskmeasure::distorted_value_of(
                    agents[i].g(),
                    &original.component(i).unwrap(),
                    &x,
                    1e-10,
                )
                .unwrap();
                let v = riskshare::riskmeasure::value_functional(
                    &agents[i],
                    &ladder.component(i).unwrap(),
                    &x,
                    1e-10,
                )
                .unwrap();
                h - v
            };
            let u1 = margin(0) / agents[0].s();
            let u2 = margin(1) / agents[1].s();
            assert!((deltas[0] - (u1 - u2) / 2.0).abs() < 1e-9);
        }
        SidePayments::Infeasible { .. } => panic!("expected feasibility"),
    }
}

#[test]
fn infeasible_side_payments_are_reported() {
    // an original allocation that is far better than anything this trade
    // can deliver for agent 0 makes the transfer system infeasible
    let agents = vec![
        AgentSpec::new(Distortion::avar(1.6).unwrap(), 5.0, 0.1, -0.4).unwrap(),
        AgentSpec::new(Distortion::avar(2.0).unwrap(), 5.0, 0.0, -0.3).unwrap(),
    ];
    let x = LossModel::exponential(1.0).unwrap();
    let (ladder, _) = pareto_solve(&agents, &x, &SolverOptions::default()).unwrap();
    let original = Ladder::whole_to(1, 2).unwrap();
    let result =
        side_payments(&agents, &ladder, &original.components().unwrap(), &x, 1e-10).unwrap();
    assert!(matches!(result, SidePayments::Infeasible { .. }));
}

#[test]
fn regulated_crossing_formula_in_the_upper_band() {
    // buyer most risk averse, regulator in between: a single crossing in
    // (1/β, 1/α1) whose closed form matches the curve intersection
    let (a1, a2, beta, theta, b1, lambda) = (1.2, 2.8, 2.0, 1.2, 0.2, 0.3);
    let c = avar_two_agent_crossings(a1, a2, beta, theta, b1, lambda).unwrap();
    assert_eq!(c.regime, CrossingRegime::DeductibleA);
    let p = c.p_star_2.unwrap();
    assert!(1.0 / beta < p && p < 1.0 / a1);
    let closed = (lambda * (1.0 + theta) - theta + b1)
        / ((1.0 + theta) * (b1 + lambda) - (1.0 + b1) * a1 * theta);
    assert!((p - closed).abs() < 1e-10);

    // and the crossing agrees with a direct intersection of the two curves
    let insurer = AgentSpec::insurer(Distortion::avar(a1).unwrap(), b1, theta).unwrap();
    let buyer = AgentSpec::insurer(Distortion::avar(a2).unwrap(), 0.0, theta).unwrap();
    let h = Distortion::avar(beta).unwrap();
    let q1 = risk_load_curve(&insurer, lambda, Some(&h)).unwrap();
    let q2 = risk_load_curve(&buyer, 0.0, None).unwrap();
    assert!((q1.eval(p) - q2.eval(p)).abs() < 1e-10);
    assert!((q1.eval(1.0) + 1.0).abs() < 1e-12);
    assert!((q2.eval(1.0) + 1.0).abs() < 1e-12);
}

#[test]
fn regulated_crossing_formula_in_the_lower_band() {
    // smaller multiplier pushes the crossing into (1/α2, 1/β)
    let (a1, a2, beta, theta, b1) = (1.2, 2.8, 2.0, 1.2, 0.2);
    let mut found = false;
    for lambda in [0.35, 0.4, 0.45] {
        let c = avar_two_agent_crossings(a1, a2, beta, theta, b1, lambda).unwrap();
        if c.regime == CrossingRegime::DeductibleB {
            let p = c.p_star_1.unwrap();
            assert!(1.0 / a2 < p && p < 1.0 / beta);
            let closed = (theta - b1 - lambda)
                / (theta * (1.0 + b1) * a1 - b1 * (1.0 + theta)
                    + lambda * (theta * beta - (1.0 + theta)));
            assert!((p - closed).abs() < 1e-10, "{p} vs {closed}");
            found = true;
        }
    }
    assert!(found, "no multiplier landed in the lower band");
}
