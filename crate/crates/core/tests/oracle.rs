mod common;

use std::time::Instant;

use common::{bus, calm, chain, constant_catalog, line, oracle_fixture, solver};
use gridshield::formulation::{build_extensive_form, FormulationOptions};
use gridshield::network::{Network, NetworkParams};
use gridshield::oracle::{enumerate_optimal, OracleError, DEFAULT_LIMIT};
use gridshield::solver::solve;

fn milp_objective(net: &Network, set: &gridshield::hazard::ScenarioSet) -> f64 {
    let (model, _) = build_extensive_form(net, set, &FormulationOptions::default()).unwrap();
    solve(&model, &solver()).unwrap().objective_value
}

fn check_fixture(name: &str, expected: f64) {
    let fx = oracle_fixture(name);
    let started = Instant::now();
    let oracle = enumerate_optimal(
        &fx.network,
        &fx.scenarios,
        &FormulationOptions::default(),
        DEFAULT_LIMIT,
        &solver(),
    )
    .unwrap();
    assert!(oracle.free_binaries <= DEFAULT_LIMIT);
    assert!(started.elapsed().as_secs() < 120);
    let milp = milp_objective(&fx.network, &fx.scenarios);
    let tol = 1e-6 * oracle.objective.abs().max(1.0);
    assert!((milp - oracle.objective).abs() <= tol, "{name}: milp {milp} oracle {}", oracle.objective);
    // hand-derived optimum of the fixture
    assert!((oracle.objective - expected).abs() <= 1e-6 * expected, "{name}: {}", oracle.objective);
}

#[test]
fn two_bus_fixture_hardens_the_line() {
    check_fixture("oracle_two_bus.json", 3000.0);
}

#[test]
fn two_step_fixture_hardens_the_line() {
    check_fixture("oracle_two_step.json", 2500.0);
}

#[test]
fn three_bus_fixture_islands_the_far_bus() {
    check_fixture("oracle_three_bus.json", 11500.0);
    let fx = oracle_fixture("oracle_three_bus.json");
    let r = enumerate_optimal(&fx.network, &fx.scenarios, &Default::default(), 24, &solver()).unwrap();
    assert_eq!(r.plan.dg_placement, vec![false, false, true]);
    assert_eq!(r.plan.hardening, vec![0, 0]);
    assert_eq!(r.plan.new_sectionalizers[0], [false, false]);
    assert_eq!(r.plan.new_sectionalizers[1].iter().filter(|&&x| x).count(), 1);
}

#[test]
fn calm_weather_needs_no_investment() {
    let net = chain(&[(100.0, 40.0)], &[0.1, 0.05]);
    let set = calm(&net, 1, 1);
    let r = enumerate_optimal(&net, &set, &Default::default(), DEFAULT_LIMIT, &solver()).unwrap();
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.plan.hardening, vec![0]);
    assert!(r.plan.new_sectionalizers.iter().flatten().all(|x| !x));
}

#[test]
fn total_loss_matches_closed_form() {
    // both pole options fail, no DG: everything is shed and repaired
    let (opts, curves) = constant_catalog(&[1.0, 1.0], 4000.0);
    let buses = vec![bus(0, true, 0.0, 0.0), bus(1, false, 100.0, 40.0)];
    let lines = vec![line(0, 1, 0.01, 0.02, vec![0.0, 500.0])];
    let net = Network::new(buses, lines, opts, curves, NetworkParams::default()).unwrap();
    let mut set = calm(&net, 1, 2);
    set.scenarios[1].p_load[1][0] = 130.0;
    for s in &mut set.scenarios {
        s.zeta = vec![vec![vec![1], vec![1]]];
        s.chi = vec![vec![4000.0, 4000.0]];
    }
    let r = enumerate_optimal(&net, &set, &Default::default(), DEFAULT_LIMIT, &solver()).unwrap();
    let expected: f64 = [100.0, 130.0]
        .iter()
        .map(|pl| 0.5 * 1.0 * (14.0 * pl * 2.0 + 4000.0))
        .sum();
    assert!((r.objective - expected).abs() <= 1e-6 * expected, "{} vs {expected}", r.objective);
    assert_eq!(r.plan.hardening, vec![0]);
}

#[test]
fn limit_is_enforced() {
    let fx = oracle_fixture("oracle_three_bus.json");
    let err = enumerate_optimal(&fx.network, &fx.scenarios, &Default::default(), 10, &solver()).unwrap_err();
    assert!(matches!(err, OracleError::TooManyBinaries { limit: 10, .. }), "{err}");
}
