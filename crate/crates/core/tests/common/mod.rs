#![allow(dead_code)]

use std::path::PathBuf;

use gridshield::hazard::FragilityCurve;
use gridshield::network::{parse_network, Bus, Line, LoadSeries, Network, NetworkParams, PoleOption};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn ieee15() -> Network {
    parse_network(fixture("ieee15.json")).unwrap()
}

pub fn bus(id: u32, substation: bool, p: f64, q: f64) -> Bus {
    Bus {
        id,
        is_substation: substation,
        v_min: 0.9,
        v_max: 1.05,
        dg_candidate: false,
        dg_p_max: 0.0,
        dg_q_max: 0.0,
        base_p_load: LoadSeries::Constant(p),
        base_q_load: LoadSeries::Constant(q),
        shed_cost: 14.0,
        dg_op_cost: 8.0,
        dg_install_cost: 0.0,
    }
}

pub fn line(from: u32, to: u32, r: f64, x: f64, costs: Vec<f64>) -> Line {
    Line {
        from_bus: from,
        to_bus: to,
        resistance: r,
        reactance: x,
        p_max: 2000.0,
        q_max: 2000.0,
        existing_sectionalizer_from: false,
        existing_sectionalizer_to: false,
        sectionalizer_cost: 15000.0,
        hardening_costs: costs,
    }
}

/// Catalog whose option `k` fails with constant per-step probability `probs[k]`.
pub fn constant_catalog(probs: &[f64], repair: f64) -> (Vec<PoleOption>, Vec<FragilityCurve>) {
    let opts = probs
        .iter()
        .enumerate()
        .map(|(i, _)| PoleOption {
            index: i,
            label: format!("option {i}"),
            fragility: format!("f{i}"),
            repair_unit_cost: repair,
        })
        .collect();
    let curves = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| FragilityCurve::constant(format!("f{i}"), p))
        .collect();
    (opts, curves)
}

/// Radial chain `0 - 1 - ... - n-1` fed from bus 0.
pub fn chain(loads: &[(f64, f64)], probs: &[f64]) -> Network {
    let (opts, curves) = constant_catalog(probs, 4000.0);
    let mut costs = vec![0.0];
    costs.extend((1..probs.len()).map(|k| 10000.0 * k as f64));
    let mut buses = vec![bus(0, true, 0.0, 0.0)];
    buses.extend(
        loads
            .iter()
            .enumerate()
            .map(|(i, &(p, q))| bus(i as u32 + 1, false, p, q)),
    );
    let lines = (0..loads.len())
        .map(|i| line(i as u32, i as u32 + 1, 0.01, 0.02, costs.clone()))
        .collect();
    Network::new(buses, lines, opts, curves, NetworkParams::default()).unwrap()
}

pub fn solver() -> gridshield::solver::SolverConfig {
    gridshield::solver::SolverConfig::from_env()
}

pub fn oracle_fixture(name: &str) -> gridshield::oracle::OracleFixture {
    gridshield::oracle::OracleFixture::load(fixture(name)).unwrap()
}

/// Undamaged scenarios of `steps` steps at base load.
pub fn calm(net: &Network, steps: usize, n: usize) -> gridshield::hazard::ScenarioSet {
    let cfg = gridshield::hazard::HazardConfig {
        horizon_steps: steps,
        ..Default::default()
    };
    gridshield::hazard::ScenarioSet::undamaged(net, &cfg, n).unwrap()
}

/// Structural checks every solved extensive form must pass: switch table,
/// line AND, dead-node coupling and damage propagation to both endpoints.
pub fn assert_solution_invariants(
    net: &Network,
    model: &gridshield::ModelIR,
    map: &gridshield::formulation::ExtensiveMap,
    sol: &gridshield::solver::Solution,
) {
    use gridshield::formulation::{extract_plan, extract_schedule};
    let report = gridshield::milp::check_point(model, &sol.values, 1e-6).unwrap();
    assert!(report.is_feasible(), "{:?}", report.worst());
    let plan = extract_plan(model, sol, map).unwrap();
    let admissible = [(false, false, true), (true, false, true), (true, true, false)];
    for (s, sc) in map.scenarios.iter().enumerate() {
        let sch = extract_schedule(model, sol, map, s).unwrap();
        for l in 0..net.num_lines() {
            let (i, j) = net.endpoints(l);
            for t in 0..sc.steps {
                let mut ends_on = true;
                for n in 0..2 {
                    let end = gridshield::network::LineEnd::BOTH[n];
                    let xc = plan.sectionalized(net, l, end);
                    let woe = sol.values[sc.woe[l][n][t].index()] > 0.5;
                    let triple = (xc, sch.yc[l][n][t], woe);
                    assert!(admissible.contains(&triple), "scenario {s} line {l} end {n} t {t}: {triple:?}");
                    ends_on &= woe;
                }
                assert_eq!(sch.wo[l][t], ends_on);
                let k = plan.hardening[l];
                assert_eq!(sch.u[l][t], sc.zeta[l][k][t] == 1);
                if sch.u[l][t] {
                    assert!(!sch.wm[i][t] && !sch.wm[j][t], "damaged line {l} leaves an endpoint live");
                }
            }
        }
        for b in 0..net.num_buses() {
            for t in 0..sc.steps {
                if !sch.wm[b][t] {
                    assert!(sch.v[b][t].abs() <= 1e-8, "V = {}", sch.v[b][t]);
                    assert!(sch.shed_ratio[b][t] >= 1.0 - 1e-6);
                }
            }
        }
    }
}
