mod common;

use std::fs;
use std::path::PathBuf;

use common::{calm, chain, solver};
use gridshield::formulation::{build_extensive_form, PlanFile};
use gridshield::hazard::{HazardConfig, Scenario, ScenarioSet};
use gridshield::network::Network;
use gridshield::report::{
    breakdown_csv, compare_rod, comparison_svg, cost_breakdown, emit_report, savings_pct,
    summary_csv, ComparisonReport, ComparisonRow, CostBreakdown, ReportError, ScenarioCost,
    SUMMARY_COLUMNS,
};
use gridshield::solver::solve;

/// One-step scenarios on `net`; `damaged[s]` lists lines down under every
/// pole option in scenario `s`.
fn one_step(net: &Network, probs: &[f64], damaged: &[Vec<usize>]) -> ScenarioSet {
    let k = net.num_pole_options();
    let cfg = HazardConfig {
        horizon_steps: 1,
        ..Default::default()
    };
    let scenarios = probs
        .iter()
        .zip(damaged)
        .enumerate()
        .map(|(s, (&p, down))| Scenario {
            id: s as u32 + 1,
            probability: p,
            wind: vec![0.0],
            zeta: (0..net.num_lines())
                .map(|l| vec![vec![u8::from(down.contains(&l))]; k])
                .collect(),
            chi: vec![vec![0.0; k]; net.num_lines()],
            p_load: net.buses.iter().map(|b| vec![b.base_p_load.at(0)]).collect(),
            q_load: net.buses.iter().map(|b| vec![b.base_q_load.at(0)]).collect(),
        })
        .collect();
    ScenarioSet {
        seed: 0,
        config_digest: "hand-written".into(),
        config: cfg,
        scenarios,
    }
}

fn breakdown(net: &Network, set: &ScenarioSet) -> CostBreakdown {
    let (model, map) = build_extensive_form(net, set, &Default::default()).unwrap();
    let sol = solve(&model, &solver()).unwrap();
    common::assert_solution_invariants(net, &model, &map, &sol);
    cost_breakdown(&model, &sol, &map, net).unwrap()
}

#[test]
fn shed_cost_is_weighted_by_probability() {
    // The only line fails under both options in the 0.1 scenario, so the
    // 100 kW bus sheds for one 2 h step at $14/kWh.
    let net = chain(&[(100.0, 40.0)], &[0.5, 0.1]);
    let set = one_step(&net, &[0.1, 0.9], &[vec![0], vec![]]);
    let b = breakdown(&net, &set);
    assert!((b.load_shed - 280.0).abs() < 1e-6, "{b:?}");
    assert_eq!((b.investment, b.repair), (0.0, 0.0));
    assert!((b.per_scenario[0].load_shed - 2800.0).abs() < 1e-6);
    assert!(b.per_scenario[1].load_shed.abs() < 1e-6);
    assert!((b.total - 280.0).abs() < 1e-6);
}

#[test]
fn dg_operation_cost() {
    // Bus 2 is cut off from the substation behind an existing switch and
    // fed only by a free 400 kW DG.
    let mut net = chain(&[(0.0, 0.0), (400.0, 100.0)], &[0.5, 0.1]);
    net.lines[1].existing_sectionalizer_from = true;
    let bus = &mut net.buses[2];
    bus.dg_candidate = true;
    bus.dg_p_max = 400.0;
    bus.dg_q_max = 300.0;
    let set = one_step(&net, &[1.0], &[vec![0]]);
    let b = breakdown(&net, &set);
    assert!((b.dg_operation - 6400.0).abs() < 1e-6, "{b:?}");
    assert!(b.load_shed.abs() < 1e-6);
    assert!((b.total - 6400.0).abs() < 1e-6);
}

#[test]
fn calm_comparison_saves_nothing() {
    let net = common::ieee15();
    let set = calm(&net, 2, 3);
    let (report, plan) = compare_rod(&net, &set, &Default::default(), &solver()).unwrap();
    assert_eq!(report.rows.len(), 3);
    for r in &report.rows {
        assert_eq!(r.savings_pct, 0.0);
        assert!(r.shed_with.abs() < 1e-6 && r.shed_without.abs() < 1e-6);
        assert_eq!(r.repair, 0.0);
    }
    assert_eq!(report.breakdown_with.investment, 0.0);
    assert_eq!(report.breakdown_without.investment, 0.0);
    assert_eq!(plan.investment_cost(&net), 0.0);
    assert!(report.total_with <= report.total_without * (1.0 + 2.0 * solver().mip_gap));
}

#[test]
fn savings_convention() {
    assert_eq!(savings_pct(0.0, 0.0), 0.0);
    assert_eq!(savings_pct(90.0, 100.0), 10.0);
    assert_eq!(savings_pct(5.0, 0.0), -100.0);
    assert_eq!(savings_pct(110.0, 100.0), -10.0);
}

fn cost(id: u32, shed: f64) -> ScenarioCost {
    ScenarioCost {
        scenario_id: id,
        probability: 0.1,
        load_shed: shed,
        dg_operation: 0.0,
        repair: 4000.0,
    }
}

/// Hand-built report with exactly representable numbers.
fn sample_report(n: u32) -> ComparisonReport {
    let with: Vec<_> = (1..=n).map(|i| cost(i, 1000.0 * i as f64)).collect();
    let without: Vec<_> = (1..=n).map(|i| cost(i, 1250.0 * i as f64)).collect();
    let rows = with
        .iter()
        .zip(&without)
        .map(|(w, o)| ComparisonRow {
            scenario_id: w.scenario_id,
            shed_with: w.load_shed,
            shed_without: o.load_shed,
            savings_pct: savings_pct(w.load_shed, o.load_shed),
            dg_op: 0.0,
            repair: w.repair,
            total: w.total(),
        })
        .collect();
    let bd = |per: Vec<ScenarioCost>, investment: f64| {
        let shed = per.iter().map(|c| 0.1 * c.load_shed).sum::<f64>();
        let repair = per.iter().map(|c| 0.1 * c.repair).sum::<f64>();
        CostBreakdown {
            investment,
            load_shed: shed,
            dg_operation: 0.0,
            repair,
            expected_second_stage: shed + repair,
            total: investment + shed + repair,
            per_scenario: per,
        }
    };
    let bw = bd(with, 1500.0);
    let bo = bd(without, 0.0);
    ComparisonReport {
        rows,
        mean_savings_pct: 20.0,
        total_with: bw.total,
        total_without: bo.total,
        total_savings_pct: savings_pct(bw.total, bo.total),
        gap_with: 0.0,
        gap_without: 0.0,
        plan: PlanFile::default(),
        breakdown_with: bw,
        breakdown_without: bo,
    }
}

#[test]
fn emitted_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = sample_report(10);
    let files = emit_report(&report, dir.path()).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
    assert_eq!(names, ["summary.csv", "breakdown.csv", "comparison.svg"]);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<_> = summary.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], SUMMARY_COLUMNS.join(","));
    assert!(fs::read_to_string(dir.path().join("breakdown.csv"))
        .unwrap()
        .starts_with("component,value\n"));

    let again = tempfile::tempdir().unwrap();
    emit_report(&report, again.path()).unwrap();
    for name in names {
        assert_eq!(fs::read(dir.path().join(name)).unwrap(), fs::read(again.path().join(name)).unwrap());
    }
}

#[test]
fn empty_report_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = sample_report(1);
    report.rows.clear();
    assert!(matches!(emit_report(&report, &dir.path().join("out")), Err(ReportError::Empty)));
    assert!(!dir.path().join("out").exists());
}

/// Set `GRIDSHIELD_BLESS=1` to rewrite the golden files.
fn golden(name: &str, actual: &str) {
    let path: PathBuf = common::fixture("golden").join(name);
    if std::env::var_os("GRIDSHIELD_BLESS").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} drifted from its golden copy");
}

#[test]
fn golden_report_files() {
    let report = sample_report(3);
    golden("summary.csv", &summary_csv(&report));
    golden("breakdown.csv", &breakdown_csv(&report));
    golden("comparison.svg", &comparison_svg(&report));
}
