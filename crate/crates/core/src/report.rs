//! Cost decomposition and the with/without-investment comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    build_extensive_form, extract_plan, extract_schedule, fix_plan, ExtensiveMap,
    FormulationError, FormulationOptions, PlanDecision, PlanFile,
};
use crate::hazard::ScenarioSet;
use crate::network::Network;
use crate::solver::{solve, Solution, SolverConfig, SolverError};
use crate::ModelIR;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("recomputed total {recomputed} differs from solver objective {reported}")]
    Mismatch { recomputed: f64, reported: f64 },
    #[error("{0} solve did not return a solution ({1:?})")]
    NoSolution(&'static str, crate::solver::SolveStatus),
    #[error("report has no scenarios")]
    Empty,
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Recourse cost of one scenario under the plan, unweighted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCost {
    pub scenario_id: u32,
    pub probability: f64,
    pub load_shed: f64,
    pub dg_operation: f64,
    pub repair: f64,
}

impl ScenarioCost {
    pub fn total(&self) -> f64 {
        self.load_shed + self.dg_operation + self.repair
    }
}

/// Objective split into its terms. `load_shed`, `dg_operation` and `repair`
/// are expectations (weighted by `w_H` and scenario probability), so
/// `investment + load_shed + dg_operation + repair == total`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub investment: f64,
    pub load_shed: f64,
    pub dg_operation: f64,
    pub repair: f64,
    pub expected_second_stage: f64,
    pub total: f64,
    pub per_scenario: Vec<ScenarioCost>,
}

/// Relative tolerance between recomputed and solver objectives.
pub const BREAKDOWN_TOL: f64 = 1e-6;

/// Recomputes every cost term from extracted values and input data.
pub fn cost_breakdown(
    model: &ModelIR,
    solution: &Solution,
    map: &ExtensiveMap,
    net: &Network,
) -> Result<CostBreakdown, ReportError> {
    let plan = extract_plan(model, solution, map)?;
    let investment = plan.investment_cost(net);
    let mut per_scenario = Vec::with_capacity(map.scenarios.len());
    for (s, sc) in map.scenarios.iter().enumerate() {
        let sch = extract_schedule(model, solution, map, s)?;
        let mut load_shed = 0.0;
        let mut dg_operation = 0.0;
        for (b, bus) in net.buses.iter().enumerate() {
            for t in 0..sc.steps {
                load_shed += bus.shed_cost * sch.shed_ratio[b][t] * sc.p_load[b][t] * sc.dt_hours;
                dg_operation += bus.dg_op_cost * sch.pg[b][t] * sc.dt_hours;
            }
        }
        per_scenario.push(ScenarioCost {
            scenario_id: sc.id,
            probability: sc.probability,
            load_shed,
            dg_operation,
            repair: sch.repair.iter().sum(),
        });
    }
    let weighted = |f: fn(&ScenarioCost) -> f64| -> f64 {
        per_scenario
            .iter()
            .map(|c| map.w_h * c.probability * f(c))
            .sum()
    };
    let load_shed = weighted(|c| c.load_shed);
    let dg_operation = weighted(|c| c.dg_operation);
    let repair = weighted(|c| c.repair);
    let expected_second_stage = load_shed + dg_operation + repair;
    let total = investment + expected_second_stage;
    let reported = solution.objective_value;
    if (total - reported).abs() > BREAKDOWN_TOL * reported.abs().max(1.0) {
        return Err(ReportError::Mismatch {
            recomputed: total,
            reported,
        });
    }
    Ok(CostBreakdown {
        investment,
        load_shed,
        dg_operation,
        repair,
        expected_second_stage,
        total,
        per_scenario,
    })
}

/// `100 (without - with) / without`; 0 when both are 0 and -100 when only
/// the with-investment cost is positive.
pub fn savings_pct(with: f64, without: f64) -> f64 {
    if without > 0.0 {
        100.0 * (without - with) / without
    } else if with > 0.0 {
        -100.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario_id: u32,
    pub shed_with: f64,
    pub shed_without: f64,
    pub savings_pct: f64,
    pub dg_op: f64,
    pub repair: f64,
    /// Recourse cost of the scenario under the chosen plan.
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub mean_savings_pct: f64,
    pub total_with: f64,
    pub total_without: f64,
    /// Savings on the full objective.
    pub total_savings_pct: f64,
    pub gap_with: f64,
    pub gap_without: f64,
    pub plan: PlanFile,
    pub breakdown_with: CostBreakdown,
    pub breakdown_without: CostBreakdown,
}

/// Solves with a free first stage and with the baseline plan fixed, on the
/// same scenarios.
pub fn compare_rod(
    net: &Network,
    set: &ScenarioSet,
    opts: &FormulationOptions,
    cfg: &SolverConfig,
) -> Result<(ComparisonReport, PlanDecision), ReportError> {
    compare_plan(net, set, opts, cfg, None)
}

/// Like [`compare_rod`], but with the first stage pinned to `plan` when one
/// is given.
pub fn compare_plan(
    net: &Network,
    set: &ScenarioSet,
    opts: &FormulationOptions,
    cfg: &SolverConfig,
    plan: Option<&PlanDecision>,
) -> Result<(ComparisonReport, PlanDecision), ReportError> {
    let (mut model, map) = build_extensive_form(net, set, opts)?;
    let mut fixed = model.clone();
    if let Some(plan) = plan {
        fix_plan(&mut model, &map, net, plan)?;
    }
    fix_plan(&mut fixed, &map, net, &PlanDecision::baseline(net))?;
    let (with, without) = rayon::join(|| solve(&model, cfg), || solve(&fixed, cfg));
    let (with, without) = (with?, without?);
    if !with.status.has_solution() {
        return Err(ReportError::NoSolution("with-investment", with.status));
    }
    if !without.status.has_solution() {
        return Err(ReportError::NoSolution("baseline", without.status));
    }
    let bw = cost_breakdown(&model, &with, &map, net)?;
    let bo = cost_breakdown(&fixed, &without, &map, net)?;
    let plan = extract_plan(&model, &with, &map)?;
    let rows: Vec<ComparisonRow> = bw
        .per_scenario
        .iter()
        .zip(&bo.per_scenario)
        .map(|(w, o)| ComparisonRow {
            scenario_id: w.scenario_id,
            shed_with: w.load_shed,
            shed_without: o.load_shed,
            savings_pct: savings_pct(w.load_shed, o.load_shed),
            dg_op: w.dg_operation,
            repair: w.repair,
            total: w.total(),
        })
        .collect();
    let mean_savings_pct = rows.iter().map(|r| r.savings_pct).sum::<f64>() / rows.len() as f64;
    let report = ComparisonReport {
        mean_savings_pct,
        total_with: bw.total,
        total_without: bo.total,
        total_savings_pct: savings_pct(bw.total, bo.total),
        gap_with: with.gap,
        gap_without: without.gap,
        plan: plan.to_file(net),
        rows,
        breakdown_with: bw,
        breakdown_without: bo,
    };
    Ok((report, plan))
}

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "scenario_id",
    "shed_with",
    "shed_without",
    "savings_pct",
    "dg_op",
    "repair",
    "total",
];

pub fn summary_csv(report: &ComparisonReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.scenario_id.to_string(),
            r.shed_with.to_string(),
            r.shed_without.to_string(),
            r.savings_pct.to_string(),
            r.dg_op.to_string(),
            r.repair.to_string(),
            r.total.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn breakdown_csv(report: &ComparisonReport) -> String {
    let b = &report.breakdown_with;
    let o = &report.breakdown_without;
    let rows = [
        ("investment", b.investment),
        ("load_shed", b.load_shed),
        ("dg_operation", b.dg_operation),
        ("repair", b.repair),
        ("expected_second_stage", b.expected_second_stage),
        ("total", b.total),
        ("baseline_load_shed", o.load_shed),
        ("baseline_repair", o.repair),
        ("baseline_total", o.total),
        ("mean_savings_pct", report.mean_savings_pct),
        ("total_savings_pct", report.total_savings_pct),
    ];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["component", "value"]).expect("in-memory write");
    for (name, value) in rows {
        w.write_record([name.to_string(), value.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Grouped bar chart of per-scenario shedding cost.
pub fn comparison_svg(report: &ComparisonReport) -> String {
    let (w, h) = (720.0, 360.0);
    let (left, bottom, top) = (70.0, 40.0, 30.0);
    let plot_w = w - left - 20.0;
    let plot_h = h - bottom - top;
    let max = report
        .rows
        .iter()
        .flat_map(|r| [r.shed_with, r.shed_without])
        .fold(0.0f64, f64::max)
        .max(1.0);
    let group = plot_w / report.rows.len().max(1) as f64;
    let bar = group * 0.35;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="18">Load-shedding cost per scenario ($)</text>"#);
    let base = h - bottom;
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{base}" x2="{:.2}" y2="{base}" stroke="#000"/>"##,
        w - 20.0
    );
    let _ = writeln!(s, r##"<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="#000"/>"##);
    let _ = writeln!(s, r#"<text x="4" y="{:.2}">{:.0}</text>"#, top + 4.0, max);
    let _ = writeln!(s, r#"<text x="4" y="{base}">0</text>"#);
    for (i, r) in report.rows.iter().enumerate() {
        let x0 = left + i as f64 * group + group * 0.15;
        for (j, (value, colour)) in [(r.shed_without, "#b0b0b0"), (r.shed_with, "#2f6fb0")]
            .into_iter()
            .enumerate()
        {
            let bh = plot_h * value / max;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#,
                x0 + j as f64 * bar,
                base - bh,
                bar,
                bh
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x0 + bar,
            base + 16.0,
            r.scenario_id
        );
    }
    let lx = w - 200.0;
    let _ = writeln!(s, r##"<rect x="{lx}" y="8" width="10" height="10" fill="#b0b0b0"/>"##);
    let _ = writeln!(s, r#"<text x="{}" y="17">without investment</text>"#, lx + 14.0);
    let _ = writeln!(s, r##"<rect x="{lx}" y="22" width="10" height="10" fill="#2f6fb0"/>"##);
    let _ = writeln!(s, r#"<text x="{}" y="31">with investment</text>"#, lx + 14.0);
    s.push_str("</svg>\n");
    s
}

/// Writes `summary.csv`, `breakdown.csv` and `comparison.svg` into `out_dir`.
pub fn emit_report(report: &ComparisonReport, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if report.rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let files = [
        ("summary.csv", summary_csv(report)),
        ("breakdown.csv", breakdown_csv(report)),
        ("comparison.svg", comparison_svg(report)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
