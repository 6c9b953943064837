//! Extensive-form assembly of the two-stage hardening model.
//!
//! First stage: pole option per line (`xh`), DG siting (`xg`), new
//! sectionalizers (`xc1`) and the resulting sectionalizer state (`xc`).
//! Second stage, per scenario and step: switch actions, line on/off state,
//! LinDistFlow flows and voltages, node energization, shedding and DG
//! dispatch.
//!
//! Damage `u` and repair cost `c^r` are affine in `xh` with data
//! coefficients, so they enter rows and the objective as expressions in
//! `xh` instead of as variables of their own. `y^c` is declared continuous:
//! the switch rows pin it to 0 or 1 once `xc` and the per-end `w^o` are
//! integral.

mod plan;
mod schedule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hazard::{HazardError, Scenario, ScenarioSet};
use crate::milp::{ModelError, RowSense, VarRef};
use crate::network::{validate_network, LineEnd, Network, Orientation};
use crate::solver::SolveStatus;
use crate::ModelIR;

pub use plan::{extract_plan, fix_plan, PlanDecision, PlanFile, PlanHardening, PlanSectionalizer};
pub use schedule::{extract_schedule, write_schedule_csv, OperationalSchedule};

/// Binary values further than this from 0 or 1 are rejected on extraction.
pub const INTEGRALITY_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] HazardError),
    #[error("network is invalid: {0}")]
    InvalidNetwork(String),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("solution has no point to extract (status {0:?})")]
    NoSolution(SolveStatus),
    #[error("variable {var} = {value} is not within {INTEGRALITY_TOL} of 0 or 1")]
    Integrality { var: String, value: f64 },
    #[error("scenario position {0} out of range")]
    UnknownScenario(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormulationOptions {
    /// Also cap DG output by node energization (`P^g <= w^m P^g,max`).
    pub dg_requires_energized: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstStageMap {
    /// `[line][option]`
    pub xh: Vec<Vec<VarRef>>,
    /// `[bus]`; fixed to 0 where the bus is not a DG candidate.
    pub xg: Vec<VarRef>,
    /// `[line][end]`
    pub xc1: Vec<[VarRef; 2]>,
    /// `[line][end]`
    pub xc: Vec<[VarRef; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioMap {
    pub id: u32,
    pub probability: f64,
    pub steps: usize,
    pub dt_hours: f64,
    /// `[line][end][t]`, continuous but integral at any feasible point.
    pub yc: Vec<[Vec<VarRef>; 2]>,
    /// Per-end on/off `[line][end][t]`.
    pub woe: Vec<[Vec<VarRef>; 2]>,
    /// Line on/off, the AND of both ends: `[line][t]`.
    pub wo: Vec<Vec<VarRef>>,
    pub p: Vec<Vec<VarRef>>,
    pub q: Vec<Vec<VarRef>>,
    /// `[bus][t]`
    pub wm: Vec<Vec<VarRef>>,
    pub v: Vec<Vec<VarRef>>,
    pub yr: Vec<Vec<VarRef>>,
    /// `[bus][t]`, present only at DG candidates.
    pub pg: Vec<Option<Vec<VarRef>>>,
    pub qg: Vec<Option<Vec<VarRef>>>,
    /// Substation injection `[t]`.
    pub psub: Vec<VarRef>,
    pub qsub: Vec<VarRef>,
    /// Scenario data kept for extraction: damage `[line][option][t]`.
    pub zeta: Vec<Vec<Vec<u8>>>,
    /// Repair cost `[line][option]`.
    pub chi: Vec<Vec<f64>>,
    /// Loads `[bus][t]`.
    pub p_load: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensiveMap {
    pub first: FirstStageMap,
    pub scenarios: Vec<ScenarioMap>,
    pub substation: usize,
    pub w_h: f64,
}

fn line_tag(net: &Network, l: usize) -> String {
    let line = &net.lines[l];
    format!("{}_{}", line.from_bus, line.to_bus)
}

pub fn build_first_stage(net: &Network, model: &mut ModelIR) -> Result<FirstStageMap, FormulationError> {
    let k = net.num_pole_options();
    let mut xh = Vec::with_capacity(net.num_lines());
    for l in 0..net.num_lines() {
        let tag = line_tag(net, l);
        let row = (0..k)
            .map(|o| model.add_binary(format!("xh_{tag}_{o}")))
            .collect::<Result<Vec<_>, _>>()?;
        xh.push(row);
    }
    let mut xg = Vec::with_capacity(net.num_buses());
    for bus in &net.buses {
        let v = model.add_binary(format!("xg_{}", bus.id))?;
        if !bus.dg_candidate {
            model.fix(v, 0.0)?;
        }
        xg.push(v);
    }
    let mut xc1 = Vec::with_capacity(net.num_lines());
    for (l, line) in net.lines.iter().enumerate() {
        let tag = line_tag(net, l);
        let mut ends = Vec::with_capacity(2);
        for end in LineEnd::BOTH {
            let v = model.add_binary(format!("xc1_{tag}_{}", line.end_bus(end)))?;
            if line.existing_sectionalizer(end) {
                model.fix(v, 0.0)?;
            }
            ends.push(v);
        }
        xc1.push([ends[0], ends[1]]);
    }
    let mut xc = Vec::with_capacity(net.num_lines());
    for (l, line) in net.lines.iter().enumerate() {
        let tag = line_tag(net, l);
        let f = model.add_binary(format!("xc_{tag}_{}", line.from_bus))?;
        let t = model.add_binary(format!("xc_{tag}_{}", line.to_bus))?;
        xc.push([f, t]);
    }

    for (l, row) in xh.iter().enumerate() {
        let terms = row.iter().map(|&v| (v, 1.0)).collect();
        model.constrain(format!("onehot_{}", line_tag(net, l)), terms, RowSense::Eq, 1.0)?;
    }
    model.constrain(
        "dg_budget",
        xg.iter().map(|&v| (v, 1.0)).collect(),
        RowSense::Le,
        net.params.n_g_max as f64,
    )?;
    for (l, line) in net.lines.iter().enumerate() {
        let tag = line_tag(net, l);
        for end in LineEnd::BOTH {
            let n = end.index();
            let existing = if line.existing_sectionalizer(end) { 1.0 } else { 0.0 };
            model.constrain(
                format!("xc_sum_{tag}_{}", line.end_bus(end)),
                vec![(xc[l][n], 1.0), (xc1[l][n], -1.0)],
                RowSense::Eq,
                existing,
            )?;
        }
    }

    for (l, line) in net.lines.iter().enumerate() {
        for (o, &v) in xh[l].iter().enumerate() {
            model.add_objective_term(v, line.hardening_costs[o])?;
        }
        for n in 0..2 {
            model.add_objective_term(xc1[l][n], line.sectionalizer_cost)?;
        }
    }
    for (b, bus) in net.buses.iter().enumerate() {
        model.add_objective_term(xg[b], bus.dg_install_cost)?;
    }
    Ok(FirstStageMap { xh, xg, xc1, xc })
}

/// Adds the recourse block of the scenario at position `pos`.
#[allow(clippy::too_many_arguments)]
pub fn build_second_stage(
    net: &Network,
    scenario: &Scenario,
    pos: usize,
    dt_hours: f64,
    first: &FirstStageMap,
    opts: &FormulationOptions,
    model: &mut ModelIR,
) -> Result<ScenarioMap, FormulationError> {
    scenario.check(net, pos)?;
    let sub = net
        .substation()
        .ok_or_else(|| FormulationError::InvalidNetwork("no substation".into()))?;

    let steps = scenario.steps();
    let nl = net.num_lines();
    let nb = net.num_buses();
    let s = format!("s{pos}");
    let tags: Vec<String> = (0..nl).map(|l| line_tag(net, l)).collect();

    let per_end = |model: &mut ModelIR, fam: &str, binary: bool| -> Result<Vec<[Vec<VarRef>; 2]>, ModelError> {
        let mut out = Vec::with_capacity(nl);
        for (l, line) in net.lines.iter().enumerate() {
            let mut ends: [Vec<VarRef>; 2] = Default::default();
            for end in LineEnd::BOTH {
                for t in 0..steps {
                    let name = format!("{fam}_{s}_{}_{}_t{t}", tags[l], line.end_bus(end));
                    let v = if binary {
                        model.add_binary(name)?
                    } else {
                        model.add_continuous(name, Some(0.0), Some(1.0))?
                    };
                    ends[end.index()].push(v);
                }
            }
            out.push(ends);
        }
        Ok(out)
    };
    let yc = per_end(model, "yc", false)?;
    let woe = per_end(model, "woe", true)?;

    let per_line = |model: &mut ModelIR, fam: &str, bounds: &dyn Fn(usize) -> Option<(f64, f64)>| {
        let mut out = Vec::with_capacity(nl);
        for l in 0..nl {
            let row = (0..steps)
                .map(|t| {
                    let name = format!("{fam}_{s}_{}_t{t}", tags[l]);
                    match bounds(l) {
                        None => model.add_binary(name),
                        Some((lo, hi)) => model.add_continuous(name, Some(lo), Some(hi)),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.push(row);
        }
        Ok::<_, ModelError>(out)
    };
    let wo = per_line(model, "wo", &|_| None)?;
    let p = per_line(model, "p", &|l| Some((-net.lines[l].p_max, net.lines[l].p_max)))?;
    let q = per_line(model, "q", &|l| Some((-net.lines[l].q_max, net.lines[l].q_max)))?;

    let per_bus = |model: &mut ModelIR, fam: &str, bounds: &dyn Fn(usize) -> Option<(f64, f64)>| {
        let mut out = Vec::with_capacity(nb);
        for (b, bus) in net.buses.iter().enumerate() {
            let row = (0..steps)
                .map(|t| {
                    let name = format!("{fam}_{s}_{}_t{t}", bus.id);
                    match bounds(b) {
                        None => model.add_binary(name),
                        Some((lo, hi)) => model.add_continuous(name, Some(lo), Some(hi)),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.push(row);
        }
        Ok::<_, ModelError>(out)
    };
    let wm = per_bus(model, "wm", &|_| None)?;
    let v = per_bus(model, "v", &|b| Some((0.0, net.buses[b].v_max)))?;
    let yr = per_bus(model, "yr", &|_| Some((0.0, 1.0)))?;

    let mut dg = |fam: &str, cap: fn(&crate::network::Bus) -> f64| -> Result<Vec<Option<Vec<VarRef>>>, ModelError> {
        net.buses
            .iter()
            .map(|bus| {
                if !bus.dg_candidate {
                    return Ok(None);
                }
                (0..steps)
                    .map(|t| model.add_continuous(format!("{fam}_{s}_{}_t{t}", bus.id), Some(0.0), Some(cap(bus))))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Some)
            })
            .collect()
    };
    let pg = dg("pg", |b| b.dg_p_max)?;
    let qg = dg("qg", |b| b.dg_q_max)?;

    let (pcap, qcap) = net.substation_capacity();
    let sub_id = net.buses[sub].id;
    let psub = (0..steps)
        .map(|t| model.add_continuous(format!("psub_{s}_{sub_id}_t{t}"), Some(0.0), Some(pcap)))
        .collect::<Result<Vec<_>, _>>()?;
    let qsub = (0..steps)
        .map(|t| model.add_continuous(format!("qsub_{s}_{sub_id}_t{t}"), Some(-qcap), Some(qcap)))
        .collect::<Result<Vec<_>, _>>()?;

    let m1 = net.big_m1();
    let v0 = net.params.v0;
    let eps = net.params.epsilon1;
    let k = net.num_pole_options();
    let incident: Vec<_> = (0..nb).map(|b| net.incident_at(b)).collect();

    for t in 0..steps {
        for (l, line) in net.lines.iter().enumerate() {
            let tag = &tags[l];
            for end in LineEnd::BOTH {
                let n = end.index();
                let nid = line.end_bus(end);
                let (xc, yc, woe) = (first.xc[l][n], yc[l][n][t], woe[l][n][t]);
                model.constrain(format!("sw1_{s}_{tag}_{nid}_t{t}"), vec![(yc, 1.0), (xc, -1.0)], RowSense::Le, 0.0)?;
                model.constrain(
                    format!("sw2_{s}_{tag}_{nid}_t{t}"),
                    vec![(xc, 1.0), (yc, 1.0), (woe, 2.0)],
                    RowSense::Ge,
                    2.0,
                )?;
                model.constrain(format!("sw3_{s}_{tag}_{nid}_t{t}"), vec![(woe, 1.0), (yc, 1.0)], RowSense::Le, 1.0)?;
                model.constrain(format!("and_{s}_{tag}_{nid}_t{t}"), vec![(wo[l][t], 1.0), (woe, -1.0)], RowSense::Le, 0.0)?;
            }
            model.constrain(
                format!("and_{s}_{tag}_t{t}"),
                vec![(wo[l][t], 1.0), (woe[l][0][t], -1.0), (woe[l][1][t], -1.0)],
                RowSense::Ge,
                -1.0,
            )?;
            for (fam, var, cap) in [("p", &p, line.p_max), ("q", &q, line.q_max)] {
                model.constrain(format!("{fam}max_{s}_{tag}_t{t}"), vec![(var[l][t], 1.0), (wo[l][t], -cap)], RowSense::Le, 0.0)?;
                model.constrain(format!("{fam}min_{s}_{tag}_t{t}"), vec![(var[l][t], 1.0), (wo[l][t], cap)], RowSense::Ge, 0.0)?;
            }

            // V_j = V_i - (R P + X Q)/V0 whenever the line is on
            let (i, j) = net.endpoints(l);
            let drop = vec![
                (v[j][t], 1.0),
                (v[i][t], -1.0),
                (p[l][t], net.drop_per_kw(line)),
                (q[l][t], net.drop_per_kvar(line)),
            ];
            let mut hi = drop.clone();
            hi.push((wo[l][t], m1));
            model.constrain(format!("vdrop_hi_{s}_{tag}_t{t}"), hi, RowSense::Le, m1)?;
            let mut lo = drop;
            lo.push((wo[l][t], -m1));
            model.constrain(format!("vdrop_lo_{s}_{tag}_t{t}"), lo, RowSense::Ge, -m1)?;

            let damage: Vec<(VarRef, f64)> = (0..k)
                .filter(|&o| scenario.zeta[l][o][t] != 0)
                .map(|o| (first.xh[l][o], 1.0))
                .collect();
            if !damage.is_empty() {
                for b in [i, j] {
                    let mut terms = damage.clone();
                    terms.push((wm[b][t], 1.0));
                    model.constrain(
                        format!("dmg_{s}_{tag}_{}_t{t}", net.buses[b].id),
                        terms,
                        RowSense::Le,
                        1.0,
                    )?;
                }
            }
        }

        for (b, bus) in net.buses.iter().enumerate() {
            let id = bus.id;
            let pl = scenario.p_load[b][t];
            let ql = scenario.q_load[b][t];
            let flows = |var: &Vec<Vec<VarRef>>| -> Vec<(VarRef, f64)> {
                incident[b]
                    .iter()
                    .map(|inc| {
                        let sign = match inc.orientation {
                            Orientation::Outgoing => 1.0,
                            Orientation::Incoming => -1.0,
                        };
                        (var[inc.line][t], sign)
                    })
                    .collect()
            };
            let mut pb = flows(&p);
            let mut qb = flows(&q);
            if let Some(pg) = &pg[b] {
                pb.push((pg[t], -1.0));
            }
            if let Some(qg) = &qg[b] {
                qb.push((qg[t], -1.0));
            }
            if b == sub {
                pb.push((psub[t], -1.0));
                qb.push((qsub[t], -1.0));
            }
            if pl != 0.0 {
                pb.push((yr[b][t], -pl));
            }
            if ql != 0.0 {
                qb.push((yr[b][t], -ql));
            }
            if eps != 0.0 {
                pb.push((v[b][t], eps));
            }
            model.constrain(format!("pbal_{s}_{id}_t{t}"), pb, RowSense::Eq, -pl)?;
            model.constrain(format!("qbal_{s}_{id}_t{t}"), qb, RowSense::Eq, -ql)?;

            if b == sub {
                model.constrain(format!("vsub_{s}_{id}_t{t}"), vec![(v[b][t], 1.0), (wm[b][t], -v0)], RowSense::Eq, 0.0)?;
                model.constrain(format!("psub_cap_{s}_{id}_t{t}"), vec![(psub[t], 1.0), (wm[b][t], -pcap)], RowSense::Le, 0.0)?;
                model.constrain(format!("qsub_hi_{s}_{id}_t{t}"), vec![(qsub[t], 1.0), (wm[b][t], -qcap)], RowSense::Le, 0.0)?;
                model.constrain(format!("qsub_lo_{s}_{id}_t{t}"), vec![(qsub[t], 1.0), (wm[b][t], qcap)], RowSense::Ge, 0.0)?;
            } else {
                model.constrain(format!("vmin_{s}_{id}_t{t}"), vec![(v[b][t], 1.0), (wm[b][t], -bus.v_min)], RowSense::Ge, 0.0)?;
                model.constrain(format!("vmax_{s}_{id}_t{t}"), vec![(v[b][t], 1.0), (wm[b][t], -bus.v_max)], RowSense::Le, 0.0)?;
            }
            model.constrain(format!("shed_{s}_{id}_t{t}"), vec![(yr[b][t], 1.0), (wm[b][t], 1.0)], RowSense::Ge, 1.0)?;

            for (fam, var, cap) in [("pg", &pg[b], bus.dg_p_max), ("qg", &qg[b], bus.dg_q_max)] {
                let Some(var) = var else { continue };
                model.constrain(format!("{fam}_cap_{s}_{id}_t{t}"), vec![(var[t], 1.0), (first.xg[b], -cap)], RowSense::Le, 0.0)?;
                if opts.dg_requires_energized {
                    model.constrain(format!("{fam}_live_{s}_{id}_t{t}"), vec![(var[t], 1.0), (wm[b][t], -cap)], RowSense::Le, 0.0)?;
                }
            }
        }
    }

    let weight = net.params.w_h * scenario.probability;
    for (b, bus) in net.buses.iter().enumerate() {
        for t in 0..steps {
            let shed = weight * bus.shed_cost * scenario.p_load[b][t] * dt_hours;
            if shed != 0.0 {
                model.add_objective_term(yr[b][t], shed)?;
            }
            if let Some(pg) = &pg[b] {
                model.add_objective_term(pg[t], weight * bus.dg_op_cost * dt_hours)?;
            }
        }
    }
    for l in 0..nl {
        for o in 0..k {
            let chi = scenario.chi[l][o];
            if chi != 0.0 {
                model.add_objective_term(first.xh[l][o], weight * chi)?;
            }
        }
    }

    Ok(ScenarioMap {
        id: scenario.id,
        probability: scenario.probability,
        steps,
        dt_hours,
        yc,
        woe,
        wo,
        p,
        q,
        wm,
        v,
        yr,
        pg,
        qg,
        psub,
        qsub,
        zeta: scenario.zeta.clone(),
        chi: scenario.chi.clone(),
        p_load: scenario.p_load.clone(),
    })
}

/// First stage plus one recourse block per scenario, in scenario order.
pub fn build_extensive_form(
    net: &Network,
    set: &ScenarioSet,
    opts: &FormulationOptions,
) -> Result<(ModelIR, ExtensiveMap), FormulationError> {
    let report = validate_network(net);
    if let Some(first) = report.errors.first() {
        return Err(FormulationError::InvalidNetwork(format!(
            "{} ({}): {}",
            first.code, first.location, first.message
        )));
    }
    set.check(net)?;
    let mut model = ModelIR::new("gridshield");
    let first = build_first_stage(net, &mut model)?;
    let scenarios = set
        .scenarios
        .iter()
        .enumerate()
        .map(|(pos, sc)| build_second_stage(net, sc, pos, set.dt_hours(), &first, opts, &mut model))
        .collect::<Result<Vec<_>, _>>()?;
    let substation = net.substation().expect("validated network has a substation");
    Ok((
        model,
        ExtensiveMap {
            first,
            scenarios,
            substation,
            w_h: net.params.w_h,
        },
    ))
}

pub(crate) fn binary_value(model: &ModelIR, var: VarRef, values: &[f64]) -> Result<bool, FormulationError> {
    let x = values[var.index()];
    if x.is_finite() && (x.abs() <= INTEGRALITY_TOL || (x - 1.0).abs() <= INTEGRALITY_TOL) {
        Ok(x >= 0.5)
    } else {
        Err(FormulationError::Integrality {
            var: model.var_name(var).to_string(),
            value: x,
        })
    }
}
