use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{binary_value, extract_plan, ExtensiveMap, FormulationError};
use crate::network::Network;
use crate::solver::Solution;
use crate::ModelIR;

/// Recourse decisions of one scenario. Line series are `[line][t]`, bus
/// series `[bus][t]`, both in network order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperationalSchedule {
    pub scenario_id: u32,
    pub steps: usize,
    pub dt_hours: f64,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// DG output, zero at buses without a DG candidate.
    pub pg: Vec<Vec<f64>>,
    pub qg: Vec<Vec<f64>>,
    pub psub: Vec<f64>,
    pub qsub: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub shed_ratio: Vec<Vec<f64>>,
    /// Switch opened, `[line][end][t]`.
    pub yc: Vec<[Vec<bool>; 2]>,
    pub wo: Vec<Vec<bool>>,
    pub wm: Vec<Vec<bool>>,
    /// Damage of the line under the chosen pole option.
    pub u: Vec<Vec<bool>>,
    /// Repair bill per line under the chosen pole option.
    pub repair: Vec<f64>,
}

pub fn extract_schedule(
    model: &ModelIR,
    solution: &Solution,
    map: &ExtensiveMap,
    s: usize,
) -> Result<OperationalSchedule, FormulationError> {
    let plan = extract_plan(model, solution, map)?;
    let sc = map.scenarios.get(s).ok_or(FormulationError::UnknownScenario(s))?;
    let x = &solution.values;
    let real = |grid: &Vec<Vec<crate::milp::VarRef>>| -> Vec<Vec<f64>> {
        grid.iter()
            .map(|row| row.iter().map(|v| x[v.index()]).collect())
            .collect()
    };
    let bin = |grid: &Vec<Vec<crate::milp::VarRef>>| -> Result<Vec<Vec<bool>>, FormulationError> {
        grid.iter()
            .map(|row| row.iter().map(|&v| binary_value(model, v, x)).collect())
            .collect()
    };
    let optional = |grid: &Vec<Option<Vec<crate::milp::VarRef>>>| -> Vec<Vec<f64>> {
        grid.iter()
            .map(|row| match row {
                Some(row) => row.iter().map(|v| x[v.index()]).collect(),
                None => vec![0.0; sc.steps],
            })
            .collect()
    };
    let yc = sc
        .yc
        .iter()
        .map(|[f, t]| {
            let f = f.iter().map(|&v| binary_value(model, v, x)).collect::<Result<Vec<_>, _>>()?;
            let t = t.iter().map(|&v| binary_value(model, v, x)).collect::<Result<Vec<_>, _>>()?;
            Ok([f, t])
        })
        .collect::<Result<Vec<_>, FormulationError>>()?;
    let u = plan
        .hardening
        .iter()
        .enumerate()
        .map(|(l, &k)| sc.zeta[l][k].iter().map(|&z| z != 0).collect())
        .collect();
    let repair = plan
        .hardening
        .iter()
        .enumerate()
        .map(|(l, &k)| sc.chi[l][k])
        .collect();
    Ok(OperationalSchedule {
        scenario_id: sc.id,
        steps: sc.steps,
        dt_hours: sc.dt_hours,
        p: real(&sc.p),
        q: real(&sc.q),
        pg: optional(&sc.pg),
        qg: optional(&sc.qg),
        psub: sc.psub.iter().map(|v| x[v.index()]).collect(),
        qsub: sc.qsub.iter().map(|v| x[v.index()]).collect(),
        v: real(&sc.v),
        shed_ratio: real(&sc.yr),
        yc,
        wo: bin(&sc.wo)?,
        wm: bin(&sc.wm)?,
        u,
        repair,
    })
}

/// Long-format CSV, one row per (scenario, step, entity). Columns that do
/// not apply to an entity are left empty.
pub fn write_schedule_csv<W: Write>(
    net: &Network,
    schedules: &[OperationalSchedule],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario_id", "t", "kind", "entity", "p_kw", "q_kvar", "v_pu", "shed_ratio", "energized",
        "on", "switch_open_from", "switch_open_to", "damaged",
    ])?;
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    let sub = net.substation();
    for sch in schedules {
        for t in 0..sch.steps {
            let head = |kind: &str, entity: String| vec![sch.scenario_id.to_string(), t.to_string(), kind.to_string(), entity];
            for (b, bus) in net.buses.iter().enumerate() {
                let mut rec = head("bus", bus.id.to_string());
                let (p, q) = if Some(b) == sub {
                    (sch.pg[b][t] + sch.psub[t], sch.qg[b][t] + sch.qsub[t])
                } else {
                    (sch.pg[b][t], sch.qg[b][t])
                };
                rec.extend([
                    p.to_string(),
                    q.to_string(),
                    sch.v[b][t].to_string(),
                    sch.shed_ratio[b][t].to_string(),
                    flag(sch.wm[b][t]),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                w.write_record(&rec)?;
            }
            for (l, line) in net.lines.iter().enumerate() {
                let mut rec = head("line", format!("{}-{}", line.from_bus, line.to_bus));
                rec.extend([
                    sch.p[l][t].to_string(),
                    sch.q[l][t].to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    flag(sch.wo[l][t]),
                    flag(sch.yc[l][0][t]),
                    flag(sch.yc[l][1][t]),
                    flag(sch.u[l][t]),
                ]);
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
