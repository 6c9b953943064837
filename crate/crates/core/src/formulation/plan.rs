use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{binary_value, ExtensiveMap, FormulationError};
use crate::network::{BusId, LineEnd, Network};
use crate::solver::Solution;
use crate::ModelIR;

/// First-stage investment decisions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlanDecision {
    /// Pole option per line.
    pub hardening: Vec<usize>,
    /// Per bus, in network order.
    pub dg_placement: Vec<bool>,
    /// Newly installed sectionalizers per line, `[from, to]`.
    pub new_sectionalizers: Vec<[bool; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanHardening {
    pub from: BusId,
    pub to: BusId,
    pub option: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSectionalizer {
    pub from: BusId,
    pub to: BusId,
    pub end: LineEnd,
}

/// On-disk plan. Lines absent from `hardening` keep option 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default)]
    pub hardening: Vec<PlanHardening>,
    #[serde(default)]
    pub dg: Vec<BusId>,
    #[serde(default)]
    pub sectionalizers: Vec<PlanSectionalizer>,
}

fn find_line(net: &Network, from: BusId, to: BusId) -> Result<(usize, bool), FormulationError> {
    net.lines
        .iter()
        .enumerate()
        .find_map(|(l, line)| {
            if line.from_bus == from && line.to_bus == to {
                Some((l, false))
            } else if line.from_bus == to && line.to_bus == from {
                Some((l, true))
            } else {
                None
            }
        })
        .ok_or_else(|| FormulationError::Plan(format!("no line between buses {from} and {to}")))
}

impl PlanDecision {
    /// Existing poles everywhere, no DGs, no new sectionalizers.
    pub fn baseline(net: &Network) -> Self {
        Self {
            hardening: vec![0; net.num_lines()],
            dg_placement: vec![false; net.num_buses()],
            new_sectionalizers: vec![[false; 2]; net.num_lines()],
        }
    }

    pub fn validate(&self, net: &Network) -> Result<(), FormulationError> {
        let bad = |m: String| Err(FormulationError::Plan(m));
        if self.hardening.len() != net.num_lines()
            || self.new_sectionalizers.len() != net.num_lines()
            || self.dg_placement.len() != net.num_buses()
        {
            return bad("plan dimensions do not match the network".into());
        }
        if let Some((l, k)) = self
            .hardening
            .iter()
            .enumerate()
            .find(|(_, &k)| k >= net.num_pole_options())
        {
            return bad(format!("line {l}: pole option {k} not in catalog"));
        }
        for (b, bus) in net.buses.iter().enumerate() {
            if self.dg_placement[b] && !bus.dg_candidate {
                return bad(format!("bus {} is not a DG candidate", bus.id));
            }
        }
        let n = self.dg_placement.iter().filter(|&&x| x).count();
        if n > net.params.n_g_max as usize {
            return bad(format!("{n} DGs exceed the budget of {}", net.params.n_g_max));
        }
        for (l, line) in net.lines.iter().enumerate() {
            for end in LineEnd::BOTH {
                if self.new_sectionalizers[l][end.index()] && line.existing_sectionalizer(end) {
                    return bad(format!(
                        "line {}-{} already has a sectionalizer at bus {}",
                        line.from_bus,
                        line.to_bus,
                        line.end_bus(end)
                    ));
                }
            }
        }
        Ok(())
    }

    /// Hardening, DG and sectionalizer spend.
    pub fn investment_cost(&self, net: &Network) -> f64 {
        let hardening: f64 = net
            .lines
            .iter()
            .zip(&self.hardening)
            .map(|(line, &k)| line.hardening_costs[k])
            .sum();
        let dg: f64 = net
            .buses
            .iter()
            .zip(&self.dg_placement)
            .filter(|(_, &on)| on)
            .map(|(b, _)| b.dg_install_cost)
            .sum();
        let sect: f64 = net
            .lines
            .iter()
            .zip(&self.new_sectionalizers)
            .map(|(line, ends)| line.sectionalizer_cost * ends.iter().filter(|&&x| x).count() as f64)
            .sum();
        hardening + dg + sect
    }

    /// Sectionalizer state after the plan (existing or new).
    pub fn sectionalized(&self, net: &Network, line: usize, end: LineEnd) -> bool {
        net.lines[line].existing_sectionalizer(end) || self.new_sectionalizers[line][end.index()]
    }

    pub fn to_file(&self, net: &Network) -> PlanFile {
        let hardening = net
            .lines
            .iter()
            .zip(&self.hardening)
            .map(|(line, &option)| PlanHardening {
                from: line.from_bus,
                to: line.to_bus,
                option,
            })
            .collect();
        let dg = net
            .buses
            .iter()
            .zip(&self.dg_placement)
            .filter(|(_, &on)| on)
            .map(|(b, _)| b.id)
            .collect();
        let mut sectionalizers = Vec::new();
        for (line, ends) in net.lines.iter().zip(&self.new_sectionalizers) {
            for end in LineEnd::BOTH {
                if ends[end.index()] {
                    sectionalizers.push(PlanSectionalizer {
                        from: line.from_bus,
                        to: line.to_bus,
                        end,
                    });
                }
            }
        }
        PlanFile {
            hardening,
            dg,
            sectionalizers,
        }
    }

    pub fn from_file(net: &Network, file: &PlanFile) -> Result<Self, FormulationError> {
        let mut plan = Self::baseline(net);
        let mut seen = HashSet::new();
        for h in &file.hardening {
            let (l, _) = find_line(net, h.from, h.to)?;
            if !seen.insert(l) {
                return Err(FormulationError::Plan(format!("line {}-{} listed twice", h.from, h.to)));
            }
            plan.hardening[l] = h.option;
        }
        for &id in &file.dg {
            let b = net
                .bus_position(id)
                .ok_or_else(|| FormulationError::Plan(format!("unknown DG bus {id}")))?;
            if plan.dg_placement[b] {
                return Err(FormulationError::Plan(format!("DG bus {id} listed twice")));
            }
            plan.dg_placement[b] = true;
        }
        for s in &file.sectionalizers {
            let (l, flipped) = find_line(net, s.from, s.to)?;
            let end = match (s.end, flipped) {
                (e, false) => e,
                (LineEnd::From, true) => LineEnd::To,
                (LineEnd::To, true) => LineEnd::From,
            };
            plan.new_sectionalizers[l][end.index()] = true;
        }
        plan.validate(net)?;
        Ok(plan)
    }

    pub fn to_json_string(&self, net: &Network) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file(net)).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(net: &Network, text: &str) -> Result<Self, FormulationError> {
        let file: PlanFile =
            serde_json::from_str(text).map_err(|e| FormulationError::Plan(e.to_string()))?;
        Self::from_file(net, &file)
    }
}

/// Pins every first-stage variable to `plan`.
pub fn fix_plan(
    model: &mut ModelIR,
    map: &ExtensiveMap,
    net: &Network,
    plan: &PlanDecision,
) -> Result<(), FormulationError> {
    plan.validate(net)?;
    let first = &map.first;
    for (l, &k) in plan.hardening.iter().enumerate() {
        for (o, &v) in first.xh[l].iter().enumerate() {
            model.fix(v, if o == k { 1.0 } else { 0.0 })?;
        }
    }
    for (b, &on) in plan.dg_placement.iter().enumerate() {
        model.fix(first.xg[b], if on { 1.0 } else { 0.0 })?;
    }
    for l in 0..net.num_lines() {
        for end in LineEnd::BOTH {
            let n = end.index();
            let new = plan.new_sectionalizers[l][n];
            model.fix(first.xc1[l][n], if new { 1.0 } else { 0.0 })?;
            let any = plan.sectionalized(net, l, end);
            model.fix(first.xc[l][n], if any { 1.0 } else { 0.0 })?;
        }
    }
    Ok(())
}

pub fn extract_plan(
    model: &ModelIR,
    solution: &Solution,
    map: &ExtensiveMap,
) -> Result<PlanDecision, FormulationError> {
    if !solution.status.has_solution() {
        return Err(FormulationError::NoSolution(solution.status));
    }
    let x = &solution.values;
    let first = &map.first;
    let mut hardening = Vec::with_capacity(first.xh.len());
    for row in &first.xh {
        let mut chosen = None;
        for (o, &v) in row.iter().enumerate() {
            if binary_value(model, v, x)? {
                if chosen.is_some() {
                    return Err(FormulationError::Plan(format!(
                        "{} selects more than one pole option",
                        model.var_name(v)
                    )));
                }
                chosen = Some(o);
            }
        }
        hardening.push(chosen.ok_or_else(|| {
            FormulationError::Plan(format!("{} selects no pole option", model.var_name(row[0])))
        })?);
    }
    let dg_placement = first
        .xg
        .iter()
        .map(|&v| binary_value(model, v, x))
        .collect::<Result<_, _>>()?;
    let new_sectionalizers = first
        .xc1
        .iter()
        .map(|&[f, t]| Ok([binary_value(model, f, x)?, binary_value(model, t, x)?]))
        .collect::<Result<_, FormulationError>>()?;
    Ok(PlanDecision {
        hardening,
        dg_placement,
        new_sectionalizers,
    })
}
