//! Brute-force ground truth for tiny instances.
//!
//! Every assignment of the free binaries of the extensive form is tried;
//! the continuous restriction left behind is solved as an LP through the
//! regular solver path. Assignments that violate a row no matter what the
//! continuous variables do are discarded before any LP is solved, which
//! only skips provably infeasible assignments.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    build_extensive_form, extract_plan, FormulationError, FormulationOptions, PlanDecision,
};
use crate::hazard::ScenarioSet;
use crate::milp::{RowSense, VarKind, VarRef};
use crate::network::{Network, NetworkError};
use crate::solver::{solve, SolverConfig, SolverError};
use crate::ModelIR;

pub const DEFAULT_LIMIT: usize = 24;

const ROW_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{found} free binaries exceed the oracle limit of {limit}")]
    TooManyBinaries { found: usize, limit: usize },
    #[error("no binary assignment is feasible")]
    Infeasible,
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("fixture: {0}")]
    Fixture(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    pub plan: PlanDecision,
    /// Argmin values of the free binaries, in variable order.
    pub assignment: Vec<bool>,
    pub free_binaries: usize,
    /// Assignments that survived row screening and went to the LP solver.
    pub lp_solves: usize,
}

/// A network and its scenarios in one file.
#[derive(Clone, Debug)]
pub struct OracleFixture {
    pub network: Network,
    pub scenarios: ScenarioSet,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FixtureDoc {
    network: serde_json::Value,
    scenarios: ScenarioSet,
}

impl OracleFixture {
    pub fn from_json_str(text: &str) -> Result<Self, OracleError> {
        let doc: FixtureDoc =
            serde_json::from_str(text).map_err(|e| OracleError::Fixture(e.to_string()))?;
        let network = Network::from_json_str(&doc.network.to_string())?;
        Ok(Self {
            network,
            scenarios: doc.scenarios,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| OracleError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

fn free_binaries(model: &ModelIR) -> Vec<VarRef> {
    model
        .var_refs()
        .filter(|&v| {
            let var = model.variable(v);
            var.kind == VarKind::Binary && var.lower != var.upper
        })
        .collect()
}

/// Rows grouped by the depth (position in the free-binary order) at which
/// their last free binary is assigned; rows without free binaries land in
/// slot 0 and are checked before the search starts.
fn rows_by_depth(model: &ModelIR, position: &[Option<usize>]) -> Vec<Vec<usize>> {
    let depth = position.iter().flatten().max().map_or(0, |d| d + 1);
    let mut slots = vec![Vec::new(); depth + 1];
    for (r, row) in model.constraints().iter().enumerate() {
        let last = row.terms.iter().filter_map(|(v, _)| position[v.index()]).max();
        slots[last.map_or(0, |d| d + 1)].push(r);
    }
    slots
}

fn row_can_hold(model: &ModelIR, r: usize, value: &[Option<f64>]) -> bool {
    let row = &model.constraints()[r];
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for (v, a) in &row.terms {
        let (vl, vu) = match value[v.index()] {
            Some(x) => (x, x),
            None => {
                let var = model.variable(*v);
                (
                    var.lower.unwrap_or(f64::NEG_INFINITY),
                    var.upper.unwrap_or(f64::INFINITY),
                )
            }
        };
        if *a >= 0.0 {
            lo += a * vl;
            hi += a * vu;
        } else {
            lo += a * vu;
            hi += a * vl;
        }
    }
    let tol = ROW_TOL * row.rhs.abs().max(1.0);
    match row.sense {
        RowSense::Le => lo <= row.rhs + tol,
        RowSense::Ge => hi >= row.rhs - tol,
        RowSense::Eq => lo <= row.rhs + tol && hi >= row.rhs - tol,
    }
}

/// Assignments (as bit vectors) that pass row screening, in lexicographic
/// order.
fn screened_assignments(model: &ModelIR, free: &[VarRef]) -> Vec<Vec<bool>> {
    let mut position = vec![None; model.num_vars()];
    for (d, v) in free.iter().enumerate() {
        position[v.index()] = Some(d);
    }
    let slots = rows_by_depth(model, &position);
    let mut value: Vec<Option<f64>> = model
        .variables()
        .iter()
        .map(|v| match (v.lower, v.upper) {
            (Some(l), Some(u)) if l == u => Some(l),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    if !slots[0].iter().all(|&r| row_can_hold(model, r, &value)) {
        return out;
    }
    let mut bits = Vec::with_capacity(free.len());
    dfs(model, free, &slots, &mut value, &mut bits, &mut out);
    out
}

fn dfs(
    model: &ModelIR,
    free: &[VarRef],
    slots: &[Vec<usize>],
    value: &mut [Option<f64>],
    bits: &mut Vec<bool>,
    out: &mut Vec<Vec<bool>>,
) {
    let d = bits.len();
    if d == free.len() {
        out.push(bits.clone());
        return;
    }
    for bit in [false, true] {
        value[free[d].index()] = Some(if bit { 1.0 } else { 0.0 });
        if slots[d + 1].iter().all(|&r| row_can_hold(model, r, value)) {
            bits.push(bit);
            dfs(model, free, slots, value, bits, out);
            bits.pop();
        }
    }
    value[free[d].index()] = None;
}

/// Minimum objective over all binary assignments, ties broken towards the
/// lexicographically smallest assignment.
pub fn enumerate_optimal(
    net: &Network,
    set: &ScenarioSet,
    opts: &FormulationOptions,
    limit: usize,
    cfg: &SolverConfig,
) -> Result<OracleResult, OracleError> {
    let (model, map) = build_extensive_form(net, set, opts)?;
    let free = free_binaries(&model);
    if free.len() > limit {
        return Err(OracleError::TooManyBinaries {
            found: free.len(),
            limit,
        });
    }
    let candidates = screened_assignments(&model, &free);
    let results = candidates
        .par_iter()
        .map(|bits| {
            let mut m = model.clone();
            for (v, &b) in free.iter().zip(bits) {
                m.fix(*v, if b { 1.0 } else { 0.0 }).expect("binary fix is in bounds");
            }
            solve(&m, cfg).map(|sol| (m, sol))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (i, (_, sol)) in results.iter().enumerate() {
        if !sol.status.has_solution() {
            continue;
        }
        let obj = sol.objective_value;
        let better = match best {
            None => true,
            Some((_, b)) => obj < b - 1e-9 * b.abs().max(1.0),
        };
        if better {
            best = Some((i, obj));
        }
    }
    let (i, objective) = best.ok_or(OracleError::Infeasible)?;
    let (m, sol) = &results[i];
    let plan = extract_plan(m, sol, &map)?;
    Ok(OracleResult {
        objective,
        plan,
        assignment: candidates[i].clone(),
        free_binaries: free.len(),
        lp_solves: candidates.len(),
    })
}
