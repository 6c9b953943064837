use std::num::NonZeroU32;
use std::ops::Bound;

use highs::{Col, HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};

use super::{Backend, RawSolution, SolveStatus, SolverConfig, SolverError};
use crate::milp::{RowSense, VarKind};
use crate::ModelIR;

pub(crate) struct LinkedHighs;

fn bound(v: Option<f64>) -> Bound<f64> {
    v.map_or(Bound::Unbounded, Bound::Included)
}

impl Backend for LinkedHighs {
    fn run(&self, model: &ModelIR, cfg: &SolverConfig) -> Result<RawSolution, SolverError> {
        let mut pb = RowProblem::new();
        let cols: Vec<Col> = model
            .var_refs()
            .zip(model.variables())
            .map(|(j, v)| {
                pb.add_column_with_integrality(
                    *model.objective_coef(j),
                    (bound(v.lower), bound(v.upper)),
                    v.kind == VarKind::Binary,
                )
            })
            .collect();
        for row in model.constraints() {
            let terms: Vec<(Col, f64)> = row.terms.iter().map(|(v, a)| (cols[v.index()], *a)).collect();
            let r = row.rhs;
            match row.sense {
                RowSense::Le => pb.add_row(..=r, &terms),
                RowSense::Ge => pb.add_row(r.., &terms),
                RowSense::Eq => pb.add_row(r..=r, &terms),
            }
        }

        let mut hm = pb
            .try_optimise(Sense::Minimise)
            .map_err(|s| SolverError::Backend(format!("model rejected: {s:?}")))?;
        hm.make_quiet();
        hm.set_option("mip_rel_gap", cfg.mip_gap);
        hm.set_option("time_limit", cfg.time_limit_s);
        hm.set_option("mip_feasibility_tolerance", 1e-7);
        hm.set_option("primal_feasibility_tolerance", 1e-8);
        if let Some(n) = NonZeroU32::new(cfg.threads) {
            hm.set_threads(n);
        }
        let solved = hm
            .try_solve()
            .map_err(|s| SolverError::Backend(format!("run failed: {s:?}")))?;

        let has_point = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let mut warnings = Vec::new();
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible => {
                warnings.push("HiGHS could not tell infeasible from unbounded".into());
                SolveStatus::Infeasible
            }
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
                if has_point =>
            {
                SolveStatus::FeasibleGap
            }
            other => {
                warnings.push(format!("HiGHS status {other:?}"));
                SolveStatus::Error
            }
        };
        if !status.has_solution() {
            return Ok(RawSolution {
                status,
                objective: None,
                values: Vec::new(),
                gap: None,
                warnings,
            });
        }

        let mut values = if model.num_vars() == 0 {
            Vec::new()
        } else {
            solved.get_solution().columns().to_vec()
        };
        // HiGHS leaves integers a hair off; snap those within tolerance
        for (x, v) in values.iter_mut().zip(model.variables()) {
            if v.kind == VarKind::Binary && (*x - x.round()).abs() <= 1e-6 {
                *x = x.round();
            }
        }
        let gap = if model.num_binaries() == 0 {
            Some(0.0)
        } else {
            Some(solved.mip_gap()).filter(|g| g.is_finite())
        };
        let reported = solved.objective_value() + *model.objective_constant();
        Ok(RawSolution {
            status,
            objective: Some(reported),
            values,
            gap,
            warnings,
        })
    }
}
