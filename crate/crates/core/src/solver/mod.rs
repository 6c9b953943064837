//! Hands a [`ModelIR`] to a MILP solver and returns a verified [`Solution`].
//!
//! Two backends sit behind [`solve`]:
//!
//! * an external executable driven through files: the model is written as
//!   MPS into a private workspace, the solver runs as a child process and
//!   its solution file is parsed with a per-solver dialect;
//! * HiGHS linked in-process (default, behind the `highs` feature).
//!
//! Either way the returned point is re-checked against the model with
//! [`check_point`] and the objective is recomputed from the values, so a
//! writer or parser bug surfaces as an error instead of a wrong answer.

mod external;
#[cfg(feature = "highs")]
mod linked;
mod solfile;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::check_point;
use crate::ModelIR;

pub use solfile::{parse_solution_file, parse_solution_str, RawSolution};

/// Environment variable naming a solver executable.
pub const SOLVER_ENV: &str = "GRIDSHIELD_SOLVER";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver executable not found: {0}")]
    NotFound(String),
    #[error("solver exited with {status}; workspace kept at {workspace}\n{stderr}")]
    Crash {
        status: String,
        stderr: String,
        workspace: String,
    },
    #[error("cannot parse solution file {path}: {reason}")]
    Unparsable { path: String, reason: String },
    #[error("solution violates {count} model requirement(s); worst: {worst}")]
    Verification { count: usize, worst: String },
    #[error("reported objective {reported} differs from recomputed {recomputed}")]
    ObjectiveMismatch { reported: f64, recomputed: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("solver backend `{0}` is not available in this build")]
    Unavailable(String),
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error("workspace I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    FeasibleGap,
    Infeasible,
    Unbounded,
    Error,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleGap)
    }
}

/// Solution-file dialects understood by [`parse_solution_file`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionFormat {
    /// HiGHS `--solution_file` raw style.
    Highs,
    /// CBC `solu` output.
    Cbc,
    /// `status <word>`, optional `objective <x>`, then `name value` lines.
    Plain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// `highs` (linked), `highs-cli`, `cbc`, or `external`.
    pub solver_id: String,
    pub mip_gap: f64,
    pub time_limit_s: f64,
    /// 0 lets the solver decide.
    pub threads: u32,
    pub solution_file_format: SolutionFormat,
    /// Executable for the file-based backends.
    pub executable: Option<PathBuf>,
    /// Argument template for `external`; placeholders `{exe}`, `{model}`,
    /// `{solution}`, `{options}`, `{gap}`, `{time_limit}`, `{threads}`.
    pub command_template: Option<Vec<String>>,
    pub keep_files: bool,
    /// Relative tolerance of the post-solve feasibility check.
    pub verify_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            solver_id: "highs".to_string(),
            mip_gap: 1e-4,
            time_limit_s: 900.0,
            threads: 0,
            solution_file_format: SolutionFormat::Highs,
            executable: None,
            command_template: None,
            keep_files: false,
            verify_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    /// Default configuration, switched to the executable named by
    /// `GRIDSHIELD_SOLVER` when that variable is set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(exe) = std::env::var_os(SOLVER_ENV).filter(|v| !v.is_empty()) {
            cfg.use_executable(PathBuf::from(exe));
        }
        cfg
    }

    /// Points the configuration at a solver binary, guessing the dialect
    /// from its file name.
    pub fn use_executable(&mut self, exe: PathBuf) {
        let stem = exe
            .file_stem()
            .map(|s| s.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if stem.contains("cbc") {
            self.solver_id = "cbc".into();
            self.solution_file_format = SolutionFormat::Cbc;
        } else {
            self.solver_id = "highs-cli".into();
            self.solution_file_format = SolutionFormat::Highs;
        }
        self.executable = Some(exe);
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.mip_gap > 0.0 && self.mip_gap < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "mip_gap {} outside (0, 1)",
                self.mip_gap
            )));
        }
        if !(self.time_limit_s > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "time_limit_s {} must be positive",
                self.time_limit_s
            )));
        }
        if !(self.verify_tol > 0.0) {
            return Err(SolverError::InvalidConfig("verify_tol must be positive".into()));
        }
        Ok(())
    }

    /// Short identity string recorded in run manifests.
    pub fn identity(&self) -> String {
        match &self.executable {
            Some(exe) => format!("{} ({})", self.solver_id, exe.display()),
            None => self.solver_id.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective_value: f64,
    /// One value per model variable, in variable order. Empty when the
    /// status carries no point.
    pub values: Vec<f64>,
    /// Relative MIP gap (an upper bound when the backend does not report it).
    pub gap: f64,
    pub solve_seconds: f64,
    pub solver: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Solution {
    pub fn value(&self, var: crate::milp::VarRef) -> f64 {
        self.values[var.index()]
    }
}

pub(crate) trait Backend {
    fn run(&self, model: &ModelIR, cfg: &SolverConfig) -> Result<RawSolution, SolverError>;
}

/// Solves `model` and verifies the returned point.
pub fn solve(model: &ModelIR, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    cfg.validate()?;
    let started = Instant::now();
    let raw = match cfg.solver_id.as_str() {
        "highs" if cfg.executable.is_none() => linked_backend()?.run(model, cfg)?,
        "highs-cli" | "cbc" | "external" | "highs" => external::External.run(model, cfg)?,
        other => {
            return Err(SolverError::InvalidConfig(format!("unknown solver `{other}`")));
        }
    };
    let solve_seconds = started.elapsed().as_secs_f64();
    finish(model, cfg, raw, solve_seconds)
}

#[cfg(feature = "highs")]
fn linked_backend() -> Result<linked::LinkedHighs, SolverError> {
    Ok(linked::LinkedHighs)
}

#[cfg(not(feature = "highs"))]
fn linked_backend() -> Result<external::External, SolverError> {
    Err(SolverError::Unavailable("highs".into()))
}

fn finish(
    model: &ModelIR,
    cfg: &SolverConfig,
    raw: RawSolution,
    solve_seconds: f64,
) -> Result<Solution, SolverError> {
    let RawSolution {
        status,
        objective,
        values,
        gap,
        mut warnings,
    } = raw;
    if !status.has_solution() {
        return Ok(Solution {
            status,
            objective_value: f64::NAN,
            values: Vec::new(),
            gap: f64::NAN,
            solve_seconds,
            solver: cfg.identity(),
            warnings,
        });
    }

    let report = check_point(model, &values, cfg.verify_tol).map_err(|e| SolverError::Unparsable {
        path: "<solution>".into(),
        reason: e.to_string(),
    })?;
    if let Some(worst) = report.worst() {
        return Err(SolverError::Verification {
            count: report.violations.len(),
            worst: format!("{} off by {:e}", worst.name, worst.amount),
        });
    }

    let recomputed = model.evaluate_objective(&values);
    let objective_value = match objective {
        Some(reported) => {
            if (reported - recomputed).abs() > 1e-6 * recomputed.abs().max(1.0) {
                return Err(SolverError::ObjectiveMismatch {
                    reported,
                    recomputed,
                });
            }
            reported
        }
        None => {
            warnings.push("solver did not report an objective; using recomputed value".into());
            recomputed
        }
    };

    let gap = match (status, gap) {
        (_, Some(g)) => g.max(0.0),
        (SolveStatus::Optimal, None) => {
            if model.num_binaries() == 0 {
                0.0
            } else {
                cfg.mip_gap
            }
        }
        (_, None) => f64::NAN,
    };
    let status = if status == SolveStatus::Optimal && gap > cfg.mip_gap * (1.0 + 1e-9) {
        SolveStatus::FeasibleGap
    } else {
        status
    };
    Ok(Solution {
        status,
        objective_value,
        values,
        gap,
        solve_seconds,
        solver: cfg.identity(),
        warnings,
    })
}
