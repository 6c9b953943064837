use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{SolutionFormat, SolveStatus, SolverError};
use crate::ModelIR;

/// Values as read from a solver, before verification.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Vec<f64>,
    pub gap: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn parse_solution_file(
    path: &Path,
    format: SolutionFormat,
    model: &ModelIR,
) -> Result<RawSolution, SolverError> {
    let text = fs::read_to_string(path).map_err(|e| SolverError::Unparsable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_solution_str(&text, format, model).map_err(|reason| SolverError::Unparsable {
        path: path.display().to_string(),
        reason,
    })
}

/// Parses solution text. Variables the file does not mention are taken as
/// zero (with a warning), the usual convention for sparse solution files.
pub fn parse_solution_str(
    text: &str,
    format: SolutionFormat,
    model: &ModelIR,
) -> Result<RawSolution, String> {
    let (status, objective, entries) = match format {
        SolutionFormat::Highs => parse_highs(text)?,
        SolutionFormat::Cbc => parse_cbc(text)?,
        SolutionFormat::Plain => parse_plain(text)?,
    };

    let mut warnings = Vec::new();
    let mut values = vec![0.0; model.num_vars()];
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for (name, value) in &entries {
        if seen.insert(name, ()).is_some() {
            return Err(format!("variable `{name}` listed twice"));
        }
        let var = model
            .lookup(name)
            .ok_or_else(|| format!("unknown variable `{name}`"))?;
        values[var.index()] = *value;
    }
    if status.has_solution() {
        let missing = model.num_vars() - seen.len();
        if missing > 0 {
            warnings.push(format!("{missing} variable(s) absent from solution file; set to 0"));
        }
        if let Some(reported) = objective {
            let recomputed = model.evaluate_objective(&values);
            if (reported - recomputed).abs() > 1e-6 * recomputed.abs().max(1.0) {
                warnings.push(format!(
                    "objective line {reported} differs from recomputed {recomputed}"
                ));
            }
        }
    } else {
        values.clear();
    }
    Ok(RawSolution {
        status,
        objective,
        values,
        gap: None,
        warnings,
    })
}

type Parsed<'a> = (SolveStatus, Option<f64>, Vec<(&'a str, f64)>);

fn number(s: &str) -> Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| format!("bad number `{s}`")),
    }
}

fn name_value(line: &str) -> Result<(&str, f64), String> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next()) {
        (Some(n), Some(v)) => Ok((n, number(v)?)),
        _ => Err(format!("expected `name value`, got `{line}`")),
    }
}

fn parse_highs(text: &str) -> Result<Parsed<'_>, String> {
    let mut lines = text.lines().map(str::trim);
    let mut status = None;
    let mut objective = None;
    let mut entries = Vec::new();
    while let Some(line) = lines.next() {
        if line == "Model status" {
            let word = lines
                .by_ref()
                .find(|l| !l.is_empty())
                .ok_or("missing model status")?;
            status = Some(match word {
                "Optimal" => SolveStatus::Optimal,
                "Infeasible" | "Primal infeasible or unbounded" => SolveStatus::Infeasible,
                "Unbounded" => SolveStatus::Unbounded,
                "Time limit reached" | "Iteration limit reached" | "Solution limit reached" => {
                    SolveStatus::FeasibleGap
                }
                _ => SolveStatus::Error,
            });
        } else if let Some(rest) = line.strip_prefix("Objective ") {
            if objective.is_none() {
                objective = Some(number(rest.trim())?);
            }
        } else if let Some(rest) = line.strip_prefix("# Columns ") {
            let n: usize = rest.trim().parse().map_err(|_| "bad column count")?;
            for _ in 0..n {
                let l = lines.next().ok_or("truncated column section")?;
                entries.push(name_value(l)?);
            }
        } else if line.starts_with("# Dual solution values") {
            break;
        }
    }
    let mut status = status.ok_or("no `Model status` header")?;
    if status == SolveStatus::FeasibleGap && entries.is_empty() {
        status = SolveStatus::Error;
    }
    Ok((status, objective, entries))
}

fn parse_cbc(text: &str) -> Result<Parsed<'_>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty CBC solution")?.trim();
    let lower = header.to_ascii_lowercase();
    let status = if lower.starts_with("optimal") {
        SolveStatus::Optimal
    } else if lower.contains("infeasible") {
        SolveStatus::Infeasible
    } else if lower.contains("unbounded") {
        SolveStatus::Unbounded
    } else if lower.starts_with("stopped") {
        SolveStatus::FeasibleGap
    } else {
        SolveStatus::Error
    };
    let objective = header
        .split("objective value")
        .nth(1)
        .map(|s| number(s.trim()))
        .transpose()?;
    let mut entries = Vec::new();
    for line in lines {
        let mut toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks[0] == "**" {
            toks.remove(0);
        }
        if toks.len() < 3 {
            return Err(format!("short CBC line `{line}`"));
        }
        entries.push((toks[1], number(toks[2])?));
    }
    let status = if status == SolveStatus::FeasibleGap && entries.is_empty() {
        SolveStatus::Error
    } else {
        status
    };
    Ok((status, objective, entries))
}

fn parse_plain(text: &str) -> Result<Parsed<'_>, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    let header = lines.next().ok_or("empty solution")?;
    let word = header
        .strip_prefix("status ")
        .ok_or("first line must be `status <word>`")?
        .trim();
    let status = match word {
        "optimal" => SolveStatus::Optimal,
        "feasible-gap" | "feasible" => SolveStatus::FeasibleGap,
        "infeasible" => SolveStatus::Infeasible,
        "unbounded" => SolveStatus::Unbounded,
        _ => SolveStatus::Error,
    };
    let mut objective = None;
    if let Some(rest) = lines.peek().and_then(|l| l.strip_prefix("objective ")) {
        objective = Some(number(rest.trim())?);
        lines.next();
    }
    let entries = lines.map(name_value).collect::<Result<Vec<_>, _>>()?;
    Ok((status, objective, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::RowSense;

    fn model() -> ModelIR {
        let mut m = ModelIR::new("t");
        let x = m.add_continuous("x", Some(0.0), None).unwrap();
        let y = m.add_binary("y").unwrap();
        m.add_objective_term(x, 1.0).unwrap();
        m.add_objective_term(y, 2.0).unwrap();
        m.constrain("c", vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 3.0)
            .unwrap();
        m
    }

    #[test]
    fn highs_raw_style() {
        let text = "Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective 3\n# Columns 2\nx 3\ny 0\n# Rows 1\nc 3\n\n# Dual solution values\nNone\n";
        let raw = parse_solution_str(text, SolutionFormat::Highs, &model()).unwrap();
        assert_eq!(raw.status, SolveStatus::Optimal);
        assert_eq!(raw.objective, Some(3.0));
        assert_eq!(raw.values, vec![3.0, 0.0]);
        assert!(raw.warnings.is_empty());
    }

    #[test]
    fn highs_infeasible_has_no_values() {
        let text = "Model status\nInfeasible\n\n# Primal solution values\nNone\n";
        let raw = parse_solution_str(text, SolutionFormat::Highs, &model()).unwrap();
        assert_eq!(raw.status, SolveStatus::Infeasible);
        assert!(raw.values.is_empty());
    }

    #[test]
    fn cbc_style_with_sparse_listing() {
        let text = "Optimal - objective value 3.00000000\n      0 x                      3                       0\n";
        let raw = parse_solution_str(text, SolutionFormat::Cbc, &model()).unwrap();
        assert_eq!(raw.values, vec![3.0, 0.0]);
        assert_eq!(raw.warnings.len(), 1, "{:?}", raw.warnings);
        assert!(raw.warnings[0].contains("absent"));
    }

    #[test]
    fn duplicate_entry_rejected() {
        let text = "status optimal\nx 3\nx 4\n";
        let err = parse_solution_str(text, SolutionFormat::Plain, &model()).unwrap_err();
        assert!(err.contains("twice"));
    }

    #[test]
    fn objective_mismatch_warns() {
        let text = "status optimal\nobjective 10\nx 3\ny 0\n";
        let raw = parse_solution_str(text, SolutionFormat::Plain, &model()).unwrap();
        assert!(raw.warnings.iter().any(|w| w.contains("differs")));
    }

    #[test]
    fn malformed_rejected() {
        assert!(parse_solution_str("garbage", SolutionFormat::Plain, &model()).is_err());
        assert!(parse_solution_str("status optimal\nx notanumber\n", SolutionFormat::Plain, &model()).is_err());
        assert!(parse_solution_str("status optimal\nzz 1\n", SolutionFormat::Plain, &model()).is_err());
        assert!(parse_solution_str("nothing here\n", SolutionFormat::Highs, &model()).is_err());
    }
}
