//! Solver-agnostic sparse MILP intermediate representation.
//!
//! The IR is a plain ledger: variables and rows are stored in insertion
//! order, nothing is presolved or merged, and every row keeps the name the
//! formulation gave it. The writers in [`mps`] and [`lp`] emit it verbatim.

mod check;
pub mod lp;
pub mod mps;

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::num::Scalar;

pub use check::{check_point, CheckError, Violation, ViolationKind, ViolationReport};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("variable `{name}` has inverted bounds [{lower}, {upper}]")]
    InvertedBounds {
        name: String,
        lower: String,
        upper: String,
    },
    #[error("binary variable `{0}` must have bounds inside [0, 1] at integer values")]
    BinaryBounds(String),
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("variable `{var}` appears twice in row `{row}`")]
    DuplicateTerm { row: String, var: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

/// Handle to a registered variable. The index is the insertion order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef(usize);

impl VarRef {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        })
    }
}

/// A column of the model. `None` bounds are infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub kind: VarKind,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinConstraint<T> {
    pub name: String,
    pub terms: Vec<(VarRef, T)>,
    pub sense: RowSense,
    pub rhs: T,
}

impl<T: Scalar> LinConstraint<T> {
    pub fn new(name: impl Into<String>, terms: Vec<(VarRef, T)>, sense: RowSense, rhs: T) -> Self {
        Self {
            name: name.into(),
            terms,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, values: &[T]) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, (v, c)| acc + c.clone() * values[v.0].clone())
    }
}

/// A minimisation MILP over scalar type `T`.
#[derive(Clone, Debug)]
pub struct Model<T> {
    name: String,
    vars: Vec<Variable<T>>,
    by_name: HashMap<String, VarRef>,
    rows: Vec<LinConstraint<T>>,
    row_names: HashSet<String>,
    objective: Vec<T>,
    objective_constant: T,
}

impl<T: Scalar> Model<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            vars: Vec::new(),
            by_name: HashMap::new(),
            rows: Vec::new(),
            row_names: HashSet::new(),
            objective: Vec::new(),
            objective_constant: T::zero(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: Option<T>,
        upper: Option<T>,
    ) -> Result<VarRef, ModelError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        check_bounds(&name, kind, lower.as_ref(), upper.as_ref())?;
        let var = VarRef(self.vars.len());
        self.by_name.insert(name.clone(), var);
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.objective.push(T::zero());
        Ok(var)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarRef, ModelError> {
        self.add_variable(name, VarKind::Binary, Some(T::zero()), Some(T::one()))
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: Option<T>,
        upper: Option<T>,
    ) -> Result<VarRef, ModelError> {
        self.add_variable(name, VarKind::Continuous, lower, upper)
    }

    /// Appends a row and returns its index. Rows without terms are kept as
    /// written.
    pub fn add_constraint(&mut self, mut row: LinConstraint<T>) -> Result<usize, ModelError> {
        if row.name.is_empty() {
            row.name = format!("c{}", self.rows.len());
        }
        if self.row_names.contains(&row.name) {
            return Err(ModelError::DuplicateConstraint(row.name));
        }
        if !row.rhs.is_finite_value() {
            return Err(ModelError::NonFinite(row.name));
        }
        let mut seen = HashSet::with_capacity(row.terms.len());
        for (var, coef) in &row.terms {
            let v = self
                .vars
                .get(var.0)
                .ok_or(ModelError::UnknownVariable(var.0))?;
            if !coef.is_finite_value() {
                return Err(ModelError::NonFinite(row.name));
            }
            if !seen.insert(*var) {
                return Err(ModelError::DuplicateTerm {
                    row: row.name,
                    var: v.name.clone(),
                });
            }
        }
        self.row_names.insert(row.name.clone());
        self.rows.push(row);
        Ok(self.rows.len() - 1)
    }

    pub fn constrain(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarRef, T)>,
        sense: RowSense,
        rhs: T,
    ) -> Result<usize, ModelError> {
        self.add_constraint(LinConstraint::new(name, terms, sense, rhs))
    }

    /// Adds `coef` to the objective coefficient of `var`.
    pub fn add_objective_term(&mut self, var: VarRef, coef: T) -> Result<(), ModelError> {
        let slot = self
            .objective
            .get_mut(var.0)
            .ok_or(ModelError::UnknownVariable(var.0))?;
        if !coef.is_finite_value() {
            return Err(ModelError::NonFinite(format!("objective:{}", self.vars[var.0].name)));
        }
        *slot = slot.clone() + coef;
        Ok(())
    }

    pub fn add_objective_constant(&mut self, value: T) {
        self.objective_constant = self.objective_constant.clone() + value;
    }

    pub fn set_bounds(
        &mut self,
        var: VarRef,
        lower: Option<T>,
        upper: Option<T>,
    ) -> Result<(), ModelError> {
        let v = self
            .vars
            .get_mut(var.0)
            .ok_or(ModelError::UnknownVariable(var.0))?;
        check_bounds(&v.name, v.kind, lower.as_ref(), upper.as_ref())?;
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn fix(&mut self, var: VarRef, value: T) -> Result<(), ModelError> {
        self.set_bounds(var, Some(value.clone()), Some(value))
    }

    pub fn variables(&self) -> &[Variable<T>] {
        &self.vars
    }

    pub fn variable(&self, var: VarRef) -> &Variable<T> {
        &self.vars[var.0]
    }

    pub fn var_name(&self, var: VarRef) -> &str {
        &self.vars[var.0].name
    }

    pub fn lookup(&self, name: &str) -> Option<VarRef> {
        self.by_name.get(name).copied()
    }

    pub fn var_refs(&self) -> impl Iterator<Item = VarRef> + '_ {
        (0..self.vars.len()).map(VarRef)
    }

    pub fn constraints(&self) -> &[LinConstraint<T>] {
        &self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn objective_coef(&self, var: VarRef) -> &T {
        &self.objective[var.0]
    }

    /// Non-zero objective terms in variable order.
    pub fn objective_terms(&self) -> impl Iterator<Item = (VarRef, &T)> + '_ {
        self.objective
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (VarRef(i), c))
    }

    pub fn objective_constant(&self) -> &T {
        &self.objective_constant
    }

    pub fn evaluate_objective(&self, values: &[T]) -> T {
        self.objective_terms()
            .fold(self.objective_constant.clone(), |acc, (v, c)| {
                acc + c.clone() * values[v.0].clone()
            })
    }

    /// Re-expresses every number of the model in another scalar type.
    pub fn convert<U: Scalar>(&self, f: impl Fn(&T) -> Option<U>) -> Result<Model<U>, ModelError> {
        let conv = |x: &T, what: &str| f(x).ok_or_else(|| ModelError::NonFinite(what.to_string()));
        let mut out = Model::new(self.name.clone());
        for v in &self.vars {
            let lower = v.lower.as_ref().map(|x| conv(x, &v.name)).transpose()?;
            let upper = v.upper.as_ref().map(|x| conv(x, &v.name)).transpose()?;
            out.add_variable(v.name.clone(), v.kind, lower, upper)?;
        }
        for (var, c) in self.objective_terms() {
            out.add_objective_term(var, conv(c, "objective")?)?;
        }
        out.add_objective_constant(conv(&self.objective_constant, "objective")?);
        for row in &self.rows {
            let terms = row
                .terms
                .iter()
                .map(|(v, c)| Ok((*v, conv(c, &row.name)?)))
                .collect::<Result<Vec<_>, ModelError>>()?;
            out.constrain(row.name.clone(), terms, row.sense, conv(&row.rhs, &row.name)?)?;
        }
        Ok(out)
    }
}

fn check_bounds<T: Scalar>(
    name: &str,
    kind: VarKind,
    lower: Option<&T>,
    upper: Option<&T>,
) -> Result<(), ModelError> {
    for b in lower.iter().chain(upper.iter()) {
        if !b.is_finite_value() {
            return Err(ModelError::NonFinite(name.to_string()));
        }
    }
    if let (Some(l), Some(u)) = (lower, upper) {
        if l > u {
            return Err(ModelError::InvertedBounds {
                name: name.to_string(),
                lower: l.to_string(),
                upper: u.to_string(),
            });
        }
    }
    if kind == VarKind::Binary {
        let unit = |b: Option<&T>| matches!(b, Some(x) if x.is_zero() || x.is_one());
        if !unit(lower) || !unit(upper) {
            return Err(ModelError::BinaryBounds(name.to_string()));
        }
    }
    Ok(())
}

/// Renders a number for the text formats: integers plainly, everything else
/// with 17 significant digits and trailing mantissa zeros removed.
pub(crate) fn format_number(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if value.fract() == 0.0 && value.abs() < 1e15 {
        return format!("{}", value as i64);
    }
    let s = format!("{:.16e}", value);
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}e{exp}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_gets_unit_bounds() {
        let mut m = Model::<f64>::new("t");
        let x = m.add_binary("xg_5").unwrap();
        let v = m.variable(x);
        assert_eq!(v.kind, VarKind::Binary);
        assert_eq!((v.lower, v.upper), (Some(0.0), Some(1.0)));
    }

    #[test]
    fn continuous_registration_and_order() {
        let mut m = Model::<f64>::new("t");
        let a = m.add_continuous("a", None, None).unwrap();
        let v = m.add_continuous("V_3_0", Some(0.0), Some(1.05)).unwrap();
        assert_eq!(a.index(), 0);
        assert_eq!(v.index(), 1);
        assert_eq!(m.lookup("V_3_0"), Some(v));
    }

    #[test]
    fn duplicate_and_inverted() {
        let mut m = Model::<f64>::new("t");
        m.add_binary("x").unwrap();
        assert_eq!(
            m.add_binary("x"),
            Err(ModelError::DuplicateVariable("x".into()))
        );
        assert!(matches!(
            m.add_continuous("y", Some(2.0), Some(1.0)),
            Err(ModelError::InvertedBounds { .. })
        ));
        assert!(matches!(
            m.add_variable("b", VarKind::Binary, Some(0.0), Some(2.0)),
            Err(ModelError::BinaryBounds(_))
        ));
    }

    #[test]
    fn constraints_are_validated() {
        let mut m = Model::<f64>::new("t");
        let x1 = m.add_binary("x1").unwrap();
        let x2 = m.add_binary("x2").unwrap();
        let id = m
            .constrain("", vec![(x1, 1.0), (x2, 1.0)], RowSense::Eq, 1.0)
            .unwrap();
        assert_eq!(id, 0);
        assert_eq!(m.constraints()[0].name, "c0");
        // vacuous row
        assert_eq!(m.constrain("empty", vec![], RowSense::Eq, 0.0), Ok(1));
        assert!(matches!(
            m.constrain("nan", vec![(x1, f64::NAN)], RowSense::Le, 0.0),
            Err(ModelError::NonFinite(_))
        ));
        assert!(matches!(
            m.constrain("dup", vec![(x1, 1.0), (x1, 2.0)], RowSense::Le, 0.0),
            Err(ModelError::DuplicateTerm { .. })
        ));
        assert_eq!(
            m.constrain("bad", vec![(VarRef(9), 1.0)], RowSense::Le, 0.0),
            Err(ModelError::UnknownVariable(9))
        );
    }

    #[test]
    fn objective_accumulates() {
        let mut m = Model::<f64>::new("t");
        let x = m.add_continuous("x", Some(0.0), None).unwrap();
        m.add_objective_term(x, 2.0).unwrap();
        m.add_objective_term(x, 1.5).unwrap();
        m.add_objective_constant(1.0);
        assert_eq!(m.evaluate_objective(&[2.0]), 8.0);
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-3.0), "-3");
        assert_eq!(format_number(0.5), "5e-1");
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(1e20), "1e20");
        let x = 1.0 / 3.0;
        assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
    }
}
