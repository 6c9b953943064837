use thiserror::Error;

use super::{Model, RowSense, VarKind};
use crate::num::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum CheckError {
    #[error("point has {got} values but the model has {expected} variables")]
    MissingValue { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    Row { index: usize, sense: RowSense },
    LowerBound { var: usize },
    UpperBound { var: usize },
    Integrality { var: usize },
}

/// One infeasibility. `amount` is the absolute excess beyond the row or
/// bound (for integrality, the distance to the nearest integer).
#[derive(Clone, Debug, PartialEq)]
pub struct Violation<T> {
    pub name: String,
    pub kind: ViolationKind,
    pub amount: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViolationReport<T> {
    pub violations: Vec<Violation<T>>,
}

impl<T> ViolationReport<T> {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<T: Scalar> ViolationReport<T> {
    pub fn worst(&self) -> Option<&Violation<T>> {
        self.violations
            .iter()
            .fold(None, |best: Option<&Violation<T>>, v| match best {
                Some(b) if b.amount >= v.amount => Some(b),
                _ => Some(v),
            })
    }
}

/// Lists every row, bound and integrality requirement that `values` breaks
/// by more than `tol`.
///
/// Row tolerances are relative: a row may be off by
/// `tol * max(1, |rhs|, max_j |a_j x_j|)`. Bounds use `tol * max(1, |bound|)`
/// and integrality uses `tol` as an absolute distance.
pub fn check_point<T: Scalar>(
    model: &Model<T>,
    values: &[T],
    tol: T,
) -> Result<ViolationReport<T>, CheckError> {
    if values.len() != model.num_vars() {
        return Err(CheckError::MissingValue {
            expected: model.num_vars(),
            got: values.len(),
        });
    }
    let one = T::one();
    let mut violations = Vec::new();

    for (index, row) in model.constraints().iter().enumerate() {
        let mut activity = T::zero();
        let mut scale = T::max_of(one.clone(), row.rhs.abs());
        for (v, c) in &row.terms {
            let term = c.clone() * values[v.index()].clone();
            scale = T::max_of(scale, term.abs());
            activity = activity + term;
        }
        let excess = match row.sense {
            RowSense::Le => activity - row.rhs.clone(),
            RowSense::Ge => row.rhs.clone() - activity,
            RowSense::Eq => (activity - row.rhs.clone()).abs(),
        };
        if excess > tol.clone() * scale {
            violations.push(Violation {
                name: row.name.clone(),
                kind: ViolationKind::Row {
                    index,
                    sense: row.sense,
                },
                amount: excess,
            });
        }
    }

    for (i, (var, x)) in model.variables().iter().zip(values).enumerate() {
        if let Some(l) = &var.lower {
            let excess = l.clone() - x.clone();
            if excess > tol.clone() * T::max_of(one.clone(), l.abs()) {
                violations.push(Violation {
                    name: var.name.clone(),
                    kind: ViolationKind::LowerBound { var: i },
                    amount: excess,
                });
            }
        }
        if let Some(u) = &var.upper {
            let excess = x.clone() - u.clone();
            if excess > tol.clone() * T::max_of(one.clone(), u.abs()) {
                violations.push(Violation {
                    name: var.name.clone(),
                    kind: ViolationKind::UpperBound { var: i },
                    amount: excess,
                });
            }
        }
        if var.kind == VarKind::Binary {
            let dist = integrality_distance(x);
            if dist > tol {
                violations.push(Violation {
                    name: var.name.clone(),
                    kind: ViolationKind::Integrality { var: i },
                    amount: dist,
                });
            }
        }
    }

    Ok(ViolationReport { violations })
}

fn integrality_distance<T: Scalar>(x: &T) -> T {
    let lo = x.clone() - (x.clone() % T::one());
    // `%` keeps the sign of the dividend, so step down for negatives.
    let lo = if x < &T::zero() && lo != *x { lo - T::one() } else { lo };
    let up = lo.clone() + T::one();
    let a = x.clone() - lo;
    let b = up - x.clone();
    if a < b {
        a
    } else {
        b
    }
}
