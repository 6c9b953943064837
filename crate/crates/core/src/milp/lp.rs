//! CPLEX-style LP text writer, the human-readable twin of the MPS output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::{format_number, Model, RowSense, VarKind, VarRef};
use crate::num::Scalar;

const TERMS_PER_LINE: usize = 6;

fn push_terms<'a, T: Scalar + 'a>(
    out: &mut String,
    model: &Model<T>,
    terms: impl Iterator<Item = (VarRef, &'a T)>,
) -> bool {
    let mut count = 0;
    for (var, c) in terms {
        let x = c.to_f64_lossy();
        let sign = if x < 0.0 { '-' } else { '+' };
        if count > 0 && count % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        if count == 0 && sign == '+' {
            let _ = write!(out, " {} {}", format_number(x.abs()), model.var_name(var));
        } else {
            let _ = write!(out, " {sign} {} {}", format_number(x.abs()), model.var_name(var));
        }
        count += 1;
    }
    count > 0
}

pub fn to_lp_string<T: Scalar>(model: &Model<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", model.name());
    out.push_str("Minimize\n obj:");
    let any = push_terms(&mut out, model, model.objective_terms());
    let constant = model.objective_constant().to_f64_lossy();
    if constant != 0.0 || !any {
        let sign = if constant < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", format_number(constant.abs()));
    }
    out.push_str("\nSubject To\n");
    for row in model.constraints() {
        let _ = write!(out, " {}:", row.name);
        let nonzero = row.terms.iter().filter(|(_, c)| !c.is_zero()).map(|(v, c)| (*v, c));
        if !push_terms(&mut out, model, nonzero) {
            if let Some(first) = model.var_refs().next() {
                let _ = write!(out, " 0 {}", model.var_name(first));
            }
        }
        let sense = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", format_number(row.rhs.to_f64_lossy()));
    }

    out.push_str("Bounds\n");
    for v in model.variables() {
        let f = |x: &T| format_number(x.to_f64_lossy());
        match (&v.lower, &v.upper) {
            (Some(l), Some(u)) if v.kind == VarKind::Binary && l.is_zero() && u.is_one() => {}
            (Some(l), Some(u)) if l == u => {
                let _ = writeln!(out, " {} = {}", v.name, f(l));
            }
            (None, None) => {
                let _ = writeln!(out, " {} free", v.name);
            }
            (None, Some(u)) => {
                let _ = writeln!(out, " -inf <= {} <= {}", v.name, f(u));
            }
            (Some(l), None) => {
                if !l.is_zero() {
                    let _ = writeln!(out, " {} >= {}", v.name, f(l));
                }
            }
            (Some(l), Some(u)) => {
                let _ = writeln!(out, " {} <= {} <= {}", f(l), v.name, f(u));
            }
        }
    }

    let binaries: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp<T: Scalar>(model: &Model<T>, path: &Path) -> io::Result<()> {
    fs::write(path, to_lp_string(model))
}
