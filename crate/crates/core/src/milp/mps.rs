//! MPS writer.
//!
//! Sections and field order follow the fixed-format layout (NAME, ROWS,
//! COLUMNS, RHS, BOUNDS, ENDATA) but names may exceed eight characters and
//! numbers carry 17 significant digits, so readers must accept the
//! whitespace-separated ("free") interpretation. Rows and columns are emitted
//! in insertion order; the output is a pure function of the model.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::{format_number, Model, RowSense, VarKind};
use crate::num::Scalar;

const OBJ_ROW: &str = "obj";

pub fn to_mps_string<T: Scalar>(model: &Model<T>) -> String {
    let mut out = String::new();
    let num = |x: &T| format_number(x.to_f64_lossy());

    let _ = writeln!(out, "NAME          {}", model.name());
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for row in model.constraints() {
        let tag = match row.sense {
            RowSense::Le => 'L',
            RowSense::Ge => 'G',
            RowSense::Eq => 'E',
        };
        let _ = writeln!(out, " {tag}  {}", row.name);
    }

    // Column-major view of the row matrix.
    let mut columns: Vec<Vec<(usize, &T)>> = vec![Vec::new(); model.num_vars()];
    for (r, row) in model.constraints().iter().enumerate() {
        for (v, c) in &row.terms {
            columns[v.index()].push((r, c));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int_block = false;
    let mut marker = 0usize;
    for (var, entries) in model.var_refs().zip(&columns) {
        let v = model.variable(var);
        let is_int = v.kind == VarKind::Binary;
        if is_int != in_int_block {
            let kind = if is_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{marker:<9} 'MARKER'                 {kind}");
            marker += 1;
            in_int_block = is_int;
        }
        let obj = model.objective_coef(var);
        let mut any = false;
        if !obj.is_zero() {
            let _ = writeln!(out, "    {:<10} {:<10} {}", v.name, OBJ_ROW, num(obj));
            any = true;
        }
        for (r, c) in entries {
            if c.is_zero() {
                continue;
            }
            let _ = writeln!(
                out,
                "    {:<10} {:<10} {}",
                v.name,
                model.constraints()[*r].name,
                num(c)
            );
            any = true;
        }
        if !any {
            let _ = writeln!(out, "    {:<10} {:<10} 0", v.name, OBJ_ROW);
        }
    }
    if in_int_block {
        let _ = writeln!(out, "    M{marker:<9} 'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    if !model.objective_constant().is_zero() {
        // Readers interpret the objective-row rhs as minus the constant.
        let c = -model.objective_constant().clone();
        let _ = writeln!(out, "    RHS        {:<10} {}", OBJ_ROW, num(&c));
    }
    for row in model.constraints() {
        if !row.rhs.is_zero() {
            let _ = writeln!(out, "    RHS        {:<10} {}", row.name, num(&row.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for v in model.variables() {
        let mut bound = |tag: &str, value: Option<&T>| {
            let _ = match value {
                Some(x) => writeln!(out, " {tag} BND        {:<10} {}", v.name, num(x)),
                None => writeln!(out, " {tag} BND        {}", v.name),
            };
        };
        match (&v.lower, &v.upper) {
            (Some(l), Some(u)) if v.kind == VarKind::Binary && l.is_zero() && u.is_one() => {
                bound("BV", None)
            }
            (Some(l), Some(u)) if l == u => bound("FX", Some(l)),
            (None, None) => bound("FR", None),
            (None, Some(u)) => {
                bound("MI", None);
                bound("UP", Some(u));
            }
            (Some(l), None) => {
                if !l.is_zero() {
                    bound("LO", Some(l));
                }
            }
            (Some(l), Some(u)) => {
                if !l.is_zero() {
                    bound("LO", Some(l));
                }
                bound("UP", Some(u));
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps<T: Scalar>(model: &Model<T>, path: &Path) -> io::Result<()> {
    fs::write(path, to_mps_string(model))
}
