//! CPLEX LP text export.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::model::{MilpModel, ObjectiveSense, VarType};
use crate::scalar::Scalar;

/// LP-safe, unique names for every variable, in declaration order.
///
/// Characters outside `[A-Za-z0-9_]` become `_`; names that would not start
/// with a letter (or that start with `e`/`E`, which some readers parse as an
/// exponent) get a `v_` prefix; clashes get a numeric suffix.
pub fn sanitized_names<F>(model: &MilpModel<F>) -> Vec<String> {
    unique(model.variables.iter().map(|v| v.name.as_str()), "v_")
}

fn unique<'a>(names: impl Iterator<Item = &'a str>, prefix: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .map(|raw| {
            let mut s: String = raw
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let first = s.chars().next();
            if !first.is_some_and(|c| c.is_ascii_alphabetic()) || matches!(first, Some('e' | 'E')) {
                s.insert_str(0, prefix);
            }
            let base = s.clone();
            let mut k = 2;
            while !seen.insert(s.clone()) {
                s = format!("{base}_{k}");
                k += 1;
            }
            s
        })
        .collect()
}

fn number<F: Scalar>(x: F) -> String {
    let v = x.as_f64();
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn linear<F: Scalar>(out: &mut String, terms: &[(usize, F)], names: &[String]) {
    for (i, &(v, c)) in terms.iter().enumerate() {
        let c = c.as_f64();
        let sign = if c < 0.0 { "-" } else { "+" };
        if i == 0 && sign == "+" {
            write!(out, " {} {}", number(c.abs()), names[v]).unwrap();
        } else {
            write!(out, " {sign} {} {}", number(c.abs()), names[v]).unwrap();
        }
    }
}

/// Renders the model; identical models give identical text.
pub fn export_lp<F: Scalar>(model: &MilpModel<F>) -> String {
    let names = sanitized_names(model);
    let row_names = unique(model.constraints.iter().map(|c| c.name.as_str()), "r_");
    let mut out = String::new();
    out.push_str(match model.objective.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    linear(&mut out, &model.objective.terms, &names);
    out.push('\n');

    out.push_str("Subject To\n");
    for (c, name) in model.constraints.iter().zip(&row_names) {
        write!(out, " {name}:").unwrap();
        linear(&mut out, &c.terms, &names);
        writeln!(out, " {} {}", c.sense.symbol(), number(c.rhs)).unwrap();
    }

    let continuous: Vec<usize> = (0..model.variables.len())
        .filter(|&i| model.variables[i].kind == VarType::Continuous)
        .collect();
    if !continuous.is_empty() {
        out.push_str("Bounds\n");
        for i in continuous {
            let v = &model.variables[i];
            let (lo, hi) = (v.lower.as_f64(), v.upper.as_f64());
            if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                writeln!(out, " {} free", names[i]).unwrap();
            } else {
                writeln!(
                    out,
                    " {} <= {} <= {}",
                    number(v.lower),
                    names[i],
                    number(v.upper)
                )
                .unwrap();
            }
        }
    }

    let binaries: Vec<&String> = model
        .variables
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarType::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for n in binaries {
            writeln!(out, " {n}").unwrap();
        }
    }
    out.push_str("End\n");
    out
}
