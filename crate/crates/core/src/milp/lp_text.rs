//! Writer for the conventional LP text format.

use super::{MilpModel, Sense, VarKind};

/// Formats a number to 12 significant digits, then prints the shortest
/// representation of the rounded value.
fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("roundtrip");
    let s = format!("{rounded}");
    s
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], model: &MilpModel) {
    let mut first = true;
    for (j, a) in terms {
        if *a == 0.0 {
            continue;
        }
        let name = &model.variables[*j].name;
        if first {
            if *a < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if *a < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let mag = a.abs();
        if (mag - 1.0).abs() < f64::EPSILON {
            out.push_str(name);
        } else {
            out.push_str(&fmt12(mag));
            out.push(' ');
            out.push_str(name);
        }
    }
    if first {
        out.push('0');
    }
}

/// Emits the model in LP file format with deterministic ordering: the
/// objective, constraints in declaration order, bounds, and binary
/// declarations.
pub fn export_lp_text(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj: ");
    write_terms(&mut out, &model.objective, model);
    out.push('\n');
    if !model.constraints.is_empty() {
        out.push_str("Subject To\n");
        for c in &model.constraints {
            out.push(' ');
            out.push_str(&c.name);
            out.push_str(": ");
            write_terms(&mut out, &c.terms, model);
            out.push_str(match c.sense {
                Sense::Le => " <= ",
                Sense::Ge => " >= ",
                Sense::Eq => " = ",
            });
            out.push_str(&fmt12(c.rhs));
            out.push('\n');
        }
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.kind == VarKind::Binary {
            continue;
        }
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => out.push_str(&format!(
                " {} <= {} <= {}\n",
                fmt12(v.lower),
                v.name,
                fmt12(v.upper)
            )),
            (true, false) => {
                // LP format default is a zero lower bound.
                if v.lower != 0.0 {
                    out.push_str(&format!(" {} >= {}\n", v.name, fmt12(v.lower)));
                }
            }
            (false, true) => out.push_str(&format!(" -inf <= {} <= {}\n", v.name, fmt12(v.upper))),
            (false, false) => out.push_str(&format!(" {} free\n", v.name)),
        }
    }
    let binaries: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(10) {
            out.push(' ');
            out.push_str(&chunk.join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_constraints_emit_objective_and_bounds_only() {
        let mut m = MilpModel::new();
        m.add_continuous("x", 0.0, 5.0);
        m.objective = vec![(0, 1.0)];
        let text = export_lp_text(&m);
        assert!(text.contains("Minimize"));
        assert!(!text.contains("Subject To"));
        assert!(text.contains("Bounds\n 0 <= x <= 5\n"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn export_is_deterministic() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let z = m.add_binary("z");
        m.add_constraint("c0", vec![(x, 1.5), (z, -2.0)], Sense::Le, 3.25);
        m.objective = vec![(x, 1.0)];
        assert_eq!(export_lp_text(&m), export_lp_text(&m));
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(610.0), "610");
        assert_eq!(fmt12(0.1), "0.1");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(-2.5), "-2.5");
    }

    #[test]
    fn binaries_listed() {
        let mut m = MilpModel::new();
        for i in 0..6 {
            m.add_binary(format!("z{i}"));
        }
        let text = export_lp_text(&m);
        let count = text
            .split("Binaries")
            .nth(1)
            .unwrap()
            .split_whitespace()
            .take_while(|w| *w != "End")
            .count();
        assert_eq!(count, 6);
    }
}
