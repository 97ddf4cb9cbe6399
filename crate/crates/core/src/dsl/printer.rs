//! Canonical text form: modes, params, elements, detectors; one per line.

use std::fmt;

use super::ast::{BinOp, CircuitDescription, ElementKind, Expr, SplitterSpec};

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Number(_) | Expr::Pi | Expr::Param(_) => 4,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(x) => write!(f, "{x}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_wrapped(f, e, precedence(e) < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = precedence(self);
                write_wrapped(f, l, precedence(l) < p)?;
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, " {sym} ")?;
                // left-associative: an equal-precedence right operand keeps its parens
                write_wrapped(f, r, precedence(r) <= p)
            }
        }
    }
}

impl fmt::Display for SplitterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitterSpec::Balanced => f.write_str("balanced"),
            SplitterSpec::Split {
                reflectance,
                phi_t,
                phi_r,
            } => {
                write!(f, "split(reflectance = {reflectance}")?;
                if let Some(p) = phi_t {
                    write!(f, ", phi_t = {p}")?;
                }
                if let Some(p) = phi_r {
                    write!(f, ", phi_r = {p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::BeamSplitter {
                name,
                spec,
                inputs,
                outputs,
                removable,
            } => {
                write!(
                    f,
                    "bs {name} {spec} {} {} -> {} {}",
                    inputs[0], inputs[1], outputs[0], outputs[1]
                )?;
                if *removable {
                    f.write_str(" removable")?;
                }
                f.write_str(";")
            }
            ElementKind::Phase { mode, value } => write!(f, "phase {mode} {value};"),
            ElementKind::Mirror { input, output } => write!(f, "mirror {input} -> {output};"),
        }
    }
}

impl fmt::Display for CircuitDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("modes")?;
        for m in &self.modes {
            write!(f, " {m}")?;
        }
        f.write_str(";\n")?;
        for p in &self.params {
            match &p.default {
                Some(d) => writeln!(f, "param {} = {d};", p.name)?,
                None => writeln!(f, "param {};", p.name)?,
            }
        }
        for e in &self.elements {
            writeln!(f, "{}", e.kind)?;
        }
        for d in &self.detectors {
            writeln!(f, "detect {} {};", d.name, d.mode)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use crate::dsl::parse_circuit;

    #[test]
    fn expression_parens_survive() {
        let text = "modes b; param a = 1; phase b a - (2 - 3) * -(pi / 4); detect D b;\n";
        let d = parse_circuit(text).unwrap();
        let printed = d.to_string();
        assert!(printed.contains("phase b a - (2 - 3) * -(pi / 4);"), "{printed}");
        assert_eq!(parse_circuit(&printed).unwrap(), d);
    }
}
