use std::collections::BTreeMap;

use crate::mode_algebra::Mode;

/// 1-based source position.
///
/// Spans compare equal regardless of position so that two descriptions with
/// the same structure are `==` even when their text is laid out differently.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Pi,
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, params: &BTreeMap<String, f64>) -> Result<f64, String> {
        Ok(match self {
            Expr::Number(x) => *x,
            Expr::Pi => std::f64::consts::PI,
            Expr::Param(name) => *params.get(name).ok_or_else(|| name.clone())?,
            Expr::Neg(e) => -e.eval(params)?,
            Expr::Binary(op, l, r) => {
                let (a, b) = (l.eval(params)?, r.eval(params)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
        })
    }

    /// Parameters referenced anywhere in the expression.
    pub fn params(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Param(p) => out.push(p),
            Expr::Neg(e) => e.collect_params(out),
            Expr::Binary(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            Expr::Number(_) | Expr::Pi => {}
        }
    }
}

/// How a beam splitter's coefficients are given.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitterSpec {
    /// `|R| = |T| = 1/sqrt(2)`, `phi_T = 0`, `phi_R = pi/2`.
    Balanced,
    /// Power reflectance `|R|^2`; `phi_r` defaults to `phi_t + pi/2`, `phi_t` to 0.
    Split {
        reflectance: Expr,
        phi_t: Option<Expr>,
        phi_r: Option<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    BeamSplitter {
        name: String,
        spec: SplitterSpec,
        inputs: [Mode; 2],
        outputs: [Mode; 2],
        removable: bool,
    },
    Phase {
        mode: Mode,
        value: Expr,
    },
    Mirror {
        input: Mode,
        output: Mode,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub default: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBinding {
    pub name: String,
    pub mode: Mode,
    pub span: Span,
}

/// A checked circuit: declarations, elements in propagation order, detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDescription {
    pub(crate) modes: Vec<Mode>,
    pub(crate) params: Vec<ParamDecl>,
    pub(crate) elements: Vec<Element>,
    pub(crate) detectors: Vec<DetectorBinding>,
    pub(crate) outputs: Vec<Mode>,
}

impl CircuitDescription {
    /// Declared input modes.
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Mode the single photon enters: the first declared one.
    pub fn source_mode(&self) -> &Mode {
        &self.modes[0]
    }

    pub fn params(&self) -> &[ParamDecl] {
        &self.params
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn detectors(&self) -> &[DetectorBinding] {
        &self.detectors
    }

    /// Final live modes, in slot order.
    pub fn outputs(&self) -> &[Mode] {
        &self.outputs
    }

    pub fn detector_mode(&self, name: &str) -> Option<&Mode> {
        self.detectors
            .iter()
            .find(|d| d.name == name)
            .map(|d| &d.mode)
    }

    pub fn removable_elements(&self) -> Vec<&str> {
        self.elements
            .iter()
            .filter_map(|e| match &e.kind {
                ElementKind::BeamSplitter {
                    name,
                    removable: true,
                    ..
                } => Some(name.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }
}
