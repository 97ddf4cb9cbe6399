//! Text format for small passive optical circuits.
//!
//! One statement per `;`, `#` starts a comment:
//!
//! ```text
//! modes b v;                                   # declared input modes, photon enters the first
//! param phi_e = 0;                             # named parameter with optional default
//! bs BS_in balanced b v -> e f;                # beam splitter: name, spec, inputs -> outputs
//! bs BS_out split(reflectance = 0.36, phi_t = 0) e f -> c1 c2 removable;
//! phase e phi_e;                               # phase shift on a live mode
//! mirror f -> g;                               # relabel, no phase
//! detect D1 c1;                                # detector binding
//! ```
//!
//! Values are small arithmetic expressions over numbers, `pi` and parameters.
//! Every output label must be fresh, and every final mode needs a detector.

mod ast;
pub mod builtin;
mod elaborate;
mod lexer;
mod parser;
mod printer;

pub use ast::{
    BinOp, CircuitDescription, DetectorBinding, Element, ElementKind, Expr, ParamDecl, Span,
    SplitterSpec,
};
pub use elaborate::{elaborate, elaborate_stages, ElaborationConfig};
pub use parser::parse_circuit;

use thiserror::Error;

use crate::mode_algebra::AlgebraError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("{line}:{col}: syntax error: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{col}: {message}")]
    Semantic {
        line: usize,
        col: usize,
        message: String,
        /// The offending name (mode, parameter, element or detector).
        subject: String,
    },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("removable element `{0}` has no on/off binding")]
    UnboundRemovable(String),
    #[error("binding for unknown name `{0}`")]
    UnknownBinding(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl DslError {
    pub(crate) fn semantic(span: Span, subject: &str, message: impl Into<String>) -> Self {
        DslError::Semantic {
            line: span.line,
            col: span.col,
            message: message.into(),
            subject: subject.to_owned(),
        }
    }

    /// Source position, for errors tied to the text.
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            DslError::Syntax { line, col, .. } | DslError::Semantic { line, col, .. } => {
                Some((*line, *col))
            }
            _ => None,
        }
    }
}
