//! Signal temporal logic restricted to the bounded three-level fragment:
//! an outer `G`/`F` over Boolean combinations of `G`/`F` sub-formulae whose
//! bodies are temporal-free state formulas over affine predicates.

mod ast;
mod parser;
mod semantics;

pub use ast::{Inner, Phi, PhiExpr, PhiNode, Predicate, Spec, SubFormula, TemporalOp};
pub use parser::{parse_inner, parse_spec};
pub use semantics::{decompose, Formula, Signal, Trace};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StlError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("temporal nesting outside the supported fragment at byte {pos}")]
    Nesting { pos: usize },
    #[error("interval [{start},{end}] at byte {pos} has start after end")]
    BadInterval { pos: usize, start: usize, end: usize },
    #[error("variable x{index} at byte {pos} exceeds state dimension {n_x}")]
    VariableOutOfRange { pos: usize, index: usize, n_x: usize },
    #[error("predicate at byte {pos} has no nonzero coefficient")]
    DegeneratePredicate { pos: usize },
    #[error("evaluation at t={t} needs {horizon} further steps but the trace has length {len}")]
    WindowUnderrun { t: usize, horizon: usize, len: usize },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("state at t={t} has dimension {found}, expected {expected}")]
    RaggedTrace { t: usize, expected: usize, found: usize },
}
