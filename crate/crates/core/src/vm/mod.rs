//! Runtime values, the instruction set, program trees, the fuel-bounded
//! interpreter and the canonical text form whose byte length is the program
//! size measure.

mod eval;
mod instr;
mod program;
mod text;
mod value;

use thiserror::Error;

pub use eval::{evaluate, evaluate_metered, Evaluation, ExecBudget};
pub use instr::{Builtin, InstructionTable, Op, Routine};
pub use program::{Node, Program};
pub use text::{parse, parse_literal};
pub use value::{Value, ValueKind};

/// Runtime failure of an evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("TypeMismatch: {instruction} does not accept {operand}")]
    TypeMismatch {
        instruction: &'static str,
        operand: ValueKind,
    },
    #[error("DivisionByZero")]
    DivisionByZero,
    #[error("IndexOutOfRange")]
    IndexOutOfRange,
    #[error("NegativeRange")]
    NegativeRange,
    #[error("NumericOverflow")]
    NumericOverflow,
    #[error("FuelExhausted")]
    FuelExhausted,
    #[error("WallClockExceeded")]
    WallClockExceeded,
}

impl EvalError {
    /// True for the two budget failures (fuel and wall clock).
    pub fn is_timeout(&self) -> bool {
        matches!(self, EvalError::FuelExhausted | EvalError::WallClockExceeded)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EvalError::TypeMismatch { .. } => "TypeMismatch",
            EvalError::DivisionByZero => "DivisionByZero",
            EvalError::IndexOutOfRange => "IndexOutOfRange",
            EvalError::NegativeRange => "NegativeRange",
            EvalError::NumericOverflow => "NumericOverflow",
            EvalError::FuelExhausted => "FuelExhausted",
            EvalError::WallClockExceeded => "WallClockExceeded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("SyntaxError at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("UnknownInstruction: {0}")]
    UnknownInstruction(String),
    #[error("ArityMismatch: {instruction} takes {expected} argument(s), found {found}")]
    ArityMismatch {
        instruction: String,
        expected: usize,
        found: usize,
    },
}
