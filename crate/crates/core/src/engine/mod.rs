//! Use cases, the constraint-to-activity compiler, phase ordering and
//! execution.
//!
//! A use case pairs assumptions on the input model with constraints that
//! must hold afterwards. Each constraint is compiled into one phase: a loop
//! over its scope class that establishes the constraint for every instance.

mod compile;
mod parse;
mod run;

use std::fmt;

use thiserror::Error;

use crate::activity::{ExecError, Stmt};
use crate::expr::{Expr, Frames};
use crate::lexer::SyntaxError;
use crate::model::ModelError;

pub use compile::{compile_constraint, order_phases, PhaseOrder};
pub use parse::parse_usecases;
pub use run::{
    check_asm, execute_chain, execute_usecase, frame_violations, run_chain, verify_constraint, PhaseReport, RunOptions,
    RunReport,
};

/// Name of the loop variable bound to the current scope instance.
pub const SELF: &str = "self";

/// A postcondition `forall self : scope; quantifiers :: antecedent => succedent`.
/// Scope features are stored qualified as `self.feature`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `None` for a global constraint, established once.
    pub scope: Option<String>,
    pub quantifiers: Vec<(String, Expr)>,
    pub antecedent: Option<Expr>,
    pub succedent: Expr,
}

impl Constraint {
    /// The constraint body as a single expression.
    pub fn body(&self) -> Expr {
        match &self.antecedent {
            Some(a) => Expr::binary(crate::expr::BinOp::Implies, a.clone(), self.succedent.clone()),
            None => self.succedent.clone(),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.name, self.scope.as_deref().unwrap_or("$global"))?;
        for (v, range) in &self.quantifiers {
            write!(f, "; {v} : {range}")?;
        }
        write!(f, " :: {}", self.body())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UseCase {
    pub name: String,
    pub assumptions: Vec<Expr>,
    pub constraints: Vec<Constraint>,
}

/// A compiled constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub constraint: Constraint,
    pub activity: Stmt,
    /// Everything the phase may change or consult, including its
    /// antecedent, quantifier ranges and scope extent.
    pub frames: Frames,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Invalid(String),
    #[error("{constraint}: unsupported construct `{subterm}`: {reason}")]
    Unsupported { constraint: String, subterm: String, reason: String },
    #[error("use case {usecase}: assumptions do not hold:\n  {}", failed.join("\n  "))]
    Assumptions { usecase: String, failed: Vec<String> },
    #[error("{phase}: {source}")]
    Exec { phase: String, source: Box<ExecError> },
    #[error("use case {}: post-verification failed\n{}", .0.usecase, .0)]
    Verification(Box<RunReport>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Io(String),
}
