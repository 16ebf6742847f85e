//! Typed expression trees over booleans, fixed-width bitvectors, and
//! bitvector-indexed arrays, plus the machinery to decide them: a
//! simplifier, SMT-LIB 2 serialization/parsing, a built-in bit-blasting
//! solver, and a client for external SMT-LIB 2 solver processes.

mod blast;
mod constraints;
mod error;
mod eval;
mod expr;
mod parse;
mod session;
mod sexpr;
mod simplify;
mod smtlib;
mod solve;
mod sort;

pub mod server;

pub use constraints::ConstraintSet;
pub use error::SmtError;
pub use eval::{eval, Model, Value};
pub use expr::{Expr, ExprKind, OpKind};
pub use parse::{parse_expr, parse_model_defs, parse_script, ParsedScript};
pub use sexpr::{parse_all, parse_one, SExpr};
pub use simplify::simplify;
pub use smtlib::{decls_and_asserts, expr_to_smtlib, script, sort_to_smtlib};
pub use solve::{Solver, SolverConfig, SolverError, SolverResult};
pub use sort::Sort;
