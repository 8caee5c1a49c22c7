//! Coefficient expressions and the fast–slow system they define.

mod expr;
mod parser;
mod system;

pub use expr::{BinOp, EvalError, Expr, Func, Var};
pub use parser::{parse_expr, ParseError, ParseErrorKind};
pub use system::{builtin_system, FastSlowSystem, BUILTIN_SYSTEMS};
