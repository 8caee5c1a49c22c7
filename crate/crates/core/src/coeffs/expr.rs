use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Variables an expression may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    /// Time. The parser also accepts `s` as an alias.
    T,
    /// Slow coordinate.
    X,
    /// Fast coordinate or environment value.
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Scalar expression in `t`, `x` and `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Domain failures during evaluation.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt of negative value {0}")]
    SqrtOfNegative(f64),
    #[error("power {base}^{exponent} is undefined over the reals")]
    PowDomain { base: f64, exponent: f64 },
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(l: Expr, r: Expr) -> Expr {
        Self::binary(BinOp::Add, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(l: Expr, r: Expr) -> Expr {
        Self::binary(BinOp::Sub, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(l: Expr, r: Expr) -> Expr {
        Self::binary(BinOp::Mul, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(l: Expr, r: Expr) -> Expr {
        Self::binary(BinOp::Div, l, r)
    }

    pub fn pow(l: Expr, r: Expr) -> Expr {
        Self::binary(BinOp::Pow, l, r)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    /// Evaluates at `(t, x, y)`.
    pub fn eval<T: Real>(&self, t: T, x: T, y: T) -> Result<T, EvalError> {
        match self {
            Expr::Num(v) => Ok(T::lit(*v)),
            Expr::Var(Var::T) => Ok(t),
            Expr::Var(Var::X) => Ok(x),
            Expr::Var(Var::Y) => Ok(y),
            Expr::Neg(e) => Ok(-e.eval(t, x, y)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(t, x, y)?;
                let b = r.eval(t, x, y)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == T::zero() {
                            Err(EvalError::DivisionByZero)
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, arg) => {
                let v = arg.eval(t, x, y)?;
                match f {
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Exp => Ok(v.exp()),
                    Func::Abs => Ok(v.abs()),
                    Func::Sqrt => {
                        if v < T::zero() {
                            Err(EvalError::SqrtOfNegative(v.to_f64_lossy()))
                        } else {
                            Ok(v.sqrt())
                        }
                    }
                }
            }
        }
    }

    /// Evaluates a function of a single variable (time); `x` and `y` are zero.
    pub fn eval_in_time<T: Real>(&self, s: T) -> Result<T, EvalError> {
        self.eval(s, T::zero(), T::zero())
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(var),
            Expr::Binary(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }
}

fn pow<T: Real>(base: T, exponent: T) -> Result<T, EvalError> {
    // small integer exponents go through repeated multiplication so that
    // `y^2` agrees bit-for-bit with `y*y`
    if exponent.fract() == T::zero() && exponent.abs() <= T::lit(64.0) {
        let n = exponent.to_i32().unwrap_or(0);
        if n < 0 && base == T::zero() {
            return Err(EvalError::DivisionByZero);
        }
        return Ok(base.powi(n));
    }
    if base < T::zero() {
        return Err(EvalError::PowDomain { base: base.to_f64_lossy(), exponent: exponent.to_f64_lossy() });
    }
    if base == T::zero() && exponent < T::zero() {
        return Err(EvalError::DivisionByZero);
    }
    Ok(base.powf(exponent))
}

/// Printing context: which grammar position the node occupies.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Sum,
    Signed,
    Product,
    Operand,
    Atom,
}

impl Expr {
    fn fits(&self, slot: Slot) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => true,
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => slot == Slot::Sum,
            Expr::Neg(_) => matches!(slot, Slot::Sum | Slot::Signed | Slot::Operand),
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => {
                matches!(slot, Slot::Sum | Slot::Signed | Slot::Product)
            }
            Expr::Binary(BinOp::Pow, ..) => slot != Slot::Atom,
        }
    }

    fn write_in(&self, f: &mut fmt::Formatter<'_>, slot: Slot) -> fmt::Result {
        if !self.fits(slot) {
            f.write_str("(")?;
            self.write_in(f, Slot::Sum)?;
            return f.write_str(")");
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.write_in(f, Slot::Sum)?;
                f.write_str(")")
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                let inner = if slot == Slot::Operand { Slot::Operand } else { Slot::Signed };
                e.write_in(f, inner)
            }
            Expr::Binary(op, l, r) => {
                let (sym, ls, rs) = match op {
                    BinOp::Add => (" + ", Slot::Sum, Slot::Signed),
                    BinOp::Sub => (" - ", Slot::Sum, Slot::Signed),
                    BinOp::Mul => ("*", Slot::Product, Slot::Operand),
                    BinOp::Div => ("/", Slot::Product, Slot::Operand),
                    BinOp::Pow => ("^", Slot::Atom, Slot::Operand),
                };
                l.write_in(f, ls)?;
                f.write_str(sym)?;
                r.write_in(f, rs)
            }
        }
    }
}

/// Minimal-parenthesis rendering that [`parse_expr`](super::parse_expr) maps
/// back onto the same tree (for trees whose literals are nonnegative).
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_in(f, Slot::Sum)
    }
}
