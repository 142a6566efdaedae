//! Expressions in one real variable `x`.
//!
//! Expressions carry the function being approximated and the error envelope.
//! They are parsed from text, evaluated at real points (with complex values),
//! and differentiated symbolically so that every derivative the pipeline needs
//! is exact rather than a finite difference.

mod diff;
mod parser;

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, C64};

pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Expression tree. `Pow` exponents are integer constants, which keeps the
/// language closed under differentiation.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(C64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn real(v: f64) -> Expr {
        Expr::Const(C64::new(v, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    pub fn x() -> Expr {
        Expr::Var
    }

    pub fn as_const(&self) -> Option<C64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, v: f64) -> bool {
        matches!(self, Expr::Const(c) if *c == C64::new(v, 0.0))
    }

    // Smart constructors: local constant folding and 0/1 identities only.

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (a, b) if a.is_const(0.0) => b,
            (a, b) if b.is_const(0.0) => a,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            (a, b) if b.is_const(0.0) => a,
            (a, b) if a.is_const(0.0) => Expr::neg(b),
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (a, _) if a.is_const(0.0) => Expr::zero(),
            (_, b) if b.is_const(0.0) => Expr::zero(),
            (a, b) if a.is_const(1.0) => b,
            (a, b) if b.is_const(1.0) => a,
            (a, b) if a.is_const(-1.0) => Expr::neg(b),
            (a, b) if b.is_const(-1.0) => Expr::neg(a),
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (a, _) if a.is_const(0.0) => Expr::zero(),
            (a, b) if b.is_const(1.0) => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        match (a, n) {
            (_, 0) => Expr::one(),
            (a, 1) => a,
            (Expr::Const(c), n) => Expr::Const(c.powi(n)),
            (a, n) => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn contains_abs(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var => false,
            Expr::Neg(a) | Expr::Pow(a, _) => a.contains_abs(),
            Expr::Call(f, a) => *f == Func::Abs || a.contains_abs(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_abs() || b.contains_abs()
            }
        }
    }

    /// Symbolic derivative with respect to `x`.
    pub fn differentiate(&self) -> Result<Expr> {
        diff::differentiate(self)
    }

    /// Applies [`Expr::differentiate`] `order` times.
    pub fn nth_derivative(&self, order: usize) -> Result<Expr> {
        let mut e = self.clone();
        for _ in 0..order {
            e = e.differentiate()?;
        }
        Ok(e)
    }

    /// Evaluates at a real point. Fails with [`Error::Domain`] on division by
    /// zero, `log`/`sqrt` of a non-positive (resp. negative) real, or a
    /// non-finite result.
    pub fn eval(&self, x: f64) -> Result<C64> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var => C64::new(x, 0.0),
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let den = b.eval(x)?;
                if den == C64::new(0.0, 0.0) {
                    return Err(self.domain(x, "division by zero"));
                }
                a.eval(x)? / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(x)?;
                if *n < 0 && base == C64::new(0.0, 0.0) {
                    return Err(self.domain(x, "negative power of zero"));
                }
                base.powi(*n)
            }
            Expr::Call(f, a) => {
                let v = a.eval(x)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Abs => C64::new(v.norm(), 0.0),
                    Func::Log => {
                        if v.im == 0.0 && v.re <= 0.0 {
                            return Err(self.domain(x, "log of a non-positive real"));
                        }
                        if v.im == 0.0 {
                            C64::new(v.re.ln(), 0.0)
                        } else {
                            v.ln()
                        }
                    }
                    Func::Sqrt => {
                        if v.im == 0.0 && v.re < 0.0 {
                            return Err(self.domain(x, "sqrt of a negative real"));
                        }
                        if v.im == 0.0 {
                            C64::new(v.re.sqrt(), 0.0)
                        } else {
                            v.sqrt()
                        }
                    }
                }
            }
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(self.domain(x, "non-finite value"));
        }
        Ok(v)
    }

    fn domain(&self, x: f64, reason: &str) -> Error {
        Error::Domain {
            expr: self.to_string(),
            x,
            reason: reason.to_string(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.im != 0.0 => 5,
            Expr::Const(c) if c.re.is_sign_negative() => 0,
            Expr::Const(_) | Expr::Var | Expr::Call(..) => 5,
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Expr> {
        parse(s)
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.im != 0.0 => write!(f, "cplx({}, {})", c.re, c.im),
            Expr::Const(c) => write!(f, "{}", c.re),
            Expr::Var => write!(f, "x"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                // `-2` would lex as a literal, so a constant operand is bracketed
                if matches!(**a, Expr::Const(_)) {
                    write!(f, "({a})")
                } else {
                    write_operand(f, a, 4)
                }
            }
            Expr::Add(a, b) => {
                write_operand(f, a, 1)?;
                write!(f, " + ")?;
                write_operand(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_operand(f, a, 1)?;
                write!(f, " - ")?;
                write_operand(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_operand(f, a, 2)?;
                write!(f, "*")?;
                write_operand(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_operand(f, a, 2)?;
                write!(f, "/")?;
                write_operand(f, b, 3)
            }
            Expr::Pow(a, n) => {
                write_operand(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
