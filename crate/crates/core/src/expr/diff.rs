use super::{Expr, Func};
use crate::{Error, Result};

pub(super) fn differentiate(e: &Expr) -> Result<Expr> {
    Ok(match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var => Expr::one(),
        Expr::Neg(a) => Expr::neg(differentiate(a)?),
        Expr::Add(a, b) => Expr::add(differentiate(a)?, differentiate(b)?),
        Expr::Sub(a, b) => Expr::sub(differentiate(a)?, differentiate(b)?),
        Expr::Mul(a, b) => Expr::add(
            Expr::mul(differentiate(a)?, (**b).clone()),
            Expr::mul((**a).clone(), differentiate(b)?),
        ),
        Expr::Div(a, b) => {
            let da = differentiate(a)?;
            let db = differentiate(b)?;
            if db.as_const().is_some_and(|c| c.norm() == 0.0) {
                Expr::div(da, (**b).clone())
            } else {
                Expr::div(
                    Expr::sub(
                        Expr::mul(da, (**b).clone()),
                        Expr::mul((**a).clone(), db),
                    ),
                    Expr::pow((**b).clone(), 2),
                )
            }
        }
        Expr::Pow(a, n) => Expr::mul(
            Expr::mul(Expr::real(*n as f64), Expr::pow((**a).clone(), n - 1)),
            differentiate(a)?,
        ),
        Expr::Call(f, a) => {
            let inner = (**a).clone();
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, inner),
                Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                Func::Exp => Expr::call(Func::Exp, inner),
                Func::Log => Expr::div(Expr::one(), inner),
                Func::Sqrt => Expr::div(
                    Expr::one(),
                    Expr::mul(Expr::real(2.0), Expr::call(Func::Sqrt, inner)),
                ),
                Func::Abs => return Err(Error::AbsNotDifferentiable),
            };
            Expr::mul(outer, differentiate(a)?)
        }
    })
}
