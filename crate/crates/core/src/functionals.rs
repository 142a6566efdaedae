//! Linear functionals used as equality constraints: point evaluations and the
//! iterated-integral cell moments
//!
//! ```text
//! T_i^j(phi) = int_{j-1}^{j} int_0^{x_1} ... int_0^{x_{m-i}} phi(t) dt dx_{m-i} ... dx_1
//! ```
//!
//! with `m - i + 1` nested integrals. On polynomials the moment is exact: it is
//! `Phi_r(p)(j) - Phi_r(p)(j - 1)` where `Phi_r` is the `r`-fold antiderivative
//! anchored at 0 and `r = m - i + 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::poly::Polynomial;
use crate::quadrature::integrate;
use crate::{Error, Result, C64};

/// Outer tolerance for numerically evaluated moments.
pub const MOMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    PointEval { x: f64 },
    Moment { i: usize, j: i64, m: usize },
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::PointEval { x } => write!(f, "eval@{x}"),
            Functional::Moment { i, j, m } => write!(f, "T[i={i},j={j},m={m}]"),
        }
    }
}

impl Functional {
    pub fn moment(i: usize, j: i64, m: usize) -> Result<Functional> {
        if i == 0 || i > m {
            return Err(Error::Invalid(format!(
                "moment index i = {i} outside 1..={m}"
            )));
        }
        Ok(Functional::Moment { i, j, m })
    }

    /// Number of nested integrals, `m - i + 1`; zero for point evaluations.
    pub fn depth(&self) -> usize {
        match *self {
            Functional::PointEval { .. } => 0,
            Functional::Moment { i, m, .. } => m + 1 - i,
        }
    }

    /// Exact value on a polynomial.
    pub fn apply_to_poly(&self, p: &Polynomial) -> C64 {
        match *self {
            Functional::PointEval { x } => p.eval_real(x),
            Functional::Moment { j, .. } => {
                let phi = p.iterated_antiderivative(self.depth());
                phi.eval_real(j as f64) - phi.eval_real((j - 1) as f64)
            }
        }
    }

    /// Value on an expression: direct evaluation, or nested adaptive
    /// quadrature for moments. Inner integrals get a tolerance ten times
    /// tighter than the level enclosing them.
    pub fn apply_to_function(&self, f: &Expr) -> Result<C64> {
        self.apply_to_fn(&|x| f.eval(x))
    }

    pub fn apply_to_fn<F>(&self, f: &F) -> Result<C64>
    where
        F: Fn(f64) -> Result<C64>,
    {
        match *self {
            Functional::PointEval { x } => f(x),
            Functional::Moment { j, .. } => {
                let depth = self.depth();
                let inner = |x: f64| nested(f, depth - 1, x, MOMENT_TOL / 10.0);
                integrate(&inner, (j - 1) as f64, j as f64, MOMENT_TOL)
            }
        }
    }

    /// Moment of `f^(m)` for a target whose derivatives below order `m` all
    /// vanish at 0: then `Phi_r(f^(m)) = f^(i-1)` and the moment collapses to
    /// `f^(i-1)(j) - f^(i-1)(j - 1)`. `chain[s]` must hold `f^(s)`.
    pub fn apply_fast_path(&self, chain: &[Expr]) -> Result<C64> {
        match *self {
            Functional::PointEval { x } => chain
                .last()
                .ok_or_else(|| Error::Invalid("empty derivative chain".into()))?
                .eval(x),
            Functional::Moment { i, j, m } => {
                if chain.len() < m {
                    return Err(Error::Invalid(format!(
                        "fast path needs derivatives up to order {}, got {}",
                        m - 1,
                        chain.len()
                    )));
                }
                let g = &chain[i - 1];
                Ok(g.eval(j as f64)? - g.eval((j - 1) as f64)?)
            }
        }
    }

    /// Entries `F((z/scale)^n)` for `n = 0..=degree`: the constraint row of
    /// this functional in the scaled monomial basis.
    pub fn basis_row(&self, degree: usize, scale: f64) -> Vec<C64> {
        match *self {
            Functional::PointEval { x } => {
                let w = x / scale;
                let mut acc = 1.0;
                (0..=degree)
                    .map(|_| {
                        let v = acc;
                        acc *= w;
                        C64::new(v, 0.0)
                    })
                    .collect()
            }
            Functional::Moment { j, .. } => {
                // Phi_r((z/s)^n)(x) = s^r * n!/(n+r)! * (x/s)^(n+r)
                let r = self.depth();
                let hi = j as f64 / scale;
                let lo = (j - 1) as f64 / scale;
                let sr = scale.powi(r as i32);
                (0..=degree)
                    .map(|n| {
                        let ratio: f64 = (1..=r).map(|k| 1.0 / (n + k) as f64).product();
                        let e = (n + r) as i32;
                        C64::new(sr * ratio * (hi.powi(e) - lo.powi(e)), 0.0)
                    })
                    .collect()
            }
        }
    }
}

// N_0 = f, N_k(x) = int_0^x N_{k-1}(t) dt
fn nested<F>(f: &F, level: usize, x: f64, tol: f64) -> Result<C64>
where
    F: Fn(f64) -> Result<C64>,
{
    if level == 0 {
        return f(x);
    }
    let inner = |t: f64| nested(f, level - 1, t, tol / 10.0);
    if x >= 0.0 {
        integrate(&inner, 0.0, x, tol)
    } else {
        Ok(-integrate(&inner, x, 0.0, tol)?)
    }
}

/// Moment of a function supported on one unit cell lying entirely on one side
/// of the origin. `Phi_r(psi)` vanishes at the cell endpoint nearer to 0, so
/// Cauchy's repeated-integration formula gives
/// `T = int_cell (e - t)^(r-1)/(r-1)! psi(t) dt` with `e` the far endpoint.
pub(crate) fn cell_moment<F>(psi: &F, j: i64, depth: usize, tol: f64) -> Result<C64>
where
    F: Fn(f64) -> Result<C64>,
{
    let (a, b) = ((j - 1) as f64, j as f64);
    let far = if j >= 1 { b } else { a };
    let fact: f64 = (1..depth).map(|k| k as f64).product();
    let kernel = |t: f64| -> Result<C64> {
        let w = (far - t).powi(depth as i32 - 1) / fact;
        Ok(psi(t)? * w)
    };
    integrate(&kernel, a, b, tol)
}
