//! Complex-coefficient polynomials in ascending-degree form.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::expr::Expr;
use crate::C64;

/// Polynomial with complex coefficients, `coeffs[n]` multiplying `z^n`.
///
/// Trailing coefficients that are exactly zero are dropped on construction;
/// tiny nonzero ones are kept. The empty sequence is the zero polynomial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> C64 {
        self.eval(C64::new(x, 0.0))
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, &c)| c * n as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, order: usize) -> Polynomial {
        (0..order).fold(self.clone(), |p, _| p.derivative())
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(C64::new(0.0, 0.0));
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, &c)| c / (n + 1) as f64),
        );
        Polynomial::new(out)
    }

    /// `r`-fold antiderivative, each step anchored at 0; `r = 0` is the identity.
    pub fn iterated_antiderivative(&self, r: usize) -> Polynomial {
        (0..r).fold(self.clone(), |p, _| p.antiderivative())
    }

    /// Antiderivative vanishing at `a` instead of 0.
    pub fn antiderivative_at(&self, a: f64) -> Polynomial {
        let p = self.antiderivative();
        let shift = p.eval_real(a);
        Polynomial::linear_combine(
            C64::new(1.0, 0.0),
            &p,
            C64::new(-1.0, 0.0),
            &Polynomial::constant(shift),
        )
    }

    /// `a*p + b*q`.
    pub fn linear_combine(a: C64, p: &Polynomial, b: C64, q: &Polynomial) -> Polynomial {
        let n = p.coeffs.len().max(q.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Polynomial::new(
            (0..n)
                .map(|k| {
                    let pc = p.coeffs.get(k).copied().unwrap_or(zero);
                    let qc = q.coeffs.get(k).copied().unwrap_or(zero);
                    a * pc + b * qc
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let one = C64::new(1.0, 0.0);
        Polynomial::linear_combine(one, self, one, other)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        Polynomial::linear_combine(C64::new(1.0, 0.0), self, C64::new(-1.0, 0.0), other)
    }

    /// Horner-form expression `c0 + x*(c1 + x*(...))`.
    pub fn to_expr(&self) -> Expr {
        self.coeffs.iter().rev().fold(Expr::zero(), |acc, &c| {
            Expr::add(Expr::Const(c), Expr::mul(Expr::x(), acc))
        })
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(Polynomial::new(
            pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
        ))
    }
}
