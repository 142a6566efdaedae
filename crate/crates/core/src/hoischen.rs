//! Simultaneous approximation of `f` and its first `m` derivatives.
//!
//! Whole-line mode subtracts the degree-`m` Maclaurin polynomial of `f`, so
//! every derivative up to order `m` of the remainder vanishes at 0, runs the
//! stage engine on the `m`-th derivative of the remainder under the envelope
//! shifted by `m`, integrates the result `m` times from 0 and adds the
//! Maclaurin polynomial back. Matching every unit-cell moment makes each
//! lower-order error vanish at the integers, so between consecutive integers
//! it is an integral of the next-order error over less than one cell.
//!
//! Compact mode fits `f^(m)` once on `[a, b]` and integrates from `a`.
//!
//! The result is a polynomial, certified on a finite grid of the window.

use serde::{Deserialize, Serialize};

use crate::carleman::{run_stages_with, EpsilonProfile, MomentSource, Stage};
use crate::expr::Expr;
use crate::functionals::Functional;
use crate::poly::Polynomial;
use crate::quadrature::quadrature;
use crate::walsh::{fit_constrained, ConstraintSystem, Geometry, SampleSet, TargetSources};
use crate::{Error, Result, C64};

pub const MAX_ORDER: usize = 8;
pub const MAX_STAGES: usize = 8;
pub const MAX_DEGREE_CAP: usize = 128;
pub const MIN_GRID_PER_UNIT: usize = 50;
/// Tolerance on integer-node and unit-cell residuals.
pub const RESIDUAL_TOL: f64 = 1e-7;
const TAYLOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Envelope `eps` on the whole line, certified on `[-k, k]`.
    Line { eps: Expr, k: usize },
    /// Constant tolerance on `[a, b]`.
    Compact { a: f64, b: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationSpec {
    pub f: Expr,
    pub m: usize,
    pub degree_cap: usize,
    pub mode: Mode,
}

impl ApproximationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m > MAX_ORDER {
            return Err(Error::Invalid(format!("m = {} outside 0..={MAX_ORDER}", self.m)));
        }
        if self.degree_cap > MAX_DEGREE_CAP {
            return Err(Error::Invalid(format!(
                "degree_cap = {} exceeds {MAX_DEGREE_CAP}",
                self.degree_cap
            )));
        }
        match self.mode {
            Mode::Line { k, .. } if !(1..=MAX_STAGES).contains(&k) => {
                Err(Error::Invalid(format!("K = {k} outside 1..={MAX_STAGES}")))
            }
            Mode::Compact { a, b, eps } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::Invalid(format!("compact interval needs a < b, got [{a}, {b}]")));
                }
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(Error::Invalid(format!("compact eps must be positive, got {eps}")));
                }
                Ok(())
            }
            Mode::Line { .. } => Ok(()),
        }
    }

    /// Certification window.
    pub fn window(&self) -> (f64, f64) {
        match self.mode {
            Mode::Line { k, .. } => (-(k as f64), k as f64),
            Mode::Compact { a, b, .. } => (a, b),
        }
    }

    pub fn stages(&self) -> Option<usize> {
        match self.mode {
            Mode::Line { k, .. } => Some(k),
            Mode::Compact { .. } => None,
        }
    }

    fn envelope(&self, x: f64) -> Result<f64> {
        match &self.mode {
            Mode::Line { eps, .. } => Ok(eps.eval(x)?.re),
            Mode::Compact { eps, .. } => Ok(*eps),
        }
    }
}

/// `re + i * im`.
pub fn complex_target(re: Expr, im: Expr) -> Expr {
    Expr::add(re, Expr::mul(Expr::Const(C64::new(0.0, 1.0)), im))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: usize,
    pub max_error: f64,
    pub max_ratio: f64,
    pub worst_x: f64,
    /// Largest `|f^(i)(x) - g^(i)(x)|` over the interpolation nodes.
    pub node_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResidual {
    pub j: i64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub interval: (f64, f64),
    pub grid_points: usize,
    pub orders: Vec<OrderReport>,
    /// `|int_{j-1}^{j} (f^(m) - g^(m))|` per unit cell; empty when `m = 0`
    /// or in compact mode.
    pub moment_residuals: Vec<CellResidual>,
    pub ratios_pass: bool,
    pub residuals_pass: bool,
    pub pass: bool,
}

impl Certificate {
    pub fn max_node_residual(&self) -> f64 {
        self.orders.iter().map(|o| o.node_residual).fold(0.0, f64::max)
    }

    pub fn max_moment_residual(&self) -> f64 {
        self.moment_residuals.iter().map(|c| c.value).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub g: Polynomial,
    pub taylor: Polynomial,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub stages: Vec<Stage>,
    pub certificate: Certificate,
}

/// Maclaurin polynomial of degree `m` and the chain `f^(i) - taylor^(i)`,
/// `i = 0..=m`, whose members all vanish at 0.
pub fn taylor_shift(f: &Expr, m: usize) -> Result<(Vec<Expr>, Polynomial)> {
    let derivs = derivative_chain(f, m)?;
    let mut coeffs = Vec::with_capacity(m + 1);
    let mut fact = 1.0;
    for (i, d) in derivs.iter().enumerate() {
        if i > 0 {
            fact *= i as f64;
        }
        coeffs.push(d.eval(0.0)? / fact);
    }
    let taylor = Polynomial::new(coeffs);
    let mut chain = Vec::with_capacity(m + 1);
    for (i, d) in derivs.into_iter().enumerate() {
        let t = taylor.nth_derivative(i);
        let shifted = Expr::sub(d, t.to_expr());
        let at0 = shifted.eval(0.0)?;
        let scale = 1.0 + t.eval_real(0.0).norm();
        if at0.norm() > TAYLOR_TOL * scale {
            return Err(Error::Invalid(format!(
                "shifted derivative of order {i} is {at0} at 0"
            )));
        }
        chain.push(shifted);
    }
    Ok((chain, taylor))
}

fn derivative_chain(f: &Expr, m: usize) -> Result<Vec<Expr>> {
    let mut out = vec![f.clone()];
    for _ in 0..m {
        let next = out.last().expect("nonempty").differentiate()?;
        out.push(next);
    }
    Ok(out)
}

/// `eps_i(r) = eps(r + i)` on the radial minorant.
pub fn shift_epsilon(profile: &EpsilonProfile, i: usize) -> EpsilonProfile {
    profile.shifted(i)
}

/// Runs the pipeline for either mode. The certificate is computed with
/// `grid_per_unit` points per unit length; a failing certificate is
/// reported in the artifact, not as an error.
pub fn approximate(spec: &ApproximationSpec, grid_per_unit: usize) -> Result<Artifact> {
    spec.validate()?;
    let (g, taylor, stages) = match &spec.mode {
        Mode::Line { eps, k } => {
            let (chain, taylor) = taylor_shift(&spec.f, spec.m)?;
            let profile = shift_epsilon(&EpsilonProfile::radialize(eps, k + spec.m)?, spec.m);
            let phi = chain[spec.m].clone();
            let run = run_stages_with(
                &phi,
                &profile,
                spec.m,
                *k,
                spec.degree_cap,
                &MomentSource::Chain(chain),
            )?;
            let g = run.g.iterated_antiderivative(spec.m).add(&taylor);
            (g, taylor, run.stages)
        }
        Mode::Compact { a, b, eps } => {
            let (g, stage) = compact(&spec.f, *a, *b, *eps, spec.m, spec.degree_cap)?;
            (g, Polynomial::zero(), vec![stage])
        }
    };
    let mut art = Artifact {
        g,
        taylor,
        m: spec.m,
        k: spec.stages(),
        stages,
        certificate: Certificate {
            interval: spec.window(),
            grid_points: 0,
            orders: Vec::new(),
            moment_residuals: Vec::new(),
            ratios_pass: false,
            residuals_pass: false,
            pass: false,
        },
    };
    art.certificate = certify(&art, spec, grid_per_unit)?;
    Ok(art)
}

/// Approximation on `[a, b]` with a constant tolerance.
pub fn approximate_compact(
    f: &Expr,
    a: f64,
    b: f64,
    eps: f64,
    m: usize,
    degree_cap: usize,
) -> Result<Artifact> {
    let spec = ApproximationSpec {
        f: f.clone(),
        m,
        degree_cap,
        mode: Mode::Compact { a, b, eps },
    };
    approximate(&spec, 100)
}

fn compact(f: &Expr, a: f64, b: f64, eps: f64, m: usize, degree_cap: usize) -> Result<(Polynomial, Stage)> {
    let derivs = derivative_chain(f, m)?;
    let top = derivs[m].clone();
    let len = b - a;
    let mut spread = 0.0;
    let mut term = 1.0;
    for s in 0..=m {
        if s > 0 {
            term *= len / s as f64;
        }
        spread += term;
    }
    let budget = eps / spread;

    let src = top.clone();
    let sources = TargetSources::uniform(std::sync::Arc::new(move |z: C64| src.eval(z.re)));
    let samples = SampleSet::build(Geometry::interval(a, b), crate::walsh::samples_per_region(0), sources)?;
    let mut c = ConstraintSystem::new();
    for x in [a, b] {
        c.push(Functional::PointEval { x }, top.eval(x)?);
    }
    let fit = fit_constrained(&samples, &c, budget, degree_cap).map_err(|e| match e {
        Error::InfeasibleBudget {
            best,
            budget,
            degree_cap,
            ..
        } => Error::InfeasibleBudget {
            stage: Some(1),
            best,
            budget,
            degree_cap,
        },
        other => other,
    })?;

    let mut g = fit.poly.clone();
    for i in (0..m).rev() {
        let anchor = derivs[i].eval(a)?;
        g = g.antiderivative_at(a).add(&Polynomial::constant(anchor));
    }
    let point_residual = c
        .constraints
        .iter()
        .map(|(f, v)| (f.apply_to_poly(&fit.poly) - v).norm())
        .fold(0.0, f64::max);
    let stage = Stage {
        k: 1,
        budget,
        degree: fit.poly.degree().unwrap_or(0),
        point_constraints: c.len(),
        moment_constraints: 0,
        certified: fit.certified,
        disk_change: None,
        guide_error: None,
        point_residual,
        moment_residual: 0.0,
        moment_glue_gap: 0.0,
        g: fit.poly,
    };
    Ok((g, stage))
}

/// Grid check of `|f^(i) - g^(i)| / eps` for `i = 0..=m`, residuals at the
/// interpolation nodes and, in whole-line mode with `m >= 1`, unit-cell
/// integrals of `f^(m) - g^(m)`.
pub fn certify(art: &Artifact, spec: &ApproximationSpec, grid_per_unit: usize) -> Result<Certificate> {
    spec.validate()?;
    if grid_per_unit < MIN_GRID_PER_UNIT {
        return Err(Error::Invalid(format!(
            "grid_per_unit = {grid_per_unit} below {MIN_GRID_PER_UNIT}"
        )));
    }
    if art.m != spec.m {
        return Err(Error::Invalid(format!(
            "artifact has m = {}, spec has m = {}",
            art.m, spec.m
        )));
    }
    if art.k != spec.stages() {
        return Err(Error::Invalid(format!(
            "artifact has K = {:?}, spec has K = {:?}",
            art.k,
            spec.stages()
        )));
    }
    let (lo, hi) = spec.window();
    let xs = grid(lo, hi, grid_per_unit);
    let derivs = derivative_chain(&spec.f, spec.m)?;
    let nodes: Vec<(f64, usize)> = match spec.mode {
        Mode::Line { k, .. } => (-(k as i64)..=k as i64)
            .flat_map(|j| (0..=spec.m).map(move |i| (j as f64, i)))
            .collect(),
        Mode::Compact { a, b, .. } => {
            let mut v: Vec<(f64, usize)> = (0..=spec.m).map(|i| (a, i)).collect();
            v.push((b, spec.m));
            v
        }
    };
    let eps: Vec<f64> = xs.iter().map(|&x| spec.envelope(x)).collect::<Result<_>>()?;

    let mut orders = Vec::with_capacity(spec.m + 1);
    for (i, fi) in derivs.iter().enumerate() {
        let gi = art.g.nth_derivative(i);
        let mut report = OrderReport {
            order: i,
            max_error: 0.0,
            max_ratio: 0.0,
            worst_x: lo,
            node_residual: 0.0,
        };
        for (&x, &e) in xs.iter().zip(&eps) {
            let err = (fi.eval(x)? - gi.eval_real(x)).norm();
            let ratio = err / e;
            report.max_error = report.max_error.max(err);
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.worst_x = x;
            }
        }
        for &(x, order) in nodes.iter().filter(|n| n.1 == i) {
            let r = (fi.eval(x)? - gi.eval_real(x)).norm();
            report.node_residual = report.node_residual.max(r);
            debug_assert_eq!(order, i);
        }
        orders.push(report);
    }

    let mut moment_residuals = Vec::new();
    if let (Mode::Line { k, .. }, true) = (&spec.mode, spec.m >= 1) {
        let resid = Expr::sub(derivs[spec.m].clone(), art.g.nth_derivative(spec.m).to_expr());
        for j in -(*k as i64 - 1)..=*k as i64 {
            let v = quadrature(&resid, (j - 1) as f64, j as f64, 1e-13)?;
            moment_residuals.push(CellResidual { j, value: v.norm() });
        }
    }

    let ratios_pass = orders.iter().all(|o| o.max_ratio < 1.0);
    let residuals_pass = orders.iter().all(|o| o.node_residual <= RESIDUAL_TOL)
        && moment_residuals.iter().all(|c| c.value <= RESIDUAL_TOL);
    Ok(Certificate {
        interval: (lo, hi),
        grid_points: xs.len(),
        orders,
        moment_residuals,
        ratios_pass,
        residuals_pass,
        pass: ratios_pass && residuals_pass,
    })
}

/// Uniform grid with `per_unit` steps per unit length, endpoints included.
pub fn grid(lo: f64, hi: f64, per_unit: usize) -> Vec<f64> {
    let steps = (((hi - lo) * per_unit as f64).ceil() as usize).max(1);
    (0..=steps)
        .map(|n| lo + (hi - lo) * n as f64 / steps as f64)
        .collect()
}
