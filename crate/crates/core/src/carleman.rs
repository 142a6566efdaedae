//! Inductive stage construction `g_1, g_2, ..., g_K` approximating a
//! continuous `phi` on growing windows `[-k, k]`.
//!
//! Stage `k` fits the glued target (the previous polynomial on the closed
//! disk of radius `k - 1`, `phi` on the two new unit intervals) on
//! `E_k = D_{k-1} u [-k, -(k-1)] u [k-1, k]` within `eps_k = eps(k) / 2^(k+2)`,
//! while interpolating at the integers of `[-k, k]` and matching the moments
//! `T_i^j` on the unit cells. The budgets are summable, so every annulus
//! `k-1 <= |t| <= k` ends within the tail sum of budgets from `k` onward.
//!
//! With envelope shifts the profile reads `eps_i(r) = eps(r + i)`; it is a
//! shifted minorant of `eps`, not equal to it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::functionals::{cell_moment, Functional, MOMENT_TOL};
use crate::poly::Polynomial;
use crate::walsh::{
    fit_constrained_with, sample_set_for, FitOptions, Guide, RegionErrors, SampleSet,
    TargetSources, CONSTRAINT_TOL,
};
use crate::{Error, Result, C64};

/// Grid pitch of the radial table.
pub const PITCH: f64 = 0.01;
const STEPS_PER_UNIT: usize = 100;
/// Safety factor applied by radialization.
pub const SAFETY: f64 = 0.9;
/// Continuity tolerance at the glue points.
pub const GLUE_TOL: f64 = 1e-9;
/// Tolerance on glued versus direct moments.
pub const MOMENT_MATCH_TOL: f64 = 1e-8;

/// Nonincreasing radial minorant of a positive envelope, tabulated on radii
/// `0, 0.01, ..., radius`, read with an optional integer shift.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonProfile {
    source: Expr,
    radius: usize,
    table: Vec<f64>,
    shift: usize,
}

impl EpsilonProfile {
    /// `table[n] = 0.9 * min { eps(t) : t on the grid, |t| <= n * 0.01 }`.
    /// `eps` must be real and positive on the grid of `[-(radius+1), radius+1]`.
    pub fn radialize(eps: &Expr, radius: usize) -> Result<EpsilonProfile> {
        let n = radius * STEPS_PER_UNIT;
        let reach = (radius + 1) * STEPS_PER_UNIT;
        let sample = |idx: i64| -> Result<f64> {
            let t = idx as f64 / STEPS_PER_UNIT as f64;
            let v = eps.eval(t).map_err(|e| Error::NonPositiveEnvelope {
                t,
                value: e.to_string(),
            })?;
            if !(v.re > 0.0) || v.im.abs() > 1e-12 * v.re.abs() || !v.re.is_finite() {
                return Err(Error::NonPositiveEnvelope {
                    t,
                    value: v.to_string(),
                });
            }
            Ok(v.re)
        };
        for idx in -(reach as i64)..=reach as i64 {
            sample(idx)?;
        }
        let mut table = Vec::with_capacity(n + 1);
        let mut running = sample(0)?;
        table.push(SAFETY * running);
        for idx in 1..=n as i64 {
            running = running.min(sample(idx)?).min(sample(-idx)?);
            table.push(SAFETY * running);
        }
        Ok(EpsilonProfile {
            source: eps.clone(),
            radius,
            table,
            shift: 0,
        })
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Largest radius the shifted profile is tabulated for.
    pub fn reach(&self) -> usize {
        self.radius.saturating_sub(self.shift)
    }

    /// Values `eps_shift(n * 0.01)` for `n = 0..=reach * 100`.
    pub fn table(&self) -> &[f64] {
        &self.table[self.shift * STEPS_PER_UNIT..]
    }

    /// `eps_i(r) = eps_{i-1}(r + 1)`, composed `i` times.
    pub fn shifted(&self, i: usize) -> EpsilonProfile {
        EpsilonProfile {
            shift: self.shift + i,
            ..self.clone()
        }
    }

    /// Value at radius `|r|`, read at the next grid radius at or above it.
    /// Radii past the table read its last entry.
    pub fn value(&self, r: f64) -> f64 {
        let idx = (r.abs() / PITCH - 1e-9).ceil().max(0.0) as usize;
        let table = self.table();
        table[idx.min(table.len() - 1)]
    }

    /// Stage budget `eps(k) / 2^(k+2)`.
    pub fn budget(&self, k: usize) -> f64 {
        self.value(k as f64) / 2f64.powi(k as i32 + 2)
    }
}

/// Moments of `phi` against which the glued moments are checked.
#[derive(Debug, Clone)]
pub enum MomentSource {
    /// Nested adaptive quadrature of `phi`.
    Quadrature,
    /// `chain[s] = psi^(s)` for a `psi` with `psi^(m) = phi` whose derivatives
    /// of order below `m` vanish at 0.
    Chain(Vec<Expr>),
}

impl MomentSource {
    fn moment(&self, f: &Functional, phi: &Expr) -> Result<C64> {
        match self {
            MomentSource::Quadrature => f.apply_to_function(phi),
            MomentSource::Chain(chain) => f.apply_fast_path(chain),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub k: usize,
    pub budget: f64,
    pub degree: usize,
    pub point_constraints: usize,
    pub moment_constraints: usize,
    pub certified: RegionErrors,
    /// Largest `|g_k - g_{k-1}|` over the refined disk boundary and interior
    /// probes; absent at stage 1.
    pub disk_change: Option<f64>,
    pub guide_error: Option<f64>,
    pub point_residual: f64,
    pub moment_residual: f64,
    /// Largest gap between glued moments and the moments of `phi`.
    pub moment_glue_gap: f64,
    pub g: Polynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRun {
    pub g: Polynomial,
    pub stages: Vec<Stage>,
}

fn phi_source(phi: &Expr) -> crate::walsh::TargetFn {
    let phi = phi.clone();
    Arc::new(move |z: C64| phi.eval(z.re))
}

/// Sample set over `E_k` whose disk targets come from `prev` and whose
/// interval targets come from `phi`.
pub fn glue(prev: &Polynomial, phi: &Expr, k: usize, degree: usize) -> Result<SampleSet> {
    if k < 2 {
        return Err(Error::Invalid(format!("glue needs k >= 2, got {k}")));
    }
    let edge = (k - 1) as f64;
    let mut mismatch = [0.0f64; 2];
    for (slot, x) in [-edge, edge].into_iter().enumerate() {
        let f = phi.eval(x)?;
        mismatch[slot] = (prev.eval_real(x) - f).norm();
        if mismatch[slot] > GLUE_TOL * (1.0 + f.norm()) {
            return Err(Error::GlueDiscontinuity {
                k,
                left: (prev.eval_real(-edge) - phi.eval(-edge)?).norm(),
                right: (prev.eval_real(edge) - phi.eval(edge)?).norm(),
            });
        }
    }
    let disk_prev = prev.clone();
    let sources = TargetSources {
        disk: Arc::new(move |z| Ok(disk_prev.eval(z))),
        interval: phi_source(phi),
    };
    sample_set_for(k, degree, sources)
}

pub fn run_stages(
    phi: &Expr,
    profile: &EpsilonProfile,
    m: usize,
    stages: usize,
    degree_cap: usize,
) -> Result<StageRun> {
    run_stages_with(phi, profile, m, stages, degree_cap, &MomentSource::Quadrature)
}

pub fn run_stages_with(
    phi: &Expr,
    profile: &EpsilonProfile,
    m: usize,
    stages: usize,
    degree_cap: usize,
    moments: &MomentSource,
) -> Result<StageRun> {
    if stages == 0 {
        return Err(Error::Invalid("stage count must be at least 1".into()));
    }
    if profile.reach() < stages {
        return Err(Error::Invalid(format!(
            "envelope tabulated to radius {} but {stages} stages requested",
            profile.reach()
        )));
    }
    let mut prev = Polynomial::zero();
    let mut records = Vec::with_capacity(stages);
    for k in 1..=stages {
        let stage = run_stage(phi, profile, m, k, stages, degree_cap, moments, &prev)?;
        prev = stage.g.clone();
        records.push(stage);
    }
    Ok(StageRun {
        g: prev,
        stages: records,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_stage(
    phi: &Expr,
    profile: &EpsilonProfile,
    m: usize,
    k: usize,
    stages: usize,
    degree_cap: usize,
    moments: &MomentSource,
    prev: &Polynomial,
) -> Result<Stage> {
    let budget = profile.budget(k);
    let ki = k as i64;
    let samples = if k == 1 {
        sample_set_for(1, 0, TargetSources::uniform(phi_source(phi)))?
    } else {
        glue(prev, phi, k, 0)?
    };

    let mut c = crate::walsh::ConstraintSystem::new();
    let nodes: Vec<i64> = if k == 1 { vec![-1, 0, 1] } else { (-ki..=ki).collect() };
    for &j in &nodes {
        let x = j as f64;
        let value = if j.unsigned_abs() as usize + 1 < k {
            prev.eval_real(x)
        } else {
            phi.eval(x)?
        };
        c.push(Functional::PointEval { x }, value);
    }
    let point_constraints = c.len();

    let cells: Vec<i64> = if k == 1 { vec![0, 1] } else { (-(ki - 1)..=ki).collect() };
    let mut moment_glue_gap = 0.0f64;
    for i in 1..=m {
        for &j in &cells {
            let f = Functional::moment(i, j, m)?;
            let glued = glued_moment(&f, prev, phi, k)?;
            let direct = moments.moment(&f, phi)?;
            let gap = (glued - direct).norm();
            if gap > MOMENT_MATCH_TOL * (1.0 + direct.norm()) {
                return Err(Error::MomentMismatch {
                    k,
                    functional: f.to_string(),
                    glued: glued.to_string(),
                    target: direct.to_string(),
                });
            }
            moment_glue_gap = moment_glue_gap.max(gap);
            c.push(f, glued);
        }
    }
    let moment_constraints = c.len() - point_constraints;

    let guide = (k < stages).then(|| {
        let mut intervals = Vec::new();
        for a in k..stages {
            intervals.push((a as f64, (a + 1) as f64));
            intervals.push((-((a + 1) as f64), -(a as f64)));
        }
        Guide {
            intervals,
            source: phi_source(phi),
        }
    });
    let opts = FitOptions {
        base: (k > 1).then(|| prev.clone()),
        guide,
        ..FitOptions::default()
    };
    let fit = fit_constrained_with(&samples, &c, budget, degree_cap, &opts).map_err(|e| match e {
        Error::InfeasibleBudget {
            best,
            budget,
            degree_cap,
            ..
        } => Error::InfeasibleBudget {
            stage: Some(k),
            best,
            budget,
            degree_cap,
        },
        other => other,
    })?;

    let g = fit.poly;
    let disk_change = if k > 1 {
        let s = samples.for_degree(fit.degree)?;
        let probes = s.disk_interior_probes(8, 32)?;
        let interior = probes
            .iter()
            .map(|p| (g.eval(p.z) - p.target).norm())
            .fold(0.0, f64::max);
        Some(fit.certified.disk_boundary.unwrap_or(0.0).max(interior))
    } else {
        None
    };
    let residual = |range: std::ops::Range<usize>| {
        c.constraints[range]
            .iter()
            .map(|(f, v)| (f.apply_to_poly(&g) - v).norm())
            .fold(0.0, f64::max)
    };
    debug_assert!(fit.constraint_residual <= CONSTRAINT_TOL);
    Ok(Stage {
        k,
        budget,
        degree: g.degree().unwrap_or(0),
        point_constraints,
        moment_constraints,
        certified: fit.certified,
        disk_change,
        guide_error: fit.guide_error,
        point_residual: residual(0..point_constraints),
        moment_residual: residual(point_constraints..c.len()),
        moment_glue_gap,
        g,
    })
}

/// Moment of the glued target: exact on `prev` for cells inside the disk,
/// plus the new-interval correction on the two outer cells.
fn glued_moment(f: &Functional, prev: &Polynomial, phi: &Expr, k: usize) -> Result<C64> {
    if k == 1 {
        return f.apply_to_function(phi);
    }
    let Functional::Moment { j, .. } = *f else {
        return Err(Error::Invalid("glued_moment needs a moment".into()));
    };
    let inner = f.apply_to_poly(prev);
    let outer = j == k as i64 || j == -(k as i64 - 1);
    if !outer {
        return Ok(inner);
    }
    let psi = |t: f64| -> Result<C64> { Ok(phi.eval(t)? - prev.eval_real(t)) };
    Ok(inner + cell_moment(&psi, j, f.depth(), MOMENT_TOL)?)
}
