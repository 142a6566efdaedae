use nalgebra::{DMatrix, DVector};

use super::{
    certify_regions, chebyshev_points, ConstraintSystem, RegionErrors, SamplePoint, SampleSet,
    TargetFn,
};
use crate::poly::Polynomial;
use crate::{Error, Result, C64};

/// Relative constraint residual a fit must reach.
pub const CONSTRAINT_TOL: f64 = 1e-9;

const RANK_TOL: f64 = 1e-13;
const LSQ_RCOND: f64 = 1e-14;
const WEIGHT_FLOOR: f64 = 1e-12;

/// Soft samples outside the certified set. They enter the least-squares
/// objective with the same weight as the certified samples but are never
/// certified; a degree is preferred only if it also keeps them within budget.
#[derive(Clone)]
pub struct Guide {
    pub intervals: Vec<(f64, f64)>,
    pub source: TargetFn,
}

impl std::fmt::Debug for Guide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Guide").field("intervals", &self.intervals).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub lawson_rounds: usize,
    /// Accept a degree once the certified error is at most `acceptance * budget`.
    pub acceptance: f64,
    pub certify_refine: usize,
    /// Fit only the correction `p - base`; sample targets and constraint
    /// values stay those of `p`.
    pub base: Option<Polynomial>,
    pub guide: Option<Guide>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lawson_rounds: 8,
            acceptance: 0.9,
            certify_refine: 4,
            base: None,
            guide: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub poly: Polynomial,
    /// Working degree of the fitted correction.
    pub degree: usize,
    pub certified: RegionErrors,
    /// Largest modulus error on the fitting samples (guide samples excluded).
    pub sample_error: f64,
    pub guide_error: Option<f64>,
    pub constraint_residual: f64,
}

impl Fit {
    pub fn certified_error(&self) -> f64 {
        self.certified.max()
    }
}

pub fn fit_constrained(
    s: &SampleSet,
    c: &ConstraintSystem,
    budget: f64,
    degree_cap: usize,
) -> Result<Fit> {
    fit_constrained_with(s, c, budget, degree_cap, &FitOptions::default())
}

/// Degree escalation `n_c, n_c + 4, ...` followed by `degree_cap` itself.
/// The first degree meeting the certified budget (and the guide, if any)
/// wins; failing that, the first degree meeting the certified budget.
pub fn fit_constrained_with(
    s: &SampleSet,
    c: &ConstraintSystem,
    budget: f64,
    degree_cap: usize,
    opts: &FitOptions,
) -> Result<Fit> {
    if !(budget > 0.0) {
        return Err(Error::Invalid(format!("budget must be positive, got {budget}")));
    }
    if c.len() > degree_cap + 1 {
        return Err(Error::Invalid(format!(
            "{} constraints cannot be met at degree cap {degree_cap}",
            c.len()
        )));
    }
    let mut best = f64::INFINITY;
    let mut fallback: Option<Fit> = None;
    for d in escalation(c.len(), degree_cap) {
        let fit = fit_at_degree(s, c, d, opts)?;
        let cert = fit.certified_error();
        best = best.min(cert);
        let ok = cert <= opts.acceptance * budget && fit.constraint_residual <= CONSTRAINT_TOL;
        if !ok {
            continue;
        }
        if fit.guide_error.is_none_or(|g| g <= budget) {
            return Ok(fit);
        }
        fallback.get_or_insert(fit);
    }
    fallback.ok_or(Error::InfeasibleBudget {
        stage: None,
        best,
        budget,
        degree_cap,
    })
}

pub(crate) fn escalation(n_c: usize, cap: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (n_c.min(cap)..cap).step_by(4).collect();
    out.push(cap);
    out
}

/// One constrained Lawson fit at a fixed degree, certified but not judged.
pub fn fit_at_degree(s: &SampleSet, c: &ConstraintSystem, degree: usize, opts: &FitOptions) -> Result<Fit> {
    let s = s.for_degree(degree)?;
    let base = opts.base.clone().unwrap_or_else(Polynomial::zero);
    let n = degree + 1;

    let guide_pts = match &opts.guide {
        Some(g) => guide_points(g, degree)?,
        None => Vec::new(),
    };
    let scale = scale_for(&s, &guide_pts, c);

    let mut z: Vec<C64> = Vec::new();
    let mut t: Vec<C64> = Vec::new();
    for p in s.points().iter().chain(&guide_pts) {
        z.push(p.z);
        t.push(p.target - base.eval(p.z));
    }
    let v = vandermonde(&z, degree, scale);
    let t = DVector::from_vec(t);

    let cons = Elimination::new(c, &base, degree, scale)?;
    let x = lawson(&v, &t, &cons, n, opts.lawson_rounds);

    let correction = Polynomial::new(
        x.iter()
            .enumerate()
            .map(|(k, xk)| xk / scale.powi(k as i32))
            .collect(),
    );
    let poly = base.add(&correction);

    let hard = s.points().len();
    let mut sample_error = 0.0f64;
    let mut guide_error = None;
    for (k, p) in s.points().iter().chain(&guide_pts).enumerate() {
        let e = (poly.eval(p.z) - p.target).norm();
        if k < hard {
            sample_error = sample_error.max(e);
        } else {
            guide_error = Some(guide_error.unwrap_or(0.0f64).max(e));
        }
    }
    Ok(Fit {
        certified: certify_regions(&poly, &s, opts.certify_refine)?,
        constraint_residual: c.max_residual(&poly),
        poly,
        degree,
        sample_error,
        guide_error,
    })
}

fn guide_points(g: &Guide, degree: usize) -> Result<Vec<SamplePoint>> {
    let count = 32.max(2 * (degree + 1));
    let mut out = Vec::new();
    for &(a, b) in &g.intervals {
        for x in chebyshev_points(a, b, count) {
            let z = C64::new(x, 0.0);
            out.push(SamplePoint {
                z,
                region: super::Region::Interval,
                target: (g.source)(z)?,
            });
        }
    }
    Ok(out)
}

fn scale_for(s: &SampleSet, guide: &[SamplePoint], c: &ConstraintSystem) -> f64 {
    use crate::functionals::Functional;
    let mut r = s.geometry().extent().max(1.0);
    for p in guide {
        r = r.max(p.z.norm());
    }
    for (f, _) in &c.constraints {
        r = r.max(match *f {
            Functional::PointEval { x } => x.abs(),
            Functional::Moment { j, .. } => j.unsigned_abs().max((j - 1).unsigned_abs()) as f64,
        });
    }
    r
}

fn vandermonde(z: &[C64], degree: usize, scale: f64) -> DMatrix<C64> {
    DMatrix::from_fn(z.len(), degree + 1, |i, k| (z[i] / scale).powi(k as i32))
}

/// Exact elimination of `C x = rhs`: `x = x_p + N y` with `N` an orthonormal
/// null-space basis. Constraint rows are real and normalized to unit length.
struct Elimination {
    c: DMatrix<f64>,
    rhs: DVector<C64>,
    pinv: DMatrix<f64>,
    particular: DVector<C64>,
    null: DMatrix<f64>,
}

impl Elimination {
    fn new(c: &ConstraintSystem, base: &Polynomial, degree: usize, scale: f64) -> Result<Elimination> {
        let n = degree + 1;
        let rows = c.len();
        let mut cm = DMatrix::<f64>::zeros(rows, n);
        let mut rhs = DVector::<C64>::zeros(rows);
        for (r, (f, value)) in c.constraints.iter().enumerate() {
            let row: Vec<f64> = f.basis_row(degree, scale).iter().map(|v| v.re).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::RankDeficient { rank: 0, rows });
            }
            for (k, v) in row.iter().enumerate() {
                cm[(r, k)] = v / norm;
            }
            rhs[r] = (value - f.apply_to_poly(base)) / norm;
        }
        if rows == 0 {
            return Ok(Elimination {
                c: cm,
                rhs,
                pinv: DMatrix::zeros(n, 0),
                particular: DVector::zeros(n),
                null: DMatrix::identity(n, n),
            });
        }

        // pad to square so that V^T is complete
        let mut square = DMatrix::<f64>::zeros(n.max(rows), n);
        square.view_mut((0, 0), (rows, n)).copy_from(&cm);
        let svd = square.svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let smax = svd.singular_values[order[0]];
        let rank = order
            .iter()
            .filter(|&&k| svd.singular_values[k] > smax * RANK_TOL)
            .count();
        if rank < rows {
            return Err(Error::RankDeficient { rank, rows });
        }

        let mut pinv = DMatrix::<f64>::zeros(n, rows);
        for &k in &order[..rank] {
            let sigma = svd.singular_values[k];
            for a in 0..n {
                for b in 0..rows {
                    pinv[(a, b)] += vt[(k, a)] * u[(b, k)] / sigma;
                }
            }
        }
        let mut null = DMatrix::<f64>::zeros(n, n - rank);
        for (col, &k) in order[rank..].iter().enumerate() {
            for a in 0..n {
                null[(a, col)] = vt[(k, a)];
            }
        }
        let particular = real_times(&pinv, &rhs);
        Ok(Elimination {
            c: cm,
            rhs,
            pinv,
            particular,
            null,
        })
    }

    /// One projection step back onto the constraint set.
    fn refine(&self, x: &mut DVector<C64>) {
        if self.rhs.is_empty() {
            return;
        }
        let r = &self.rhs - real_times(&self.c, x);
        *x += real_times(&self.pinv, &r);
    }
}

fn real_times(a: &DMatrix<f64>, x: &DVector<C64>) -> DVector<C64> {
    let re = a * x.map(|v| v.re);
    let im = a * x.map(|v| v.im);
    DVector::from_fn(a.nrows(), |i, _| C64::new(re[i], im[i]))
}

/// Lawson iteration over the null space; returns the iterate with the
/// smallest maximum sample residual.
fn lawson(v: &DMatrix<C64>, t: &DVector<C64>, cons: &Elimination, n: usize, rounds: usize) -> DVector<C64> {
    let samples = v.nrows();
    let free = cons.null.ncols();
    let vn = v * cons.null.map(|a| C64::new(a, 0.0));
    let target = t - v * &cons.particular;

    let mut w = vec![1.0 / samples as f64; samples];
    let mut best = cons.particular.clone();
    let mut best_err = f64::INFINITY;
    for _ in 0..=rounds {
        let mut x = cons.particular.clone();
        if free > 0 {
            let y = weighted_lsq(&vn, &target, &w);
            x += real_times_c(&cons.null, &y);
        }
        cons.refine(&mut x);
        debug_assert_eq!(x.len(), n);

        let resid: Vec<f64> = (v * &x - t).iter().map(|r| r.norm()).collect();
        let err = resid.iter().copied().fold(0.0, f64::max);
        if err < best_err {
            best_err = err;
            best = x;
        }
        if free == 0 || err == 0.0 {
            break;
        }
        for (wi, ri) in w.iter_mut().zip(&resid) {
            *wi *= ri;
        }
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) {
            break;
        }
        for wi in w.iter_mut() {
            *wi = (*wi / sum).max(WEIGHT_FLOOR);
        }
    }
    best
}

fn real_times_c(a: &DMatrix<f64>, y: &DVector<C64>) -> DVector<C64> {
    real_times(a, y)
}

/// Weighted least squares `min sum w_i |(A y - b)_i|^2`, solved as the real
/// system stacking real and imaginary parts.
fn weighted_lsq(a: &DMatrix<C64>, b: &DVector<C64>, w: &[f64]) -> DVector<C64> {
    let (rows, cols) = a.shape();
    let mut m = DMatrix::<f64>::zeros(2 * rows, 2 * cols);
    let mut rhs = DVector::<f64>::zeros(2 * rows);
    for i in 0..rows {
        let sw = w[i].sqrt();
        for k in 0..cols {
            let e = a[(i, k)] * sw;
            m[(i, k)] = e.re;
            m[(i, cols + k)] = -e.im;
            m[(rows + i, k)] = e.im;
            m[(rows + i, cols + k)] = e.re;
        }
        rhs[i] = b[i].re * sw;
        rhs[rows + i] = b[i].im * sw;
    }
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    let sol = svd
        .solve(&rhs, smax * LSQ_RCOND)
        .expect("u and v_t were computed");
    DVector::from_fn(cols, |k, _| C64::new(sol[k], sol[cols + k]))
}
