//! Adaptive Gauss–Kronrod (7/15) quadrature with interval bisection.

use crate::expr::Expr;
use crate::{Error, Result, C64};

/// Maximum bisection depth before giving up.
pub const MAX_DEPTH: usize = 40;

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with weights, and the
// embedded 7-point Gauss weights on the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    kronrod: C64,
    error: f64,
    magnitude: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<C64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut magnitude = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        let sum = f1 + f2;
        kronrod += sum * WGK[j];
        magnitude += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    Ok(Panel {
        kronrod: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
        magnitude: magnitude * half.abs(),
    })
}

/// Integrates a fallible closure over `[a, b]` to absolute tolerance `tol`.
///
/// Each panel is accepted once its Kronrod–Gauss difference is below its
/// share of the tolerance (or at round-off level for its magnitude);
/// otherwise it is bisected, splitting the tolerance between the halves.
pub fn integrate<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<C64>
where
    F: Fn(f64) -> Result<C64>,
{
    if a > b {
        return Err(Error::Invalid(format!("quadrature bounds reversed: [{a}, {b}]")));
    }
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let whole = gk15(f, a, b)?;
    match refine(f, a, b, tol, whole, 0)? {
        Some(v) => Ok(v),
        None => Err(Error::QuadratureNonConvergence { a, b, tol }),
    }
}

// `Ok(None)` signals that the depth cap was hit somewhere below this panel;
// errors raised by the integrand pass through untouched.
fn refine<F>(f: &F, a: f64, b: f64, tol: f64, panel: Panel, depth: usize) -> Result<Option<C64>>
where
    F: Fn(f64) -> Result<C64>,
{
    let roundoff = 50.0 * f64::EPSILON * panel.magnitude;
    if panel.error <= tol.max(roundoff) {
        return Ok(Some(panel.kronrod));
    }
    if depth >= MAX_DEPTH {
        return Ok(None);
    }
    let mid = 0.5 * (a + b);
    let left = gk15(f, a, mid)?;
    let right = gk15(f, mid, b)?;
    let Some(l) = refine(f, a, mid, 0.5 * tol, left, depth + 1)? else {
        return Ok(None);
    };
    let Some(r) = refine(f, mid, b, 0.5 * tol, right, depth + 1)? else {
        return Ok(None);
    };
    Ok(Some(l + r))
}

/// [`integrate`] applied to an expression.
pub fn quadrature(f: &Expr, a: f64, b: f64, tol: f64) -> Result<C64> {
    integrate(&|x| f.eval(x), a, b, tol)
}
