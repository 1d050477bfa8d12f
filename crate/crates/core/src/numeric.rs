//! Scalar search primitives used by the response maps and inverse curves.

use crate::{Error, Result};

/// Interval width at which golden-section search stops.
pub const GOLDEN_TOL: f64 = 1e-10;

/// Coarse-grid size used to bracket a maximum before golden-section search.
pub const GRID_POINTS: usize = 64;

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Assumes `f` is unimodal on the interval; stops when the bracket width
/// falls below `tol`. Returns `(x_max, f_max)`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);

    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }

    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximize `f` on `[a, b]`: a `n`-point grid pass picks the bracketing
/// region, golden-section search refines it.
///
/// The grid pass makes the search robust when `f` is not unimodal over the
/// whole interval; golden section then only needs unimodality between the
/// grid neighbors of the best sample.
pub fn grid_then_golden_max(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    n: usize,
    tol: f64,
) -> (f64, f64) {
    debug_assert!(n >= 3 && b > a);
    let step = (b - a) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best_f = f64::NEG_INFINITY;
    for i in 0..n {
        let x = a + step * i as f64;
        let fx = f(x);
        if fx > best_f {
            best_f = fx;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { a } else { a + step * (best_i - 1) as f64 };
    let hi = if best_i == n - 1 { b } else { a + step * (best_i + 1) as f64 };
    let (x, fx) = golden_max(&f, lo, hi, tol);
    // Strict comparison: on a plateau the refinement drifts without
    // improving anything, so ties keep the leftmost grid sample.
    if fx > best_f {
        (x, fx)
    } else {
        (a + step * best_i as f64, best_f)
    }
}

/// Bisection root of `f` on `[a, b]` to absolute tolerance `tol` in `x`.
///
/// Requires a sign change over the bracket (endpoints with zero value count).
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Numeric("bisection endpoint is NaN".into()));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSolution(format!(
            "no sign change on [{a}, {b}] (f(a)={fa:.3e}, f(b)={fb:.3e})"
        )));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break; // interval no longer representable
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Root of a decreasing function `g` on `[a, b]` used to polish an argmax.
///
/// When the objective is strictly concave its derivative `g` is decreasing,
/// so the argmax is either an endpoint (one-sided sign) or the derivative's
/// root. Falls back to `x0` when `g` is not finite at the endpoints.
pub fn polish_concave_argmax(g: impl Fn(f64) -> f64, a: f64, b: f64, x0: f64) -> f64 {
    let ga = g(a);
    let gb = g(b);
    if !ga.is_finite() || !gb.is_finite() {
        return x0;
    }
    if ga <= 0.0 {
        return a; // decreasing from the left edge: maximum at a
    }
    if gb >= 0.0 {
        return b; // still increasing at the right edge: maximum at b
    }
    bisect(g, a, b, 1e-14).unwrap_or(x0)
}
