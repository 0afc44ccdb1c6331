//! Low-level numerical routines: adaptive quadrature, bracketed root
//! finding, and a small derivative-free minimizer.
//!
//! These are the workhorses behind the Rice distribution statistics and
//! the approximation-constant fits. They are deliberately plain: smooth
//! one-dimensional integrands and monotone bracket functions are the only
//! inputs this crate ever feeds them.

/// Errors from the bracketed root finder.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    /// The supplied bracket does not straddle a sign change.
    #[error("no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    /// The iteration cap was reached before the tolerance was met.
    #[error("did not converge within {max_iter} iterations (best x = {best})")]
    DidNotConverge { max_iter: usize, best: f64 },
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Standard recursive bisection with the 1/15 Richardson error estimate.
/// Recursion depth is capped at 60, past which the current estimate is
/// accepted (for the smooth densities integrated here the cap is never
/// reached in practice).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        let half = 0.5 * tol;
        adaptive(f, a, m, fa, flm, fm, left, half, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, half, depth - 1)
    }
}

/// Bisection on a bracketed sign change: returns `x` with `f(x) ~ 0`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (an endpoint that is
/// exactly zero is returned immediately). Iterates until the bracket
/// width drops below `xtol` or `max_iter` halvings have been done.
pub fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, NumericError> {
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(NumericError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f_lo;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(NumericError::DidNotConverge {
        max_iter,
        best: 0.5 * (lo + hi),
    })
}

/// Nelder-Mead simplex minimization in two dimensions.
///
/// Deterministic: the simplex is seeded from `start` with fixed offsets,
/// so identical inputs always walk the same path. The objective may
/// return `INFINITY` to encode constraint violations.
pub fn nelder_mead_2d<F: Fn(f64, f64) -> f64>(
    f: &F,
    start: (f64, f64),
    scale: f64,
    ftol: f64,
    max_iter: usize,
) -> ((f64, f64), f64, bool) {
    let mut pts = [
        start,
        (start.0 + scale, start.1),
        (start.0, start.1 + scale),
    ];
    let mut vals = pts.map(|(x, y)| f(x, y));

    for _ in 0..max_iter {
        // order best..worst
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        let (b, m, w) = (idx[0], idx[1], idx[2]);

        if (vals[w] - vals[b]).abs() <= ftol * (vals[b].abs() + ftol) {
            return (pts[b], vals[b], true);
        }

        let centroid = (
            0.5 * (pts[b].0 + pts[m].0),
            0.5 * (pts[b].1 + pts[m].1),
        );
        let reflect = (
            centroid.0 + (centroid.0 - pts[w].0),
            centroid.1 + (centroid.1 - pts[w].1),
        );
        let f_r = f(reflect.0, reflect.1);

        if f_r < vals[b] {
            let expand = (
                centroid.0 + 2.0 * (centroid.0 - pts[w].0),
                centroid.1 + 2.0 * (centroid.1 - pts[w].1),
            );
            let f_e = f(expand.0, expand.1);
            if f_e < f_r {
                pts[w] = expand;
                vals[w] = f_e;
            } else {
                pts[w] = reflect;
                vals[w] = f_r;
            }
        } else if f_r < vals[m] {
            pts[w] = reflect;
            vals[w] = f_r;
        } else {
            let contract = (
                centroid.0 + 0.5 * (pts[w].0 - centroid.0),
                centroid.1 + 0.5 * (pts[w].1 - centroid.1),
            );
            let f_c = f(contract.0, contract.1);
            if f_c < vals[w] {
                pts[w] = contract;
                vals[w] = f_c;
            } else {
                // shrink toward best
                for i in 0..3 {
                    if i != b {
                        pts[i] = (
                            pts[b].0 + 0.5 * (pts[i].0 - pts[b].0),
                            pts[b].1 + 0.5 * (pts[i].1 - pts[b].1),
                        );
                        vals[i] = f(pts[i].0, pts[i].1);
                    }
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..3 {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    (pts[best], vals[best], false)
}
