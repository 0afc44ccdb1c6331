//! Which ground-truth error distorts a metric more: marking or map?
//!
//! For equal statistic `v` of the two error types and validation
//! statistic `u`, the marking impact exceeds the map impact exactly when
//!
//! ```text
//! g(lambda) = (1 + 2 lambda (alpha/gamma - 1) + lambda^2)^beta
//!             - (1 - lambda^2)^beta - (2 lambda alpha / gamma)^beta > 0
//! ```
//!
//! where `lambda = sqrt((u-v)/2) / sqrt((u+v)/2)` (only this ratio of the
//! substitution variables is ever needed). `g` vanishes at both
//! endpoints and starts out negative; for the mean and median it crosses
//! zero once at an interior `lambda*`, which translates into a `v/u`
//! threshold below which marking dominates. For the 95%-tail `g` stays
//! negative on all of `(0, 1)`: the map error always dominates there.

use crate::approx::ApproxConstants;
use crate::approx::MetricKind;
use crate::correct::{self, CorrectError, CorrectionConfig};

/// Grid resolution used to isolate the interior root of `g`.
///
/// `g` is zero at both ends of `[0, 1]`, so naive bracketing would catch
/// a boundary; the scan finds the interior sign change instead.
const LAMBDA_GRID: usize = 10_000;

/// Which error type has the larger impact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominant {
    Marking,
    Map,
}

impl std::fmt::Display for Dominant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dominant::Marking => write!(f, "marking"),
            Dominant::Map => write!(f, "map"),
        }
    }
}

/// Outcome of an impact comparison at a concrete `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DominanceVerdict {
    pub metric: MetricKind,
    pub ratio_v_over_u: f64,
    /// The error type with the larger computed impact.
    pub dominant: Dominant,
    /// `v/u` below which marking dominates; `None` when the map error
    /// dominates at every ratio (the tail case).
    pub threshold: Option<f64>,
    /// The two computed impacts, for reporting.
    pub marking_impact: f64,
    pub map_impact: f64,
}

/// Evaluate `g(lambda)` for the given approximation constants.
///
/// `g(0) = g(1) = 0` exactly.
pub fn g_lambda(lambda: f64, c: &ApproxConstants) -> f64 {
    debug_assert!((0.0..=1.0).contains(&lambda));
    let r = c.alpha / c.gamma;
    let l2 = lambda * lambda;
    (1.0 + 2.0 * lambda * (r - 1.0) + l2).powf(c.beta)
        - (1.0 - l2).powf(c.beta)
        - (2.0 * lambda * r).powf(c.beta)
}

/// The interior root of `g`, where it flips from negative to positive.
///
/// Returns `None` when `g` stays negative on the whole open interval
/// (95%-tail constants). The root is located by scanning a
/// 10^4-point grid for the sign change, then bisecting to machine width.
pub fn find_lambda_star(c: &ApproxConstants) -> Option<f64> {
    let n = LAMBDA_GRID;
    let at = |i: usize| i as f64 / n as f64;

    // no positive interior value means no crossing
    let has_positive = (1..n).any(|i| g_lambda(at(i), c) > 1e-13);
    if !has_positive {
        return None;
    }

    // g starts negative (g'(0) < 0); find the first grid point gone positive
    let mut lo = 0.0;
    let mut hi = 1.0;
    for i in 1..n {
        let x = at(i);
        if g_lambda(x, c) > 0.0 {
            lo = at(i - 1);
            hi = x;
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = g_lambda(mid, c);
        if g.abs() <= 1e-15 || hi - lo <= f64::EPSILON {
            return Some(mid);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The `v/u` dominance threshold `(1 - lambda*^2) / (1 + lambda*^2)`.
///
/// Marking error has the larger impact strictly below it. `None` when the
/// map error dominates for every ratio.
pub fn impact_threshold(c: &ApproxConstants) -> Option<f64> {
    find_lambda_star(c).map(|l| (1.0 - l * l) / (1.0 + l * l))
}

/// Compute both impacts at `(u, v)` and report which error dominates.
///
/// The marking impact is `u - sqrt(u^2 - v^2)`; the map impact is `u`
/// minus the map-corrected statistic. The verdict carries the threshold
/// so callers can see how close the inputs sit to the crossover.
pub fn compare_impacts(
    u: f64,
    v: f64,
    c: &ApproxConstants,
    cfg: &CorrectionConfig,
) -> Result<DominanceVerdict, CorrectError> {
    let marking = correct::correct_marking(u, v, c.metric)?;
    let map = correct::correct_map(u, v, c, cfg)?;
    let dominant = if marking.impact >= map.impact {
        Dominant::Marking
    } else {
        Dominant::Map
    };
    Ok(DominanceVerdict {
        metric: c.metric,
        ratio_v_over_u: v / u,
        dominant,
        threshold: impact_threshold(c),
        marking_impact: marking.impact,
        map_impact: map.impact,
    })
}
