//! Recover real localization error statistics from contaminated
//! validation statistics.
//!
//! Two correction routes, one per ground-truth error type:
//!
//! - **Marking error** (human mis-click, zero-mean isotropic Gaussian):
//!   per-axis variances add, and every Rayleigh statistic is linear in
//!   `sigma`, so the real statistic is simply `sqrt(u^2 - v^2)` for
//!   validation statistic `u` and marking statistic `v` — for the mean
//!   and any quantile alike.
//! - **Map error** (constant translation of norm `v`): the validation
//!   norm is Rice(v, sigma) distributed. Using the algebraic
//!   approximation of the Rice-minus-Rayleigh gap, the real scale solves
//!   `f(sigma) = (u/sigma + alpha - gamma)^beta - (v/sigma)^beta - alpha^beta = 0`,
//!   which is strictly decreasing on the bracket
//!   `[(u-v)/gamma, (u-v)/(gamma-alpha)]` and is bisected to width
//!   `epsilon`.
//!
//! When both errors are present the map error is removed first, then the
//! marking error — the composition mirrors how the errors stack, but note
//! the joint model (Rice with inflated sigma) is not solved exactly;
//! the sequential result is the intended approximation.

use crate::approx::{self, ApproxConstants, MetricKind};

/// Convergence settings for the map-correction bisection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrectionConfig {
    /// Bracket width (meters of sigma) at which bisection stops.
    pub epsilon: f64,
    /// Hard cap on bisection steps; 200 outlasts any sane bracket.
    pub max_iterations: u32,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-9,
            max_iterations: 200,
        }
    }
}

/// Which correction stage an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Marking,
    Map,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::Marking => write!(f, "marking"),
            Stage::Map => write!(f, "map"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrectError {
    /// Ground-truth error at or above the validation statistic: the model
    /// admits no real error that explains the inputs. Deliberately not
    /// clamped to zero — it flags inconsistent inputs.
    #[error(
        "infeasible {stage} correction: ground-truth statistic {ground_truth} \
         must be below validation statistic {validation}"
    )]
    Infeasible {
        stage: Stage,
        validation: f64,
        ground_truth: f64,
    },
    #[error("validation statistic must be positive and finite, got {0}")]
    InvalidValidation(f64),
    #[error("ground-truth statistic must be nonnegative and finite, got {0}")]
    InvalidGroundTruth(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Approx(#[from] approx::ApproxError),
}

/// Result of one correction: the recovered real statistic, the Rayleigh
/// scale behind it, and how much of the validation figure the
/// ground-truth error accounted for.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrectionResult {
    pub metric: MetricKind,
    /// Corrected statistic of the real error norm (meters).
    pub real_stat: f64,
    /// Recovered Rayleigh scale; `real_stat = sigma_real * gamma(metric)`.
    pub sigma_real: f64,
    /// Impact of the ground-truth error: validation minus real statistic.
    pub impact: f64,
    /// Impact bounds `(v^2/2u, v^2/(2u-v))` — populated for marking
    /// corrections, where they bracket `impact` whenever `v > 0`.
    pub bounds: Option<(f64, f64)>,
}

/// Pipeline output: the map stage first, then the marking stage applied
/// to its result. The final corrected figures live in `marking_stage`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineResult {
    pub map_stage: CorrectionResult,
    pub marking_stage: CorrectionResult,
}

impl PipelineResult {
    /// The statistic after removing only the map error.
    pub fn intermediate_stat(&self) -> f64 {
        self.map_stage.real_stat
    }

    /// The fully corrected result.
    pub fn final_result(&self) -> &CorrectionResult {
        &self.marking_stage
    }
}

fn check_inputs(u: f64, v: f64, stage: Stage) -> Result<(), CorrectError> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(CorrectError::InvalidValidation(u));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(CorrectError::InvalidGroundTruth(v));
    }
    if v >= u {
        return Err(CorrectError::Infeasible {
            stage,
            validation: u,
            ground_truth: v,
        });
    }
    Ok(())
}

/// Correct a validation statistic `u` for a marking-error statistic `v`
/// of the same metric: real statistic `sqrt(u^2 - v^2)`.
///
/// Valid for the mean and any quantile, because both are linear in the
/// Rayleigh scale. Impact bounds are attached to the
/// result.
pub fn correct_marking(
    u: f64,
    v: f64,
    metric: MetricKind,
) -> Result<CorrectionResult, CorrectError> {
    let metric = metric.validate()?;
    check_inputs(u, v, Stage::Marking)?;
    let real_stat = (u * u - v * v).sqrt();
    let gamma = metric.gamma();
    Ok(CorrectionResult {
        metric,
        real_stat,
        sigma_real: real_stat / gamma,
        impact: u - real_stat,
        bounds: Some(marking_impact_bounds(u, v)?),
    })
}

/// Bounds on the marking-error impact:
/// `v^2 / 2u  <  u - sqrt(u^2 - v^2)  <  v^2 / (2u - v)` for `0 < v < u`.
///
/// Both collapse to zero at `v = 0`. The width shrinks as `u` grows: the
/// impact is quadratic in the ground-truth error and inversely
/// proportional to the validation error.
pub fn marking_impact_bounds(u: f64, v: f64) -> Result<(f64, f64), CorrectError> {
    check_inputs(u, v, Stage::Marking)?;
    Ok((v * v / (2.0 * u), v * v / (2.0 * u - v)))
}

/// Fixed ratios of Rayleigh statistics:
/// `(tail / median, tail / mean) = (sqrt(-2 ln 0.05)/sqrt(-2 ln 0.5), sqrt(-2 ln 0.05)/sqrt(pi/2))`.
///
/// Scale-free: they hold for the real error regardless of `sigma`
/// (approximately 2.08 and 1.95 — the worst-case user experience is about
/// twice the typical one).
pub fn tail_ratios() -> (f64, f64) {
    let tail = MetricKind::Tail95.gamma();
    (tail / MetricKind::Median.gamma(), tail / MetricKind::Mean.gamma())
}

/// Correct a validation statistic `u` for a constant map offset of norm
/// `v` by bisecting `f(sigma) = (u/sigma + alpha - gamma)^beta -
/// (v/sigma)^beta - alpha^beta` on `[(u-v)/gamma, (u-v)/(gamma-alpha)]`.
///
/// The metric comes from the constants. `v = 0` short-circuits to `u`
/// exactly (no offset, nothing to correct; the bracket degenerates).
pub fn correct_map(
    u: f64,
    v: f64,
    c: &ApproxConstants,
    cfg: &CorrectionConfig,
) -> Result<CorrectionResult, CorrectError> {
    check_inputs(u, v, Stage::Map)?;
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(CorrectError::InvalidEpsilon(cfg.epsilon));
    }
    let gamma = c.gamma;
    // gamma > alpha holds for every tabulated metric; the bracket upper
    // end would otherwise be negative
    assert!(
        gamma > c.alpha,
        "approximation constants violate gamma > alpha"
    );

    if v == 0.0 {
        return Ok(CorrectionResult {
            metric: c.metric,
            real_stat: u,
            sigma_real: u / gamma,
            impact: 0.0,
            bounds: None,
        });
    }

    let f = |sigma: f64| -> f64 {
        (u / sigma + c.alpha - gamma).powf(c.beta)
            - (v / sigma).powf(c.beta)
            - c.alpha.powf(c.beta)
    };

    let mut lo = (u - v) / gamma;
    let mut hi = (u - v) / (gamma - c.alpha);
    // the bisection premise: f decreasing, positive at lo, negative at hi
    // (holds for any 0 < v < u and gamma > alpha; checked at runtime
    // because the whole correction rests on it)
    assert!(f(lo) > 0.0, "f(sigma_min) must be positive");
    assert!(f(hi) < 0.0, "f(sigma_max) must be negative");

    let mut iterations = 0;
    while hi - lo > cfg.epsilon && iterations < cfg.max_iterations {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let sigma = 0.5 * (lo + hi);
    let real_stat = sigma * gamma;
    Ok(CorrectionResult {
        metric: c.metric,
        real_stat,
        sigma_real: sigma,
        impact: u - real_stat,
        bounds: None,
    })
}

/// Remove a map offset and a marking error from one validation statistic:
/// map correction first, then marking correction on its output.
///
/// Uses the built-in approximation constants for the metric; arbitrary
/// quantiles need constants fitted via [`approx::fit_constants`] and the
/// two stages called directly.
pub fn correct_pipeline(
    u: f64,
    map_v: f64,
    mark_v: f64,
    metric: MetricKind,
    cfg: &CorrectionConfig,
) -> Result<PipelineResult, CorrectError> {
    let constants = approx::builtin_constants(metric)?;
    let map_stage = correct_map(u, map_v, &constants, cfg)?;
    let marking_stage = correct_marking(map_stage.real_stat, mark_v, constants.metric)?;
    Ok(PipelineResult {
        map_stage,
        marking_stage,
    })
}
