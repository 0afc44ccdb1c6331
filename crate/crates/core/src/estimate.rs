//! Turn raw evaluation datasets into error vectors, parametric fits, and
//! summary statistics.
//!
//! A dataset row holds the algorithm's estimated position, the
//! human-marked ground truth, and (when available) the real ground truth.
//! Three error kinds fall out by subtraction and always satisfy
//! `validation = real + marking` componentwise:
//!
//! ```text
//! validation = marked - algo
//! real       = real_gt - algo
//! marking    = marked - real_gt
//! ```
//!
//! On top of the vectors: per-axis normal fits, Rayleigh / Rice fits of
//! the norms, quantile summaries, ECDF steps, and Q-Q point series.

use crate::dist::{RayleighParams, RiceParams};

/// A 2D position or error vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// One evaluation record: estimated position, marked ground truth, and
/// optionally the real ground truth.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Record {
    pub algo: Vec2,
    pub marked_gt: Vec2,
    pub real_gt: Option<Vec2>,
}

/// An evaluation dataset. Either every record carries a real ground
/// truth or none does; all components are finite.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Dataset {
    records: Vec<Record>,
}

/// Which error vectors to extract from a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Validation,
    Real,
    Marking,
}

impl std::str::FromStr for ErrorKind {
    type Err = EstimateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "validation" | "val" => Ok(ErrorKind::Validation),
            "real" => Ok(ErrorKind::Real),
            "marking" | "mark" => Ok(ErrorKind::Marking),
            other => Err(EstimateError::UnknownErrorKind(other.to_string())),
        }
    }
}

impl std::fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ErrorKind::Validation => write!(f, "validation"),
            ErrorKind::Real => write!(f, "real"),
            ErrorKind::Marking => write!(f, "marking"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("record {index}: components must be finite")]
    NonFiniteRecord { index: usize },
    #[error("record {index}: real ground truth present in some records but not all")]
    MixedRealGroundTruth { index: usize },
    #[error("{0} error vectors require real ground truth in the dataset")]
    RealGroundTruthRequired(ErrorKind),
    #[error("sample is empty")]
    EmptySample,
    #[error("sample value at index {index} must be positive, got {value}")]
    NonPositiveSample { index: usize, value: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("axis {axis} is degenerate: zero variance")]
    DegenerateAxis { axis: char },
    #[error("error vectors have zero variance; Rice scale is undefined")]
    ZeroVariance,
    #[error("unknown error kind '{0}' (expected validation, real, or marking)")]
    UnknownErrorKind(String),
    #[error("quantile probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("sample moments admit no Rice fit: mean {mean} vs rms {rms}")]
    NoRiceFit { mean: f64, rms: f64 },
}

impl Dataset {
    /// Validate and wrap records: finite components, all-or-none real
    /// ground truth, at least one record.
    pub fn new(records: Vec<Record>) -> Result<Self, EstimateError> {
        if records.is_empty() {
            return Err(EstimateError::EmptyDataset);
        }
        let first_has_real = records[0].real_gt.is_some();
        for (index, r) in records.iter().enumerate() {
            let finite = r.algo.is_finite()
                && r.marked_gt.is_finite()
                && r.real_gt.is_none_or(Vec2::is_finite);
            if !finite {
                return Err(EstimateError::NonFiniteRecord { index });
            }
            if r.real_gt.is_some() != first_has_real {
                return Err(EstimateError::MixedRealGroundTruth { index });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_real_gt(&self) -> bool {
        self.records[0].real_gt.is_some()
    }
}

/// Extract one kind of error vector per record.
pub fn error_vectors(d: &Dataset, kind: ErrorKind) -> Result<Vec<Vec2>, EstimateError> {
    if matches!(kind, ErrorKind::Real | ErrorKind::Marking) && !d.has_real_gt() {
        return Err(EstimateError::RealGroundTruthRequired(kind));
    }
    Ok(d.records()
        .iter()
        .map(|r| match kind {
            ErrorKind::Validation => r.marked_gt - r.algo,
            ErrorKind::Real => r.real_gt.unwrap() - r.algo,
            ErrorKind::Marking => r.marked_gt - r.real_gt.unwrap(),
        })
        .collect())
}

/// Norms of one kind of error vector.
pub fn error_norms(d: &Dataset, kind: ErrorKind) -> Result<Vec<f64>, EstimateError> {
    Ok(error_vectors(d, kind)?.into_iter().map(Vec2::norm).collect())
}

/// Per-axis normal parameters (`sigma > 0`).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormalParams {
    pub mu: f64,
    pub sigma: f64,
}

/// One quantile of a sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuantilePoint {
    pub q: f64,
    pub value: f64,
}

/// Mean and quantile summary of an error-norm sample.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sorted by probability. [`summary_stats`] always includes
    /// 0.25, 0.5, 0.75 and 0.95.
    pub quantiles: Vec<QuantilePoint>,
}

impl SummaryStats {
    /// Look up a quantile by probability (exact match).
    pub fn quantile(&self, q: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|p| (p.q - q).abs() < 1e-12)
            .map(|p| p.value)
    }
}

/// The probabilities reported by [`summary_stats`]: Table-style rows
/// p25 / p50 / p75 / p95.
pub const SUMMARY_QUANTILES: [f64; 4] = [0.25, 0.5, 0.75, 0.95];

/// Sample quantile by linear interpolation of order statistics at rank
/// `q (n - 1) + 1` (one-based) — the common "type 7" convention.
///
/// `sorted` must be sorted ascending and nonempty.
pub fn sample_quantile(sorted: &[f64], q: f64) -> Result<f64, EstimateError> {
    if sorted.is_empty() {
        return Err(EstimateError::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(EstimateError::InvalidProbability(q));
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Mean plus the standard quantile set of a nonnegative sample.
pub fn summary_stats(norms: &[f64]) -> Result<SummaryStats, EstimateError> {
    if norms.is_empty() {
        return Err(EstimateError::EmptySample);
    }
    let mut sorted = norms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let quantiles = SUMMARY_QUANTILES
        .iter()
        .map(|&q| {
            Ok(QuantilePoint {
                q,
                value: sample_quantile(&sorted, q)?,
            })
        })
        .collect::<Result<Vec<_>, EstimateError>>()?;
    Ok(SummaryStats {
        n: sorted.len(),
        mean,
        quantiles,
    })
}

/// Per-axis sample mean and standard deviation (divisor `n - 1`).
///
/// A zero-variance axis is rejected: the downstream model needs
/// `sigma > 0` on both axes.
pub fn fit_normal_per_axis(
    errors: &[Vec2],
) -> Result<(NormalParams, NormalParams), EstimateError> {
    if errors.len() < 2 {
        return Err(EstimateError::TooFewSamples {
            needed: 2,
            got: errors.len(),
        });
    }
    let n = errors.len() as f64;
    let fit_axis = |vals: Vec<f64>, axis: char| {
        let mu = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0);
        let sigma = var.sqrt();
        if sigma <= 0.0 {
            return Err(EstimateError::DegenerateAxis { axis });
        }
        Ok(NormalParams { mu, sigma })
    };
    let x = fit_axis(errors.iter().map(|e| e.x).collect(), 'x')?;
    let y = fit_axis(errors.iter().map(|e| e.y).collect(), 'y')?;
    Ok((x, y))
}

/// Maximum-likelihood Rayleigh fit: `sigma_hat = sqrt(sum x_i^2 / 2n)`.
///
/// All samples must be positive.
pub fn fit_rayleigh(norms: &[f64]) -> Result<RayleighParams, EstimateError> {
    if norms.is_empty() {
        return Err(EstimateError::EmptySample);
    }
    for (index, &value) in norms.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(EstimateError::NonPositiveSample { index, value });
        }
    }
    let sum_sq: f64 = norms.iter().map(|x| x * x).sum();
    let sigma = (sum_sq / (2.0 * norms.len() as f64)).sqrt();
    Ok(RayleighParams::new(sigma).expect("positive by construction"))
}

/// Moment-based Rice fit from 2D error vectors.
///
/// `v_hat` is the norm of the sample-mean vector; `sigma_hat` pools the
/// per-axis sample variances, `sqrt((s_x^2 + s_y^2) / 2)` — matching the
/// generative model of an isotropic Gaussian around a constant offset.
pub fn fit_rice(errors: &[Vec2]) -> Result<RiceParams, EstimateError> {
    if errors.len() < 2 {
        return Err(EstimateError::TooFewSamples {
            needed: 2,
            got: errors.len(),
        });
    }
    let n = errors.len() as f64;
    let mean = Vec2::new(
        errors.iter().map(|e| e.x).sum::<f64>() / n,
        errors.iter().map(|e| e.y).sum::<f64>() / n,
    );
    let var_x = errors.iter().map(|e| (e.x - mean.x).powi(2)).sum::<f64>() / (n - 1.0);
    let var_y = errors.iter().map(|e| (e.y - mean.y).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma = (0.5 * (var_x + var_y)).sqrt();
    if sigma <= 0.0 {
        return Err(EstimateError::ZeroVariance);
    }
    Ok(RiceParams::new(mean.norm(), sigma).expect("valid by construction"))
}

/// Rice fit from norms alone, matching the sample mean and second moment.
///
/// With `m2 = mean(x^2)`, the constraint `v^2 + 2 sigma^2 = m2` leaves a
/// single unknown; `sigma` is bisected until the Rice mean matches the
/// sample mean. Along the constraint the mean decreases in `sigma`, from
/// `sqrt(m2)` (point mass) down to `sqrt(pi m2) / 2` (pure Rayleigh), so
/// sample means at or below that floor fall back to the Rayleigh end
/// `v = 0`, and sample means at or above `sqrt(m2)` admit no fit.
pub fn fit_rice_from_norms(norms: &[f64]) -> Result<RiceParams, EstimateError> {
    if norms.len() < 2 {
        return Err(EstimateError::TooFewSamples {
            needed: 2,
            got: norms.len(),
        });
    }
    for (index, &value) in norms.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(EstimateError::NonPositiveSample { index, value });
        }
    }
    let n = norms.len() as f64;
    let m1 = norms.iter().sum::<f64>() / n;
    let m2 = norms.iter().map(|x| x * x).sum::<f64>() / n;
    let rms = m2.sqrt();
    if m1 >= rms {
        return Err(EstimateError::NoRiceFit { mean: m1, rms });
    }
    let sigma_max = (0.5 * m2).sqrt();
    let mean_at = |sigma: f64| {
        let v = (m2 - 2.0 * sigma * sigma).max(0.0).sqrt();
        RiceParams::new(v, sigma).expect("valid on bracket").mean()
    };
    if m1 <= mean_at(sigma_max) {
        // at or below the Rayleigh floor: no positive offset explains it
        return Ok(RiceParams::new(0.0, sigma_max).expect("valid"));
    }
    let mut lo = 1e-12 * sigma_max;
    let mut hi = sigma_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) > m1 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * sigma_max {
            break;
        }
    }
    let sigma = 0.5 * (lo + hi);
    let v = (m2 - 2.0 * sigma * sigma).max(0.0).sqrt();
    Ok(RiceParams::new(v, sigma).expect("valid by construction"))
}

/// Q-Q points: `(Q_theory((i - 0.5) / n), x_(i))` over the sorted sample.
///
/// The half-offset plotting position is symmetric and keeps the
/// probabilities off 0 and 1.
pub fn qq_points<F: Fn(f64) -> f64>(
    norms: &[f64],
    theoretical_quantile: F,
) -> Result<Vec<(f64, f64)>, EstimateError> {
    if norms.is_empty() {
        return Err(EstimateError::EmptySample);
    }
    let mut sorted = norms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (theoretical_quantile((i as f64 + 0.5) / n), x))
        .collect())
}

/// ECDF step points `(x_(i), i / n)` on the sorted sample.
pub fn ecdf_points(norms: &[f64]) -> Result<Vec<(f64, f64)>, EstimateError> {
    if norms.is_empty() {
        return Err(EstimateError::EmptySample);
    }
    let mut sorted = norms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, (i as f64 + 1.0) / n))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ::approx::{assert_abs_diff_eq, assert_relative_eq};

    fn rec(algo: (f64, f64), marked: (f64, f64), real: Option<(f64, f64)>) -> Record {
        Record {
            algo: Vec2::new(algo.0, algo.1),
            marked_gt: Vec2::new(marked.0, marked.1),
            real_gt: real.map(|(x, y)| Vec2::new(x, y)),
        }
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(
            Dataset::new(vec![]),
            Err(EstimateError::EmptyDataset)
        ));
        let mixed = vec![
            rec((0.0, 0.0), (1.0, 1.0), Some((1.0, 0.0))),
            rec((0.0, 0.0), (1.0, 1.0), None),
        ];
        assert!(matches!(
            Dataset::new(mixed),
            Err(EstimateError::MixedRealGroundTruth { index: 1 })
        ));
        let nan = vec![rec((f64::NAN, 0.0), (1.0, 1.0), None)];
        assert!(matches!(
            Dataset::new(nan),
            Err(EstimateError::NonFiniteRecord { index: 0 })
        ));
    }

    #[test]
    fn error_vector_definitions() {
        let d = Dataset::new(vec![rec((0.0, 0.0), (1.0, 1.0), Some((1.0, 0.0)))]).unwrap();
        assert_eq!(
            error_vectors(&d, ErrorKind::Validation).unwrap(),
            vec![Vec2::new(1.0, 1.0)]
        );
        assert_eq!(
            error_vectors(&d, ErrorKind::Real).unwrap(),
            vec![Vec2::new(1.0, 0.0)]
        );
        assert_eq!(
            error_vectors(&d, ErrorKind::Marking).unwrap(),
            vec![Vec2::new(0.0, 1.0)]
        );
    }

    #[test]
    fn validation_equals_real_plus_marking() {
        let d = Dataset::new(vec![
            rec((0.3, -0.2), (1.4, 2.2), Some((0.9, 1.5))),
            rec((-1.0, 0.5), (2.0, -0.7), Some((1.1, 0.2))),
        ])
        .unwrap();
        let val = error_vectors(&d, ErrorKind::Validation).unwrap();
        let real = error_vectors(&d, ErrorKind::Real).unwrap();
        let mark = error_vectors(&d, ErrorKind::Marking).unwrap();
        for i in 0..d.len() {
            // the algebraic identity, up to one rounding step per subtraction
            let sum = real[i] + mark[i];
            assert_abs_diff_eq!(val[i].x, sum.x, epsilon = 1e-12);
            assert_abs_diff_eq!(val[i].y, sum.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn error_vectors_require_real_gt() {
        let d = Dataset::new(vec![rec((0.0, 0.0), (1.0, 1.0), None)]).unwrap();
        assert!(error_vectors(&d, ErrorKind::Validation).is_ok());
        assert!(matches!(
            error_vectors(&d, ErrorKind::Real),
            Err(EstimateError::RealGroundTruthRequired(ErrorKind::Real))
        ));
        assert!(error_vectors(&d, ErrorKind::Marking).is_err());
    }

    #[test]
    fn summary_stats_basics() {
        let s = summary_stats(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.quantile(0.5), Some(2.0));
        assert_relative_eq!(s.mean, 2.0, max_relative = 1e-15);

        let c = summary_stats(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.mean, 1.0);
        for p in &c.quantiles {
            assert_eq!(p.value, 1.0);
        }
        assert!(summary_stats(&[]).is_err());
    }

    #[test]
    fn quantiles_are_monotone_in_q() {
        let s = summary_stats(&[5.0, 1.0, 9.0, 2.0, 7.0, 3.0]).unwrap();
        let vals: Vec<f64> = s.quantiles.iter().map(|p| p.value).collect();
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn sample_quantile_interpolates() {
        let sorted = [10.0, 20.0, 30.0, 40.0];
        // h = 0.5 * 3 = 1.5 -> halfway between 20 and 30
        assert_eq!(sample_quantile(&sorted, 0.5).unwrap(), 25.0);
        assert_eq!(sample_quantile(&sorted, 0.0).unwrap(), 10.0);
        assert_eq!(sample_quantile(&sorted, 1.0).unwrap(), 40.0);
        assert!(sample_quantile(&sorted, 1.5).is_err());
    }

    #[test]
    fn normal_fit_two_points_degenerate_y() {
        let errors = vec![Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)];
        let err = fit_normal_per_axis(&errors).unwrap_err();
        assert!(matches!(err, EstimateError::DegenerateAxis { axis: 'y' }));

        let ok = vec![Vec2::new(1.0, 2.0), Vec2::new(-1.0, 1.0)];
        let (x, y) = fit_normal_per_axis(&ok).unwrap();
        assert_abs_diff_eq!(x.mu, 0.0, epsilon = 1e-15);
        assert_relative_eq!(x.sigma, std::f64::consts::SQRT_2, max_relative = 1e-12);
        assert_abs_diff_eq!(y.mu, 1.5, epsilon = 1e-15);

        assert!(fit_normal_per_axis(&[Vec2::new(1.0, 1.0)]).is_err());
        let constant = vec![Vec2::new(2.0, 2.0); 5];
        assert!(fit_normal_per_axis(&constant).is_err());
    }

    #[test]
    fn rayleigh_fit_single_sample() {
        let p = fit_rayleigh(&[std::f64::consts::SQRT_2]).unwrap();
        assert_relative_eq!(p.sigma(), 1.0, max_relative = 1e-12);
        assert!(fit_rayleigh(&[]).is_err());
        assert!(matches!(
            fit_rayleigh(&[1.0, 0.0]),
            Err(EstimateError::NonPositiveSample { index: 1, .. })
        ));
        assert!(fit_rayleigh(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn rice_fit_zero_variance_rejected() {
        let errors = vec![Vec2::new(3.0, 4.0), Vec2::new(3.0, 4.0)];
        assert!(matches!(
            fit_rice(&errors),
            Err(EstimateError::ZeroVariance)
        ));
        assert!(fit_rice(&[Vec2::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn rice_fit_recovers_mean_offset() {
        let errors = vec![
            Vec2::new(2.0, 1.0),
            Vec2::new(4.0, -1.0),
            Vec2::new(3.0, 0.5),
            Vec2::new(3.0, -0.5),
        ];
        let p = fit_rice(&errors).unwrap();
        assert_relative_eq!(p.v(), 3.0, max_relative = 1e-12);
        assert!(p.sigma() > 0.0);
    }

    #[test]
    fn rice_from_norms_rejects_impossible_moments() {
        // constant sample: mean == rms, zero variance
        assert!(matches!(
            fit_rice_from_norms(&[2.0, 2.0, 2.0]),
            Err(EstimateError::NoRiceFit { .. })
        ));
    }

    #[test]
    fn qq_points_identity_when_sample_is_theoretical() {
        let ray = RayleighParams::new(1.0).unwrap();
        let n = 100;
        let sample: Vec<f64> = (0..n)
            .map(|i| ray.quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let pts = qq_points(&sample, |p| ray.quantile(p).unwrap()).unwrap();
        for (theory, empirical) in pts {
            assert_abs_diff_eq!(theory, empirical, epsilon = 1e-12);
        }
        let empty: [f64; 0] = [];
        assert!(qq_points(&empty, |p| p).is_err());
    }

    #[test]
    fn ecdf_points_basic() {
        let pts = ecdf_points(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            pts,
            vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]
        );
        assert_eq!(ecdf_points(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
        assert!(ecdf_points(&[]).is_err());
    }
}
