//! The map-error impact function and its algebraic approximation.
//!
//! For a statistic (mean or quantile) of the error norm, the impact of a
//! constant map offset of norm `v` on a system with real per-axis spread
//! `sigma` is
//!
//! ```text
//! Delta(v, sigma) = Rice(v, sigma)_stat - Rice(0, sigma)_stat
//!                 = sigma * Delta(v / sigma, 1)
//! ```
//!
//! `Delta(v, 1)` has no closed form, so it is approximated by the
//! two-constant algebraic function
//!
//! ```text
//! delta(v, 1) = (v^beta + alpha^beta)^(1/beta) - alpha,   alpha > 0, beta > 1
//! ```
//!
//! which shares its endpoints: zero at `v = 0` and slope 1 as
//! `v -> infinity`. Constants minimizing the RMS gap to the exact
//! `Delta(v, 1)` ship for the mean, median, and 95%-tail; constants for
//! any other quantile can be fitted on demand with [`fit_constants`].

use crate::dist::{RayleighParams, RiceParams, RAYLEIGH_UNIT_MEAN};
use crate::numeric;

/// Which summary statistic of the error norm a computation applies to.
///
/// `Median` and `Tail95` are shorthand for `Quantile(0.5)` and
/// `Quantile(0.95)`; [`MetricKind::canonical`] collapses the aliases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    Mean,
    Median,
    Tail95,
    Quantile(f64),
}

impl MetricKind {
    /// Collapse `Quantile(0.5)` / `Quantile(0.95)` onto their named forms.
    pub fn canonical(self) -> Self {
        if let MetricKind::Quantile(q) = self {
            if q == 0.5 {
                return MetricKind::Median;
            }
            if q == 0.95 {
                return MetricKind::Tail95;
            }
        }
        self
    }

    /// The quantile probability, or `None` for the mean.
    pub fn quantile_prob(self) -> Option<f64> {
        match self {
            MetricKind::Mean => None,
            MetricKind::Median => Some(0.5),
            MetricKind::Tail95 => Some(0.95),
            MetricKind::Quantile(q) => Some(q),
        }
    }

    /// `gamma`: the value of this statistic for Rayleigh(1).
    ///
    /// Mean: `sqrt(pi/2)`; quantile `q`: `sqrt(-2 ln(1-q))`. Multiplying
    /// by `sigma` gives the statistic of Rayleigh(sigma).
    pub fn gamma(self) -> f64 {
        match self.quantile_prob() {
            None => RAYLEIGH_UNIT_MEAN,
            Some(q) => (-2.0 * (1.0 - q).ln()).sqrt(),
        }
    }

    /// Validate a metric carried in a `Quantile` variant.
    pub fn validate(self) -> Result<Self, ApproxError> {
        if let MetricKind::Quantile(q) = self {
            if !(q > 0.0 && q < 1.0 && q.is_finite()) {
                return Err(ApproxError::InvalidQuantile(q));
            }
        }
        Ok(self)
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.canonical() {
            MetricKind::Mean => write!(f, "mean"),
            MetricKind::Median => write!(f, "median"),
            MetricKind::Tail95 => write!(f, "p95"),
            MetricKind::Quantile(q) => {
                let pct = q * 100.0;
                if (pct - pct.round()).abs() < 1e-9 {
                    write!(f, "p{}", pct.round() as u32)
                } else {
                    write!(f, "p{pct}")
                }
            }
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = ApproxError;

    /// Accepts `mean`, `median`, `p95`/`tail95`, or `pNN` (e.g. `p25`,
    /// `p97.5`) with `0 < NN < 100`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "mean" => Ok(MetricKind::Mean),
            "median" | "p50" => Ok(MetricKind::Median),
            "tail95" | "p95" | "tail" => Ok(MetricKind::Tail95),
            _ => {
                let pct = s
                    .strip_prefix('p')
                    .and_then(|rest| rest.parse::<f64>().ok())
                    .ok_or_else(|| ApproxError::UnknownMetric(s.clone()))?;
                if pct <= 0.0 || pct >= 100.0 {
                    return Err(ApproxError::UnknownMetric(s));
                }
                Ok(MetricKind::Quantile(pct / 100.0).canonical())
            }
        }
    }
}

impl serde::Serialize for MetricKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for MetricKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The `(alpha, beta)` pair of the algebraic approximation for one
/// metric, together with `gamma` and the RMS fit residual.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ApproxConstants {
    pub metric: MetricKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Root-mean-square |Delta - delta| over the fit grid.
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApproxError {
    #[error("no built-in constants for {0}; fit them with fit_constants")]
    NotBuiltIn(MetricKind),
    #[error("quantile probability must lie in (0, 1), got {0}")]
    InvalidQuantile(f64),
    #[error("unknown metric '{0}' (expected mean, median, p95, or pNN)")]
    UnknownMetric(String),
    #[error("fit grid must contain at least two distinct positive offsets")]
    DegenerateGrid,
    #[error("fit grid values must be nonnegative and finite, got {0}")]
    InvalidGridValue(f64),
    #[error(
        "constant fit did not converge after {iterations} iterations \
         (best alpha={alpha}, beta={beta}, rmse={rmse})"
    )]
    DidNotConverge {
        iterations: usize,
        alpha: f64,
        beta: f64,
        rmse: f64,
    },
}

/// Built-in approximation constants for the three tabulated metrics.
///
/// `alpha`/`beta`/`rmse` are the reference fit results; `gamma` is the
/// exact Rayleigh(1) statistic. Other quantiles return
/// [`ApproxError::NotBuiltIn`] and should go through [`fit_constants`].
pub fn builtin_constants(metric: MetricKind) -> Result<ApproxConstants, ApproxError> {
    let metric = metric.validate()?.canonical();
    let (alpha, beta, rmse) = match metric {
        MetricKind::Mean => (1.2392, 2.3064, 0.0052),
        MetricKind::Median => (1.1471, 2.3384, 0.0032),
        MetricKind::Tail95 => (0.7870, 1.9452, 0.0038),
        other => return Err(ApproxError::NotBuiltIn(other)),
    };
    Ok(ApproxConstants {
        metric,
        alpha,
        beta,
        gamma: metric.gamma(),
        rmse,
    })
}

/// Exact impact `Delta(v, sigma)`: the Rice statistic minus the Rayleigh
/// statistic, computed through [`crate::dist`].
///
/// Satisfies `Delta(v, sigma) = sigma * Delta(v / sigma, 1)`.
///
/// # Panics
/// If `v < 0`, `sigma <= 0`, or the metric quantile is outside `(0, 1)`.
pub fn delta_exact(v: f64, sigma: f64, metric: MetricKind) -> f64 {
    assert!(v >= 0.0, "offset norm must be nonnegative");
    if v == 0.0 {
        // Rice(0, sigma) is Rayleigh(sigma); skip the numeric route so the
        // zero is exact rather than quantile-tolerance sized
        return 0.0;
    }
    let rice = RiceParams::new(v, sigma).expect("sigma must be positive");
    let rayleigh = RayleighParams::new(sigma).expect("sigma must be positive");
    match metric.quantile_prob() {
        None => rice.mean() - rayleigh.mean(),
        Some(q) => {
            let rq = rice.quantile(q).expect("quantile must lie in (0,1)");
            rq - rayleigh.quantile(q).expect("checked above")
        }
    }
}

/// Algebraic approximation
/// `delta(v, sigma) = sigma ((v/sigma)^beta + alpha^beta)^(1/beta) - sigma alpha`.
///
/// Exactly zero at `v = 0`.
pub fn delta_approx(v: f64, sigma: f64, c: &ApproxConstants) -> f64 {
    assert!(v >= 0.0, "offset norm must be nonnegative");
    assert!(sigma > 0.0, "sigma must be positive");
    if v == 0.0 {
        return 0.0;
    }
    let r = v / sigma;
    sigma * ((r.powf(c.beta) + c.alpha.powf(c.beta)).powf(1.0 / c.beta) - c.alpha)
}

/// The default fit grid: `v` from 0 to 10 in steps of 0.01.
///
/// This covers the region where the exact impact and its approximation
/// differ materially; beyond it both approach `v - alpha`.
pub fn default_fit_grid() -> Vec<f64> {
    (0..=1000).map(|i| i as f64 * 0.01).collect()
}

/// Fit `(alpha, beta)` minimizing the RMS of `|Delta(v,1) - delta(v,1)|`
/// over `grid`.
///
/// The exact impact is evaluated once per grid point; a Nelder-Mead
/// search from `(1.0, 2.0)` is then polished by coordinate descent until
/// no perturbation of 1e-4 in either constant improves the residual.
pub fn fit_constants(metric: MetricKind, grid: &[f64]) -> Result<ApproxConstants, ApproxError> {
    let metric = metric.validate()?.canonical();
    for &v in grid {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ApproxError::InvalidGridValue(v));
        }
    }
    let mut distinct: Vec<f64> = grid.iter().copied().filter(|&v| v > 0.0).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 2 {
        // a lone point (or only v=0, where every candidate is exact)
        // cannot pin down two constants
        return Err(ApproxError::DegenerateGrid);
    }

    let exact: Vec<f64> = grid.iter().map(|&v| delta_exact(v, 1.0, metric)).collect();
    let n = grid.len() as f64;
    let rmse = |alpha: f64, beta: f64| -> f64 {
        if alpha <= 0.0 || beta <= 1.0 {
            return f64::INFINITY;
        }
        let ab = alpha.powf(beta);
        let sum: f64 = grid
            .iter()
            .zip(&exact)
            .map(|(&v, &d)| {
                let approx = (v.powf(beta) + ab).powf(1.0 / beta) - alpha;
                (d - approx) * (d - approx)
            })
            .sum();
        (sum / n).sqrt()
    };

    const MAX_ITER: usize = 4000;
    let ((mut alpha, mut beta), mut best, _) =
        numeric::nelder_mead_2d(&|a, b| rmse(a, b), (1.0, 2.0), 0.25, 1e-14, MAX_ITER);

    // coordinate polish with shrinking steps until the result is
    // stationary under +-1e-4 perturbations of either constant
    let is_stationary = |alpha: f64, beta: f64, best: f64| {
        [(1e-4, 0.0), (-1e-4, 0.0), (0.0, 1e-4), (0.0, -1e-4)]
            .iter()
            .all(|&(da, db)| rmse(alpha + da, beta + db) >= best)
    };
    let mut stationary = false;
    for _ in 0..3 {
        let mut step = 1e-3;
        while step >= 2.5e-5 {
            let mut moved = true;
            while moved {
                moved = false;
                for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                    let cand = rmse(alpha + da, beta + db);
                    if cand < best {
                        alpha += da;
                        beta += db;
                        best = cand;
                        moved = true;
                    }
                }
            }
            step *= 0.5;
        }
        if is_stationary(alpha, beta, best) {
            stationary = true;
            break;
        }
    }
    if !stationary {
        return Err(ApproxError::DidNotConverge {
            iterations: MAX_ITER,
            alpha,
            beta,
            rmse: best,
        });
    }

    Ok(ApproxConstants {
        metric,
        alpha,
        beta,
        gamma: metric.gamma(),
        rmse: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ::approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn canonicalization() {
        assert_eq!(MetricKind::Quantile(0.5).canonical(), MetricKind::Median);
        assert_eq!(MetricKind::Quantile(0.95).canonical(), MetricKind::Tail95);
        assert_eq!(
            MetricKind::Quantile(0.25).canonical(),
            MetricKind::Quantile(0.25)
        );
        assert_eq!(
            MetricKind::Median.gamma(),
            MetricKind::Quantile(0.5).gamma()
        );
        assert_eq!(
            MetricKind::Tail95.gamma(),
            MetricKind::Quantile(0.95).gamma()
        );
    }

    #[test]
    fn gamma_values() {
        assert_relative_eq!(MetricKind::Mean.gamma(), 1.2533141373155003, max_relative = 1e-12);
        assert_relative_eq!(MetricKind::Median.gamma(), 1.1774100225154747, max_relative = 1e-12);
        assert_relative_eq!(MetricKind::Tail95.gamma(), 2.4477468306808166, max_relative = 1e-12);
    }

    #[test]
    fn metric_parsing_and_display() {
        assert_eq!("mean".parse::<MetricKind>().unwrap(), MetricKind::Mean);
        assert_eq!("median".parse::<MetricKind>().unwrap(), MetricKind::Median);
        assert_eq!("p50".parse::<MetricKind>().unwrap(), MetricKind::Median);
        assert_eq!("p95".parse::<MetricKind>().unwrap(), MetricKind::Tail95);
        assert_eq!("tail95".parse::<MetricKind>().unwrap(), MetricKind::Tail95);
        assert_eq!(
            "p25".parse::<MetricKind>().unwrap(),
            MetricKind::Quantile(0.25)
        );
        assert!("p0".parse::<MetricKind>().is_err());
        assert!("p100".parse::<MetricKind>().is_err());
        assert!("q95".parse::<MetricKind>().is_err());
        assert_eq!(MetricKind::Quantile(0.25).to_string(), "p25");
        assert_eq!(MetricKind::Tail95.to_string(), "p95");
        assert_eq!(MetricKind::Mean.to_string(), "mean");
    }

    #[test]
    fn builtin_table_values() {
        let mean = builtin_constants(MetricKind::Mean).unwrap();
        assert_eq!((mean.alpha, mean.beta), (1.2392, 2.3064));
        assert_relative_eq!(mean.gamma, 1.2533141373155003, max_relative = 1e-12);

        let median = builtin_constants(MetricKind::Median).unwrap();
        assert_eq!((median.alpha, median.beta), (1.1471, 2.3384));

        let tail = builtin_constants(MetricKind::Tail95).unwrap();
        assert_eq!((tail.alpha, tail.beta), (0.7870, 1.9452));

        // aliases resolve to the same table rows
        assert_eq!(
            builtin_constants(MetricKind::Quantile(0.5)).unwrap(),
            median
        );
        assert!(matches!(
            builtin_constants(MetricKind::Quantile(0.25)),
            Err(ApproxError::NotBuiltIn(_))
        ));
    }

    #[test]
    fn delta_exact_values() {
        assert_eq!(delta_exact(0.0, 1.0, MetricKind::Mean), 0.0);
        assert_eq!(delta_exact(0.0, 2.5, MetricKind::Tail95), 0.0);
        // oracle: rice_mean(2,1) - sqrt(pi/2), via both the closed-form and
        // quadrature mean routes
        assert_relative_eq!(
            delta_exact(2.0, 1.0, MetricKind::Mean),
            1.0190692907532417,
            max_relative = 1e-9
        );
        // v = 100: Delta ~ v + 1/2v - sqrt(pi/2)
        assert_relative_eq!(
            delta_exact(100.0, 1.0, MetricKind::Mean),
            100.005 - 1.2533141373155003,
            max_relative = 1e-6
        );
        // slope -> 1, checked where the -alpha/v correction has faded
        let big = delta_exact(1000.0, 1.0, MetricKind::Mean);
        assert!((0.995..=1.0).contains(&(big / 1000.0)));
    }

    #[test]
    fn delta_approx_values() {
        let c = builtin_constants(MetricKind::Mean).unwrap();
        assert_eq!(delta_approx(0.0, 1.0, &c), 0.0);
        assert_eq!(delta_approx(0.0, 7.3, &c), 0.0);
        assert_relative_eq!(
            delta_approx(0.433, 1.0, &c),
            0.046392650105558486,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            delta_approx(100.0, 1.0, &c),
            98.76253413054175,
            max_relative = 1e-12
        );
    }

    #[test]
    fn delta_scaling_identity_mean() {
        // Delta(v, sigma) = sigma Delta(v/sigma, 1), mean route is closed form
        for &(v, s) in &[(0.5, 0.25), (2.0, 1.7), (10.0, 3.0), (1.0, 8.0)] {
            let lhs = delta_exact(v, s, MetricKind::Mean);
            let rhs = s * delta_exact(v / s, 1.0, MetricKind::Mean);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
        }
    }

    #[test]
    fn delta_scaling_identity_quantiles() {
        for metric in [MetricKind::Median, MetricKind::Tail95] {
            for &(v, s) in &[(1.0, 0.5), (3.0, 2.0)] {
                let lhs = delta_exact(v, s, metric);
                let rhs = s * delta_exact(v / s, 1.0, metric);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-7 * s.max(1.0));
            }
        }
    }

    #[test]
    fn delta_exact_nondecreasing_in_v() {
        let mut prev = 0.0;
        for i in 0..=40 {
            let v = i as f64 * 0.25;
            let d = delta_exact(v, 1.0, MetricKind::Mean);
            assert!(d + 1e-12 >= prev, "Delta must not decrease at v={v}");
            prev = d;
        }
    }

    #[test]
    fn approx_endpoint_slopes() {
        for metric in [MetricKind::Mean, MetricKind::Median, MetricKind::Tail95] {
            let c = builtin_constants(metric).unwrap();
            let v = 1e3;
            let ratio = delta_approx(v, 1.0, &c) / v;
            assert!((0.995..=1.0).contains(&ratio), "{metric}: {ratio}");
        }
    }

    #[test]
    fn fit_rejects_degenerate_grids() {
        assert!(matches!(
            fit_constants(MetricKind::Mean, &[]),
            Err(ApproxError::DegenerateGrid)
        ));
        assert!(matches!(
            fit_constants(MetricKind::Mean, &[0.0]),
            Err(ApproxError::DegenerateGrid)
        ));
        assert!(matches!(
            fit_constants(MetricKind::Mean, &[0.0, 2.0, 2.0]),
            Err(ApproxError::DegenerateGrid)
        ));
        assert!(matches!(
            fit_constants(MetricKind::Mean, &[1.0, -2.0]),
            Err(ApproxError::InvalidGridValue(_))
        ));
    }

    #[test]
    fn fit_mean_on_coarse_grid_is_close_to_table() {
        // coarse grid keeps this test quick; the acceptance suite runs the
        // full-resolution fit for all three metrics
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let c = fit_constants(MetricKind::Mean, &grid).unwrap();
        assert!((c.alpha - 1.2392).abs() < 0.05, "alpha = {}", c.alpha);
        assert!((c.beta - 2.3064).abs() < 0.10, "beta = {}", c.beta);
        assert!(c.rmse <= 0.01, "rmse = {}", c.rmse);
    }

    #[test]
    fn fit_is_deterministic() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let a = fit_constants(MetricKind::Mean, &grid).unwrap();
        let b = fit_constants(MetricKind::Mean, &grid).unwrap();
        assert_eq!(a, b);
    }
}
