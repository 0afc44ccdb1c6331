//! Seeded Monte-Carlo generation of synthetic evaluation datasets, plus
//! end-to-end correction experiments over them.
//!
//! Reproducibility contract: a dataset is a pure function of its
//! [`SimConfig`]. Record `i` draws from its own ChaCha12 stream, keyed by
//! SplitMix64 from `(seed, i)`, so results do not depend on generation
//! order or thread count. Normal deviates come from an explicit
//! Box-Muller transform of two uniforms per pair (`u1` in (0,1], `u2` in
//! [0,1), both from the top 53 bits of `next_u64`), not from any library
//! sampler whose algorithm might change underneath us.

use std::collections::BTreeMap;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::approx::{self, MetricKind};
use crate::correct::{self, CorrectError, CorrectionConfig};
use crate::dist::{DistError, RiceParams};
use crate::estimate::{
    self, summary_stats, Dataset, ErrorKind, EstimateError, Record, SummaryStats, Vec2,
};

/// Where the synthetic real ground-truth points sit.
///
/// Statistics depend only on the error vectors, so this is cosmetic; the
/// grid layout just makes exported datasets look like a survey walk.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Origin,
    Grid { spacing: f64 },
}

/// Parameters of one synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    /// Per-axis spread of the algorithm's real error (meters).
    pub sigma_real: f64,
    /// Per-axis spread of the human marking error (meters, may be 0).
    pub sigma_mark: f64,
    /// Constant map translation added to every marked position.
    pub map_shift: Vec2,
    /// Number of records.
    pub n: usize,
    /// Seed for the record streams.
    pub seed: u64,
    #[serde(default = "default_layout")]
    pub layout: Layout,
}

fn default_layout() -> Layout {
    Layout::Origin
}

impl SimConfig {
    pub fn new(sigma_real: f64, sigma_mark: f64, map_shift: Vec2, n: usize, seed: u64) -> Result<Self, SimError> {
        let cfg = Self {
            sigma_real,
            sigma_mark,
            map_shift,
            n,
            seed,
            layout: Layout::Origin,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.sigma_real > 0.0 && self.sigma_real.is_finite()) {
            return Err(SimError::InvalidSigmaReal(self.sigma_real));
        }
        if !(self.sigma_mark >= 0.0 && self.sigma_mark.is_finite()) {
            return Err(SimError::InvalidSigmaMark(self.sigma_mark));
        }
        if !self.map_shift.is_finite() {
            return Err(SimError::InvalidShift);
        }
        if self.n == 0 {
            return Err(SimError::EmptySim);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("sigma_real must be positive and finite, got {0}")]
    InvalidSigmaReal(f64),
    #[error("sigma_mark must be nonnegative and finite, got {0}")]
    InvalidSigmaMark(f64),
    #[error("map_shift components must be finite")]
    InvalidShift,
    #[error("simulation needs at least one record")]
    EmptySim,
    #[error("marking experiment requires map_shift = (0, 0), got ({x}, {y})", x = .0.x, y = .0.y)]
    ShiftInMarkingExperiment(Vec2),
    #[error(
        "map experiment assumes sigma_mark = 0 (got {0}); \
         pass include_marking = true to run it anyway as a sensitivity study"
    )]
    MarkingInMapExperiment(f64),
    #[error("Monte Carlo statistic needs at least 1000 samples, got {0}")]
    TooFewMcSamples(usize),
    #[error("every map correction was infeasible: {0}")]
    AllMetricsInfeasible(String),
    #[error(transparent)]
    Correct(#[from] CorrectError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// SplitMix64 step, used to key per-record streams.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-record RNG: ChaCha12 seeded from SplitMix64 over `(seed, index)`.
fn record_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let key = splitmix64(seed ^ splitmix64(index.wrapping_add(1)));
    let mut seed_bytes = [0u8; 32];
    let mut s = key;
    for chunk in seed_bytes.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed_bytes)
}

/// Uniform in (0, 1] from the top 53 bits (never 0, so `ln` is safe).
fn uniform_open_closed(rng: &mut ChaCha12Rng) -> f64 {
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform in [0, 1) from the top 53 bits.
fn uniform_half_open(rng: &mut ChaCha12Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64) * (1.0 / 9_007_199_254_740_992.0)
}

/// One Box-Muller pair of independent standard normals.
fn normal_pair(rng: &mut ChaCha12Rng) -> (f64, f64) {
    let u1 = uniform_open_closed(rng);
    let u2 = uniform_half_open(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Generate a synthetic dataset.
///
/// Per record: `algo = real_gt + N(0, sigma_real^2 I)` and
/// `marked_gt = real_gt + N(0, sigma_mark^2 I) + map_shift`. Records
/// always carry `real_gt`, so all three error kinds are recoverable.
/// Deterministic given the config, including the seed.
pub fn gen_dataset(cfg: &SimConfig) -> Result<Dataset, SimError> {
    cfg.validate()?;
    let cols = (cfg.n as f64).sqrt().ceil() as usize;
    let records: Vec<Record> = (0..cfg.n)
        .map(|i| {
            let mut rng = record_rng(cfg.seed, i as u64);
            let (ax, ay) = normal_pair(&mut rng);
            let (mx, my) = normal_pair(&mut rng);
            let real_gt = match cfg.layout {
                Layout::Origin => Vec2::ZERO,
                Layout::Grid { spacing } => Vec2::new(
                    (i % cols) as f64 * spacing,
                    (i / cols) as f64 * spacing,
                ),
            };
            let algo = real_gt + Vec2::new(ax * cfg.sigma_real, ay * cfg.sigma_real);
            let marked_gt =
                real_gt + Vec2::new(mx * cfg.sigma_mark, my * cfg.sigma_mark) + cfg.map_shift;
            Record {
                algo,
                marked_gt,
                real_gt: Some(real_gt),
            }
        })
        .collect();
    Ok(Dataset::new(records)?)
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Brute-force Rice statistic: draw `n` samples of `|N((v,0), sigma^2 I)|`
/// and take the requested statistic of the sample.
///
/// The standard error uses `s/sqrt(n)` for the mean and the asymptotic
/// order-statistic formula `sqrt(q(1-q)/n) / pdf(x_q)` for quantiles.
/// This is the independent oracle the analytic Rice statistics are
/// checked against.
pub fn mc_rice_stat(
    v: f64,
    sigma: f64,
    metric: MetricKind,
    n: usize,
    seed: u64,
) -> Result<McEstimate, SimError> {
    if n < 1000 {
        return Err(SimError::TooFewMcSamples(n));
    }
    let rice = RiceParams::new(v, sigma)?;
    let mut norms: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = record_rng(seed, i as u64);
            let (zx, zy) = normal_pair(&mut rng);
            Vec2::new(v + zx * sigma, zy * sigma).norm()
        })
        .collect();
    let nf = n as f64;
    match metric.quantile_prob() {
        None => {
            let mean = norms.iter().sum::<f64>() / nf;
            let var = norms.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
            Ok(McEstimate {
                value: mean,
                std_error: (var / nf).sqrt(),
            })
        }
        Some(q) => {
            norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let value = estimate::sample_quantile(&norms, q)?;
            let density = rice.pdf(value)?.max(f64::MIN_POSITIVE);
            Ok(McEstimate {
                value,
                std_error: (q * (1.0 - q) / nf).sqrt() / density,
            })
        }
    }
}

/// Per-metric comparison of validation, experimental-real, and corrected
/// ("theoretical real") statistics over one synthetic dataset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentReport {
    pub validation: SummaryStats,
    pub experimental_real: SummaryStats,
    /// Corrected statistics, keyed like `relative_gaps`.
    pub theoretical_real: BTreeMap<String, f64>,
    /// `|theoretical - experimental| / experimental` per metric.
    pub relative_gaps: BTreeMap<String, f64>,
    /// Metrics skipped because the correction was infeasible.
    pub warnings: Vec<String>,
}

/// The metric set of the marking experiment (table rows).
const MARKING_METRICS: [MetricKind; 5] = [
    MetricKind::Mean,
    MetricKind::Quantile(0.25),
    MetricKind::Median,
    MetricKind::Quantile(0.75),
    MetricKind::Tail95,
];

/// The metric set of the map experiment: only those with built-in
/// approximation constants.
const MAP_METRICS: [MetricKind; 3] = [MetricKind::Mean, MetricKind::Median, MetricKind::Tail95];

fn stat_of(summary: &SummaryStats, sorted: &[f64], metric: MetricKind) -> f64 {
    match metric.quantile_prob() {
        None => summary.mean,
        Some(q) => summary
            .quantile(q)
            .unwrap_or_else(|| estimate::sample_quantile(sorted, q).expect("nonempty")),
    }
}

/// Marking-error experiment: generate a dataset with no map shift,
/// correct each validation statistic with the marking statistic, and
/// compare against the experimental real statistics.
pub fn run_marking_experiment(cfg: &SimConfig) -> Result<ExperimentReport, SimError> {
    if cfg.map_shift != Vec2::ZERO {
        return Err(SimError::ShiftInMarkingExperiment(cfg.map_shift));
    }
    let data = gen_dataset(cfg)?;
    let mut val = estimate::error_norms(&data, ErrorKind::Validation)?;
    let mut real = estimate::error_norms(&data, ErrorKind::Real)?;
    let mut mark = estimate::error_norms(&data, ErrorKind::Marking)?;
    val.sort_by(|a, b| a.partial_cmp(b).unwrap());
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mark.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let validation = summary_stats(&val)?;
    let experimental_real = summary_stats(&real)?;
    let marking = summary_stats(&mark)?;

    let mut theoretical = BTreeMap::new();
    let mut gaps = BTreeMap::new();
    let mut warnings = Vec::new();
    for metric in MARKING_METRICS {
        let u = stat_of(&validation, &val, metric);
        let v = stat_of(&marking, &mark, metric);
        let corrected = if v == 0.0 {
            u
        } else {
            match correct::correct_marking(u, v, metric) {
                Ok(r) => r.real_stat,
                Err(e @ CorrectError::Infeasible { .. }) => {
                    warnings.push(format!("{metric}: {e}"));
                    continue;
                }
                Err(e) => return Err(e.into()),
            }
        };
        let experimental = stat_of(&experimental_real, &real, metric);
        theoretical.insert(metric.to_string(), corrected);
        gaps.insert(
            metric.to_string(),
            (corrected - experimental).abs() / experimental,
        );
    }
    if theoretical.is_empty() {
        return Err(SimError::AllMetricsInfeasible(warnings.join("; ")));
    }
    Ok(ExperimentReport {
        validation,
        experimental_real,
        theoretical_real: theoretical,
        relative_gaps: gaps,
        warnings,
    })
}

/// One entry of the map-shift sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSweepEntry {
    /// Per-axis shift in meters (applied to both axes).
    pub shift: f64,
    /// Offset norm `v = shift * sqrt(2)`.
    pub offset_norm: f64,
    pub outcome: Result<ExperimentReport, SimError>,
}

/// Map-error experiment: sweep per-axis shifts, correcting each
/// validation statistic for the offset norm `shift * sqrt(2)` with the
/// built-in constants for mean / median / 95%-tail.
///
/// The correction model assumes the only ground-truth error is the map
/// offset, so `sigma_mark > 0` is rejected unless `include_marking` is
/// set (then the theory only approximately applies — useful for
/// sensitivity studies). An infeasible shift produces an `Err` entry,
/// not a failure of the whole sweep.
pub fn run_map_experiment(
    cfg: &SimConfig,
    shifts: &[f64],
    include_marking: bool,
) -> Result<Vec<MapSweepEntry>, SimError> {
    if cfg.sigma_mark > 0.0 && !include_marking {
        return Err(SimError::MarkingInMapExperiment(cfg.sigma_mark));
    }
    cfg.validate()?;
    let correction_cfg = CorrectionConfig::default();
    Ok(shifts
        .iter()
        .map(|&shift| {
            let sweep_cfg = SimConfig {
                map_shift: Vec2::new(shift, shift),
                ..*cfg
            };
            let offset_norm = sweep_cfg.map_shift.norm();
            let outcome = map_experiment_entry(&sweep_cfg, offset_norm, &correction_cfg);
            MapSweepEntry {
                shift,
                offset_norm,
                outcome,
            }
        })
        .collect())
}

fn map_experiment_entry(
    cfg: &SimConfig,
    offset_norm: f64,
    correction_cfg: &CorrectionConfig,
) -> Result<ExperimentReport, SimError> {
    let data = gen_dataset(cfg)?;
    let mut val = estimate::error_norms(&data, ErrorKind::Validation)?;
    let mut real = estimate::error_norms(&data, ErrorKind::Real)?;
    val.sort_by(|a, b| a.partial_cmp(b).unwrap());
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let validation = summary_stats(&val)?;
    let experimental_real = summary_stats(&real)?;

    let mut theoretical = BTreeMap::new();
    let mut gaps = BTreeMap::new();
    let mut warnings = Vec::new();
    for metric in MAP_METRICS {
        let u = stat_of(&validation, &val, metric);
        let corrected = if offset_norm == 0.0 {
            u
        } else {
            let constants = approx::builtin_constants(metric).map_err(CorrectError::from)?;
            match correct::correct_map(u, offset_norm, &constants, correction_cfg) {
                Ok(r) => r.real_stat,
                Err(e @ CorrectError::Infeasible { .. }) => {
                    warnings.push(format!("{metric}: {e}"));
                    continue;
                }
                Err(e) => return Err(e.into()),
            }
        };
        let experimental = stat_of(&experimental_real, &real, metric);
        theoretical.insert(metric.to_string(), corrected);
        gaps.insert(
            metric.to_string(),
            (corrected - experimental).abs() / experimental,
        );
    }
    if theoretical.is_empty() {
        return Err(SimError::AllMetricsInfeasible(warnings.join("; ")));
    }
    Ok(ExperimentReport {
        validation,
        experimental_real,
        theoretical_real: theoretical,
        relative_gaps: gaps,
        warnings,
    })
}
