//! Correct reported localization-accuracy statistics for ground-truth
//! error.
//!
//! Localization systems are scored by comparing estimated positions
//! against ground-truth positions, but the ground truth itself is noisy:
//! humans mis-click when marking their position on a map, and the map may
//! be translated against reality. Both inflate the reported error. This
//! crate models the error norms with Rayleigh and Rice distributions and
//! recovers the system's real accuracy from the contaminated validation
//! figures:
//!
//! - [`dist`] — Rayleigh/Rice densities, CDFs, means, and quantiles,
//!   backed by in-crate modified Bessel functions.
//! - [`approx`] — the impact function `delta(v, sigma)` (how much a map
//!   offset of norm `v` inflates a statistic), its two-constant algebraic
//!   approximation, and the fitting procedure for those constants.
//! - [`correct`] — the two correction algorithms (marking error via
//!   `sqrt(u^2 - v^2)`, map error via bisection on the approximation),
//!   their composition, and impact bounds.
//! - [`compare`] — which ground-truth error hurts a given metric more,
//!   with the supporting threshold analysis.
//! - [`estimate`] — fitting per-axis normals, Rayleigh and Rice models to
//!   evaluation datasets; summary statistics, ECDF and Q-Q series.
//! - [`sim`] — seeded Monte-Carlo dataset generation and end-to-end
//!   correction experiments.
//!
//! All statistics are in meters, matching the datasets they summarize.
//! Everything here is a pure function of its inputs: no global state,
//! safe to call concurrently.

pub mod approx;
pub mod compare;
pub mod correct;
pub mod dist;
pub mod estimate;
pub mod numeric;
pub mod sim;

pub use approx::{ApproxConstants, MetricKind};
pub use correct::{CorrectionConfig, CorrectionResult, PipelineResult};
pub use dist::{RayleighParams, RiceParams};
pub use estimate::{Dataset, NormalParams, Record, SummaryStats, Vec2};
pub use sim::{ExperimentReport, SimConfig};
