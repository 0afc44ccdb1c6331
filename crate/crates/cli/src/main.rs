//! `gtcorrect` — correct localization-accuracy statistics for
//! ground-truth marking and map errors.
//!
//! Every subcommand prints a JSON report document to stdout (or an
//! aligned text rendering with `--pretty`); diagnostics go to stderr.
//! Exit codes: 0 success, 1 usage/parse errors, 2 infeasible correction.

mod ingest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use gtcorrect_core::approx::{self, ApproxConstants, MetricKind};
use gtcorrect_core::compare;
use gtcorrect_core::correct::{self, CorrectError, CorrectionConfig};
use gtcorrect_core::estimate::{self, Dataset, ErrorKind};
use gtcorrect_core::sim::{self, Layout, SimConfig, SimError};
use gtcorrect_core::Vec2;

use ingest::IngestError;
use report::ReportDocument;

#[derive(Parser)]
#[command(
    name = "gtcorrect",
    version,
    about = "Correct localization accuracy statistics for ground-truth error",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics of a dataset's error norms
    Stats {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated metrics (mean, median, pNN); default mean,p25,p50,p75,p95
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        #[arg(long)]
        pretty: bool,
    },
    /// Fit a distribution to a dataset's errors
    Fit {
        #[command(flatten)]
        input: InputArgs,
        /// normal (per axis), rayleigh (norms), or rice (vectors)
        #[arg(long)]
        dist: String,
        #[arg(long)]
        pretty: bool,
    },
    /// Q-Q points of error norms against a fitted distribution
    Qq {
        #[command(flatten)]
        input: InputArgs,
        /// rayleigh, rice, or exponential (mean-matched)
        #[arg(long)]
        dist: String,
        /// Write points as CSV here instead of embedding them in the report
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// Empirical CDF points of error norms
    Ecdf {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// Remove a ground-truth error from a validation statistic
    Correct {
        #[command(subcommand)]
        kind: CorrectKind,
    },
    /// Remove a map offset, then a marking error, from one statistic
    Pipeline {
        /// Validation statistic (meters)
        #[arg(long)]
        val: f64,
        /// Map offset norm (meters)
        #[arg(long)]
        map_gt: f64,
        /// Marking-error statistic (meters)
        #[arg(long)]
        mark_gt: f64,
        #[arg(long, default_value = "mean")]
        metric: String,
        #[arg(long, default_value_t = 1e-9)]
        eps: f64,
        #[arg(long)]
        pretty: bool,
    },
    /// Which error type distorts this metric more at the given (val, gt)?
    Compare {
        #[arg(long)]
        val: f64,
        #[arg(long)]
        gt: f64,
        #[arg(long, default_value = "mean")]
        metric: String,
        #[arg(long, default_value_t = 1e-9)]
        eps: f64,
        #[arg(long)]
        pretty: bool,
    },
    /// Fit the impact-approximation constants for a metric
    FitConstants {
        #[arg(long)]
        metric: String,
        /// Upper end of the offset grid (meters)
        #[arg(long, default_value_t = 10.0)]
        vmax: f64,
        /// Grid step (meters)
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        pretty: bool,
    },
    /// Generate a synthetic evaluation dataset
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Write the dataset CSV here
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// End-to-end correction experiment on synthetic data
    Experiment {
        /// marking or map
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        sim: SimArgs,
        /// Per-axis map shifts to sweep (map experiments), e.g. 1,2,3
        #[arg(long, value_delimiter = ',')]
        shifts: Option<Vec<f64>>,
        /// Allow sigma-mark > 0 in a map experiment (sensitivity study)
        #[arg(long)]
        include_marking: bool,
        #[arg(long)]
        pretty: bool,
    },
}

#[derive(Subcommand)]
enum CorrectKind {
    /// Real statistic from validation and marking statistics: sqrt(u^2 - v^2)
    Marking {
        #[arg(long)]
        val: f64,
        #[arg(long)]
        gt: f64,
        #[arg(long, default_value = "mean")]
        metric: String,
        #[arg(long)]
        pretty: bool,
    },
    /// Real statistic from validation statistic and map offset norm
    Map {
        #[arg(long)]
        val: f64,
        #[arg(long)]
        gt: f64,
        #[arg(long, default_value = "mean")]
        metric: String,
        /// Bisection convergence width
        #[arg(long, default_value_t = 1e-9)]
        eps: f64,
        #[arg(long)]
        pretty: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Dataset CSV (header x_algo,y_algo,x_marked,y_marked[,x_real,y_real])
    #[arg(long)]
    input: PathBuf,
    /// Which error to analyze: validation, real, or marking
    #[arg(long, default_value = "validation")]
    kind: String,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    sigma_real: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_mark: f64,
    /// Map shift in meters: one value for both axes, or x,y
    #[arg(long, default_value = "0")]
    shift: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lay real ground-truth points on a square grid with this spacing
    #[arg(long)]
    grid_spacing: Option<f64>,
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 1,
        }
    }
}

impl From<CorrectError> for CliError {
    fn from(e: CorrectError) -> Self {
        let code = match e {
            CorrectError::Infeasible { .. } => 2,
            _ => 1,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Correct(inner) => inner.into(),
            SimError::AllMetricsInfeasible(_) => Self {
                message: e.to_string(),
                code: 2,
            },
            other => Self::usage(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<estimate::EstimateError> for CliError {
    fn from(e: estimate::EstimateError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<approx::ApproxError> for CliError {
    fn from(e: approx::ApproxError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind as K;
            let code = match e.kind() {
                K::DisplayHelp | K::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn emit(doc: &ReportDocument, pretty: bool) {
    if pretty {
        print!("{}", doc.to_pretty());
    } else {
        println!("{}", doc.to_json());
    }
}

fn parse_metric(s: &str) -> Result<MetricKind, CliError> {
    s.parse::<MetricKind>().map_err(|e| CliError::usage(e.to_string()))
}

/// Built-in constants for the tabulated metrics; on-demand fit otherwise.
fn constants_for(
    metric: MetricKind,
    doc: &mut ReportDocument,
) -> Result<ApproxConstants, CliError> {
    match approx::builtin_constants(metric) {
        Ok(c) => Ok(c),
        Err(approx::ApproxError::NotBuiltIn(_)) => {
            doc.warn(format!(
                "no built-in constants for {metric}; fitted on the default grid (takes a few seconds)"
            ));
            Ok(approx::fit_constants(metric, &approx::default_fit_grid())?)
        }
        Err(e) => Err(e.into()),
    }
}

fn load_norms(input: &InputArgs) -> Result<(Dataset, ErrorKind, Vec<f64>), CliError> {
    let kind: ErrorKind = input
        .kind
        .parse()
        .map_err(|e: estimate::EstimateError| CliError::usage(e.to_string()))?;
    let dataset = ingest::read_dataset(&input.input)?;
    let norms = estimate::error_norms(&dataset, kind)?;
    Ok((dataset, kind, norms))
}

fn parse_shift(s: &str) -> Result<Vec2, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let parse = |p: &str| -> Result<f64, CliError> {
        p.parse()
            .map_err(|_| CliError::usage(format!("bad shift component '{p}'")))
    };
    match parts.as_slice() {
        [one] => {
            let v = parse(one)?;
            Ok(Vec2::new(v, v))
        }
        [x, y] => Ok(Vec2::new(parse(x)?, parse(y)?)),
        _ => Err(CliError::usage(format!(
            "--shift takes R or R,R, got '{s}'"
        ))),
    }
}

fn sim_config(args: &SimArgs) -> Result<SimConfig, CliError> {
    let shift = parse_shift(&args.shift)?;
    let mut cfg = SimConfig::new(args.sigma_real, args.sigma_mark, shift, args.n, args.seed)
        .map_err(CliError::from)?;
    if let Some(spacing) = args.grid_spacing {
        cfg.layout = Layout::Grid { spacing };
    }
    Ok(cfg)
}

fn summary_json(norms: &[f64], metrics: &[MetricKind]) -> Result<Value, CliError> {
    let mut sorted = norms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut map = serde_json::Map::new();
    map.insert("n".into(), json!(sorted.len()));
    for metric in metrics {
        let value = match metric.quantile_prob() {
            None => sorted.iter().sum::<f64>() / sorted.len() as f64,
            Some(q) => estimate::sample_quantile(&sorted, q)?,
        };
        map.insert(metric.to_string(), json!(value));
    }
    Ok(Value::Object(map))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Stats { input, metrics, pretty } => {
            let metric_kinds = match metrics {
                None => vec![
                    MetricKind::Mean,
                    MetricKind::Quantile(0.25),
                    MetricKind::Median,
                    MetricKind::Quantile(0.75),
                    MetricKind::Tail95,
                ],
                Some(names) => names
                    .iter()
                    .map(|s| parse_metric(s))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let dataset = ingest::read_dataset(&input.input)?;
            let mut kinds = vec![ErrorKind::Validation];
            if dataset.has_real_gt() {
                kinds.push(ErrorKind::Real);
                kinds.push(ErrorKind::Marking);
            }
            let mut results = serde_json::Map::new();
            for kind in kinds {
                let norms = estimate::error_norms(&dataset, kind)?;
                results.insert(kind.to_string(), summary_json(&norms, &metric_kinds)?);
            }
            let doc = ReportDocument::new(
                "stats",
                json!({
                    "input": input.input,
                    "metrics": metric_kinds.iter().map(ToString::to_string).collect::<Vec<_>>(),
                }),
                Value::Object(results),
            );
            emit(&doc, pretty);
            Ok(())
        }

        Command::Fit { input, dist, pretty } => {
            let (_, kind, norms) = load_norms(&input)?;
            let dataset = ingest::read_dataset(&input.input)?;
            let vectors = estimate::error_vectors(&dataset, kind)?;
            let results = match dist.as_str() {
                "normal" => {
                    let (x, y) = estimate::fit_normal_per_axis(&vectors)?;
                    json!({ "normal": { "x": x, "y": y } })
                }
                "rayleigh" => {
                    let p = estimate::fit_rayleigh(&norms)?;
                    json!({ "rayleigh": { "sigma": p.sigma() } })
                }
                "rice" => {
                    let p = estimate::fit_rice(&vectors)?;
                    json!({ "rice": { "v": p.v(), "sigma": p.sigma() } })
                }
                other => {
                    return Err(CliError::usage(format!(
                        "unknown distribution '{other}' (expected normal, rayleigh, or rice)"
                    )))
                }
            };
            let doc = ReportDocument::new(
                "fit",
                json!({ "input": input.input, "kind": kind.to_string(), "dist": dist }),
                results,
            );
            emit(&doc, pretty);
            Ok(())
        }

        Command::Qq { input, dist, output, pretty } => {
            let (dataset, kind, norms) = load_norms(&input)?;
            let (params, quantile): (Value, Box<dyn Fn(f64) -> f64>) = match dist.as_str() {
                "rayleigh" => {
                    let p = estimate::fit_rayleigh(&norms)?;
                    (
                        json!({ "sigma": p.sigma() }),
                        Box::new(move |q| p.quantile(q).expect("q in (0,1)")),
                    )
                }
                "rice" => {
                    let vectors = estimate::error_vectors(&dataset, kind)?;
                    let p = estimate::fit_rice(&vectors)?;
                    (
                        json!({ "v": p.v(), "sigma": p.sigma() }),
                        Box::new(move |q| p.quantile(q).expect("q in (0,1)")),
                    )
                }
                "exponential" => {
                    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
                    (
                        json!({ "mean": mean }),
                        Box::new(move |q| -mean * (1.0 - q).ln()),
                    )
                }
                other => {
                    return Err(CliError::usage(format!(
                        "unknown distribution '{other}' (expected rayleigh, rice, or exponential)"
                    )))
                }
            };
            let points = estimate::qq_points(&norms, quantile)?;
            let max_dev = points
                .iter()
                .map(|(t, e)| (t - e).abs())
                .fold(0.0, f64::max);
            let mut results = json!({
                "dist": dist,
                "params": params,
                "n": points.len(),
                "max_abs_deviation": max_dev,
            });
            if let Some(path) = &output {
                write_points(path, "theoretical,empirical", &points)?;
                results["output"] = json!(path);
            } else {
                results["points"] = json!(points);
            }
            let doc = ReportDocument::new(
                "qq",
                json!({ "input": input.input, "kind": kind.to_string(), "dist": dist }),
                results,
            );
            emit(&doc, pretty);
            Ok(())
        }

        Command::Ecdf { input, output, pretty } => {
            let (_, kind, norms) = load_norms(&input)?;
            let points = estimate::ecdf_points(&norms)?;
            let mut results = json!({ "n": points.len() });
            if let Some(path) = &output {
                write_points(path, "x,cdf", &points)?;
                results["output"] = json!(path);
            } else {
                results["points"] = json!(points);
            }
            let doc = ReportDocument::new(
                "ecdf",
                json!({ "input": input.input, "kind": kind.to_string() }),
                results,
            );
            emit(&doc, pretty);
            Ok(())
        }

        Command::Correct { kind } => match kind {
            CorrectKind::Marking { val, gt, metric, pretty } => {
                let m = parse_metric(&metric)?;
                let result = correct::correct_marking(val, gt, m)?;
                let doc = ReportDocument::new(
                    "correct marking",
                    json!({ "val": val, "gt": gt, "metric": m.to_string() }),
                    serde_json::to_value(result).expect("serializable"),
                );
                emit(&doc, pretty);
                Ok(())
            }
            CorrectKind::Map { val, gt, metric, eps, pretty } => {
                let m = parse_metric(&metric)?;
                let cfg = CorrectionConfig { epsilon: eps, ..Default::default() };
                let mut doc = ReportDocument::new(
                    "correct map",
                    json!({ "val": val, "gt": gt, "metric": m.to_string(), "eps": eps }),
                    Value::Null,
                );
                let constants = constants_for(m, &mut doc)?;
                let result = correct::correct_map(val, gt, &constants, &cfg)?;
                doc.results = json!({
                    "correction": result,
                    "constants": constants,
                });
                emit(&doc, pretty);
                Ok(())
            }
        },

        Command::Pipeline { val, map_gt, mark_gt, metric, eps, pretty } => {
            let m = parse_metric(&metric)?;
            let cfg = CorrectionConfig { epsilon: eps, ..Default::default() };
            let mut doc = ReportDocument::new(
                "pipeline",
                json!({
                    "val": val, "map_gt": map_gt, "mark_gt": mark_gt,
                    "metric": m.to_string(), "eps": eps,
                }),
                Value::Null,
            );
            // built-in metrics go through the library pipeline; fitted
            // constants for other quantiles compose the two stages here
            let result = match approx::builtin_constants(m) {
                Ok(_) => correct::correct_pipeline(val, map_gt, mark_gt, m, &cfg)?,
                Err(approx::ApproxError::NotBuiltIn(_)) => {
                    let constants = constants_for(m, &mut doc)?;
                    let map_stage = correct::correct_map(val, map_gt, &constants, &cfg)?;
                    let marking_stage =
                        correct::correct_marking(map_stage.real_stat, mark_gt, constants.metric)?;
                    gtcorrect_core::PipelineResult { map_stage, marking_stage }
                }
                Err(e) => return Err(e.into()),
            };
            doc.results = json!({
                "map_stage": result.map_stage,
                "marking_stage": result.marking_stage,
                "intermediate": result.intermediate_stat(),
                "real_stat": result.final_result().real_stat,
            });
            emit(&doc, pretty);
            Ok(())
        }

        Command::Compare { val, gt, metric, eps, pretty } => {
            let m = parse_metric(&metric)?;
            let cfg = CorrectionConfig { epsilon: eps, ..Default::default() };
            let mut doc = ReportDocument::new(
                "compare",
                json!({ "val": val, "gt": gt, "metric": m.to_string(), "eps": eps }),
                Value::Null,
            );
            let constants = constants_for(m, &mut doc)?;
            let verdict = compare::compare_impacts(val, gt, &constants, &cfg)?;
            doc.results = serde_json::to_value(verdict).expect("serializable");
            emit(&doc, pretty);
            Ok(())
        }

        Command::FitConstants { metric, vmax, step, pretty } => {
            let m = parse_metric(&metric)?;
            if vmax <= 0.0 || step <= 0.0 || !vmax.is_finite() || !step.is_finite() {
                return Err(CliError::usage("vmax and step must be positive"));
            }
            let count = (vmax / step).round() as usize;
            let grid: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
            let constants = approx::fit_constants(m, &grid)?;
            let doc = ReportDocument::new(
                "fit-constants",
                json!({ "metric": m.to_string(), "vmax": vmax, "step": step }),
                serde_json::to_value(constants).expect("serializable"),
            );
            emit(&doc, pretty);
            Ok(())
        }

        Command::Simulate { sim, output, pretty } => {
            let cfg = sim_config(&sim)?;
            let dataset = sim::gen_dataset(&cfg)?;
            let metrics = [
                MetricKind::Mean,
                MetricKind::Quantile(0.25),
                MetricKind::Median,
                MetricKind::Quantile(0.75),
                MetricKind::Tail95,
            ];
            let mut results = serde_json::Map::new();
            for kind in [ErrorKind::Validation, ErrorKind::Real, ErrorKind::Marking] {
                let norms = estimate::error_norms(&dataset, kind)?;
                results.insert(kind.to_string(), summary_json(&norms, &metrics)?);
            }
            let mut results = Value::Object(results);
            if let Some(path) = &output {
                ingest::write_dataset(path, &dataset)?;
                results["output"] = json!(path);
            }
            let doc = ReportDocument::new(
                "simulate",
                serde_json::to_value(cfg).expect("serializable"),
                results,
            );
            emit(&doc, pretty);
            Ok(())
        }

        Command::Experiment { kind, sim, shifts, include_marking, pretty } => {
            let cfg = sim_config(&sim)?;
            match kind.as_str() {
                "marking" => {
                    let report = sim::run_marking_experiment(&cfg)?;
                    let mut doc = ReportDocument::new(
                        "experiment marking",
                        serde_json::to_value(cfg).expect("serializable"),
                        serde_json::to_value(&report).expect("serializable"),
                    );
                    for w in &report.warnings {
                        doc.warn(w.clone());
                    }
                    emit(&doc, pretty);
                    Ok(())
                }
                "map" => {
                    let shifts = shifts.unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
                    let entries = sim::run_map_experiment(&cfg, &shifts, include_marking)?;
                    let mut doc = ReportDocument::new(
                        "experiment map",
                        json!({
                            "config": cfg,
                            "shifts": shifts,
                            "include_marking": include_marking,
                        }),
                        Value::Null,
                    );
                    let rows: Vec<Value> = entries
                        .iter()
                        .map(|entry| match &entry.outcome {
                            Ok(report) => {
                                for w in &report.warnings {
                                    doc.warn(format!("shift {}: {w}", entry.shift));
                                }
                                json!({
                                    "shift": entry.shift,
                                    "offset_norm": entry.offset_norm,
                                    "report": report,
                                })
                            }
                            Err(e) => {
                                doc.warn(format!("shift {}: {e}", entry.shift));
                                json!({
                                    "shift": entry.shift,
                                    "offset_norm": entry.offset_norm,
                                    "error": e.to_string(),
                                })
                            }
                        })
                        .collect();
                    doc.results = json!({ "entries": rows });
                    emit(&doc, pretty);
                    Ok(())
                }
                other => Err(CliError::usage(format!(
                    "unknown experiment kind '{other}' (expected marking or map)"
                ))),
            }
        }
    }
}

fn write_points(path: &PathBuf, header: &str, points: &[(f64, f64)]) -> Result<(), CliError> {
    use std::fmt::Write as _;
    let mut out = String::with_capacity(points.len() * 16 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (a, b) in points {
        let _ = writeln!(out, "{a},{b}");
    }
    std::fs::write(path, out)?;
    Ok(())
}
