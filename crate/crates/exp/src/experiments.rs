//! The experiment runners. Each sample draws its own rotation from a seed
//! derived from `(master seed, experiment, n, sample index)`, so records do
//! not depend on execution order or on the other entries of `n_list`.

use std::collections::BTreeMap;
use std::time::Instant;

use cubeshadow_core::concentration::{l1_expectation_check, linf_column_stats, NormStats};
use cubeshadow_core::line_search::{
    j_operator_norm_cube, minimize_diam_proxy, minimize_shadow_area,
    octahedron_section_diameter_from, width_direction_upper_bound,
};
use cubeshadow_core::linalg::{haar_orthogonal, random_unit_vector, RngSeed, RotationMatrix};
use cubeshadow_core::nets::{
    covering_check, lattice_net, sample_l1_ball, sample_slice, slice_net, NET_BUDGET, NET_COORD_BUDGET,
};
use cubeshadow_core::stats::mean;
use cubeshadow_core::OptimizerConfig;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{derive_seed, Experiment, ExperimentConfig};
use crate::error::{ExpError, Result};
use crate::fit::PowerLawFit;
use crate::record::ExperimentRecord;

/// Records sorted by `(n, sample_index)` plus an experiment-specific summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Value,
}

/// Covering trials per cell are cut so that `trials × net size × n` stays
/// below this.
pub const COVERING_WORK_CAP: f64 = 2e8;

fn covering_trials(requested: usize, net_len: usize, n: usize) -> usize {
    requested.min((COVERING_WORK_CAP / (net_len.max(1) * n) as f64).floor() as usize)
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let out = match cfg.experiment {
        Experiment::ScalingCun => run_scaling_cun(cfg)?,
        Experiment::ScalingSandwich => run_scaling_sandwich(cfg)?,
        Experiment::RareEvent => run_rare_event(cfg)?,
        Experiment::Concentration => run_concentration(cfg)?,
        Experiment::NetsAudit => run_nets_audit(cfg)?,
        Experiment::SectionDiameter => run_section_diameter(cfg)?,
    };
    validate_records(&out.records)?;
    Ok(out)
}

struct Sample {
    n: usize,
    index: usize,
    seed: u64,
    elapsed_ms: f64,
    values: Vec<(&'static str, f64)>,
}

fn sorted_n(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut ns = cfg.n_list.clone();
    ns.sort_unstable();
    ns
}

/// Evaluates `f` on every `(n, sample index)` in parallel, returning samples in
/// `(n, index)` order.
fn for_each_sample<F>(cfg: &ExperimentConfig, count: usize, f: F) -> Result<Vec<Sample>>
where
    F: Fn(usize, usize, u64) -> Result<Vec<(&'static str, f64)>> + Sync,
{
    let jobs: Vec<(usize, usize)> = sorted_n(cfg)
        .into_iter()
        .flat_map(|n| (0..count).map(move |i| (n, i)))
        .collect();
    let name = cfg.experiment.name();
    jobs.into_par_iter()
        .map(|(n, index)| {
            let seed = derive_seed(cfg.seed, name, n, index);
            let start = Instant::now();
            let values = f(n, index, seed)?;
            let elapsed_ms = if cfg.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok(Sample {
                n,
                index,
                seed,
                elapsed_ms,
                values,
            })
        })
        .collect()
}

fn to_records(experiment: Experiment, samples: &[Sample]) -> Vec<ExperimentRecord> {
    samples
        .iter()
        .flat_map(|s| {
            s.values.iter().map(move |&(estimator, value)| ExperimentRecord {
                experiment: experiment.name().to_string(),
                n: s.n,
                sample_index: s.index,
                seed_used: s.seed,
                estimator: estimator.to_string(),
                value,
                elapsed_ms: s.elapsed_ms,
            })
        })
        .collect()
}

/// Mean of `estimator` per `n`, in increasing `n`.
fn means_by_n(samples: &[Sample], estimator: &str) -> Vec<(usize, f64)> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in samples {
        for &(name, v) in &s.values {
            if name == estimator {
                groups.entry(s.n).or_default().push(v);
            }
        }
    }
    groups.into_iter().map(|(n, v)| (n, mean(&v))).collect()
}

fn rotation(n: usize, seed: u64) -> Result<RotationMatrix> {
    Ok(haar_orthogonal(2 * n, RngSeed::new(seed, 0))?)
}

fn optimizer(cfg: &ExperimentConfig, seed: u64) -> OptimizerConfig {
    cfg.optimizer.with_rng(RngSeed::new(seed, 1))
}

/// Power-law fit as JSON, or `null` with fewer than two `n`.
fn fit_json(points: &[(usize, f64)]) -> Result<Value> {
    if points.len() < 2 {
        return Ok(Value::Null);
    }
    let fit = PowerLawFit::fit(points)?;
    let mut v = serde_json::to_value(&fit).map_err(|e| ExpError::Parse(e.to_string()))?;
    v["max_log_residual"] = json!(fit.max_log_residual());
    Ok(v)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Minimal shadow area, diameter proxy, width-direction bound and `1/‖J‖` per
/// sample; power law of the mean minimal area in `n`.
pub fn run_scaling_cun(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let samples = for_each_sample(cfg, cfg.samples_per_n, |n, _, seed| {
        let o = rotation(n, seed)?;
        let opt = optimizer(cfg, seed);
        let area = minimize_shadow_area(&o, &opt)?;
        let proxy = minimize_diam_proxy(&o, &opt)?;
        let width = width_direction_upper_bound(&o)?;
        Ok(vec![
            ("min_area", area.best_value),
            ("min_area_converged", flag(area.converged)),
            ("diam_proxy", proxy.best_value),
            ("width_area_ub", width.area_ub),
            ("inv_j_norm", 1.0 / j_operator_norm_cube(&o)),
        ])
    })?;
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "estimates_are": "upper bounds on the minimal shadow area",
        "fit": fit_json(&means_by_n(&samples, "min_area"))?,
        "mean_diam_proxy": means_by_n(&samples, "diam_proxy"),
        "mean_width_area_ub": means_by_n(&samples, "width_area_ub"),
        "mean_inv_j_norm": means_by_n(&samples, "inv_j_norm"),
    });
    Ok(RunOutput {
        records: to_records(cfg.experiment, &samples),
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichRow {
    pub n: usize,
    pub mean_inv_j_norm: f64,
    /// `√(n / ln n)`.
    pub rate: f64,
    /// `mean_inv_j_norm / rate`.
    pub constant: f64,
    pub mean_min_area: f64,
    /// `mean_min_area / mean_inv_j_norm`.
    pub ratio: f64,
}

/// `1/‖J‖` and `4/‖J‖` against the `√(n/ln n)` rate, and the growth of the
/// minimal area relative to `1/‖J‖`.
pub fn run_scaling_sandwich(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let samples = for_each_sample(cfg, cfg.samples_per_n, |n, _, seed| {
        let o = rotation(n, seed)?;
        let j = j_operator_norm_cube(&o);
        let area = minimize_shadow_area(&o, &optimizer(cfg, seed))?;
        Ok(vec![
            ("inv_j_norm", 1.0 / j),
            ("sandwich_upper", 4.0 / j),
            ("min_area", area.best_value),
        ])
    })?;
    let inv_j = means_by_n(&samples, "inv_j_norm");
    let area = means_by_n(&samples, "min_area");
    let rows: Vec<SandwichRow> = inv_j
        .iter()
        .zip(&area)
        .map(|(&(n, mj), &(_, ma))| {
            let rate = (n as f64 / (n as f64).ln()).sqrt();
            SandwichRow {
                n,
                mean_inv_j_norm: mj,
                rate,
                constant: mj / rate,
                mean_min_area: ma,
                ratio: ma / mj,
            }
        })
        .collect();
    let constants: Vec<f64> = rows.iter().map(|r| r.constant).collect();
    let spread = constants.iter().cloned().fold(f64::MIN, f64::max)
        / constants.iter().cloned().fold(f64::MAX, f64::min);
    let increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "rows": rows,
        "constant_spread": spread,
        "ratio_strictly_increasing": increasing,
        "fit_inv_j_norm": fit_json(&inv_j)?,
        "fit_min_area": fit_json(&area)?,
    });
    Ok(RunOutput {
        records: to_records(cfg.experiment, &samples),
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RareEventRow {
    pub n: usize,
    pub lambda: f64,
    pub threshold: f64,
    pub samples: usize,
    pub events: usize,
    pub frequency: f64,
}

/// Frequency of samples whose diameter-proxy minimum is at most `λ√n`.
///
/// The optimizer can only overshoot the true minimum, so a sample it misses
/// could still be an event; it never reports an event that is not one.
pub fn run_rare_event(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let samples = for_each_sample(cfg, cfg.samples_per_n, |n, _, seed| {
        let o = rotation(n, seed)?;
        let proxy = minimize_diam_proxy(&o, &optimizer(cfg, seed))?;
        let threshold = cfg.lambda * (n as f64).sqrt();
        Ok(vec![
            ("diam_proxy", proxy.best_value),
            ("event", flag(proxy.best_value <= threshold)),
        ])
    })?;
    let rows: Vec<RareEventRow> = means_by_n(&samples, "event")
        .into_iter()
        .map(|(n, freq)| RareEventRow {
            n,
            lambda: cfg.lambda,
            threshold: cfg.lambda * (n as f64).sqrt(),
            samples: cfg.samples_per_n,
            events: (freq * cfg.samples_per_n as f64).round() as usize,
            frequency: freq,
        })
        .collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].frequency <= w[0].frequency);
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "rows": rows,
        "frequency_nonincreasing": nonincreasing,
    });
    Ok(RunOutput {
        records: to_records(cfg.experiment, &samples),
        summary,
    })
}

/// JSON statistics record for one estimator at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRecord {
    pub estimator: String,
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub quantiles: Vec<(f64, f64)>,
    pub pass_flags: BTreeMap<String, bool>,
}

impl StatsRecord {
    fn new(estimator: &str, n: usize, stats: &NormStats, flags: &[(&str, bool)]) -> Self {
        Self {
            estimator: estimator.to_string(),
            n,
            samples: stats.n_samples,
            mean: stats.mean,
            std: stats.std,
            quantiles: stats.quantiles.clone(),
            pass_flags: flags.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

const POLES: [&str; 3] = ["e1", "random", "flat"];

fn pole(kind: usize, n: usize, seed: u64) -> Vec<f64> {
    let d = 2 * n;
    match kind {
        0 => {
            let mut y = vec![0.0; d];
            y[0] = 1.0;
            y
        }
        1 => random_unit_vector(d, &mut RngSeed::new(seed, 7).rng()),
        _ => vec![1.0 / (d as f64).sqrt(); d],
    }
}

/// ℓ₁ means under the pushforward law for three poles, and `‖OᵀJOe₁‖_∞`.
/// `samples_per_n` is the Monte Carlo size of each estimate (at least 1000
/// for the ℓ₁ means).
pub fn run_concentration(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mc = cfg.samples_per_n;
    let results: Vec<(Sample, StatsRecord)> = sorted_n(cfg)
        .into_iter()
        .flat_map(|n| (0..=POLES.len()).map(move |i| (n, i)))
        .map(|(n, index)| {
            let seed = derive_seed(cfg.seed, cfg.experiment.name(), n, index);
            let start = Instant::now();
            let (values, stats) = if index < POLES.len() {
                let y = pole(index, n, seed);
                let c = l1_expectation_check(&y, mc.max(1000), RngSeed::new(seed, 0))?;
                let name = format!("l1_mean_{}", POLES[index]);
                let stats = StatsRecord::new(
                    &name,
                    n,
                    &c.stats,
                    &[
                        ("mean_at_least_half_sqrt_n", c.lower_bound_holds),
                        ("closed_form_within_5pct", c.closed_form_close),
                    ],
                );
                (
                    vec![
                        ("l1_mean", c.stats.mean),
                        ("l1_std", c.stats.std),
                        ("l1_exact_mean", c.exact_mean),
                        ("l1_closed_form", c.closed_form),
                        ("l1_lower_bound_ok", flag(c.lower_bound_holds)),
                    ],
                    stats,
                )
            } else {
                let s = linf_column_stats(n, mc, RngSeed::new(seed, 0))?;
                let rate = ((n as f64).ln() / n as f64).sqrt();
                let in_range = s.max <= 1.0 && s.min >= 1.0 / ((2 * n) as f64).sqrt() - 1e-12;
                let stats = StatsRecord::new("linf_column", n, &s, &[("within_unit_range", in_range)]);
                (
                    vec![
                        ("linf_mean", s.mean),
                        ("linf_std", s.std),
                        ("linf_mean_over_rate", s.mean / rate),
                    ],
                    stats,
                )
            };
            let elapsed_ms = if cfg.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok((
                Sample {
                    n,
                    index,
                    seed,
                    elapsed_ms,
                    values,
                },
                stats,
            ))
        })
        .collect::<Result<_>>()?;
    let (samples, stats): (Vec<Sample>, Vec<StatsRecord>) = results.into_iter().unzip();
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "poles": POLES,
        "stats": stats,
    });
    Ok(RunOutput {
        records: to_records(cfg.experiment, &samples),
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeRow {
    pub k: usize,
    pub n: usize,
    pub count: Option<usize>,
    pub bound: f64,
    pub radius: f64,
    pub trials: usize,
    pub max_gap: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRow {
    pub theta: f64,
    pub epsilon: f64,
    pub n: usize,
    pub k: usize,
    pub count: Option<usize>,
    pub count_bound: f64,
    pub radius: f64,
    pub trials: usize,
    pub max_gap: Option<f64>,
    pub status: String,
}

/// Lattice-net grid `k ∈ {1, …, 4}` and slice-net grid.
pub const LATTICE_KS: [usize; 4] = [1, 2, 3, 4];
pub const SLICE_GRID: [(f64, f64); 4] = [(0.7, 0.3), (0.7, 0.45), (0.8, 0.3), (0.8, 0.45)];

/// Exact lattice counts against the cardinality bound, and sampled covering
/// gaps against the covering radius, for nets over a `(k, n)` grid and a
/// `(θ, ε, n)` grid. `samples_per_n` is the number of covering trials per cell.
/// Cells beyond the enumeration budget are reported, not fatal; the run fails
/// with a budget error only if no cell at all fits.
pub fn run_nets_audit(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let name = cfg.experiment.name();
    let mut samples = Vec::new();
    let mut lattice_rows = Vec::new();
    let mut slice_rows = Vec::new();
    let mut computed = 0;
    for n in sorted_n(cfg) {
        for (ci, &k) in LATTICE_KS.iter().enumerate() {
            let seed = derive_seed(cfg.seed, name, n, ci);
            let bound = cubeshadow_core::nets::cardinality_bound(k, n);
            let radius = (k as f64).sqrt();
            let mut row = LatticeRow {
                k,
                n,
                count: None,
                bound,
                radius,
                trials: 0,
                max_gap: None,
                status: String::new(),
            };
            match lattice_net(k, n) {
                Ok(net) => {
                    computed += 1;
                    row.count = Some(net.len());
                    let mut values = vec![
                        ("lattice_count", net.len() as f64),
                        ("lattice_bound", bound),
                        ("lattice_radius", radius),
                    ];
                    let trials = covering_trials(cfg.samples_per_n, net.len(), n);
                    if trials > 0 {
                        let pts = net.scaled_points(1.0);
                        let mut rng = RngSeed::new(seed, 0).rng();
                        let rep = covering_check(&pts, radius, |r| Ok(sample_l1_ball(n, k as f64, r)), trials, &mut rng)?;
                        row.trials = trials;
                        row.max_gap = Some(rep.max_gap);
                        values.push(("lattice_gap", rep.max_gap));
                        row.status = "ok".into();
                    } else {
                        row.status = "covering check skipped: net too large".into();
                    }
                    samples.push(Sample {
                        n,
                        index: ci,
                        seed,
                        elapsed_ms: 0.0,
                        values,
                    });
                }
                Err(cubeshadow_core::Error::BudgetExceeded { requested, cap }) => {
                    row.status = format!("budget exceeded: bound {requested:.3e} > {cap:.0e}");
                }
                Err(e) => return Err(e.into()),
            }
            lattice_rows.push(row);
        }
        for (gi, &(theta, epsilon)) in SLICE_GRID.iter().enumerate() {
            let index = LATTICE_KS.len() + gi;
            let seed = derive_seed(cfg.seed, name, n, index);
            let k = cubeshadow_core::nets::slice_net_k(epsilon, n);
            let mut row = SliceRow {
                theta,
                epsilon,
                n,
                k,
                count: None,
                count_bound: (epsilon * n as f64).exp(),
                radius: 8.0 * theta * ((1.0 / epsilon).ln() / epsilon).sqrt(),
                trials: 0,
                max_gap: None,
                status: String::new(),
            };
            if k == 0 {
                row.status = "k = 0 for this (epsilon, n)".into();
                slice_rows.push(row);
                continue;
            }
            let bound = cubeshadow_core::nets::cardinality_bound(k, n);
            if bound > NET_BUDGET || bound * n as f64 > NET_COORD_BUDGET {
                row.status = "budget exceeded".into();
                slice_rows.push(row);
                continue;
            }
            let net = slice_net(theta, epsilon, n)?;
            computed += 1;
            row.count = Some(net.len());
            let mut values = vec![
                ("slice_count", net.len() as f64),
                ("slice_count_bound", row.count_bound),
                ("slice_radius", net.net_radius),
            ];
            let trials = covering_trials(cfg.samples_per_n, net.len(), n);
            if net.is_empty() {
                row.status = "slice is empty".into();
            } else if trials == 0 {
                row.status = "covering check skipped: net too large".into();
            } else {
                let mut rng = RngSeed::new(seed, 0).rng();
                match covering_check(
                    &net.points,
                    net.net_radius,
                    |r| sample_slice(n, theta, 100_000, r),
                    trials,
                    &mut rng,
                ) {
                    Ok(rep) => {
                        row.trials = trials;
                        row.max_gap = Some(rep.max_gap);
                        values.push(("slice_gap", rep.max_gap));
                        row.status = "ok".into();
                    }
                    Err(cubeshadow_core::Error::SamplerStalled { attempts }) => {
                        row.status = format!("rejection sampler stalled after {attempts} attempts");
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            samples.push(Sample {
                n,
                index,
                seed,
                elapsed_ms: 0.0,
                values,
            });
            slice_rows.push(row);
        }
    }
    if computed == 0 {
        return Err(ExpError::Budget(
            "every net in the audit grid exceeds the enumeration budget".into(),
        ));
    }
    let all_within_bound = lattice_rows
        .iter()
        .all(|r| r.count.is_none_or(|c| c as f64 <= r.bound));
    let all_gaps_within_radius = lattice_rows
        .iter()
        .all(|r| r.max_gap.is_none_or(|g| g <= r.radius))
        && slice_rows.iter().all(|r| r.max_gap.is_none_or(|g| g <= r.radius));
    let summary = json!({
        "experiment": name,
        "lattice": lattice_rows,
        "slice": slice_rows,
        "all_counts_within_bound": all_within_bound,
        "all_gaps_within_radius": all_gaps_within_radius,
    });
    Ok(RunOutput {
        records: to_records(cfg.experiment, &samples),
        summary,
    })
}

/// Section diameter of `B₁^{4n} ∩ L_O`, the diameter proxy, the minimal area,
/// and whether the minimal-area estimate exceeds the section diameter.
pub fn run_section_diameter(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let samples = for_each_sample(cfg, cfg.samples_per_n, |n, _, seed| {
        let o = rotation(n, seed)?;
        let opt = optimizer(cfg, seed);
        let proxy = minimize_diam_proxy(&o, &opt)?;
        let section = octahedron_section_diameter_from(&o, &opt, std::slice::from_ref(&proxy.best_point))?;
        let area = minimize_shadow_area(&o, &opt)?;
        Ok(vec![
            ("section_diameter", section.diameter),
            ("m2", section.m2),
            ("diam_proxy", proxy.best_value),
            ("min_area", area.best_value),
            ("area_exceeds_section", flag(area.best_value >= section.diameter)),
        ])
    })?;
    let diam = means_by_n(&samples, "section_diameter");
    let scaled: Vec<(usize, f64)> = diam.iter().map(|&(n, d)| (n, d * (n as f64).sqrt())).collect();
    let hi = scaled.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let lo = scaled.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let all_pass = samples.iter().all(|s| {
        s.values
            .iter()
            .any(|&(name, v)| name == "area_exceeds_section" && v == 1.0)
    });
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "section_diameters_are": "lower estimates (m2 is an optimizer upper bound)",
        "mean_section_diameter": diam,
        "mean_section_diameter_times_sqrt_n": scaled,
        "scaled_band_ratio": hi / lo,
        "all_area_exceeds_section": all_pass,
        "mean_min_area": means_by_n(&samples, "min_area"),
    });
    Ok(RunOutput {
        records: to_records(cfg.experiment, &samples),
        summary,
    })
}

const TOL: f64 = 1e-9;

/// Re-checks the bracket invariants of every estimator before emission.
pub fn validate_records(records: &[ExperimentRecord]) -> Result<()> {
    let mut groups: BTreeMap<(&str, usize, usize), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        if !r.value.is_finite() {
            return Err(ExpError::Invariant(format!(
                "{} n={} sample={}: non-finite {}",
                r.experiment, r.n, r.sample_index, r.estimator
            )));
        }
        groups
            .entry((r.experiment.as_str(), r.n, r.sample_index))
            .or_default()
            .insert(r.estimator.as_str(), r.value);
    }
    for ((experiment, n, index), v) in &groups {
        let cap = (2.0 * *n as f64).sqrt();
        let fail = |what: String| {
            Err(ExpError::Invariant(format!("{experiment} n={n} sample={index}: {what}")))
        };
        let get = |k: &str| v.get(k).copied();
        if let Some(a) = get("min_area") {
            if a > 4.0 * cap + TOL {
                return fail(format!("min_area {a} exceeds 4√(2n) = {}", 4.0 * cap));
            }
            if let Some(l) = get("inv_j_norm") {
                if a < l - TOL {
                    return fail(format!("min_area {a} below 1/‖J‖ = {l}"));
                }
            }
            if let Some(w) = get("width_area_ub") {
                if a > w + TOL {
                    return fail(format!("min_area {a} above the width-direction area {w}"));
                }
            }
            if let Some(p) = get("diam_proxy") {
                if a < p - TOL {
                    return fail(format!("min_area {a} below the diameter proxy {p}"));
                }
            }
        }
        if let Some(l) = get("inv_j_norm") {
            if l < 1.0 - TOL || l > cap + TOL {
                return fail(format!("1/‖J‖ = {l} outside [1, √(2n)]"));
            }
            if let Some(u) = get("sandwich_upper") {
                if (u - 4.0 * l).abs() > 1e-12 * u {
                    return fail(format!("sandwich upper {u} is not 4/‖J‖"));
                }
            }
        }
        if let Some(p) = get("diam_proxy") {
            if p < 1.0 - TOL || p > cap + TOL {
                return fail(format!("diameter proxy {p} outside [1, √(2n)]"));
            }
            if let Some(m2) = get("m2") {
                if p < m2 / 2.0 - TOL {
                    return fail(format!("diameter proxy {p} below m2/2 = {}", m2 / 2.0));
                }
            }
        }
        if let Some(m2) = get("m2") {
            if m2 < 2.0 - TOL {
                return fail(format!("m2 = {m2} below 2"));
            }
        }
        if let (Some(c), Some(b)) = (get("lattice_count"), get("lattice_bound")) {
            if c > b {
                return fail(format!("lattice count {c} above bound {b}"));
            }
        }
        for (gap, radius) in [("lattice_gap", "lattice_radius"), ("slice_gap", "slice_radius")] {
            if let (Some(g), Some(r)) = (get(gap), get(radius)) {
                if g > r {
                    return fail(format!("{gap} {g} above radius {r}"));
                }
            }
        }
        if let Some(m) = get("l1_mean") {
            if m < 0.0 {
                return fail(format!("negative l1 mean {m}"));
            }
        }
        if let Some(m) = get("linf_mean") {
            if m > 1.0 + TOL || m < 1.0 / cap - TOL {
                return fail(format!("linf mean {m} outside [1/√(2n), 1]"));
            }
        }
    }
    Ok(())
}
