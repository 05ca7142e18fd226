//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! `PASS` / `FAIL` line per criterion; the process fails if any criterion does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cubeshadow_core::concentration::{
    chi_square_tail, chi_square_tail_monte_carlo, direct_sample, gaussian_linf_validity,
    l1_expectation_check, linf_tail_grid, pushforward_sample,
};
use cubeshadow_core::line_search::minimize_diam_proxy;
use cubeshadow_core::linalg::{
    dot, haar_orthogonal, norm1, random_unit_vector, rotated_complex_structure, RngSeed,
};
use cubeshadow_core::nets::{
    cardinality_bound, covering_check, lattice_net, sample_l1_ball, sample_slice, slice_net,
    CertificationNet,
};
use cubeshadow_core::stats::ks_two_sample;
use cubeshadow_core::zonogon::project_generators;
use cubeshadow_core::{ComplexLine, OptimizerConfig};
use cubeshadow_exp::{emit, run, Experiment, ExperimentConfig, Format};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn c1_zonogon_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3usize {
        let mut rng = RngSeed::new(1000 + n as u64, 1).rng();
        for s in 0..500u64 {
            let o = haar_orthogonal(2 * n, RngSeed::new(1000 + n as u64, 10 + s)).unwrap();
            let line = ComplexLine::new(random_unit_vector(2 * n, &mut rng)).unwrap();
            let z = project_generators(&o, &line).unwrap();
            let hull = z.hull_oracle().unwrap();
            worst = worst.max(rel_err(z.area(), hull.area)).max(rel_err(z.diameter(), hull.diameter));
        }
    }
    ensure(worst <= 1e-8, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("1500 cases, worst relative error {worst:.2e}"))
}

/// `#(ℤⁿ ∩ kB₁ⁿ)` by dynamic programming over coordinates: `c[j]` counts
/// points with ℓ₁ norm exactly `j`.
fn dp_count(k: usize, n: usize) -> u64 {
    let mut c = vec![0u64; k + 1];
    c[0] = 1;
    for _ in 0..n {
        let mut next = vec![0u64; k + 1];
        for (j, &cj) in c.iter().enumerate() {
            for v in 0..=k - j {
                next[j + v] += cj * if v == 0 { 1 } else { 2 };
            }
        }
        c = next;
    }
    c.iter().sum()
}

fn c2_net_exactness() -> Outcome {
    let n41 = lattice_net(2, 4).unwrap().len();
    ensure(n41 == 41, || format!("#(Z^4 ∩ 2B_1^4) = {n41}"))?;
    let mut cells = 0;
    for k in 1..=4 {
        for n in 1..=12 {
            let count = lattice_net(k, n).unwrap().len() as u64;
            let dp = dp_count(k, n);
            ensure(count == dp, || format!("k={k} n={n}: {count} vs DP {dp}"))?;
            let bound = cardinality_bound(k, n);
            ensure(count as f64 <= bound, || format!("k={k} n={n}: {count} > {bound}"))?;
            cells += 1;
        }
    }
    Ok(format!("count(2,4)=41, {cells} cells match DP and the bound"))
}

fn c3_covering() -> Outcome {
    let mut details = Vec::new();
    for (k, n) in [(1usize, 8usize), (2, 4), (3, 6)] {
        let net = lattice_net(k, n).unwrap();
        let pts = net.scaled_points(1.0);
        let mut rng = RngSeed::new(3000 + k as u64, n as u64).rng();
        let rep = covering_check(&pts, (k as f64).sqrt(), |r| Ok(sample_l1_ball(n, k as f64, r)), 10_000, &mut rng)
            .unwrap();
        ensure(rep.max_gap <= (k as f64).sqrt(), || format!("lattice k={k} n={n}: gap {}", rep.max_gap))?;
        details.push(format!("({k},{n}) gap {:.3}/{:.3}", rep.max_gap, (k as f64).sqrt()));
    }
    for (theta, eps, n) in [(0.7, 0.45, 16usize), (0.72, 0.45, 24), (0.75, 0.45, 40)] {
        let net = slice_net(theta, eps, n).unwrap();
        let radius = 8.0 * theta * ((1.0f64 / eps).ln() / eps).sqrt();
        let mut rng = RngSeed::new(3100, n as u64).rng();
        let rep = covering_check(&net.points, radius, |r| sample_slice(n, theta, 100_000, r), 1000, &mut rng)
            .map_err(|e| format!("slice θ={theta} n={n}: {e}"))?;
        ensure(rep.max_gap <= radius, || format!("slice θ={theta} ε={eps} n={n}: gap {}", rep.max_gap))?;
        details.push(format!("slice({theta},{eps},{n}) gap {:.3}/{:.3}", rep.max_gap, radius));
    }
    Ok(details.join(", "))
}

fn c4_pushforward() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [3usize, 5, 10] {
        let d = 2 * n;
        let mut rng = RngSeed::new(4000, n as u64).rng();
        let y = random_unit_vector(d, &mut rng);
        for _ in 0..100_000 {
            let s = pushforward_sample(&y, &mut rng).unwrap();
            worst = worst.max(dot(&s.x, &y).abs());
        }
        let m = 20_000;
        let push: Vec<Vec<f64>> = (0..m).map(|_| pushforward_sample(&y, &mut rng).unwrap().x).collect();
        let direct: Vec<Vec<f64>> = (0..m).map(|_| direct_sample(&y, &mut rng).unwrap().x).collect();
        let probe = random_unit_vector(d, &mut rng);
        let stats: [(&str, fn(&[f64], &[f64]) -> f64); 3] = [
            ("x_0", |x, _| x[0]),
            ("<x,probe>", |x, p| dot(x, p)),
            ("|x|_1", |x, _| norm1(x)),
        ];
        for (name, f) in stats {
            let a: Vec<f64> = push.iter().map(|x| f(x, &probe)).collect();
            let b: Vec<f64> = direct.iter().map(|x| f(x, &probe)).collect();
            let ks = ks_two_sample(&a, &b, 1e-3);
            ensure(ks.accepts(), || format!("n={n} {name}: D={:.4} > {:.4}", ks.statistic, ks.critical))?;
        }
    }
    ensure(worst < 1e-10, || format!("max |<x,y>| = {worst:.3e}"))?;
    Ok(format!("max |<OᵀJOy,y>| = {worst:.1e} over 3×10⁵ draws; 9 KS tests accepted at 1e-3"))
}

fn c5_l1_expectation() -> Outcome {
    let mut parts = Vec::new();
    for n in [10usize, 50] {
        let d = 2 * n;
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        let random = random_unit_vector(d, &mut RngSeed::new(5000, n as u64).rng());
        let flat = vec![1.0 / (d as f64).sqrt(); d];
        for (name, y) in [("e1", e1), ("random", random), ("flat", flat)] {
            let c = l1_expectation_check(&y, 10_000, RngSeed::new(5001, n as u64)).unwrap();
            ensure(c.lower_bound_holds, || {
                format!("n={n} y={name}: mean {} < {}", c.stats.mean, c.lower_bound)
            })?;
            parts.push(format!("n={n}/{name} {:.2}≥{:.2}", c.stats.mean, c.lower_bound));
        }
    }
    Ok(parts.join(", "))
}

fn scaling_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::ScalingCun, vec![5, 10, 20, 40], 20, 20_240_601);
    cfg.optimizer.restarts = 64;
    cfg
}

fn c6_scaling() -> Outcome {
    let cfg = scaling_config();
    let out = run(&cfg).map_err(|e| e.to_string())?;
    for r in out.records.iter().filter(|r| r.estimator == "min_area") {
        let cap = 4.0 * (2.0 * r.n as f64).sqrt();
        ensure(r.value <= cap, || format!("n={} #{}: {} > 4√(2n)", r.n, r.sample_index, r.value))?;
        let inv_j = out
            .records
            .iter()
            .find(|q| q.n == r.n && q.sample_index == r.sample_index && q.estimator == "inv_j_norm")
            .unwrap()
            .value;
        ensure(r.value >= inv_j - 1e-9, || format!("n={} #{}: {} < 1/‖J‖ {inv_j}", r.n, r.sample_index, r.value))?;
    }
    let exponent = out.summary["fit"]["exponent"].as_f64().ok_or("summary has no fit")?;
    let r_squared = out.summary["fit"]["r_squared"].as_f64().ok_or("summary has no fit")?;
    ensure((0.35..=0.65).contains(&exponent) && r_squared >= 0.9, || {
        format!("exponent {exponent:.3}, r² {r_squared:.3}")
    })?;
    Ok(format!("exponent {exponent:.3}, r² {r_squared:.4}, all 80 samples inside [1/‖J‖, 4√(2n)]"))
}

fn c7_rate_divergence() -> Outcome {
    let mut cfg = ExperimentConfig::new(Experiment::ScalingSandwich, vec![25, 50, 100], 200, 7_777);
    cfg.optimizer.restarts = SANDWICH_RESTARTS;
    let out = run(&cfg).map_err(|e| e.to_string())?;
    let spread = out.summary["constant_spread"].as_f64().unwrap();
    let rows = out.summary["rows"].as_array().unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r["ratio"].as_f64().unwrap()).collect();
    let constants: Vec<f64> = rows.iter().map(|r| r["constant"].as_f64().unwrap()).collect();
    ensure(spread <= 2.0, || format!("constant spread ×{spread:.3}"))?;
    ensure(ratios.windows(2).all(|w| w[1] > w[0]), || format!("ratios {ratios:?}"))?;
    Ok(format!(
        "constants {:.3?} (spread ×{spread:.3}), ratios {:.3?} strictly increasing",
        constants, ratios
    ))
}

/// Restarts for the area minimizations in criterion 7 (600 samples up to
/// n = 100).
const SANDWICH_RESTARTS: usize = 32;

fn c8_rare_event() -> Outcome {
    let mut cfg = ExperimentConfig::new(Experiment::RareEvent, vec![20], 200, 8_888);
    cfg.lambda = 0.05;
    let out = run(&cfg).map_err(|e| e.to_string())?;
    let row = &out.summary["rows"][0];
    let events = row["events"].as_u64().unwrap();
    let min_proxy = out
        .records
        .iter()
        .filter(|r| r.estimator == "diam_proxy")
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    ensure(events == 0, || format!("{events} events"))?;
    Ok(format!("0/200 events at threshold {:.4}; smallest proxy minimum {min_proxy:.3}", 0.05 * 20f64.sqrt()))
}

fn c9_certificates() -> Outcome {
    let n = 16;
    let eps = 0.45;
    let lambdas = [0.2, 0.24, 0.3, 0.5];
    let nets: Vec<CertificationNet> = lambdas
        .iter()
        .map(|&l| CertificationNet::build(n, l, eps).unwrap())
        .collect();
    let (mut certified, mut refused) = (0, 0);
    for s in 0..20u64 {
        let o = haar_orthogonal(2 * n, RngSeed::new(9000 + s, 0)).unwrap();
        let a = rotated_complex_structure(&o);
        let proxy = minimize_diam_proxy(&o, &OptimizerConfig { rng: RngSeed::new(9000 + s, 1), ..Default::default() })
            .unwrap()
            .best_value;
        for net in &nets {
            let cert = net.scan(&a, net.lambda).unwrap();
            if !cert.certified {
                refused += 1;
                continue;
            }
            certified += 1;
            ensure(proxy >= cert.implied_bound, || {
                format!("sample {s} λ={}: proxy {proxy} < λ√n {}", net.lambda, cert.implied_bound)
            })?;
            let mut rng = RngSeed::new(9100 + s, (net.lambda * 100.0) as u64).rng();
            for _ in 0..1000 {
                let line = ComplexLine::new(random_unit_vector(2 * n, &mut rng)).unwrap();
                let d = project_generators(&o, &line).unwrap().diameter();
                ensure(d > cert.implied_bound, || {
                    format!("sample {s} λ={}: diameter {d} ≤ {}", net.lambda, cert.implied_bound)
                })?;
            }
        }
    }
    let sizes: Vec<usize> = nets.iter().map(|c| c.net.len()).collect();
    Ok(format!(
        "λ∈{lambdas:?}, ε={eps}, net sizes {sizes:?}: {certified} certified (all sound), {refused} not certified"
    ))
}

fn c10_gaussian_tails() -> Outcome {
    let mut parts = Vec::new();
    for eps in [0.3, 0.5] {
        for k in [50usize, 100] {
            let bound = chi_square_tail(eps, k).unwrap();
            let mc = chi_square_tail_monte_carlo(eps, k, 1_000_000, RngSeed::new(10_000, k as u64)).unwrap();
            ensure(mc <= bound, || format!("ε={eps} k={k}: MC {mc} > bound {bound}"))?;
            parts.push(format!("({eps},{k}) {mc:.2e}≤{bound:.2e}"));
        }
    }
    let (alphas, ks) = linf_tail_grid();
    let cells = gaussian_linf_validity(&alphas, &ks, 200_000, RngSeed::new(10_001, 0)).unwrap();
    let lower = cells.iter().filter(|c| c.lower_holds).count();
    let upper = cells.iter().filter(|c| c.upper_holds).count();
    Ok(format!(
        "χ² tails {}; ℓ∞ grid {} cells: lower-bound reading holds on {lower}, upper-bound reading on {upper}",
        parts.join(" "),
        cells.len()
    ))
}

fn c11_determinism() -> Outcome {
    let cfg = scaling_config();
    let bytes = |cfg: &ExperimentConfig| -> Result<Vec<u8>, String> {
        let out = run(cfg).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        emit(&out.records, Format::Csv, &mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let a = bytes(&cfg)?;
    let b = bytes(&cfg)?;
    ensure(a == b, || "CSV outputs differ".into())?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 11] = [
        (1, "zonogon oracle equivalence", Duration::from_secs(10), c1_zonogon_oracle),
        (2, "net exactness", Duration::from_secs(5), c2_net_exactness),
        (3, "covering property", Duration::from_secs(30), c3_covering),
        (4, "pushforward identity and law", Duration::from_secs(60), c4_pushforward),
        (5, "l1 expectation lower bound", Duration::from_secs(60), c5_l1_expectation),
        (6, "min-area scaling", Duration::from_secs(15 * 60), c6_scaling),
        (7, "rate divergence", Duration::from_secs(10 * 60), c7_rate_divergence),
        (8, "rare event", Duration::from_secs(5 * 60), c8_rare_event),
        (9, "certificate soundness", Duration::from_secs(10 * 60), c9_certificates),
        (10, "gaussian tail oracles", Duration::from_secs(60), c10_gaussian_tails),
        (11, "determinism", Duration::from_secs(30 * 60), c11_determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, limit, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; runtime {elapsed:.1?} over the {limit:?} limit"))
            }
        });
        match result {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail} [{elapsed:.1?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {id:>2} {name}: {detail} [{elapsed:.1?}]");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
