//! The law of `x = OᵀJO y` for Haar `O`, norm statistics of such vectors, and
//! Gaussian tail estimates.
//!
//! `⟨OᵀJOy, y⟩ = ⟨JOy, Oy⟩ = 0` because `J` is skew, and the law of `x` is
//! invariant under rotations fixing `y`, so it is the uniform measure on the
//! great subsphere `S_y = S^{2n-1} ∩ y⊥`. [`direct_sample`] draws from that
//! measure without any rotation and serves as the reference sampler.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::linalg::{
    dot, make_complex_structure, norm1, norm2, norm_inf, normalize, random_unit_vector,
    ReflectorProduct, RngSeed,
};
use crate::stats::{fit_line, quantile_sorted, sorted, Moments};

const UNIT_TOL: f64 = 1e-12;

/// Quantile levels reported in [`NormStats`].
pub const REPORTED_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSource {
    Pushforward,
    Direct,
}

/// A point `x` of the subsphere orthogonal to the pole `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsphereSample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub source: SampleSource,
}

fn check_pole(y: &[f64]) -> Result<()> {
    let norm = norm2(y);
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { norm });
    }
    Ok(())
}

/// `OᵀJO y` for a freshly drawn Haar `O ∈ O(2n)`; `y` must be a unit vector
/// of even length.
pub fn pushforward_sample<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Result<SubsphereSample> {
    check_pole(y)?;
    if y.len() % 2 != 0 {
        return Err(Error::OddDimension(y.len()));
    }
    let x = pushforward_point(y, rng)?;
    Ok(SubsphereSample {
        y: y.to_vec(),
        x,
        source: SampleSource::Pushforward,
    })
}

fn pushforward_point<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let o = ReflectorProduct::sample(y.len(), rng)?;
    let j = make_complex_structure(y.len() / 2)?;
    let mut oy = y.to_vec();
    o.apply_in_place(&mut oy);
    let mut x = j.apply(&oy);
    o.apply_transpose_in_place(&mut x);
    Ok(x)
}

/// Uniform point of `S^{d-1} ∩ y⊥`: a Gaussian vector with its `y` component
/// removed (twice, for rounding), then normalized. Any dimension `d ≥ 2`.
pub fn direct_sample<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Result<SubsphereSample> {
    check_pole(y)?;
    if y.len() < 2 {
        return Err(Error::InvalidParameter("subsphere needs dimension >= 2".into()));
    }
    let x = direct_point(y, rng);
    Ok(SubsphereSample {
        y: y.to_vec(),
        x,
        source: SampleSource::Direct,
    })
}

fn direct_point<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..y.len()).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            let c = dot(&g, y);
            for (gi, yi) in g.iter_mut().zip(y) {
                *gi -= c * yi;
            }
        }
        if normalize(&mut g) > 1e-150 {
            return g;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    Linf,
}

impl NormKind {
    pub fn name(&self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::Linf => "linf",
        }
    }
}

/// Summary of a sample of norms.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub n_samples: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `(p, value)` for each level in [`REPORTED_QUANTILES`].
    pub quantiles: Vec<(f64, f64)>,
    pub norm: NormKind,
}

impl NormStats {
    pub fn from_values(values: &[f64], norm: NormKind) -> Self {
        assert!(!values.is_empty(), "statistics of an empty sample");
        let m: Moments = values.iter().copied().collect();
        let s = sorted(values);
        Self {
            n_samples: values.len(),
            mean: m.mean().clamp(m.min, m.max),
            std: m.std(),
            min: m.min,
            max: m.max,
            quantiles: REPORTED_QUANTILES
                .iter()
                .map(|&p| (p, quantile_sorted(&s, p)))
                .collect(),
            norm,
        }
    }
}

/// Draws `count` values `f(rng)` in parallel, one RNG substream per chunk, so
/// the result depends only on `seed` and `count`.
fn parallel_draws<F>(count: usize, seed: RngSeed, f: F) -> Vec<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    const CHUNK: usize = 1024;
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = seed.child(c as u64).rng();
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// `E|u₁|` for `u` uniform on `S^{m-1}`, i.e. `Γ(m/2) / (√π Γ((m+1)/2))`.
///
/// Uses `r_m = Γ(m/2)/Γ((m+1)/2)` with `r_1 = √π` and
/// `r_m = 2 / ((m - 1) r_{m-1})`.
pub fn sphere_abs_coordinate_mean(m: usize) -> f64 {
    assert!(m >= 1);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut r = sqrt_pi;
    for j in 2..=m {
        r = 2.0 / ((j - 1) as f64 * r);
    }
    r / sqrt_pi
}

/// Monte Carlo estimate of `E‖x‖₁` under the pushforward law, with the
/// reference values it is compared to.
#[derive(Debug, Clone, PartialEq)]
pub struct L1ExpectationCheck {
    pub half_dim: usize,
    pub stats: NormStats,
    /// `½√n`.
    pub lower_bound: f64,
    /// `(1/√(2n-1)) √(2/π) Σ_j √(1 - y_j²)`.
    pub closed_form: f64,
    /// `E|u₁|_{S^{2n-2}} Σ_j √(1 - y_j²)`, the exact mean.
    pub exact_mean: f64,
    pub lower_bound_holds: bool,
    /// Sample mean within 5% of `closed_form`.
    pub closed_form_close: bool,
}

/// Samples `‖OᵀJOy‖₁` `n_samples` times (at least 1000).
pub fn l1_expectation_check(y: &[f64], n_samples: usize, seed: RngSeed) -> Result<L1ExpectationCheck> {
    check_pole(y)?;
    if y.len() % 2 != 0 {
        return Err(Error::OddDimension(y.len()));
    }
    if n_samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "n_samples={n_samples} below the minimum of 1000"
        )));
    }
    let values = parallel_draws(n_samples, seed, |rng| {
        norm1(&pushforward_point(y, rng).expect("pole validated"))
    });
    let stats = NormStats::from_values(&values, NormKind::L1);
    let n = y.len() / 2;
    let dim = y.len() as f64;
    let spread: f64 = y.iter().map(|v| (1.0 - v * v).max(0.0).sqrt()).sum();
    let closed_form = (2.0 / std::f64::consts::PI).sqrt() / (dim - 1.0).sqrt() * spread;
    let exact_mean = sphere_abs_coordinate_mean(y.len() - 1) * spread;
    let lower_bound = 0.5 * (n as f64).sqrt();
    Ok(L1ExpectationCheck {
        half_dim: n,
        lower_bound,
        closed_form,
        exact_mean,
        lower_bound_holds: stats.mean >= lower_bound,
        closed_form_close: (stats.mean - closed_form).abs() <= 0.05 * closed_form,
        stats,
    })
}

/// Statistics of `‖OᵀJO e₁‖_∞` over Haar `O ∈ O(2n)`.
pub fn linf_column_stats(n: usize, n_samples: usize, seed: RngSeed) -> Result<NormStats> {
    Ok(NormStats::from_values(
        &linf_column_values(n, n_samples, seed)?,
        NormKind::Linf,
    ))
}

/// The raw samples behind [`linf_column_stats`].
pub fn linf_column_values(n: usize, n_samples: usize, seed: RngSeed) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n={n} must be at least 2")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let mut e1 = vec![0.0; 2 * n];
    e1[0] = 1.0;
    Ok(parallel_draws(n_samples, seed, |rng| {
        norm_inf(&pushforward_point(&e1, rng).expect("valid pole"))
    }))
}

/// `[max(0, 1 - √(2/π) e^{-α²/2} / α)]^k`.
///
/// The bracket is negative for small `α`; it is clamped at zero so the value
/// stays in `[0, 1]`.
pub fn gaussian_linf_tail(alpha: f64, k: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha={alpha} must be positive")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let base = 1.0 - (2.0 / std::f64::consts::PI).sqrt() * (-alpha * alpha / 2.0).exp() / alpha;
    Ok(base.max(0.0).powi(k as i32))
}

/// `P(‖g‖_∞ ≤ α) = erf(α/√2)^k` for a standard Gaussian `g ∈ ℝ^k`.
pub fn gaussian_linf_cdf(alpha: f64, k: usize) -> f64 {
    erf(alpha / std::f64::consts::SQRT_2).powi(k as i32)
}

/// One cell of the `(α, k)` validity table for [`gaussian_linf_tail`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfTailCell {
    pub alpha: f64,
    pub k: usize,
    pub bound: f64,
    pub exact: f64,
    pub monte_carlo: f64,
    /// `monte_carlo ≤ bound`: the inequality as an upper bound on
    /// `P(‖g‖_∞ ≤ α)`.
    pub upper_holds: bool,
    /// `exact ≥ bound`: the inequality read as a lower bound.
    pub lower_holds: bool,
}

/// Grid `α ∈ {0.1, 0.2, …, 3.0}`, `k ∈ {1, 2, 4, …, 64}`.
pub fn linf_tail_grid() -> (Vec<f64>, Vec<usize>) {
    let alphas = (1..=30).map(|i| i as f64 / 10.0).collect();
    let ks = (0..=6).map(|p| 1usize << p).collect();
    (alphas, ks)
}

/// Evaluates the bound, the exact probability and a Monte Carlo estimate on
/// every grid cell. One draw of 64 Gaussians serves every `(α, k)`.
pub fn gaussian_linf_validity(
    alphas: &[f64],
    ks: &[usize],
    draws: usize,
    seed: RngSeed,
) -> Result<Vec<LinfTailCell>> {
    let kmax = ks.iter().copied().max().unwrap_or(0);
    if kmax == 0 || alphas.is_empty() || draws == 0 {
        return Err(Error::InvalidParameter("empty validity grid".into()));
    }
    let cells = alphas.len() * ks.len();
    const CHUNK: usize = 4096;
    let counts = (0..draws.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(c as u64).rng();
            let mut counts = vec![0u64; cells];
            let mut prefix_max = vec![0.0; ks.len()];
            for _ in 0..CHUNK.min(draws - c * CHUNK) {
                let mut m: f64 = 0.0;
                let mut next = 0;
                for i in 1..=kmax {
                    m = m.max(rng.sample::<f64, _>(StandardNormal).abs());
                    while next < ks.len() && ks[next] == i {
                        prefix_max[next] = m;
                        next += 1;
                    }
                }
                for (kj, &pm) in prefix_max.iter().enumerate() {
                    for (ai, &a) in alphas.iter().enumerate() {
                        if pm <= a {
                            counts[ai * ks.len() + kj] += 1;
                        }
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut sorted_ks: Vec<usize> = ks.to_vec();
    sorted_ks.sort_unstable();
    if sorted_ks != ks {
        return Err(Error::InvalidParameter("k grid must be increasing".into()));
    }
    let mut out = Vec::with_capacity(cells);
    for (ai, &alpha) in alphas.iter().enumerate() {
        for (kj, &k) in ks.iter().enumerate() {
            let bound = gaussian_linf_tail(alpha, k)?;
            let exact = gaussian_linf_cdf(alpha, k);
            let monte_carlo = counts[ai * ks.len() + kj] as f64 / draws as f64;
            out.push(LinfTailCell {
                alpha,
                k,
                bound,
                exact,
                monte_carlo,
                upper_holds: monte_carlo <= bound,
                lower_holds: exact >= bound,
            });
        }
    }
    Ok(out)
}

/// `exp(-ε²k/4)`, bounding `P(‖g‖₂² ≥ k/(1 - ε))` for `g ∈ ℝ^k` standard.
pub fn chi_square_tail(epsilon: f64, k: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon={epsilon} outside (0, 1)")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok((-epsilon * epsilon * k as f64 / 4.0).exp())
}

/// Monte Carlo frequency of `‖g‖₂² ≥ k/(1 - ε)`, drawing `‖g‖₂²` directly
/// from the χ²_k law.
pub fn chi_square_tail_monte_carlo(epsilon: f64, k: usize, draws: usize, seed: RngSeed) -> Result<f64> {
    chi_square_tail(epsilon, k)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be positive".into()));
    }
    let law = ChiSquared::new(k as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let level = k as f64 / (1.0 - epsilon);
    let hits = parallel_draws(draws, seed, |rng| (law.sample(rng) >= level) as u8 as f64);
    Ok(hits.iter().sum::<f64>() / draws as f64)
}

/// Functions whose concentration on the sphere is tabulated by
/// [`lipschitz_tail_empirical`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionId {
    /// `x ↦ ‖x‖₁` on `S^{2n-1}`, Lipschitz with constant `√(2n)`.
    L1Norm,
}

impl FunctionId {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionId::L1Norm => "l1_norm",
        }
    }

    pub fn lipschitz_constant(&self, n: usize) -> f64 {
        match self {
            FunctionId::L1Norm => ((2 * n) as f64).sqrt(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FunctionId::L1Norm => norm1(x),
        }
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1_norm" => Ok(FunctionId::L1Norm),
            other => Err(Error::UnknownFunction(other.to_string())),
        }
    }
}

/// Empirical deviation probabilities `P(|f - mean| ≥ t)` of `f` on
/// `S^{2n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzTail {
    pub function: FunctionId,
    pub n: usize,
    pub n_samples: usize,
    pub mean: f64,
    /// `(t, probability)`, in the order of the requested grid.
    pub rows: Vec<(f64, f64)>,
    /// Slope of `ln P` against `t²` over rows with `0 < P < 1`; `None` when
    /// fewer than two such rows exist.
    pub log_slope: Option<f64>,
}

pub fn lipschitz_tail_empirical(
    function: FunctionId,
    n: usize,
    t_grid: &[f64],
    n_samples: usize,
    seed: RngSeed,
) -> Result<LipschitzTail> {
    if n == 0 {
        return Err(Error::ZeroHalfDimension);
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let values = parallel_draws(n_samples, seed, |rng| {
        function.eval(&random_unit_vector(2 * n, rng))
    });
    let m: Moments = values.iter().copied().collect();
    let mean = m.mean();
    let rows: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| {
            let hits = values.iter().filter(|&&v| (v - mean).abs() >= t).count();
            (t, hits as f64 / n_samples as f64)
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|(_, p)| *p > 0.0 && *p < 1.0)
        .map(|&(t, p)| (t * t, p.ln()))
        .unzip();
    let log_slope = fit_line(&xs, &ys).ok().map(|f| f.slope);
    Ok(LipschitzTail {
        function,
        n,
        n_samples,
        mean,
        rows,
        log_slope,
    })
}
