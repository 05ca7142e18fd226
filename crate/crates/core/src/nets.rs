//! ε-nets of cross-polytopes and of the slices `G_θⁿ = S^{n-1} ∩ θ√n B₁ⁿ`,
//! and the net-based certificate that no complex line carries a small shadow.
//!
//! The integer points `F_{k,n} = ℤⁿ ∩ kB₁ⁿ` form a `√k`-net of `kB₁ⁿ` with at
//! most `(2e(1 + n/k))^k` points. Scaling by `θ√n / k` nets `θ√n B₁ⁿ`; snapping
//! each scaled point to its nearest point of `G_θⁿ` then gives a net of the
//! slice with twice the radius.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, normalize, rotated_complex_structure, Matrix, RotationMatrix};

/// Upper limit on `(2e(1 + n/k))^k` accepted by [`lattice_net`].
pub const NET_BUDGET: f64 = 1e7;

/// Upper limit on `n · (2e(1 + n/k))^k`, the stored coordinate count.
pub const NET_COORD_BUDGET: f64 = 1e8;

/// `(2e(1 + n/k))^k`.
pub fn cardinality_bound(k: usize, n: usize) -> f64 {
    let (k, n) = (k as f64, n as f64);
    (2.0 * std::f64::consts::E * (1.0 + n / k)).powf(k)
}

/// All integer points of the ℓ₁ ball of radius `k` in `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeNet {
    n: usize,
    k: usize,
    coords: Vec<i16>,
}

impl LatticeNet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i16] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[i16]> {
        self.coords.chunks_exact(self.n)
    }

    pub fn covering_radius_bound(&self) -> f64 {
        (self.k as f64).sqrt()
    }

    pub fn cardinality_bound(&self) -> f64 {
        cardinality_bound(self.k, self.n)
    }

    /// The points as real vectors multiplied by `scale`.
    pub fn scaled_points(&self, scale: f64) -> Vec<Vec<f64>> {
        self.points()
            .map(|p| p.iter().map(|&c| scale * c as f64).collect())
            .collect()
    }
}

/// Enumerates `ℤⁿ ∩ kB₁ⁿ`, refusing when the cardinality bound exceeds
/// [`NET_BUDGET`] or its storage would exceed [`NET_COORD_BUDGET`].
pub fn lattice_net(k: usize, n: usize) -> Result<LatticeNet> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "lattice net needs k, n >= 1 (got k={k}, n={n})"
        )));
    }
    if k > i16::MAX as usize {
        return Err(Error::InvalidParameter(format!("k={k} does not fit in 16 bits")));
    }
    let bound = cardinality_bound(k, n);
    if !(bound <= NET_BUDGET) {
        return Err(Error::BudgetExceeded {
            requested: bound,
            cap: NET_BUDGET,
        });
    }
    if !(bound * n as f64 <= NET_COORD_BUDGET) {
        return Err(Error::BudgetExceeded {
            requested: bound * n as f64,
            cap: NET_COORD_BUDGET,
        });
    }
    let mut coords = Vec::new();
    let mut current = vec![0i16; n];
    enumerate(&mut current, 0, k as i16, &mut coords);
    Ok(LatticeNet { n, k, coords })
}

fn enumerate(current: &mut [i16], i: usize, budget: i16, out: &mut Vec<i16>) {
    if i == current.len() {
        out.extend_from_slice(current);
        return;
    }
    for v in -budget..=budget {
        current[i] = v;
        enumerate(current, i + 1, budget - v.abs(), out);
    }
    current[i] = 0;
}

/// Uniform point of `kB₁ⁿ`: exponential magnitudes normalized by a sum that
/// includes one extra exponential, random signs, scaled by `k`.
pub fn sample_l1_ball<R: Rng + ?Sized>(n: usize, k: f64, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e[..n]
        .iter()
        .map(|x| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * k * x / total
        })
        .collect()
}

/// Uniform point of `G_θⁿ` by rejection from the sphere; fails after
/// `max_attempts` rejections.
pub fn sample_slice<R: Rng + ?Sized>(
    n: usize,
    theta: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let limit = theta * (n as f64).sqrt();
    for _ in 0..max_attempts {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) == 0.0 {
            continue;
        }
        if norm1(&v) <= limit {
            return Ok(v);
        }
    }
    Err(Error::SamplerStalled {
        attempts: max_attempts,
    })
}

/// Largest observed distance from a sampled target point to its nearest net
/// point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringReport {
    pub trials: usize,
    pub max_gap: f64,
    pub radius: f64,
}

impl CoveringReport {
    pub fn holds(&self) -> bool {
        self.max_gap <= self.radius
    }
}

/// Distance from `x` to the closest point of `net`.
pub fn nearest_distance(net: &[Vec<f64>], x: &[f64]) -> f64 {
    net.iter()
        .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Samples `trials` target points with `sampler` and records the worst
/// nearest-net-point distance.
pub fn covering_check<R, S>(
    net: &[Vec<f64>],
    radius: f64,
    mut sampler: S,
    trials: usize,
    rng: &mut R,
) -> Result<CoveringReport>
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> Result<Vec<f64>>,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if net.is_empty() {
        return Err(Error::InvalidParameter("net is empty".into()));
    }
    let mut max_gap: f64 = 0.0;
    for _ in 0..trials {
        let x = sampler(rng)?;
        max_gap = max_gap.max(nearest_distance(net, &x));
    }
    Ok(CoveringReport {
        trials,
        max_gap,
        radius,
    })
}

/// Nearest point of `G_θⁿ` to `p`, or `None` when the slice is empty
/// (`θ√n < 1`).
///
/// The closest unit vector with `‖x‖₁ ≤ r` maximizes `⟨p, x⟩`; it is the
/// normalized soft-thresholding `S_τ(p) / |S_τ(p)|` with the smallest `τ ≥ 0`
/// meeting the ℓ₁ constraint. `p = 0` is equidistant from every point and maps
/// to `e₀`.
pub fn nearest_slice_point(p: &[f64], theta: f64) -> Option<Vec<f64>> {
    let n = p.len();
    let r = theta * (n as f64).sqrt();
    if n == 0 || r < 1.0 {
        return None;
    }
    let top = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return Some(e);
    }
    let shrink = |tau: f64| -> Vec<f64> {
        p.iter()
            .map(|&x| x.signum() * (x.abs() - tau).max(0.0))
            .collect()
    };
    let ratio = |v: &[f64]| norm1(v) / norm2(v);

    let mut x = shrink(0.0);
    if ratio(&x) > r {
        // The ratio is nonincreasing in τ and reaches 1 as τ approaches the
        // largest |p_i|.
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = shrink(mid);
            if norm2(&v) > 0.0 && ratio(&v) <= r {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * top {
                break;
            }
        }
        x = shrink(hi);
        if norm2(&x) == 0.0 {
            // Only the ties at the top survive; keep one of them.
            let i = p.iter().position(|v| v.abs() == top).unwrap_or(0);
            x = vec![0.0; n];
            x[i] = p[i].signum();
        }
    }
    normalize(&mut x);
    if norm1(&x) > r {
        // Guard against rounding on the boundary: pull toward the sparsest
        // feasible vector until the constraint holds.
        let i = p
            .iter()
            .enumerate()
            .fold(0, |b, (j, v)| if v.abs() > p[b].abs() { j } else { b });
        let mut e = vec![0.0; n];
        e[i] = p[i].signum();
        for t in [1e-12, 1e-9, 1e-6, 1e-3, 1.0] {
            let mut y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            normalize(&mut y);
            if norm1(&y) <= r {
                return Some(y);
            }
        }
        return Some(e);
    }
    Some(x)
}

/// `k = ⌊εn / (8 ln(1/ε))⌋`.
pub fn slice_net_k(epsilon: f64, n: usize) -> usize {
    (epsilon * n as f64 / (8.0 * (1.0 / epsilon).ln())).floor() as usize
}

/// Whether `8 ln(n) / n < ε < 1/2`, the range in which `exp(εn)` bounds the
/// lattice count.
pub fn in_counting_window(epsilon: f64, n: usize) -> bool {
    let n_f = n as f64;
    8.0 * n_f.ln() / n_f < epsilon && epsilon < 0.5
}

/// Net of `G_θⁿ` obtained by snapping the scaled lattice `F_{k,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceNet {
    pub theta: f64,
    pub epsilon: f64,
    pub n: usize,
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    /// Number of lattice points before snapping and deduplication.
    pub lattice_count: usize,
    /// Covering radius of the scaled lattice for `θ√n B₁ⁿ`: `θ√(n/k)`.
    pub lattice_radius: f64,
    /// Guaranteed radius `8θ√(ln(1/ε)/ε)`; it dominates `2θ√(n/k)`.
    pub net_radius: f64,
}

impl SliceNet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Radius actually achieved by construction, `2θ√(n/k)`.
    pub fn snapped_radius(&self) -> f64 {
        2.0 * self.lattice_radius
    }
}

/// Builds a net of `G_θⁿ`.
///
/// Requires `θ ∈ (0, 1)`, `ε ∈ (0, 1/2)` and `k ≥ 1`. Each scaled lattice
/// point whose nearest slice point lies within the lattice radius contributes
/// that nearest point; duplicates are removed. When `θ√n < 1` the slice is
/// empty and so is the net.
pub fn slice_net(theta: f64, epsilon: f64, n: usize) -> Result<SliceNet> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta={theta} outside (0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon={epsilon} outside (0, 1/2)"
        )));
    }
    let k = slice_net_k(epsilon, n);
    if k == 0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon={epsilon} gives k=0 for n={n}"
        )));
    }
    let lattice = lattice_net(k, n)?;
    let n_f = n as f64;
    let scale = theta * n_f.sqrt() / k as f64;
    let lattice_radius = theta * (n_f / k as f64).sqrt();
    let net_radius = 8.0 * theta * ((1.0 / epsilon).ln() / epsilon).sqrt();

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for p in lattice.points() {
        let q: Vec<f64> = p.iter().map(|&c| scale * c as f64).collect();
        let Some(x) = nearest_slice_point(&q, theta) else {
            break;
        };
        let d: f64 = q.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if d <= lattice_radius {
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                points.push(x);
            }
        }
    }
    Ok(SliceNet {
        theta,
        epsilon,
        n,
        k,
        points,
        lattice_count: lattice.len(),
        lattice_radius,
        net_radius,
    })
}

/// Outcome of scanning a net for points `y` with small `‖Ay‖₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub certified: bool,
    /// Lowest-index net point with `‖Ay‖₁ ≤ (λ + √2 δ)√n`.
    pub violating_point: Option<Vec<f64>>,
    /// `λ√n`; when certified, every complex line has shadow diameter above it.
    pub implied_bound: f64,
    pub net_size: usize,
    pub threshold: f64,
}

/// A δ-net of `G_λ = S^{2n-1} ∩ λ√n B₁^{2n}`, reusable for scans at any
/// `λ' ≤ λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificationNet {
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub half_dim: usize,
    pub net: SliceNet,
}

impl CertificationNet {
    /// `δ = 8λ√(ln(1/ε)/ε)`. In dimension `2n` the slice `G_λ` is `G_θ` with
    /// `θ = λ/√2`, whose net radius `8θ√(ln(1/ε)/ε)` is below `δ`.
    pub fn build(half_dim: usize, lambda: f64, epsilon: f64) -> Result<Self> {
        if half_dim == 0 {
            return Err(Error::ZeroHalfDimension);
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda={lambda} must be positive")));
        }
        let theta = lambda / std::f64::consts::SQRT_2;
        if theta >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda={lambda} too large: G_lambda is the whole sphere"
            )));
        }
        let net = slice_net(theta, epsilon, 2 * half_dim)?;
        let delta = 8.0 * lambda * ((1.0 / epsilon).ln() / epsilon).sqrt();
        Ok(Self {
            lambda,
            epsilon,
            delta,
            half_dim,
            net,
        })
    }

    /// Scans every net point against the threshold `(λ' + √2 δ)√n`.
    ///
    /// `lambda` may be any value in `(0, self.lambda]`: the net also covers the
    /// smaller slice with the same radius.
    pub fn scan(&self, a: &Matrix, lambda: f64) -> Result<Certificate> {
        if a.dim() != 2 * self.half_dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.half_dim,
                got: a.dim(),
            });
        }
        if !(lambda > 0.0 && lambda <= self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "scan lambda={lambda} must lie in (0, {}]",
                self.lambda
            )));
        }
        let sqrt_n = (self.half_dim as f64).sqrt();
        let threshold = (lambda + std::f64::consts::SQRT_2 * self.delta) * sqrt_n;
        let hit = self
            .net
            .points
            .par_iter()
            .position_first(|y| norm1(&a.matvec(y)) <= threshold);
        Ok(Certificate {
            lambda,
            epsilon: self.epsilon,
            delta: self.delta,
            certified: hit.is_none(),
            violating_point: hit.map(|i| self.net.points[i].clone()),
            implied_bound: lambda * sqrt_n,
            net_size: self.net.len(),
            threshold,
        })
    }
}

/// Tries to certify that every complex line carries a shadow of `OQ` with
/// diameter above `λ√n`.
///
/// `certified = true` means no point `y` of a δ-net of `G_λ` has
/// `‖OᵀJO y‖₁ ≤ (λ + √2 δ)√n`. A unit vector `z` with `max(‖z‖₁, ‖OᵀJOz‖₁) ≤ λ√n`
/// would lie in `G_λ` and force its nearest net point below that threshold,
/// so certification rules out such `z`, and the shadow diameter on
/// `span{Oz', JOz'}` is at least `2·max(‖z‖₁, ‖OᵀJOz‖₁)`.
pub fn certify_min_diameter(o: &RotationMatrix, lambda: f64, epsilon: f64) -> Result<Certificate> {
    let net = CertificationNet::build(o.half_dim(), lambda, epsilon)?;
    net.scan(&rotated_complex_structure(o), lambda)
}

/// Header line of the text net format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetHeader {
    pub k: usize,
    pub n: usize,
    pub radius: f64,
    pub count: usize,
}

fn write_header<W: Write>(out: &mut W, h: &NetHeader) -> std::io::Result<()> {
    writeln!(
        out,
        "# net k={} n={} radius={} count={}",
        h.k,
        h.n,
        format_decimal(h.radius),
        h.count
    )
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_decimal(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_lattice_net<W: Write>(out: &mut W, net: &LatticeNet) -> std::io::Result<()> {
    write_header(
        out,
        &NetHeader {
            k: net.k,
            n: net.n,
            radius: net.covering_radius_bound(),
            count: net.len(),
        },
    )?;
    for p in net.points() {
        let line: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_slice_net<W: Write>(out: &mut W, net: &SliceNet) -> std::io::Result<()> {
    write_header(
        out,
        &NetHeader {
            k: net.k,
            n: net.n,
            radius: net.net_radius,
            count: net.len(),
        },
    )?;
    for p in &net.points {
        let line: Vec<String> = p.iter().map(|&c| format_decimal(c)).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn bad_format(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(format!("malformed net file: {}", msg.into()))
}

/// Parses either net format; integer coordinates come back as exact floats.
pub fn read_net<R: BufRead>(input: R) -> Result<(NetHeader, Vec<Vec<f64>>)> {
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| bad_format("empty input"))?
        .map_err(|e| bad_format(e.to_string()))?;
    let rest = header_line
        .strip_prefix("# net ")
        .ok_or_else(|| bad_format("missing header"))?;
    let mut k = None;
    let mut n = None;
    let mut radius = None;
    let mut count = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad_format(format!("bad header field `{field}`")))?;
        let bad = |_| bad_format(format!("bad value in `{field}`"));
        match key {
            "k" => k = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "n" => n = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "radius" => radius = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "count" => count = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(bad_format(format!("unknown header key `{key}`"))),
        }
    }
    let header = NetHeader {
        k: k.ok_or_else(|| bad_format("missing k"))?,
        n: n.ok_or_else(|| bad_format("missing n"))?,
        radius: radius.ok_or_else(|| bad_format("missing radius"))?,
        count: count.ok_or_else(|| bad_format("missing count"))?,
    };
    let mut points = Vec::with_capacity(header.count);
    for line in lines {
        let line = line.map_err(|e| bad_format(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let p = line
            .split(' ')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad_format(e.to_string()))?;
        if p.len() != header.n {
            return Err(bad_format(format!("point of length {} in dimension {}", p.len(), header.n)));
        }
        points.push(p);
    }
    if points.len() != header.count {
        return Err(bad_format(format!(
            "header promises {} points, found {}",
            header.count,
            points.len()
        )));
    }
    Ok((header, points))
}
