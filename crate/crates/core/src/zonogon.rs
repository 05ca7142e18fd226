//! Planar shadows of the cube `Q = [-1, 1]^{2n}`.
//!
//! The orthogonal projection of `OQ` onto a complex line `L = span{e, Je}`,
//! written in the basis `(e, Je)`, is the zonogon `Σ_i [-g_i, g_i]` with
//! generators `g_i = ((Oᵀe)_i, (OᵀJe)_i)`. Area, diameter and support are all
//! computed from the generator list; [`Zonogon::hull_oracle`] recomputes area and
//! diameter by brute-force sign enumeration for cross-checking.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{dot, make_complex_structure, norm2, RotationMatrix};

/// Generators shorter than this are dropped before angular sorting.
pub const ZERO_GENERATOR_TOL: f64 = 1e-14;

/// Largest generator count accepted by the sign-enumeration oracle.
pub const HULL_ORACLE_MAX_GENERATORS: usize = 14;

const UNIT_TOL: f64 = 1e-12;

/// A complex line `span{e, Je}` carried as its orthonormal basis pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexLine {
    e: Vec<f64>,
    je: Vec<f64>,
}

impl ComplexLine {
    /// Line through the unit vector `e`; `|e| = 1` is required within 1e-12.
    pub fn new(e: Vec<f64>) -> Result<Self> {
        if e.is_empty() || e.len() % 2 != 0 {
            return Err(Error::OddDimension(e.len()));
        }
        let norm = norm2(&e);
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm });
        }
        let je = make_complex_structure(e.len() / 2)?.apply(&e);
        Ok(Self { e, je })
    }

    /// Line through `v / |v|`.
    pub fn through(v: &[f64]) -> Result<Self> {
        let norm = norm2(v);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotUnit { norm });
        }
        let e = v.iter().map(|x| x / norm).collect();
        Self::new(e)
    }

    /// Arbitrary orthonormal pair. The plane need not be complex; this only
    /// checks orthonormality.
    pub fn from_orthonormal_pair(e: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if e.len() != f.len() {
            return Err(Error::DimensionMismatch {
                expected: e.len(),
                got: f.len(),
            });
        }
        for v in [&e, &f] {
            let norm = norm2(v);
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::NotUnit { norm });
            }
        }
        let overlap = dot(&e, &f);
        if overlap.abs() > UNIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "basis pair is not orthogonal: <e, f> = {overlap:e}"
            )));
        }
        Ok(Self { e, je: f })
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn je(&self) -> &[f64] {
        &self.je
    }

    pub fn dim(&self) -> usize {
        self.e.len()
    }

    /// The same line with basis `(cos θ e + sin θ Je, -sin θ e + cos θ Je)`.
    pub fn phase_rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let e = self
            .e
            .iter()
            .zip(&self.je)
            .map(|(a, b)| c * a + s * b)
            .collect();
        let je = self
            .e
            .iter()
            .zip(&self.je)
            .map(|(a, b)| -s * a + c * b)
            .collect();
        Self { e, je }
    }
}

/// Area and diameter from the sign-enumeration oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullSummary {
    pub area: f64,
    pub diameter: f64,
}

/// Origin-symmetric planar zonotope `Σ_i [-g_i, g_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonogon {
    generators: Vec<[f64; 2]>,
}

impl Zonogon {
    pub fn from_generators(generators: Vec<[f64; 2]>) -> Self {
        Self { generators }
    }

    pub fn generators(&self) -> &[[f64; 2]] {
        &self.generators
    }

    /// `Σ_i |g_i|²`; equals 2 for a shadow taken along an orthonormal pair.
    pub fn generator_energy(&self) -> f64 {
        self.generators.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            generators: self.generators.iter().map(|g| [t * g[0], t * g[1]]).collect(),
        }
    }

    /// `4 Σ_{i<j} |det(g_i, g_j)|`.
    pub fn area(&self) -> f64 {
        let g = &self.generators;
        let mut sum = 0.0;
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                sum += (g[i][0] * g[j][1] - g[j][0] * g[i][1]).abs();
            }
        }
        4.0 * sum
    }

    /// Support function in direction `(cos θ, sin θ)`: `Σ_i |⟨g_i, w⟩|`.
    pub fn support(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.generators
            .iter()
            .map(|g| (g[0] * c + g[1] * s).abs())
            .sum()
    }

    /// Nonzero generators flipped into the upper half-plane, sorted by angle in
    /// `[0, π)`, with parallel runs merged into one generator.
    fn sorted_half_plane(&self) -> Vec<[f64; 2]> {
        let mut flipped: Vec<(f64, [f64; 2])> = self
            .generators
            .iter()
            .filter(|g| g[0].hypot(g[1]) >= ZERO_GENERATOR_TOL)
            .map(|&g| {
                let mut h = if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) {
                    [-g[0], -g[1]]
                } else {
                    g
                };
                let mut angle = h[1].atan2(h[0]);
                if angle >= PI {
                    angle -= PI;
                    h = [-h[0], -h[1]];
                }
                (angle, h)
            })
            .collect();
        flipped.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(flipped.len());
        let mut last_angle = f64::NAN;
        for (angle, h) in flipped {
            match merged.last_mut() {
                Some(m) if (angle - last_angle).abs() <= 1e-15 => {
                    m[0] += h[0];
                    m[1] += h[1];
                }
                _ => {
                    merged.push(h);
                    last_angle = angle;
                }
            }
        }
        merged
    }

    /// Vertices in counterclockwise order, starting from `-Σ h_i`.
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        let hs = self.sorted_half_plane();
        if hs.is_empty() {
            return vec![[0.0, 0.0]];
        }
        let total = hs.iter().fold([0.0, 0.0], |s, h| [s[0] + h[0], s[1] + h[1]]);
        let mut p = [-total[0], -total[1]];
        let mut out = Vec::with_capacity(2 * hs.len());
        out.push(p);
        for h in &hs[..hs.len() - 1] {
            p = [p[0] + 2.0 * h[0], p[1] + 2.0 * h[1]];
            out.push(p);
        }
        let half = out.len();
        for i in 0..half {
            let q = out[i];
            out.push([-q[0], -q[1]]);
        }
        out
    }

    /// `2 · max_v |v|` over the vertices.
    pub fn diameter(&self) -> f64 {
        2.0 * self
            .vertices()
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }

    /// Brute-force area and diameter: projects all `2^m` sign patterns, takes the
    /// convex hull, and measures it directly.
    pub fn hull_oracle(&self) -> Result<HullSummary> {
        let m = self.generators.len();
        if m > HULL_ORACLE_MAX_GENERATORS {
            return Err(Error::TooManyGenerators(m));
        }
        let mut points = Vec::with_capacity(1 << m);
        for mask in 0u32..(1u32 << m) {
            let mut p = [0.0, 0.0];
            for (i, g) in self.generators.iter().enumerate() {
                let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                p[0] += s * g[0];
                p[1] += s * g[1];
            }
            points.push(p);
        }
        let hull = convex_hull(points);
        let mut area2 = 0.0;
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            area2 += a[0] * b[1] - a[1] * b[0];
        }
        let mut diameter: f64 = 0.0;
        for i in 0..hull.len() {
            for j in i + 1..hull.len() {
                diameter = diameter.max((hull[i][0] - hull[j][0]).hypot(hull[i][1] - hull[j][1]));
            }
        }
        Ok(HullSummary {
            area: 0.5 * area2.abs(),
            diameter,
        })
    }
}

/// Andrew's monotone chain; returns the hull counterclockwise without
/// collinear points.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Shadow of `OQ` on `line`: `g_i = ((Oᵀe)_i, (OᵀJe)_i)`.
pub fn project_generators(o: &RotationMatrix, line: &ComplexLine) -> Result<Zonogon> {
    if o.dim() != line.dim() {
        return Err(Error::DimensionMismatch {
            expected: o.dim(),
            got: line.dim(),
        });
    }
    let a = o.apply_transpose(line.e());
    let b = o.apply_transpose(line.je());
    Ok(Zonogon::from_generators(
        a.into_iter().zip(b).map(|(x, y)| [x, y]).collect(),
    ))
}

/// Scratch space for [`area_with_gradient`].
#[derive(Debug, Default, Clone)]
pub(crate) struct AreaWorkspace {
    order: Vec<(f64, usize)>,
    sign: Vec<f64>,
}

/// Zonogon area for generators `(a_i, b_i)` in `O(m log m)`, plus a subgradient
/// with respect to `a` and `b`.
///
/// After flipping each generator into the upper half-plane and sorting by
/// angle, every pair in sorted order has nonnegative determinant, so the area
/// is `4 Σ_{p<q} det(h_p, h_q)` and the prefix sums give the gradient.
pub(crate) fn area_with_gradient(
    a: &[f64],
    b: &[f64],
    grad_a: Option<&mut [f64]>,
    grad_b: Option<&mut [f64]>,
    ws: &mut AreaWorkspace,
) -> f64 {
    let m = a.len();
    ws.order.clear();
    ws.sign.clear();
    for i in 0..m {
        let mut s = if b[i] < 0.0 || (b[i] == 0.0 && a[i] < 0.0) {
            -1.0
        } else {
            1.0
        };
        let mut angle = (s * b[i]).atan2(s * a[i]);
        // A tiny vertical component can round the angle up to π; the
        // generator then belongs at the start of the order, pointing right.
        if angle >= PI {
            angle -= PI;
            s = -s;
        }
        ws.sign.push(s);
        ws.order.push((angle, i));
    }
    ws.order.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut px = 0.0;
    let mut py = 0.0;
    let mut twice = 0.0;
    for &(_, i) in &ws.order {
        let hx = ws.sign[i] * a[i];
        let hy = ws.sign[i] * b[i];
        twice += px * hy - py * hx;
        px += hx;
        py += hy;
    }
    let area = 4.0 * twice;

    if let (Some(ga), Some(gb)) = (grad_a, grad_b) {
        // before = prefix sum excluding k, after = total - before - h_k
        let (tx, ty) = (px, py);
        let mut bx = 0.0;
        let mut by = 0.0;
        for &(_, k) in &ws.order {
            let s = ws.sign[k];
            let hx = s * a[k];
            let hy = s * b[k];
            let ax = tx - bx - hx;
            let ay = ty - by - hy;
            ga[k] = 4.0 * s * (ay - by);
            gb[k] = 4.0 * s * (bx - ax);
            bx += hx;
            by += hy;
        }
    }
    area
}
