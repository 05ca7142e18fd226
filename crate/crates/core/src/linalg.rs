//! Dense linear algebra on `ℝ^{2n}`: square row-major matrices, the standard
//! complex structure `J(x, y) = (-y, x)`, and seeded Haar sampling on `O(2n)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Entry-wise tolerance for `OᵀO = I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Reproducible random source: a master seed plus a ChaCha stream index.
///
/// Equal `(seed, stream)` pairs always produce bit-identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Independent child source `i`, keyed on both the seed and the stream of
    /// `self`, so children of different parents never share a ChaCha key.
    pub fn child(&self, i: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0xA5A5_5A5A))),
            stream: i,
        }
    }
}

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            let out_row = &mut out.data[i * d..(i + 1) * d];
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                let other_row = &other.data[k * d..(k + 1) * d];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `out = M v`.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    /// `out = Mᵀ v`.
    pub fn tr_matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
    }

    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.tr_matvec_into(v, &mut out);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `max |MᵀM - I|` entry-wise.
    pub fn orthogonality_defect(&self) -> f64 {
        self.transpose()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    /// Determinant by partial-pivot LU.
    pub fn determinant(&self) -> f64 {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..d {
            let p = (k..d)
                .max_by(|&x, &y| a[x * d + k].abs().total_cmp(&a[y * d + k].abs()))
                .unwrap();
            if a[p * d + k] == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..d {
                    a.swap(k * d + j, p * d + j);
                }
                det = -det;
            }
            let pivot = a[k * d + k];
            det *= pivot;
            for i in k + 1..d {
                let f = a[i * d + k] / pivot;
                if f != 0.0 {
                    for j in k..d {
                        a[i * d + j] -= f * a[k * d + j];
                    }
                }
            }
        }
        det
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

#[inline]
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Scales `v` to unit length in place and returns its former norm.
pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// The standard complex structure on `ℝ^{2n} = ℝⁿ ⊕ ℝⁿ`, `J(x, y) = (-y, x)`.
///
/// Stored implicitly; [`ComplexStructure::to_matrix`] gives the block form
/// `[[0, -I], [I, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexStructure {
    n: usize,
}

impl ComplexStructure {
    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(v.len(), 2 * n);
        for j in 0..n {
            out[j] = -v[n + j];
            out[n + j] = v[j];
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.n;
        let mut m = Matrix::zeros(2 * n);
        for j in 0..n {
            m.set(j, n + j, -1.0);
            m.set(n + j, j, 1.0);
        }
        m
    }
}

pub fn make_complex_structure(n: usize) -> Result<ComplexStructure> {
    if n == 0 {
        return Err(Error::ZeroHalfDimension);
    }
    Ok(ComplexStructure { n })
}

/// A `2n × 2n` orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix(Matrix);

impl RotationMatrix {
    /// Validates evenness and `OᵀO = I` within [`ORTHOGONALITY_TOL`].
    pub fn new(m: Matrix) -> Result<Self> {
        if m.dim() == 0 || m.dim() % 2 != 0 {
            return Err(Error::OddDimension(m.dim()));
        }
        let deviation = m.orthogonality_defect();
        if !(deviation < ORTHOGONALITY_TOL) {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(Matrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn half_dim(&self) -> usize {
        self.0.dim() / 2
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.0.matvec(v)
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        self.0.tr_matvec(v)
    }

    /// `self · other`.
    pub fn compose(&self, other: &RotationMatrix) -> Result<RotationMatrix> {
        RotationMatrix::new(self.0.matmul(&other.0))
    }
}

/// Orthonormal factor `Q` of `A = QR` via Householder reflections, with each
/// column multiplied by the sign of the matching diagonal entry of `R`.
fn sign_corrected_q(a: &Matrix) -> Matrix {
    let d = a.dim();
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut rdiag = vec![0.0; d];

    for k in 0..d {
        let mut v: Vec<f64> = (k..d).map(|i| r.get(i, k)).collect();
        let xnorm = norm2(&v);
        if xnorm == 0.0 {
            reflectors.push(vec![0.0; d - k]);
            rdiag[k] = 0.0;
            continue;
        }
        let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        normalize(&mut v);
        for j in k..d {
            let s: f64 = (k..d).map(|i| v[i - k] * r.get(i, j)).sum();
            for i in k..d {
                let updated = r.get(i, j) - 2.0 * v[i - k] * s;
                r.set(i, j, updated);
            }
        }
        rdiag[k] = alpha;
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{d-1} I
    let mut q = Matrix::identity(d);
    for k in (0..d).rev() {
        let v = &reflectors[k];
        for j in 0..d {
            let s: f64 = (k..d).map(|i| v[i - k] * q.get(i, j)).sum();
            if s != 0.0 {
                for i in k..d {
                    let updated = q.get(i, j) - 2.0 * v[i - k] * s;
                    q.set(i, j, updated);
                }
            }
        }
    }

    for (j, &rjj) in rdiag.iter().enumerate() {
        if rjj < 0.0 {
            for i in 0..d {
                let flipped = -q.get(i, j);
                q.set(i, j, flipped);
            }
        }
    }
    q
}

/// Modified Gram–Schmidt on the columns of `m`.
fn reorthonormalize(m: &Matrix) -> Matrix {
    let d = m.dim();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| m.column(j)).collect();
    for j in 0..d {
        for i in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let proj = dot(&done[i], &rest[0]);
            for (x, q) in rest[0].iter_mut().zip(&done[i]) {
                *x -= proj * q;
            }
        }
        normalize(&mut cols[j]);
    }
    Matrix::from_fn(d, |i, j| cols[j][i])
}

/// Haar-distributed element of `O(dim)` drawn from `rng`.
pub fn haar_orthogonal_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<RotationMatrix> {
    if dim < 2 || dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    let gaussian = Matrix::from_fn(dim, |_, _| rng.sample(StandardNormal));
    let q = sign_corrected_q(&gaussian);
    match RotationMatrix::new(q) {
        Ok(o) => Ok(o),
        Err(Error::NotOrthogonal { deviation }) => {
            let retry = reorthonormalize(&gaussian);
            RotationMatrix::new(retry).map_err(|_| Error::NotOrthogonal { deviation })
        }
        Err(e) => Err(e),
    }
}

/// Haar-distributed element of `O(dim)`, both determinant signs included.
pub fn haar_orthogonal(dim: usize, seed: RngSeed) -> Result<RotationMatrix> {
    haar_orthogonal_with(dim, &mut seed.rng())
}

/// `A = Oᵀ J O`, an orthogonal skew-symmetric matrix with `A² = -I`.
pub fn rotated_complex_structure(o: &RotationMatrix) -> Matrix {
    let j = make_complex_structure(o.half_dim())
        .expect("rotation matrices have positive even dimension");
    let m = o.matrix();
    let d = m.dim();
    // J O permutes and negates rows of O.
    let jo = Matrix::from_fn(d, |i, k| {
        let n = j.half_dim();
        if i < n {
            -m.get(n + i, k)
        } else {
            m.get(i - n, k)
        }
    });
    m.transpose().matmul(&jo)
}

/// Haar-distributed orthogonal matrix kept in factored form
/// `O = H_0 H_1 ⋯ H_{d-2} D`, where `H_k` is a Householder reflection acting
/// on coordinates `k..d` and `D` a diagonal of signs.
///
/// This is the factorization produced by Householder QR of a Gaussian matrix
/// with the sign correction applied, so the law is the same as
/// [`haar_orthogonal_with`]; applying `O` or `Oᵀ` to a vector costs `O(d²)`
/// and no `d × d` matrix is ever formed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorProduct {
    dim: usize,
    reflectors: Vec<Vec<f64>>,
    signs: Vec<f64>,
}

impl ReflectorProduct {
    pub fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OddDimension(0));
        }
        let mut reflectors = Vec::with_capacity(dim.saturating_sub(1));
        let mut signs = Vec::with_capacity(dim);
        for k in 0..dim - 1 {
            let mut v = random_unit_vector(dim - k, rng);
            // Reflect v onto -sign(v_0) e_0; the diagonal of R then has sign
            // -sign(v_0).
            let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += s;
            normalize(&mut v);
            reflectors.push(v);
            signs.push(-s);
        }
        signs.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
        Ok(Self {
            dim,
            reflectors,
            signs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn reflect(v: &[f64], x: &mut [f64]) {
        let s = 2.0 * dot(v, x);
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi -= s * vi;
        }
    }

    /// `x ← O x`.
    pub fn apply_in_place(&self, x: &mut [f64]) {
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            Self::reflect(v, &mut x[k..]);
        }
    }

    /// `x ← Oᵀ x`.
    pub fn apply_transpose_in_place(&self, x: &mut [f64]) {
        for (k, v) in self.reflectors.iter().enumerate() {
            Self::reflect(v, &mut x[k..]);
        }
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let d = self.dim;
        let mut cols = Vec::with_capacity(d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            self.apply_in_place(&mut e);
            cols.push(e);
        }
        Matrix::from_fn(d, |i, j| cols[j][i])
    }
}

/// Uniform point on `S^{dim-1}` by normalizing a Gaussian vector.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) > 1e-300 {
            return v;
        }
    }
}
