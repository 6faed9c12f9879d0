//! Dense complex linear algebra.
//!
//! Everything above this layer works with two value types: [`ComplexMatrix`]
//! (row-major, finite entries) and [`HermitianMatrix`] (exactly Hermitian as
//! stored). The only spectral kernel is the Hermitian eigendecomposition
//! [`HermitianMatrix::eigh`]; singular values of a general matrix come from
//! the Hermitian dilation `[[0, A], [A*, 0]]`, whose eigenvalues are `±σ_i`.
//!
//! Tensor products follow [`KRON_OUTER_FIRST`]: in `A ⊗ B` the first factor
//! owns the slow index, so block `(i, j)` of a `(d·n) × (d·n)` matrix is the
//! `n × n` matrix multiplying `|i⟩⟨j|`.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Index convention for every tensor product in the crate: the first factor is
/// the outer (slow) index, `(A ⊗ B)[(i·rows_B + k), (j·cols_B + l)] = A[i,j]·B[k,l]`.
/// Choi matrices, block extraction and the tensor permutation table all rely on it.
pub const KRON_OUTER_FIRST: bool = true;

/// Eigenvalues of a PSD operand above `-PSD_RELATIVE_TOL · ‖M‖_∞` are clipped to 0.
pub const PSD_RELATIVE_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!("{} entries supplied for a {rows}x{cols} matrix", data.len())));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self::from_fn(d, d, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// `|i⟩⟨j|` in dimension `d`.
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(d, d);
        m[(i, j)] = ONE;
        m
    }

    /// Builds a matrix from separate real and imaginary row-major arrays.
    /// A missing imaginary part means zero.
    pub fn from_re_im(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let rows = re.len();
        let cols = re.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("empty matrix payload".into()));
        }
        if re.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged real part".into()));
        }
        if let Some(im) = im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::InvalidInput(format!("imaginary part shape differs from real part {rows}x{cols}")));
            }
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let y = im.map_or(0.0, |im| im[i][j]);
                data.push(C64::new(re[i][j], y));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn to_re_im(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let re = (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)].re).collect()).collect();
        let im = (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)].im).collect()).collect();
        (re, im)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let (n, m, k) = (self.rows, other.cols, self.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[l * m..(l + 1) * m];
                for (o, b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self { rows: n, cols: m, data: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Entrywise (Schur) product.
    pub fn hadamard(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (i..self.cols).all(|j| self[(i, j)] == self[(j, i)].conj()))
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "submatrix out of range");
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `Tr(A·B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert_eq!((a.cols, a.rows), (b.rows, b.cols), "trace_product shape mismatch");
    let mut acc = ZERO;
    for i in 0..a.rows {
        for k in 0..a.cols {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Separate real/imaginary row-major arrays; the wire format for every matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (re, im) = m.to_re_im();
        Self { re, im: Some(im) }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;
    fn try_from(j: &MatrixJson) -> Result<Self> {
        ComplexMatrix::from_re_im(&j.re, j.im.as_deref())
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(&j).map_err(serde::de::Error::custom)
    }
}

/// Hermitian eigendecomposition: ascending eigenvalues, eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Projector onto the eigenvector of the largest eigenvalue. Within a
    /// degenerate top eigenspace the lowest column index wins.
    pub fn top_projector(&self) -> HermitianMatrix {
        let top = *self.values.last().expect("empty spectrum");
        let scale = self.spectral_radius().max(f64::MIN_POSITIVE);
        let col = self.values.iter().position(|&v| top - v <= 1e-12 * scale).unwrap_or(self.values.len() - 1);
        let d = self.vectors.rows();
        let v: Vec<C64> = (0..d).map(|r| self.vectors[(r, col)]).collect();
        HermitianMatrix::symmetrize_unchecked(ComplexMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj()))
    }

    /// `U diag(f(λ)) U*`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let d = self.vectors.rows();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(d, d);
        for (k, &w) in mapped.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..d {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::symmetrize_unchecked(out)
    }
}

/// Square matrix whose stored entries satisfy `a[i][j] == conj(a[j][i])` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// `(M + M*)/2`, written so the stored result is exactly Hermitian.
    pub fn symmetrize(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} matrix is not square", m.rows, m.cols)));
        }
        if !m.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrize_unchecked(m))
    }

    pub(crate) fn symmetrize_unchecked(mut m: ComplexMatrix) -> Self {
        let d = m.rows;
        for i in 0..d {
            m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..d {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self(m)
    }

    /// Accepts `m` only if it is Hermitian within `tol · max(1, max|m_ij|)`.
    pub fn from_matrix(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} matrix is not square", m.rows, m.cols)));
        }
        let dev = m.sub(&m.adjoint()).max_abs();
        if dev > tol * m.max_abs().max(1.0) {
            return Err(Error::InvalidInput(format!("matrix is not Hermitian (deviation {dev:e})")));
        }
        Self::symmetrize(m)
    }

    pub fn identity(d: usize) -> Self {
        Self(ComplexMatrix::identity(d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_diagonal(diag))
    }

    /// `G G*`.
    pub fn gram(g: &ComplexMatrix) -> Self {
        Self::symmetrize_unchecked(g.matmul(&g.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale_real(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.add(&other.0))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn eigh(&self) -> Result<Eigh> {
        let d = self.dim();
        if d == 1 {
            return Ok(Eigh { values: vec![self.0[(0, 0)].re], vectors: ComplexMatrix::identity(1) });
        }
        let eig = SymmetricEigen::try_new(self.0.to_nalgebra(), f64::EPSILON, 0).ok_or_else(|| {
            Error::Numerical(format!(
                "Hermitian eigensolver did not converge (dim {d}, max entry {:e})",
                self.0.max_abs()
            ))
        })?;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = &eig.eigenvectors;
        let vectors = ComplexMatrix::from_fn(d, d, |i, j| vecs[(i, order[j])]);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("eigensolver returned non-finite eigenvalues".into()));
        }
        Ok(Eigh { values, vectors })
    }

    /// Eigendecomposition of a PSD operand with small negative eigenvalues
    /// clipped to zero.
    pub fn psd_eigh(&self) -> Result<Eigh> {
        let mut e = self.eigh()?;
        clip_psd(&mut e.values)?;
        Ok(e)
    }

    pub fn is_psd(&self) -> bool {
        self.psd_eigh().is_ok()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.values[0])
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        HermitianMatrix::from_matrix(m, 1e-10).map_err(serde::de::Error::custom)
    }
}

fn clip_psd(values: &mut [f64]) -> Result<()> {
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = PSD_RELATIVE_TOL * scale;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min, tolerance: tol });
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Schatten norm of a list of singular values (or absolute eigenvalues).
/// `p = f64::INFINITY` gives the largest value.
pub fn norm_from_values(values: &[f64], p: f64) -> f64 {
    let max = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return max;
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum();
    }
    let s: f64 = values.iter().map(|v| (v.abs() / max).powf(p)).sum();
    max * s.powf(1.0 / p)
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut sv = if a.is_exactly_hermitian() {
        HermitianMatrix(a.clone()).eigh()?.values.iter().map(|v| v.abs()).collect::<Vec<_>>()
    } else {
        let (r, c) = (a.rows, a.cols);
        let mut dil = ComplexMatrix::zeros(r + c, r + c);
        for i in 0..r {
            for j in 0..c {
                dil[(i, r + j)] = a[(i, j)];
                dil[(r + j, i)] = a[(i, j)].conj();
            }
        }
        let vals = HermitianMatrix(dil).eigh().map_err(|e| {
            Error::Numerical(format!("singular values of {r}x{c} matrix (max entry {:e}): {e}", a.max_abs()))
        })?;
        // eigenvalues are ±σ plus |r-c| zeros; the top min(r,c) are the σ
        let k = r.min(c);
        vals.values.iter().rev().take(k).map(|v| v.max(0.0)).collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// `(Σ σ_i^p)^{1/p}`; `p = f64::INFINITY` is the operator norm.
pub fn schatten_norm(a: &ComplexMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(norm_from_values(&singular_values(a)?, p))
}

/// Schatten norm of a Hermitian matrix from its eigenvalues.
pub fn schatten_norm_herm(m: &HermitianMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(norm_from_values(&m.eigh()?.values, p))
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidInput(format!("Schatten exponent {p} must be >= 1")));
    }
    Ok(())
}

/// `(Tr M^t)^{1/t}` for PSD `M` and `0 < t <= 1`. Kept apart from
/// [`schatten_norm`] because it is not a norm and is superadditive.
pub fn schatten_antinorm(m: &HermitianMatrix, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidInput(format!("anti-norm exponent {t} must lie in (0, 1]")));
    }
    let e = m.psd_eigh()?;
    let s: f64 = e.values.iter().filter(|&&v| v > 0.0).map(|v| v.powf(t)).sum();
    Ok(s.powf(1.0 / t))
}

/// `M^s` for PSD `M`. Zero eigenvalues stay zero for `s > 0`; `s < 0` requires
/// `M` positive definite.
pub fn herm_power(m: &HermitianMatrix, s: f64) -> Result<HermitianMatrix> {
    let e = m.psd_eigh()?;
    power_from_eigh(&e, s)
}

pub(crate) fn power_from_eigh(e: &Eigh, s: f64) -> Result<HermitianMatrix> {
    let scale = e.spectral_radius();
    if s < 0.0 && e.values.iter().any(|&v| v <= 1e-14 * scale || v == 0.0) {
        return Err(Error::Singular(format!("negative power {s} of a singular matrix")));
    }
    Ok(e.reconstruct(|l| if l > 0.0 { l.powf(s) } else { 0.0 }))
}

/// Kronecker product, first factor outer (see [`KRON_OUTER_FIRST`]).
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * br, a.cols * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

pub fn kron_herm(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix::symmetrize_unchecked(kron(&a.0, &b.0))
}

fn check_blocked(a: &ComplexMatrix, d: usize, n: usize) -> Result<()> {
    if a.rows != d * n || a.cols != d * n {
        return Err(Error::Dimension(format!("{}x{} matrix is not ({d}*{n})x({d}*{n})", a.rows, a.cols)));
    }
    Ok(())
}

/// Block `A_ij` of `A = Σ |i⟩⟨j| ⊗ A_ij` (0-based `i, j < d`, blocks `n × n`).
pub fn block(a: &ComplexMatrix, d: usize, n: usize, i: usize, j: usize) -> Result<ComplexMatrix> {
    check_blocked(a, d, n)?;
    if i >= d || j >= d {
        return Err(Error::IndexOutOfRange(format!("block ({i},{j}) with d = {d}")));
    }
    Ok(a.submatrix(i * n, j * n, n, n))
}

/// `Σ_ij |i⟩⟨j| ⊗ f(i, j)`.
pub fn assemble_blocks(d: usize, n: usize, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d * n, d * n);
    for i in 0..d {
        for j in 0..d {
            let b = f(i, j);
            assert_eq!((b.rows, b.cols), (n, n), "block shape");
            for k in 0..n {
                for l in 0..n {
                    out[(i * n + k, j * n + l)] = b[(k, l)];
                }
            }
        }
    }
    out
}

/// `Σ_j |j⟩⟨j| ⊗ A_jj`: off-diagonal blocks zeroed.
pub fn block_diag_pinch(a: &ComplexMatrix, d: usize, n: usize) -> Result<ComplexMatrix> {
    check_blocked(a, d, n)?;
    Ok(ComplexMatrix::from_fn(d * n, d * n, |r, c| if r / n == c / n { a[(r, c)] } else { ZERO }))
}

/// Hölder conjugate: `1/p + 1/p' = 1`, with `1 ↔ ∞`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Exponent pair `(q, p)` of a `q → p` norm. `f64::INFINITY` is the `∞` sentinel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormParams {
    q: f64,
    p: f64,
}

impl NormParams {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        for (name, v) in [("q", q), ("p", p)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::InvalidInput(format!("{name} = {v} must be >= 1")));
            }
        }
        Ok(Self { q, p })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q_conj(&self) -> f64 {
        conjugate_exponent(self.q)
    }

    pub fn p_conj(&self) -> f64 {
        conjugate_exponent(self.p)
    }

    /// `(p', q')`, the exponents of the adjoint problem.
    pub fn dual(&self) -> Self {
        Self { q: self.p_conj(), p: self.q_conj() }
    }
}

/// Serializes an exponent as a JSON number, or `"inf"` for the sentinel.
pub mod exponent_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad exponent {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NormParamsJson {
    #[serde(with = "exponent_serde")]
    q: f64,
    #[serde(with = "exponent_serde")]
    p: f64,
}

impl Serialize for NormParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NormParamsJson { q: self.q, p: self.p }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = NormParamsJson::deserialize(d)?;
        NormParams::new(j.q, j.p).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, random_psd, rng_from_seed};

    #[test]
    fn conjugate_exponents() {
        for p in [1.2, 1.5, 2.0, 3.0, 7.5] {
            let n = NormParams::new(p, p).unwrap();
            assert!((1.0 / n.p() + 1.0 / n.p_conj() - 1.0).abs() < 1e-12);
        }
        let n = NormParams::new(1.0, f64::INFINITY).unwrap();
        assert!(n.q_conj().is_infinite());
        assert_eq!(n.p_conj(), 1.0);
        assert!(NormParams::new(0.9, 2.0).is_err());
        let json = serde_json::to_string(&n).unwrap();
        assert_eq!(json, r#"{"q":1.0,"p":"inf"}"#);
        assert_eq!(serde_json::from_str::<NormParams>(&json).unwrap(), n);
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn identity_and_diag_norms() {
        let i3 = ComplexMatrix::identity(3);
        assert!(close(schatten_norm(&i3, 2.0).unwrap(), 3f64.sqrt(), 1e-14));
        let d = ComplexMatrix::from_diagonal(&[3.0, 4.0]);
        assert!(close(schatten_norm(&d, 2.0).unwrap(), 5.0, 1e-14));
        assert!(close(schatten_norm(&d, f64::INFINITY).unwrap(), 4.0, 1e-14));
        assert!(close(schatten_norm(&d, 1.0).unwrap(), 7.0, 1e-14));
    }

    #[test]
    fn schatten_norm_matches_gram_eigen_oracle() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let a = gaussian_matrix(4, 4, &mut rng);
            // oracle: σ² from the eigenvalues of A*A
            let g = HermitianMatrix::symmetrize(a.adjoint().matmul(&a)).unwrap();
            let oracle: f64 = g.eigh().unwrap().values.iter().map(|l| l.max(0.0).sqrt().powi(3)).sum();
            let oracle = oracle.powf(1.0 / 3.0);
            assert!(close(schatten_norm(&a, 3.0).unwrap(), oracle, 1e-10));
        }
    }

    #[test]
    fn rectangular_singular_values_match_nalgebra_svd() {
        let mut rng = rng_from_seed(5);
        let a = gaussian_matrix(3, 5, &mut rng);
        let ours = singular_values(&a).unwrap();
        let mut theirs: Vec<f64> = a.to_nalgebra().svd(false, false).singular_values.iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        assert_eq!(ours.len(), 3);
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let r = ComplexMatrix::new(1, 1, vec![C64::new(f64::NAN, 0.0)]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        assert!(schatten_norm(&ComplexMatrix::identity(2), 0.5).is_err());
    }

    #[test]
    fn antinorm_examples() {
        assert!(close(schatten_antinorm(&HermitianMatrix::identity(2), 0.5).unwrap(), 4.0, 1e-14));
        let p = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(close(schatten_antinorm(&p, 0.5).unwrap(), 1.0, 1e-14));
        let mut rng = rng_from_seed(2);
        let m = random_psd(4, 4, &mut rng);
        let oracle: f64 = m.eigh().unwrap().values.iter().map(|l| l.max(0.0).powf(0.7)).sum::<f64>().powf(1.0 / 0.7);
        assert!(close(schatten_antinorm(&m, 0.7).unwrap(), oracle, 1e-10));
        let neg = HermitianMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(schatten_antinorm(&neg, 0.5), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn herm_power_examples() {
        let i = HermitianMatrix::identity(3);
        for s in [-1.0, 0.5, 2.0, 3.3] {
            assert!(herm_power(&i, s).unwrap().as_matrix().sub(i.as_matrix()).max_abs() < 1e-14);
        }
        let d = HermitianMatrix::from_diagonal(&[4.0, 9.0]);
        let r = herm_power(&d, 0.5).unwrap();
        assert!(r.as_matrix().sub(&ComplexMatrix::from_diagonal(&[2.0, 3.0])).max_abs() < 1e-14);
        let mut rng = rng_from_seed(9);
        let m = random_psd(4, 4, &mut rng);
        let sq = herm_power(&m, 2.0).unwrap();
        let direct = m.as_matrix().matmul(m.as_matrix());
        assert!(sq.as_matrix().sub(&direct).max_abs() < 1e-10 * direct.max_abs());
        let singular = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(herm_power(&singular, -1.0), Err(Error::Singular(_))));
        let z = herm_power(&singular, 0.3).unwrap();
        assert_eq!(z[(1, 1)], ZERO);
    }

    #[test]
    fn kron_examples() {
        let k = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3));
        assert_eq!(k, ComplexMatrix::identity(6));
        let mut rng = rng_from_seed(4);
        let b = gaussian_matrix(2, 2, &mut rng);
        let k = kron(&ComplexMatrix::unit(2, 0, 0), &b);
        assert_eq!(k.submatrix(0, 0, 2, 2), b);
        assert_eq!(k.submatrix(2, 2, 2, 2).max_abs(), 0.0);
        let a = gaussian_matrix(3, 3, &mut rng);
        let lhs = schatten_norm(&kron(&a, &b), 3.0).unwrap();
        let rhs = schatten_norm(&a, 3.0).unwrap() * schatten_norm(&b, 3.0).unwrap();
        assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn block_extraction_and_reassembly() {
        let i4 = ComplexMatrix::identity(4);
        assert_eq!(block(&i4, 2, 2, 0, 0).unwrap(), ComplexMatrix::identity(2));
        assert_eq!(block(&i4, 2, 2, 0, 1).unwrap().max_abs(), 0.0);
        assert!(matches!(block(&i4, 2, 2, 2, 0), Err(Error::IndexOutOfRange(_))));
        let mut rng = rng_from_seed(8);
        let a = gaussian_matrix(6, 6, &mut rng);
        let back = assemble_blocks(3, 2, |i, j| block(&a, 3, 2, i, j).unwrap());
        assert_eq!(back, a);
    }

    #[test]
    fn pinching_examples() {
        let mut rng = rng_from_seed(12);
        let a = random_psd(6, 6, &mut rng);
        let p = block_diag_pinch(a.as_matrix(), 3, 2).unwrap();
        assert!((p.trace() - a.as_matrix().trace()).norm() < 1e-12 * a.trace());
        assert!(schatten_norm(&p, 1.4).unwrap() <= schatten_norm(a.as_matrix(), 1.4).unwrap() + 1e-10);
        assert_eq!(block_diag_pinch(&p, 3, 2).unwrap(), p);
    }

    #[test]
    fn symmetrize_is_exactly_hermitian() {
        let mut rng = rng_from_seed(1);
        let h = HermitianMatrix::symmetrize(gaussian_matrix(5, 5, &mut rng)).unwrap();
        assert!(h.as_matrix().is_exactly_hermitian());
    }
}
