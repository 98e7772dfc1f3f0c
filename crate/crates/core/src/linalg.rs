//! Dense complex linear algebra for small Hermitian problems.
//!
//! Everything here is sized for desk-scale dimensions (a few hundred at most):
//! matrices are stored densely in row-major order and the eigensolver is a
//! cyclic complex Jacobi iteration.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise tolerance used when checking Hermiticity on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for trace and positivity checks on density matrices.
pub const PSD_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_THRESHOLD: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense complex matrix in row-major order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    /// The rank-one outer product `v v†`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|A†A - I|`, i.e. how far the columns are from orthonormal.
    pub fn isometry_residual(&self) -> f64 {
        let gram = self.adjoint().matmul(self);
        gram.max_abs_diff(&Self::identity(self.cols))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Tr(A† B)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// Copy of the block with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Zero everything outside the principal submatrix indexed by `idx`.
    pub fn restrict_principal(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for &i in idx {
            for &j in idx {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    /// Write `block` into the positions given by the index lists.
    pub fn set_block(&mut self, rows: &[usize], cols: &[usize], block: &Self) {
        assert_eq!((rows.len(), cols.len()), (block.rows, block.cols));
        for (bi, &i) in rows.iter().enumerate() {
            for (bj, &j) in cols.iter().enumerate() {
                self[(i, j)] = block[(bi, bj)];
            }
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    /// Trace norm of an arbitrary (possibly rectangular) matrix: half the
    /// absolute eigenvalue sum of the dilation `[[0, A], [A†, 0]]`, whose
    /// spectrum is `±` the singular values. Unlike `√eig(A†A)` this keeps
    /// full precision on rank-deficient inputs.
    pub fn trace_norm(&self) -> Result<f64> {
        let (r, c) = (self.rows, self.cols);
        let adj = self.adjoint();
        let dilation = ComplexMatrix::from_fn(r + c, r + c, |i, j| match (i < r, j < r) {
            (true, false) => self[(i, j - r)],
            (false, true) => adj[(i - r, j)],
            _ => ZERO,
        });
        let eig = hermitian_eig(&HermitianMatrix::symmetrize(dilation))?;
        Ok(eig.values.iter().map(|x| x.abs()).sum::<f64>() / 2.0)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// A square matrix known to be Hermitian.
///
/// Construction checks Hermiticity to [`HERMITIAN_TOL`] and then replaces the
/// matrix by `(H + H†)/2`, so downstream code sees an exactly Hermitian matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianMatrix(ComplexMatrix);

impl TryFrom<ComplexMatrix> for HermitianMatrix {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermitianMatrix> for ComplexMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Validation(format!("matrix is {}x{}, not square", m.rows, m.cols)));
        }
        if !m.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::Validation("matrix is not Hermitian".into()));
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrize without the tolerance check; for matrices Hermitian by construction.
    pub(crate) fn symmetrize(m: ComplexMatrix) -> Self {
        let n = m.rows;
        let sym = ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(m[(i, i)].re, 0.0)
            } else {
                (m[(i, j)] + m[(j, i)].conj()) * 0.5
            }
        });
        Self(sym)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(diag))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    /// Rank-one projector-like element `v v†` (not normalised).
    pub fn outer(v: &[Complex64]) -> Self {
        Self::symmetrize(ComplexMatrix::outer(v))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Real part of `Tr(self · other)`; exact for Hermitian pairs.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.0.inner(&other.0).re
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self::symmetrize(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self::symmetrize(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        Self(self.0.scale_real(s))
    }

    /// `U† H U` for a square (or isometric) `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> HermitianMatrix {
        Self::symmetrize(u.adjoint().matmul(&self.0).matmul(u))
    }

    /// `U H U†`.
    pub fn rotate(&self, u: &ComplexMatrix) -> HermitianMatrix {
        Self::symmetrize(u.matmul(&self.0).matmul(&u.adjoint()))
    }

    /// `v† H v`, real for Hermitian `H`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        let hv = self.0.mat_vec(v);
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
    }

    pub fn restrict_principal(&self, idx: &[usize]) -> HermitianMatrix {
        Self(self.0.restrict_principal(idx))
    }

    pub fn principal_block(&self, idx: &[usize]) -> HermitianMatrix {
        Self(self.0.select(idx, idx))
    }

    pub fn eig(&self) -> Result<Eigen> {
        hermitian_eig(self)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)].norm() <= tol))
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermitianMatrix", into = "HermitianMatrix")]
pub struct DensityMatrix(HermitianMatrix);

impl TryFrom<HermitianMatrix> for DensityMatrix {
    type Error = Error;
    fn try_from(h: HermitianMatrix) -> Result<Self> {
        Self::new(h)
    }
}

impl From<DensityMatrix> for HermitianMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.0
    }
}

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > PSD_TOL {
            return Err(Error::Validation(format!("trace {tr} differs from 1")));
        }
        let min = if h.is_diagonal(0.0) {
            h.real_diagonal().into_iter().fold(f64::INFINITY, f64::min)
        } else {
            hermitian_eig(&h)?.values[0]
        };
        if min < -PSD_TOL {
            return Err(Error::Validation(format!("minimum eigenvalue {min} is negative")));
        }
        Ok(Self(h))
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Self::new(HermitianMatrix::from_real_diagonal(probs))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(HermitianMatrix::from_real_diagonal(&vec![1.0 / d as f64; d]))
    }

    /// `|ψ⟩⟨ψ|` for a vector normalised internally.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::new(HermitianMatrix::outer(&v))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.0.matrix()
    }

    /// Probability `⟨M, ρ⟩` of a POVM element.
    pub fn expectation(&self, element: &HermitianMatrix) -> f64 {
        self.0.inner(element)
    }

    /// Convex combination `(1-t)·self + t·other`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        Self::new(self.0.scale(1.0 - t).add(&other.0.scale(t)))
    }
}

/// Eigendecomposition `H = V diag(values) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        scaled.matmul(&self.vectors.adjoint())
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies a
/// real Givens rotation that zeroes it. Iterates until the off-diagonal
/// Frobenius norm drops below `1e-13·‖H‖_HS`, or fails after 100 sweeps.
pub fn hermitian_eig(h: &HermitianMatrix) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_REL_THRESHOLD * a.hs_norm();

    let mut converged = off_diagonal_norm(&a) <= threshold;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = apq / mag;
                // Rotation block on (p, q): [[c, s], [-s·conj(phase), c·conj(phase)]]
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
        converged = off_diagonal_norm(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

fn eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    if h.is_diagonal(0.0) {
        let mut d = h.real_diagonal();
        d.sort_by(f64::total_cmp);
        Ok(d)
    } else {
        Ok(hermitian_eig(h)?.values)
    }
}

/// Trace norm `‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let diff = a.hermitian().sub(b.hermitian());
    Ok(eigenvalues(&diff)?.iter().map(|x| x.abs()).sum())
}

/// Trace norm of a Hermitian matrix.
pub fn hermitian_trace_norm(h: &HermitianMatrix) -> Result<f64> {
    Ok(eigenvalues(h)?.iter().map(|x| x.abs()).sum())
}

/// Hilbert-Schmidt distance `‖a − b‖_HS`.
pub fn hs_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok((a.matrix() - b.matrix()).hs_norm())
}

/// Schatten-p (quasi)norm from a list of eigenvalues.
pub fn schatten_of_values(values: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be positive, got {p}")));
    }
    let s: f64 = values.iter().filter(|x| **x != 0.0).map(|x| x.abs().powf(p)).sum();
    Ok(s.powf(1.0 / p))
}

/// Schatten-p (quasi)norm `(Σ|λ_i|^p)^{1/p}`.
pub fn schatten_quasinorm(h: &HermitianMatrix, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be positive, got {p}")));
    }
    schatten_of_values(&eigenvalues(h)?, p)
}

/// Fidelity with the maximally mixed state, `(Tr√σ)²/d`.
pub fn fidelity_mm(sigma: &DensityMatrix) -> Result<f64> {
    let root_sum: f64 = eigenvalues(sigma.hermitian())?.iter().map(|x| x.max(0.0).sqrt()).sum();
    Ok(root_sum * root_sum / sigma.dim() as f64)
}

pub fn is_psd(h: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(eigenvalues(h)?.first().is_none_or(|&m| m >= -tol))
}

/// Assemble `[[A, B], [B†, C]]`.
pub fn assemble_blocks(a: &HermitianMatrix, b: &ComplexMatrix, c: &HermitianMatrix) -> Result<HermitianMatrix> {
    let (na, nc) = (a.dim(), c.dim());
    if b.rows() != na || b.cols() != nc {
        return Err(Error::DimensionMismatch { expected: na * nc, found: b.rows() * b.cols() });
    }
    let top: Vec<usize> = (0..na).collect();
    let bottom: Vec<usize> = (na..na + nc).collect();
    let mut m = ComplexMatrix::zeros(na + nc, na + nc);
    m.set_block(&top, &top, a.matrix());
    m.set_block(&top, &bottom, b);
    m.set_block(&bottom, &top, &b.adjoint());
    m.set_block(&bottom, &bottom, c.matrix());
    Ok(HermitianMatrix::symmetrize(m))
}

/// Positive-definiteness of `[[A, B], [B†, C]]` through the Schur complement
/// `C − B†A⁻¹B`, for positive definite `A` and `C`.
pub fn schur_psd_check(a: &HermitianMatrix, b: &ComplexMatrix, c: &HermitianMatrix) -> Result<bool> {
    let ea = hermitian_eig(a)?;
    let scale = ea.values.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if ea.values.first().is_none_or(|&m| m <= 1e-14 * scale) {
        return Err(Error::Validation("block A is singular or not positive definite".into()));
    }
    let n = a.dim();
    if b.rows() != n || b.cols() != c.dim() {
        return Err(Error::DimensionMismatch { expected: n * c.dim(), found: b.rows() * b.cols() });
    }
    // A⁻¹ = V diag(1/λ) V†
    let inv_vals = Eigen { values: ea.values.iter().map(|x| 1.0 / x).collect(), vectors: ea.vectors };
    let a_inv = inv_vals.reconstruct();
    let schur = c.matrix() - &b.adjoint().matmul(&a_inv).matmul(b);
    let schur = HermitianMatrix::symmetrize(schur);
    Ok(eigenvalues(&schur)?.first().is_none_or(|&m| m > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        HermitianMatrix::symmetrize(&g + &g.adjoint())
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = hermitian_eig(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let e = hermitian_eig(&HermitianMatrix::from_real_diagonal(&[0.8, 0.2])).unwrap();
        assert!((e.values[0] - 0.2).abs() < 1e-15 && (e.values[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 5, 8, 17] {
            let h = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&h).unwrap();
            let err = e.reconstruct().max_abs_diff(h.matrix());
            assert!(err <= 1e-10 * (1.0 + h.matrix().hs_norm()), "n={n} err={err}");
            assert!(e.vectors.isometry_residual() <= 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn trace_distance_basic_cases() {
        let a = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        let c = DensityMatrix::maximally_mixed(3);
        assert!(matches!(trace_distance(&a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn schatten_cases() {
        let id = HermitianMatrix::identity(4);
        assert!((schatten_quasinorm(&id, 0.4).unwrap() - 4f64.powf(2.5)).abs() < 1e-10);
        let half = HermitianMatrix::from_real_diagonal(&[0.5, 0.5]);
        assert!((schatten_quasinorm(&half, 0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!(schatten_quasinorm(&half, 0.0).is_err());
        assert!(schatten_quasinorm(&half, -1.0).is_err());
    }

    #[test]
    fn schatten_matches_direct_sum_on_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let vals: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let p = rng.random::<f64>() * 3.0 + 0.1;
            let direct = vals.iter().map(|x: &f64| x.abs().powf(p)).sum::<f64>().powf(1.0 / p);
            let got = schatten_quasinorm(&HermitianMatrix::from_real_diagonal(&vals), p).unwrap();
            assert!((got - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn fidelity_cases() {
        assert!((fidelity_mm(&DensityMatrix::maximally_mixed(7)).unwrap() - 1.0).abs() < 1e-12);
        let mut pure = vec![0.0; 5];
        pure[0] = 1.0;
        assert!((fidelity_mm(&DensityMatrix::diagonal(&pure).unwrap()).unwrap() - 0.2).abs() < 1e-15);
        let d = 16usize;
        let mut spiked = vec![1.0 / (d * d) as f64; d];
        spiked[0] = 1.0 - 1.0 / d as f64;
        // renormalise the d-dimensional truncation so it is a valid state
        let total: f64 = spiked.iter().sum();
        let spiked: Vec<f64> = spiked.iter().map(|x| x / total).collect();
        let rho = DensityMatrix::diagonal(&spiked).unwrap();
        let oracle = spiked.iter().map(|x| x.sqrt()).sum::<f64>().powi(2) / d as f64;
        assert!((fidelity_mm(&rho).unwrap() - oracle).abs() < 1e-12);
        let q = schatten_quasinorm(rho.hermitian(), 0.5).unwrap() / d as f64;
        assert!((fidelity_mm(&rho).unwrap() - q).abs() < 1e-10);
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&HermitianMatrix::identity(3), PSD_TOL).unwrap());
        assert!(!is_psd(&HermitianMatrix::from_real_diagonal(&[1.0, -1e-3]), PSD_TOL).unwrap());
    }

    #[test]
    fn schur_small_cases() {
        let id = HermitianMatrix::identity(1);
        let zero = ComplexMatrix::zeros(1, 1);
        assert!(schur_psd_check(&id, &zero, &id).unwrap());
        let two = ComplexMatrix::from_real_diagonal(&[2.0]);
        assert!(!schur_psd_check(&id, &two, &id).unwrap());
        let singular = HermitianMatrix::from_real_diagonal(&[0.0]);
        assert!(schur_psd_check(&singular, &zero, &id).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        assert!(DensityMatrix::diagonal(&[0.3, 0.7]).is_ok());
    }
}
