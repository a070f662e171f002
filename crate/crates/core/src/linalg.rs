//! Dense complex matrices and the handful of operations the rest of the crate
//! is built on.
//!
//! Tensor factors are ordered big-endian throughout: in `a ⊗ b` the index of
//! `a` is the most significant digit of the combined index, and the first
//! subsystem in a `dims` list is the most significant factor.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DIM: usize = 4096;

/// Hermitian drift repaired silently before an eigendecomposition.
pub const HERMITIAN_DRIFT_TOL: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Cap on the side length of any dense matrix the crate will build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl Limits {
    pub fn new(max_dim: usize) -> Self {
        Limits { max_dim }
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            Err(Error::SizeLimit {
                requested: dim,
                cap: self.max_dim,
            })
        } else {
            Ok(())
        }
    }

    /// Checks a product of dimensions without overflowing.
    pub fn check_product(&self, factors: &[usize]) -> Result<usize> {
        let mut total: usize = 1;
        for &f in factors {
            total = total.checked_mul(f).ok_or(Error::SizeLimit {
                requested: usize::MAX,
                cap: self.max_dim,
            })?;
            self.check(total)?;
        }
        Ok(total)
    }
}

/// Row-major dense matrix of complex doubles.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Column vector from amplitudes.
    pub fn column(v: &[Complex64]) -> Self {
        ComplexMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    /// `|k⟩⟨k|` in dimension `n`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(k, k)] = ONE;
        m
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Position and size of the largest entrywise deviation from `other`.
    pub fn argmax_abs_diff(&self, other: &Self) -> Option<((usize, usize), f64)> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        let mut best: Option<((usize, usize), f64)> = None;
        for (k, (a, b)) in self.data.iter().zip(&other.data).enumerate() {
            let d = (a - b).norm();
            if best.is_none_or(|(_, v)| d > v) {
                best = Some(((k / self.cols, k % self.cols), d));
            }
        }
        best
    }

    /// Real part of `tr(self† other)`, the Hilbert–Schmidt inner product for
    /// Hermitian operands.
    pub fn inner(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// `max |M[i][j] − conj(M[j][i])|`; infinite for non-square input.
    pub fn hermitian_drift(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut drift: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                drift = drift.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        drift
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_drift() <= tol
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * oc..(k + 1) * oc];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · v` for a column vector given as a slice.
    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self · X · self†`
    pub fn conjugate(&self, x: &Self) -> Self {
        self.matmul(x).matmul(&self.dagger())
    }

    /// Kronecker product without a size check.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    let base = (i * other.rows + k) * cols + j * other.cols;
                    for l in 0..other.cols {
                        out.data[base + l] = a * other.data[k * other.cols + l];
                    }
                }
            }
        }
        out
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// `max ‖U†U − I‖` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.dagger()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign_method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }

        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }

        impl $assign_trait<&ComplexMatrix> for ComplexMatrix {
            fn $assign_method(&mut self, rhs: &ComplexMatrix) {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
                for (a, b) in self.data.iter_mut().zip(&rhs.data) {
                    *a = *a $op b;
                }
            }
        }
    };
}

elementwise!(Add, add, AddAssign, add_assign, +);
elementwise!(Sub, sub, SubAssign, sub_assign, -);

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product, refusing results larger than the configured cap.
pub fn tensor_product(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    limits: &Limits,
) -> Result<ComplexMatrix> {
    limits.check_product(&[a.rows, b.rows])?;
    limits.check_product(&[a.cols, b.cols])?;
    Ok(a.kron(b))
}

fn check_dims(m: &ComplexMatrix, dims: &[usize]) -> Result<()> {
    if !m.is_square() {
        return Err(Error::shape(format!(
            "expected a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if dims.contains(&0) {
        return Err(Error::shape("subsystem dimensions must be positive"));
    }
    let total: usize = dims.iter().product();
    if total != m.rows {
        return Err(Error::shape(format!(
            "subsystem dims {dims:?} multiply to {total}, matrix is {}x{}",
            m.rows, m.cols
        )));
    }
    Ok(())
}

/// Digits of `index` in the mixed radix given by `dims`, most significant first.
pub(crate) fn unravel(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

/// Index map for reordering subsystems: `map[old] = new`, where new subsystem
/// `k` is old subsystem `order[k]`.
pub(crate) fn permutation_index_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let mut digits = vec![0; dims.len()];
    (0..total)
        .map(|old| {
            unravel(old, dims, &mut digits);
            order
                .iter()
                .zip(&new_dims)
                .fold(0, |acc, (&src, &d)| acc * d + digits[src])
        })
        .collect()
}

fn check_order(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::shape(format!(
            "permutation {order:?} has wrong length, expected {n}"
        )));
    }
    for &k in order {
        if k >= n || seen[k] {
            return Err(Error::shape(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Reorders the tensor factors of a square operator: subsystem `k` of the
/// result is subsystem `order[k]` of `m`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    dims: &[usize],
    order: &[usize],
) -> Result<ComplexMatrix> {
    check_dims(m, dims)?;
    check_order(dims.len(), order)?;
    let map = permutation_index_map(dims, order);
    let n = m.rows;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Permutation matrix `P` with `P (x_0 ⊗ … ⊗ x_k) = x_{order[0]} ⊗ …`.
pub fn subsystem_permutation(dims: &[usize], order: &[usize]) -> Result<ComplexMatrix> {
    check_order(dims.len(), order)?;
    let map = permutation_index_map(dims, order);
    let n = map.len();
    let mut p = ComplexMatrix::zeros(n, n);
    for (old, &new) in map.iter().enumerate() {
        p[(new, old)] = ONE;
    }
    Ok(p)
}

/// Traces out the subsystems listed in `traced`; the remaining factors keep
/// their relative order.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], traced: &[usize]) -> Result<ComplexMatrix> {
    check_dims(m, dims)?;
    let mut is_traced = vec![false; dims.len()];
    for &t in traced {
        if t >= dims.len() {
            return Err(Error::shape(format!(
                "subsystem {t} out of range for {} subsystems",
                dims.len()
            )));
        }
        is_traced[t] = true;
    }
    if traced.is_empty() {
        return Ok(m.clone());
    }

    let kept_dim: usize = dims
        .iter()
        .zip(&is_traced)
        .filter(|(_, &t)| !t)
        .map(|(&d, _)| d)
        .product();
    let traced_dim: usize = m.rows / kept_dim;

    // Split every full index into (kept, traced) coordinates once.
    let mut digits = vec![0; dims.len()];
    let split: Vec<(usize, usize)> = (0..m.rows)
        .map(|idx| {
            unravel(idx, dims, &mut digits);
            let mut kept = 0;
            let mut gone = 0;
            for ((&digit, &d), &t) in digits.iter().zip(dims).zip(&is_traced) {
                if t {
                    gone = gone * d + digit;
                } else {
                    kept = kept * d + digit;
                }
            }
            (kept, gone)
        })
        .collect();

    // Full index for each (kept, traced) pair.
    let mut full = vec![0usize; m.rows];
    for (idx, &(k, t)) in split.iter().enumerate() {
        full[k * traced_dim + t] = idx;
    }

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for r in 0..kept_dim {
        for c in 0..kept_dim {
            let mut acc = ZERO;
            for t in 0..traced_dim {
                acc += m[(full[r * traced_dim + t], full[c * traced_dim + t])];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fvals: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for (k, &fk) in fvals.iter().enumerate() {
                    if fk != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * fk;
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        out
    }
}

fn drift_tolerance(m: &ComplexMatrix) -> f64 {
    HERMITIAN_DRIFT_TOL * m.max_abs().max(1.0)
}

/// Eigendecomposition of a Hermitian matrix. Drift up to 1e-10 (relative to
/// the largest entry) is symmetrized away; anything larger is refused.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let drift = m.hermitian_drift();
    if drift > drift_tolerance(m) {
        return Err(Error::contract(format!(
            "matrix is not Hermitian (drift {drift:.3e})"
        )));
    }
    Ok(eig_of_hermitian_part(m))
}

pub(crate) fn eig_of_hermitian_part(m: &ComplexMatrix) -> HermitianEigen {
    let n = m.rows;
    if n == 0 {
        return HermitianEigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        };
    }
    let h = m.hermitian_part().to_nalgebra();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::shape(format!(
            "trace norm needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if m.rows == 0 {
        return Ok(0.0);
    }
    if m.hermitian_drift() <= drift_tolerance(m) {
        let eig = eig_of_hermitian_part(m);
        return Ok(eig.values.iter().map(|l| l.abs()).sum());
    }
    let sv = m.to_nalgebra().singular_values();
    Ok(sv.iter().sum())
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows == 0 || m.cols == 0 {
        return vec![];
    }
    let mut sv: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() || m.hermitian_drift() > tol.max(drift_tolerance(m)) {
        return false;
    }
    m.rows == 0 || eig_of_hermitian_part(m).min() >= -tol
}

/// Projection onto the PSD cone (negative eigenvalues clipped to zero).
pub fn psd_projection(m: &ComplexMatrix) -> ComplexMatrix {
    eig_of_hermitian_part(m).reconstruct_with(|l| l.max(0.0))
}

/// Principal square root of a PSD matrix; negative rounding noise is clipped.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    eig_of_hermitian_part(m).reconstruct_with(|l| l.max(0.0).sqrt())
}
