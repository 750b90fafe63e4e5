//! Dense linear algebra for small symmetric problems.
//!
//! Everything here is sized for `d` up to a few hundred. Matrices are stored
//! row-major in a flat `Vec<f64>`.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm target, relative to `‖M‖_F`.
pub const JACOBI_TOL: f64 = 1e-13;
/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Default relative cutoff below which eigenvalues count as zero in a pseudo-inverse.
pub const PINV_REL_TOL: f64 = 1e-10;

/// A dense real vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    /// Checked constructor: non-empty with finite entries.
    pub fn try_new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector must have at least one entry"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vector entries must be finite"));
        }
        Ok(Vector(entries))
    }

    /// Standard basis vector `e_i` in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = Vector::zeros(d);
        v.0[i] = 1.0;
        v
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize) -> f64) -> Self {
        Vector((0..d).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &[f64]) -> Vector {
        debug_assert_eq!(self.dim(), other.len());
        Vector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        debug_assert_eq!(self.dim(), other.len());
        Vector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &[f64]) {
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += c * b;
        }
    }

    /// Unit vector in the same direction; errors on the zero vector.
    pub fn normalized(&self) -> Result<Vector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// General dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, v: &[f64]) -> Vector {
        debug_assert_eq!(v.len(), self.cols);
        Vector::from_fn(self.rows, |i| dot(self.row(i), v))
    }

    /// `selfᵀ v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vector {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = Vector::zeros(self.cols);
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                out.axpy(*vi, self.row(i));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        out
    }

    /// `(1/scale) selfᵀ self`, always exactly symmetric.
    pub fn gram(&self, scale: f64) -> SymMatrix {
        let d = self.cols;
        let mut out = Matrix::zeros(d, d);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..d {
                let xi = row[i];
                if xi == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * d..(i + 1) * d];
                for j in i..d {
                    dst[j] += xi * row[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = out[(i, j)] / scale;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymMatrix(out)
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// `self += c * u vᵀ`
    pub fn add_outer(&mut self, c: f64, u: &[f64], v: &[f64]) {
        for (i, ui) in u.iter().enumerate() {
            let cu = c * ui;
            if cu == 0.0 {
                continue;
            }
            let dst = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (d, vj) in dst.iter_mut().zip(v) {
                *d += cu * vj;
            }
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute asymmetry `|m_ij - m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix with `m[i][j] == m[j][i]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn identity(d: usize) -> Self {
        SymMatrix(Matrix::identity(d))
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix(Matrix::zeros(d, d))
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = *e;
        }
        SymMatrix(m)
    }

    /// Builds from the upper triangle of `f`, mirroring into the lower triangle.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    /// Accepts a square matrix whose asymmetry is within `tol · (1 + ‖M‖_F)` and
    /// averages it with its transpose.
    pub fn from_dense(m: Matrix, tol: f64) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::invalid(format!(
                "expected a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let asym = m.asymmetry();
        if asym > tol * (1.0 + m.frobenius()) {
            return Err(Error::invalid(format!("matrix is not symmetric (asymmetry {asym:e})")));
        }
        let d = m.rows();
        Ok(SymMatrix::from_fn(d, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// `u uᵀ`
    pub fn outer(u: &[f64]) -> Self {
        SymMatrix::from_fn(u.len(), |i, j| u[i] * u[j])
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matvec(&self, v: &[f64]) -> Vector {
        self.0.matvec(v)
    }

    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m[(i, i)] += shift;
        }
        SymMatrix(m)
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix(self.0.scaled(c))
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(self.0.add(&other.0))
    }

    /// `B M B` for symmetric `B`, symmetrized.
    pub fn sandwich(&self, b: &SymMatrix) -> SymMatrix {
        let prod = b.0.matmul(&self.0).matmul(&b.0);
        let d = self.dim();
        SymMatrix::from_fn(d, |i, j| 0.5 * (prod[(i, j)] + prod[(j, i)]))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.frobenius()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

/// `M = V diag(values) Vᵀ` with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Orthogonal matrix whose columns are the eigenvectors.
    pub vectors: Matrix,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `Vᵀ x`: coordinates of `x` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &[f64]) -> Vector {
        self.vectors.tr_matvec(x)
    }

    /// `V c`
    pub fn from_eigenbasis(&self, coords: &[f64]) -> Vector {
        self.vectors.matvec(coords)
    }

    /// `V diag(f(λ_i)) Vᵀ x`
    pub fn apply_fn(&self, x: &[f64], mut f: impl FnMut(f64) -> f64) -> Vector {
        let mut c = self.to_eigenbasis(x);
        for (ci, &l) in c.iter_mut().zip(&self.values) {
            *ci *= f(l);
        }
        self.from_eigenbasis(&c)
    }

    /// Dense `V diag(f(λ_i)) Vᵀ`.
    pub fn matrix_fn(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let g: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        self.matrix_from_diag(&g)
    }

    /// Dense `V diag(g) Vᵀ`.
    pub fn matrix_from_diag(&self, g: &[f64]) -> SymMatrix {
        let d = self.dim();
        let v = &self.vectors;
        SymMatrix::from_fn(d, |i, j| (0..d).map(|k| v[(i, k)] * g[k] * v[(j, k)]).sum())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.matrix_fn(|l| l)
    }

    /// Threshold below which an eigenvalue is treated as zero.
    pub fn zero_cutoff(&self, rel_tol: f64) -> f64 {
        rel_tol * self.values.iter().fold(0.0f64, |m, l| m.max(l.abs()))
    }

    /// Orthogonality residual `‖VᵀV − I‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let vtv = self.vectors.transpose().matmul(&self.vectors);
        vtv.sub(&Matrix::identity(self.dim())).frobenius()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let target = JACOBI_TOL * m.frobenius();

    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    let mut off = off_norm(&a);
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        off = off_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition {
        values,
        vectors,
        sweeps,
    })
}

/// Checks that every eigenvalue is at least `-1e-8 · λ_max`.
pub(crate) fn check_psd(eig: &EigenDecomposition) -> Result<()> {
    let scale = eig.lambda_max().max(0.0);
    let min = eig.lambda_min();
    if min < -1e-8 * scale || (scale == 0.0 && min < 0.0) {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    Ok(())
}

/// `M† v` for symmetric PSD `M`, zeroing eigenvalues `≤ rel_tol · λ_max`.
pub fn pinv_apply(m: &SymMatrix, v: &[f64], rel_tol: f64) -> Result<Vector> {
    check_dim(m.dim(), v.len())?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let eig = sym_eigen(m)?;
    check_psd(&eig)?;
    Ok(pinv_apply_eigen(&eig, v, rel_tol))
}

/// Pseudo-inverse application reusing an existing decomposition.
pub fn pinv_apply_eigen(eig: &EigenDecomposition, v: &[f64], rel_tol: f64) -> Vector {
    let cutoff = eig.zero_cutoff(rel_tol);
    eig.apply_fn(v, |l| if l > cutoff { 1.0 / l } else { 0.0 })
}

/// Solves `M x = b` for symmetric positive definite `M` by Cholesky factorization.
pub fn cholesky_solve(m: &SymMatrix, b: &[f64]) -> Result<Vector> {
    let n = m.dim();
    check_dim(n, b.len())?;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m.get(j, j);
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Singular);
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(Vector::from(x))
}

/// The matrix `(α − κ) ŵŵᵀ + κ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedIdentity {
    direction: Vector,
    spike: f64,
    bulk: f64,
}

impl SpikedIdentity {
    /// `direction` is normalized here; it must be non-zero.
    pub fn new(direction: &[f64], spike: f64, bulk: f64) -> Result<Self> {
        if !spike.is_finite() || !bulk.is_finite() {
            return Err(Error::invalid("spike and bulk must be finite"));
        }
        let direction = Vector::try_new(direction.to_vec())?.normalized()?;
        Ok(SpikedIdentity {
            direction,
            spike,
            bulk,
        })
    }

    /// `κ I` written in spiked form around `direction`.
    pub fn scaled_identity(direction: &[f64], kappa: f64) -> Result<Self> {
        SpikedIdentity::new(direction, kappa, kappa)
    }

    pub fn direction(&self) -> &Vector {
        &self.direction
    }

    /// Eigenvalue `α` along the direction.
    pub fn spike(&self) -> f64 {
        self.spike
    }

    /// Eigenvalue `κ` on the orthogonal complement.
    pub fn bulk(&self) -> f64 {
        self.bulk
    }

    pub fn dim(&self) -> usize {
        self.direction.dim()
    }

    pub fn matvec(&self, v: &[f64]) -> Vector {
        let proj = self.direction.dot(v);
        let mut out = Vector::from(v.to_vec()).scaled(self.bulk);
        out.axpy((self.spike - self.bulk) * proj, &self.direction);
        out
    }

    /// `S M` for a dense `M` with `d` rows, in `O(d · cols)`.
    pub fn mul_left(&self, m: &Matrix) -> Matrix {
        let u = m.tr_matvec(&self.direction);
        let mut out = m.scaled(self.bulk);
        out.add_outer(self.spike - self.bulk, &self.direction, &u);
        out
    }

    pub fn to_dense(&self) -> SymMatrix {
        let u = &self.direction;
        let gap = self.spike - self.bulk;
        SymMatrix::from_fn(self.dim(), |i, j| {
            let id = if i == j { self.bulk } else { 0.0 };
            gap * u[i] * u[j] + id
        })
    }

    /// `(S + shift·I)⁻¹ v` using the two-eigenvalue structure.
    pub fn solve_shifted(&self, shift: f64, v: &[f64]) -> Result<Vector> {
        check_dim(self.dim(), v.len())?;
        let top = self.spike + shift;
        let rest = self.bulk + shift;
        if !(top > 0.0) || !(rest > 0.0) {
            return Err(Error::Singular);
        }
        let proj = self.direction.dot(v);
        let mut out = Vector::from(v.to_vec()).scaled(1.0 / rest);
        out.axpy((1.0 / top - 1.0 / rest) * proj, &self.direction);
        Ok(out)
    }

    /// Best spiked approximation of `m` around `direction`, with the Frobenius residual.
    ///
    /// The spike is `ûᵀ M û` and the bulk is the mean of the remaining trace.
    pub fn project(m: &Matrix, direction: &[f64]) -> Result<(SpikedIdentity, f64)> {
        let d = direction.len();
        check_dim(d, m.rows())?;
        check_dim(d, m.cols())?;
        let u = Vector::from(direction.to_vec()).normalized()?;
        let spike = u.dot(&m.matvec(&u));
        let bulk = if d > 1 {
            (m.trace() - spike) / (d - 1) as f64
        } else {
            spike
        };
        let s = SpikedIdentity {
            direction: u,
            spike,
            bulk,
        };
        let resid = m.sub(s.to_dense().as_matrix()).frobenius();
        Ok((s, resid))
    }
}

/// Convenience: `spiked.to_dense()`.
pub fn spiked_to_dense(s: &SpikedIdentity) -> SymMatrix {
    s.to_dense()
}

/// Convenience: `spiked.solve_shifted(shift, v)`.
pub fn spiked_solve(s: &SpikedIdentity, shift: f64, v: &[f64]) -> Result<Vector> {
    s.solve_shifted(shift, v)
}
