//! Small dense linear algebra over [`Scalar`].
//!
//! Everything here is sized for this crate's problems (at most a few hundred
//! rows). Exact mode uses fraction-exact Gaussian elimination; float mode uses
//! partial pivoting with a relative threshold, and SVD for ranks.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{G2Error, Result};
use crate::scalar::{Mode, Scalar};

/// Relative singular-value cutoff for float rank decisions.
pub const RANK_REL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// A 7x7 matrix: endomorphisms, bilinear forms and group elements of SO(7).
pub type Matrix7<S> = Mat<S>;

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(G2Error::Dimension(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<S>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i].clone())
    }

    pub fn diag(entries: &[S]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
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

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, k: &S) -> Self {
        self.map(|x| x.clone() * k.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(S::zero(), |acc, j| {
                    if v[j].is_zero() {
                        acc
                    } else {
                        acc + self[(i, j)].clone() * v[j].clone()
                    }
                })
            })
            .collect()
    }

    /// Commutator `self * other - other * self`.
    pub fn bracket(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..i).all(|j| self[(i, j)].near(&self[(j, i)], tol)))
    }

    pub fn is_antisymmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..=i).all(|j| (self[(i, j)].clone() + self[(j, i)].clone()).is_zero_tol(tol))
            })
    }

    pub fn symmetrized(&self) -> Self {
        let half = S::from_ratio(1, 2);
        self.add(&self.transpose()).scale(&half)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Frobenius norm, evaluated in f64.
    pub fn norm_f64(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.near(b, tol))
    }

    pub fn to_f64(&self) -> Mat<f64> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.to_f64()).collect() }
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.to_f64().data)
    }

    /// Reduced row echelon form and pivot columns. In float mode an entry is
    /// treated as zero when it is below `tol` times the largest entry.
    pub fn rref(&self, tol: f64) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let thresh = tol * self.max_abs().max(1.0);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let pick = match S::MODE {
                Mode::Exact => (r..m.rows).find(|&i| !m[(i, c)].is_zero()),
                Mode::Float => (r..m.rows)
                    .max_by(|&a, &b| {
                        m[(a, c)].to_f64().abs().total_cmp(&m[(b, c)].to_f64().abs())
                    })
                    .filter(|&i| !m[(i, c)].is_zero_tol(thresh)),
            };
            let Some(p) = pick else { continue };
            m.swap_rows(r, p);
            let inv = S::one() / m[(r, c)].clone();
            for j in c..m.cols {
                m[(r, j)] = m[(r, j)].clone() * inv.clone();
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    if m[(r, j)].is_zero() {
                        continue;
                    }
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Rank. Exact mode: elimination. Float mode: singular values above
    /// [`RANK_REL_TOL`] times the largest.
    pub fn rank(&self) -> usize {
        match S::MODE {
            Mode::Exact => self.rref(0.0).1.len(),
            Mode::Float => {
                let sv = self.singular_values();
                let top = sv.first().copied().unwrap_or(0.0);
                if top == 0.0 {
                    return 0;
                }
                sv.iter().filter(|&&s| s > RANK_REL_TOL * top).count()
            }
        }
    }

    /// Singular values in decreasing order (computed in f64).
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Vec::new();
        }
        let mut sv: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Basis of the right nullspace. Exact mode: from the reduced row echelon
    /// form (`tol` unused). Float mode: orthonormal right singular vectors whose
    /// singular values fall below `tol` or [`RANK_REL_TOL`] times the largest,
    /// whichever is bigger.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<S>> {
        if S::MODE == Mode::Float {
            return self.nullspace_svd(tol);
        }
        let (r, pivots) = self.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    fn nullspace_svd(&self, tol: f64) -> Vec<Vec<S>> {
        let n = self.cols;
        if n == 0 {
            return Vec::new();
        }
        let padded = DMatrix::from_fn(self.rows.max(n), n, |i, j| {
            if i < self.rows {
                self[(i, j)].to_f64()
            } else {
                0.0
            }
        });
        let svd = padded.svd(false, true);
        let v_t = svd.v_t.expect("requested v_t");
        let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cutoff = (RANK_REL_TOL * top).max(tol);
        (0..n)
            .filter(|&k| svd.singular_values[k] <= cutoff)
            .map(|k| (0..n).map(|j| S::from_f64(v_t[(k, j)]).expect("float mode")).collect())
            .collect()
    }

    /// Solves `self * x = rhs` for a consistent system with full column rank.
    /// Returns the solution and the max-abs residual of the check.
    pub fn solve(&self, rhs: &[S], tol: f64) -> Result<(Vec<S>, f64)> {
        assert_eq!(rhs.len(), self.rows);
        let aug = Self::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                rhs[i].clone()
            }
        });
        let (r, pivots) = aug.rref(tol);
        if pivots.contains(&self.cols) {
            let residual = r[(pivots.len() - 1, self.cols)].to_f64().abs();
            return Err(G2Error::NoSolution { residual: residual.max(f64::MIN_POSITIVE) });
        }
        if pivots.len() < self.cols {
            return Err(G2Error::Dimension("linear system is rank deficient".into()));
        }
        let x: Vec<S> = (0..self.cols).map(|i| r[(i, self.cols)].clone()).collect();
        let ax = self.mul_vec(&x);
        let residual = ax
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max);
        Ok((x, residual))
    }

    pub fn det(&self) -> S {
        assert!(self.is_square());
        let n = self.rows;
        let e = |i: usize, j: usize| self[(i, j)].clone();
        match n {
            0 => return S::one(),
            1 => return e(0, 0),
            2 => return e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
            3 => {
                return e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                    - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
            }
            _ => {}
        }
        let mut m = self.clone();
        let mut det = S::one();
        for c in 0..n {
            let pick = match S::MODE {
                Mode::Exact => (c..n).find(|&i| !m[(i, c)].is_zero()),
                Mode::Float => (c..n)
                    .max_by(|&a, &b| m[(a, c)].to_f64().abs().total_cmp(&m[(b, c)].to_f64().abs()))
                    .filter(|&i| !m[(i, c)].is_zero()),
            };
            let Some(p) = pick else { return S::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone() / piv.clone();
                for j in c..n {
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(c, j)].clone();
                }
            }
        }
        det
    }

    pub fn inverse(&self, tol: f64) -> Result<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                S::one()
            } else {
                S::zero()
            }
        });
        let (r, pivots) = aug.rref(tol);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(G2Error::Dimension("matrix is singular".into()));
        }
        Ok(Self::from_fn(n, n, |i, j| r[(i, j + n)].clone()))
    }

    /// Positive definiteness of a symmetric matrix: leading principal minors
    /// in exact mode, smallest eigenvalue `>= tol` in float mode.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        if !self.is_symmetric(tol) {
            return false;
        }
        match S::MODE {
            Mode::Exact => (1..=self.rows).all(|k| {
                Self::from_fn(k, k, |i, j| self[(i, j)].clone()).det().is_positive()
            }),
            Mode::Float => {
                let eig = self.to_nalgebra().symmetric_eigen();
                eig.eigenvalues.iter().all(|&l| l >= tol)
            }
        }
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix exponential by scaling and squaring with a diagonal [6/6] Padé
/// approximant. Float mode only.
pub fn expm<S: Scalar>(a: &Mat<S>) -> Result<Mat<S>> {
    if S::MODE == Mode::Exact {
        return Err(G2Error::ExactModeUnsupported("the matrix exponential"));
    }
    assert!(a.is_square());
    let a = a.to_f64();
    let n = a.rows();
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.scale(&(0.5f64).powi(squarings));

    // Padé [6/6] coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
    const Q: usize = 6;
    let mut c = [0.0f64; Q + 1];
    c[0] = 1.0;
    for k in 1..=Q {
        c[k] = c[k - 1] * (Q - k + 1) as f64 / (k as f64 * (2 * Q - k + 1) as f64);
    }
    let ident = Mat::<f64>::identity(n);
    let mut num = ident.clone();
    let mut den = ident.clone();
    let mut power = ident;
    for (k, ck) in c.iter().enumerate().skip(1) {
        power = power.mul(&scaled);
        let term = power.scale(ck);
        num = num.add(&term);
        den = if k % 2 == 0 { den.add(&term) } else { den.sub(&term) };
    }
    let mut result = den.inverse(1e-14)?.mul(&num);
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    Ok(Mat::from_fn(n, n, |i, j| S::from_f64(result[(i, j)]).expect("float mode")))
}
