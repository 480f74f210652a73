//! Row-major dense matrices and the Cholesky routines everything else
//! builds on.
//!
//! All arithmetic is `f64`: the log-determinants and mutual-information
//! estimates downstream are too sensitive to cancellation for anything
//! narrower. Log-determinants are always taken from the Cholesky diagonal,
//! never from a determinant expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base jitter is this factor times the mean diagonal entry.
pub const BASE_JITTER_SCALE: f64 = 1e-8;
/// The jitter doubles this many times before giving up.
pub const MAX_JITTER_DOUBLINGS: u32 = 6;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
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

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, checking length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix construction".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::shape("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged rows"));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
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

    /// Single-column matrix from a slice.
    pub fn column(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::shape("add: dimension mismatch"));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::shape("sub: dimension mismatch"));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Returns a copy with `v` added to every diagonal entry.
    pub fn add_diagonal(&self, v: f64) -> Matrix {
        debug_assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] += v;
        }
        out
    }

    pub fn diag_mean(&self) -> f64 {
        debug_assert!(self.is_square());
        if self.rows == 0 {
            return 0.0;
        }
        (0..self.rows).map(|i| self.get(i, i)).sum::<f64>() / self.rows as f64
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        debug_assert_eq!(self.data.len(), rhs.data.len());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Column means — the task representation used by the diversity baseline.
    pub fn column_means(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.get(i, j);
            }
        }
        for o in &mut out {
            *o /= self.rows as f64;
        }
        out
    }

    /// Plain lower Cholesky; fails on any non-positive pivot. Only the lower
    /// triangle of `self` is read, so tiny floating asymmetry is harmless.
    pub fn cholesky(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::shape("cholesky needs a square matrix"));
        }
        let n = self.rows;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.data[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::Decomposition {
                            attempted_jitter: 0.0,
                        });
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Matrix {
            rows: n,
            cols: n,
            data: l,
        })
    }

    /// Cholesky with the jitter ladder: on failure, add
    /// `BASE_JITTER_SCALE * mean(diag)` to the diagonal and retry, doubling
    /// up to [`MAX_JITTER_DOUBLINGS`] times. Returns the factor and the
    /// jitter that succeeded.
    pub fn cholesky_jittered(&self) -> Result<(Matrix, f64)> {
        match self.cholesky() {
            Ok(l) => return Ok((l, 0.0)),
            Err(Error::Decomposition { .. }) => {}
            Err(e) => return Err(e),
        }
        let base = BASE_JITTER_SCALE * self.diag_mean();
        let mut jitter = base;
        for _ in 0..=MAX_JITTER_DOUBLINGS {
            if let Ok(l) = self.add_diagonal(jitter).cholesky() {
                return Ok((l, jitter));
            }
            jitter *= 2.0;
        }
        Err(Error::Decomposition {
            attempted_jitter: jitter / 2.0,
        })
    }
}

/// Solves `L x = b` by forward substitution; `L` lower triangular.
pub fn solve_lower(l: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = l.rows();
    if !l.is_square() || b.rows() != n {
        return Err(Error::shape("solve_lower: dimension mismatch"));
    }
    let m = b.cols();
    let mut x = b.clone();
    for c in 0..m {
        for i in 0..n {
            let mut sum = x.get(i, c);
            for k in 0..i {
                sum -= l.get(i, k) * x.get(k, c);
            }
            x.set(i, c, sum / l.get(i, i));
        }
    }
    Ok(x)
}

/// Solves `L^T x = b` by back substitution; `L` lower triangular.
pub fn solve_lower_transpose(l: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = l.rows();
    if !l.is_square() || b.rows() != n {
        return Err(Error::shape("solve_lower_transpose: dimension mismatch"));
    }
    let m = b.cols();
    let mut x = b.clone();
    for c in 0..m {
        for i in (0..n).rev() {
            let mut sum = x.get(i, c);
            for k in i + 1..n {
                sum -= l.get(k, i) * x.get(k, c);
            }
            x.set(i, c, sum / l.get(i, i));
        }
    }
    Ok(x)
}

/// Solves `A x = b` given the lower Cholesky factor `L` of `A`.
pub fn solve_cholesky(l: &Matrix, b: &Matrix) -> Result<Matrix> {
    let y = solve_lower(l, b)?;
    solve_lower_transpose(l, &y)
}

/// Dense inverse of `A` from its Cholesky factor (solves against identity).
pub fn inverse_from_cholesky(l: &Matrix) -> Result<Matrix> {
    solve_cholesky(l, &Matrix::identity(l.rows()))
}

/// `log det A` from the Cholesky factor of `A`.
pub fn log_det_from_cholesky(l: &Matrix) -> f64 {
    (0..l.rows()).map(|i| l.get(i, i).ln()).sum::<f64>() * 2.0
}
