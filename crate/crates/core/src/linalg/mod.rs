//! Dense linear algebra kernel.
//!
//! Rows of a [`Matrix`] are data points and columns are features. Everything
//! downstream (estimators, error decomposition, ablations) is expressed in
//! terms of the thin SVD computed in [`svd`].

mod cholesky;
mod svd;

pub use cholesky::Cholesky;
pub use svd::{project_onto_rowspace, pseudoinverse_apply, svd, truncate_svd, SvdResult};

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major. All entries are finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Dense real vector with finite entries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("Matrix::new", rows * cols, data.len()));
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::dims("Matrix::from_rows", cols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// finite inputs.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Matrix::from_raw(self.cols, self.rows, data)
    }

    /// `X v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vector> {
        if v.len() != self.cols {
            return Err(Error::dims("matvec", self.cols, v.len()));
        }
        Ok(Vector(self.row_iter().map(|r| dot(r, v)).collect()))
    }

    /// `Xᵀ v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vector> {
        if v.len() != self.rows {
            return Err(Error::dims("tr_matvec", self.rows, v.len()));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &w) in self.row_iter().zip(v) {
            axpy(w, row, &mut out);
        }
        Ok(Vector(out))
    }

    /// `XᵀX` (D×D).
    pub fn gram_cols(&self) -> Matrix {
        let d = self.cols;
        let mut g = vec![0.0; d * d];
        for row in self.row_iter() {
            for a in 0..d {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..d {
                    g[a * d + b] += ra * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                g[a * d + b] = g[b * d + a];
            }
        }
        Matrix::from_raw(d, d, g)
    }

    /// `XXᵀ` (N×N).
    pub fn gram_rows(&self) -> Matrix {
        let n = self.rows;
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let v = dot(self.row(a), self.row(b));
                g[a * n + b] = v;
                g[b * n + a] = v;
            }
        }
        Matrix::from_raw(n, n, g)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_raw(indices.len(), self.cols, data)
    }

    /// First `n` rows.
    pub fn head_rows(&self, n: usize) -> Matrix {
        let n = n.min(self.rows);
        Matrix::from_raw(n, self.cols, self.data[..n * self.cols].to_vec())
    }

    /// First `n` columns.
    pub fn head_cols(&self, n: usize) -> Matrix {
        let n = n.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * n);
        for row in self.row_iter() {
            data.extend_from_slice(&row[..n]);
        }
        Matrix::from_raw(self.rows, n, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn map_rows<F>(&self, mut f: F) -> Result<Matrix>
    where
        F: FnMut(&[f64]) -> Result<Vector>,
    {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.row_iter() {
            let out = f(row)?;
            if out.len() != self.cols {
                return Err(Error::dims("map_rows", self.cols, out.len()));
            }
            data.extend_from_slice(&out);
        }
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn select(&self, indices: &[usize]) -> Vector {
        Vector(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn head(&self, n: usize) -> Vector {
        Vector(self.0[..n.min(self.0.len())].to_vec())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Vector::new(values)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    // scaled to avoid overflow on the huge coefficients seen at the threshold
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * a.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `‖a − b‖₂`
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}
