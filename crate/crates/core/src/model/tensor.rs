//! Dense row-major matrices and the numeric kernels shared by the inference
//! path and the differentiable graph, so both produce identical values.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Matrix::from_vec(1, data.len(), data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self · other`
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (oj, bkj) in o.iter_mut().zip(other.row(k)) {
                    *oj += aik * bkj;
                }
            }
        }
        out
    }

    /// `self · otherᵀ`
    pub fn matmul_bt(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_bt inner dimension");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
        out
    }

    /// `selfᵀ · other`
    pub fn matmul_at(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "matmul_at inner dimension");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a = self.row(k);
            let b = other.row(k);
            for (i, &aki) in a.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (oj, bkj) in o.iter_mut().zip(b) {
                    *oj += aki * bkj;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "add shape");
        self.zip_map(other, |a, b| a + b)
    }

    pub fn hadamard(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "hadamard shape");
        self.zip_map(other, |a, b| a * b)
    }

    /// Adds the `1 × cols` row `bias` to every row.
    pub fn add_row(&self, bias: &Matrix) -> Matrix {
        assert_eq!((1, self.cols), bias.shape(), "bias shape");
        let mut out = self.clone();
        for i in 0..out.rows {
            for (o, b) in out.row_mut(i).iter_mut().zip(&bias.data) {
                *o += b;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix::from_vec(self.rows, self.cols, self.data.iter().map(|&x| f(x)).collect())
    }

    fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        Matrix::from_vec(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn softmax_rows(&self) -> Matrix {
        let mut out = self.clone();
        for i in 0..out.rows {
            softmax_in_place(out.row_mut(i));
        }
        out
    }

    pub fn log_softmax_rows(&self) -> Matrix {
        let mut out = self.clone();
        for i in 0..out.rows {
            let row = out.row_mut(i);
            let lse = log_sum_exp(row);
            for x in row.iter_mut() {
                *x -= lse;
            }
        }
        out
    }

    /// Mean of rows `start..=end`, as a `1 × cols` matrix.
    pub fn mean_rows(&self, start: usize, end: usize) -> Matrix {
        assert!(start <= end && end < self.rows, "mean_rows range");
        let n = (end - start + 1) as f64;
        let mut out = vec![0.0; self.cols];
        for i in start..=end {
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += x;
            }
        }
        for o in &mut out {
            *o /= n;
        }
        Matrix::row_vector(out)
    }

    pub fn concat_rows(parts: &[&Matrix]) -> Matrix {
        let cols = parts.first().map_or(0, |m| m.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            assert_eq!(p.cols, cols, "concat_rows width");
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Matrix::from_vec(rows, cols, data)
    }

    pub fn gather_rows(&self, ids: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(ids.len() * self.cols);
        for &id in ids {
            data.extend_from_slice(self.row(id));
        }
        Matrix::from_vec(ids.len(), self.cols, data)
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in xs.iter_mut() {
        *x /= total;
    }
}

/// `Σ cᵢ·mᵢ`, skipping zero coefficients. A lone term with coefficient 1 is
/// returned unchanged.
pub fn lin_comb(terms: &[(&Matrix, f64)]) -> Matrix {
    let live: Vec<_> = terms.iter().filter(|(_, c)| *c != 0.0).collect();
    let first = live.first().expect("lin_comb needs a nonzero coefficient");
    let mut out = first.0.map(|x| first.1 * x);
    for (m, c) in &live[1..] {
        assert_eq!(m.shape(), out.shape(), "lin_comb shape");
        for (o, x) in out.data.iter_mut().zip(&m.data) {
            *o += c * x;
        }
    }
    out
}
