//! Small dense linear algebra used by the spectral routines.
//!
//! Nothing here is tuned for large dense problems; the heavy lifting on
//! samples happens on banded storage in [`band`].

pub mod band;
pub mod bidiag;
pub mod dense;

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// The first `nrows` rows of the `n`-by-`n` identity.
    pub fn identity_rows(nrows: usize, n: usize) -> Self {
        let mut m = Self::zeros(nrows, n);
        for i in 0..nrows.min(n) {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from row-major nested slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        Self::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            for l in 0..self.ncols {
                let b = other[(l, j)];
                if b == 0.0 {
                    continue;
                }
                let a = self.col(l);
                let o = out.col_mut(j);
                for i in 0..a.len() {
                    o[i] += a[i] * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.ncols, x.len(), "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// Keep only the first `ncols` columns.
    pub fn truncate_cols(&mut self, ncols: usize) {
        assert!(ncols <= self.ncols);
        self.data.truncate(ncols * self.nrows);
        self.ncols = ncols;
    }

    /// Rotate columns `i` and `j` in place:
    /// `col_i <- c col_i + s col_j`, `col_j <- -s col_i + c col_j`.
    pub fn rotate_cols(&mut self, i: usize, j: usize, c: f64, s: f64) {
        debug_assert!(i != j);
        let n = self.nrows;
        let (lo, hi, swap) = if i < j { (i, j, false) } else { (j, i, true) };
        let (head, tail) = self.data.split_at_mut(hi * n);
        let a = &mut head[lo * n..(lo + 1) * n];
        let b = &mut tail[..n];
        let (ci, cj) = if swap { (b, a) } else { (a, b) };
        for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
            let (xv, yv) = (*x, *y);
            *x = c * xv + s * yv;
            *y = -s * xv + c * yv;
        }
    }

    pub fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.nrows {
            self.data.swap(i * self.nrows + r, j * self.nrows + r);
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

/// Plane rotation `(c, s, r)` with `c a + s b = r` and `-s a + c b = 0`.
#[inline]
pub fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (1.0, 0.0, a)
    } else if a == 0.0 {
        (0.0, 1.0, b)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * a.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn givens_zeroes_second_component() {
        for (a, b) in [(3.0, 4.0), (-1.0, 2.0), (0.0, 5.0), (2.0, 0.0), (1e-300, 1e-300)] {
            let (c, s, r) = givens(a, b);
            assert!((c * a + s * b - r).abs() <= 1e-15 * r.abs().max(1e-300));
            assert!((-s * a + c * b).abs() <= 1e-15 * r.abs().max(1e-300));
            assert!((c * c + s * s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rotate_cols_matches_explicit_formula() {
        let mut m = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let (c, s) = (0.6, 0.8);
        m.rotate_cols(2, 0, c, s);
        // col2 <- c col2 + s col0 ; col0 <- -s col2 + c col0
        assert!((m[(0, 2)] - (0.6 * 3.0 + 0.8 * 1.0)).abs() < 1e-15);
        assert!((m[(0, 0)] - (-0.8 * 3.0 + 0.6 * 1.0)).abs() < 1e-15);
        assert!((m[(1, 2)] - (0.6 * 6.0 + 0.8 * 4.0)).abs() < 1e-15);
    }

    #[test]
    fn norm2_survives_extreme_scales() {
        assert_eq!(norm2(&[0.0, 0.0]), 0.0);
        assert!((norm2(&[3e200, 4e200]) / 5e200 - 1.0).abs() < 1e-15);
        assert!((norm2(&[3e-200, 4e-200]) / 5e-200 - 1.0).abs() < 1e-15);
    }
}
