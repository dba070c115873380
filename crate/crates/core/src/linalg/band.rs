//! Reduction of a lower-banded matrix to upper bidiagonal form with plane
//! rotations.
//!
//! The input is a tall `r x c` matrix (`r >= c`) with `k` subdiagonals. A
//! Givens QR sweep turns it into a `c x c` upper triangular matrix with `k`
//! superdiagonals, and a bulge chase (each elimination pushes a single fill
//! element down the band and off the end) removes all but the first
//! superdiagonal. Work is `O(k c^2)`, against `O(r c^2)` for dense
//! Householder.

use super::bidiag::bidiag_svd;
use super::{givens, Mat};
use crate::error::{Error, Result};

/// Which singular-vector data to carry through the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vectors {
    None,
    /// The first `n` rows of `U` only.
    LeadingRows(usize),
    /// Thin `U` (`r x c`) and `V` (`c x c`).
    Full,
}

#[derive(Debug, Clone)]
pub struct BandSvd {
    pub values: Vec<f64>,
    /// Rows of `U` as requested: `n x c` for `LeadingRows(n)`, `r x c` for `Full`.
    pub left: Option<Mat>,
    pub right: Option<Mat>,
}

/// Band storage with `lo` sub- and `hi` superdiagonals, row-major.
struct Work {
    lo: usize,
    width: usize,
    data: Vec<f64>,
}

impl Work {
    fn new(rows: usize, lo: usize, hi: usize) -> Self {
        let width = lo + hi + 1;
        Self {
            lo,
            width,
            data: vec![0.0; rows * width],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lo >= i && j + self.lo - i < self.width, "({i},{j}) outside band");
        i * self.width + (j + self.lo - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, x: f64) {
        let k = self.idx(i, j);
        self.data[k] = x;
    }

    /// `row_a <- c row_a + s row_b`, `row_b <- -s row_a + c row_b` on columns `cols`.
    fn rotate_rows(&mut self, a: usize, b: usize, cols: std::ops::RangeInclusive<usize>, c: f64, s: f64) {
        for j in cols {
            let (ia, ib) = (self.idx(a, j), self.idx(b, j));
            let (x, y) = (self.data[ia], self.data[ib]);
            self.data[ia] = c * x + s * y;
            self.data[ib] = -s * x + c * y;
        }
    }

    fn rotate_cols(&mut self, a: usize, b: usize, rows: std::ops::RangeInclusive<usize>, c: f64, s: f64) {
        for i in rows {
            let (ia, ib) = (self.idx(i, a), self.idx(i, b));
            let (x, y) = (self.data[ia], self.data[ib]);
            self.data[ia] = c * x + s * y;
            self.data[ib] = -s * x + c * y;
        }
    }
}

/// SVD of the `rows x cols` lower-banded matrix whose `t`-th subdiagonal is
/// `bands[t]` (entry `(j + t, j)` at `bands[t][j]`). Requires `rows >= cols`
/// and at least one band.
pub fn band_svd(rows: usize, cols: usize, bands: &[Vec<f64>], vectors: Vectors) -> Result<BandSvd> {
    assert!(rows >= cols, "band_svd expects a tall block");
    assert!(!bands.is_empty());
    let k = bands.len() - 1;
    let (r, c) = (rows, cols);
    if bands.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("banded matrix has non-finite entries".into()));
    }
    if c == 0 {
        return Ok(BandSvd {
            values: vec![],
            left: None,
            right: None,
        });
    }

    let mut w = Work::new(r, k.max(1), k + 1);
    for (t, band) in bands.iter().enumerate() {
        for (j, &x) in band.iter().enumerate() {
            if j + t < r && j < c {
                w.set(j + t, j, x);
            }
        }
    }

    let mut left = match vectors {
        Vectors::None => None,
        Vectors::LeadingRows(n) => Some(Mat::identity_rows(n.min(r), r)),
        Vectors::Full => Some(Mat::identity(r)),
    };
    let mut right = match vectors {
        Vectors::Full => Some(Mat::identity(c)),
        _ => None,
    };

    // QR sweep: pivot row j absorbs the k entries below it in column j.
    for j in 0..c {
        let last_col = (j + k).min(c - 1);
        for t in 1..=k {
            let i = j + t;
            if i >= r {
                break;
            }
            let below = w.get(i, j);
            if below == 0.0 {
                continue;
            }
            let (cs, sn, rr) = givens(w.get(j, j), below);
            w.rotate_rows(j, i, j + 1..=last_col, cs, sn);
            w.set(j, j, rr);
            w.set(i, j, 0.0);
            if let Some(u) = left.as_mut() {
                u.rotate_cols(j, i, cs, sn);
            }
        }
    }
    if let Some(u) = left.as_mut() {
        u.truncate_cols(c);
    }

    // Bulge chase on the c x c upper band of width k.
    let b = k;
    if b >= 2 {
        for i in 0..c.saturating_sub(2) {
            for j in (i + 2..=(i + b).min(c - 1)).rev() {
                let target = w.get(i, j);
                if target == 0.0 {
                    continue;
                }
                let (cs, sn, rr) = givens(w.get(i, j - 1), target);
                w.rotate_cols(j - 1, j, i + 1..=j, cs, sn);
                w.set(i, j - 1, rr);
                w.set(i, j, 0.0);
                if let Some(v) = right.as_mut() {
                    v.rotate_cols(j - 1, j, cs, sn);
                }

                // fill sits at (col, col - 1)
                let mut col = j;
                loop {
                    let fill = w.get(col, col - 1);
                    if fill != 0.0 {
                        let (cs, sn, rr) = givens(w.get(col - 1, col - 1), fill);
                        let last = (col + b).min(c - 1);
                        w.rotate_rows(col - 1, col, col..=last, cs, sn);
                        w.set(col - 1, col - 1, rr);
                        w.set(col, col - 1, 0.0);
                        if let Some(u) = left.as_mut() {
                            u.rotate_cols(col - 1, col, cs, sn);
                        }
                    }
                    if col + b >= c {
                        break;
                    }
                    // fill sits at (col - 1, col + b)
                    let fill = w.get(col - 1, col + b);
                    if fill == 0.0 {
                        break;
                    }
                    let (cs, sn, rr) = givens(w.get(col - 1, col + b - 1), fill);
                    w.rotate_cols(col + b - 1, col + b, col..=col + b, cs, sn);
                    w.set(col - 1, col + b - 1, rr);
                    w.set(col - 1, col + b, 0.0);
                    if let Some(v) = right.as_mut() {
                        v.rotate_cols(col + b - 1, col + b, cs, sn);
                    }
                    col += b;
                }
            }
        }
    }

    let mut d: Vec<f64> = (0..c).map(|i| w.get(i, i)).collect();
    let mut e: Vec<f64> = (0..c - 1).map(|i| w.get(i, i + 1)).collect();
    bidiag_svd(&mut d, &mut e, left.as_mut(), right.as_mut())?;
    Ok(BandSvd {
        values: d,
        left,
        right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense;
    use crate::variates::RandomStream;

    fn random_bands(r: usize, c: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut s = RandomStream::new(seed, 0);
        (0..=k)
            .map(|t| (0..c.min(r.saturating_sub(t))).map(|_| s.standard_normal()).collect())
            .collect()
    }

    fn to_dense(r: usize, c: usize, bands: &[Vec<f64>]) -> Mat {
        let mut a = Mat::zeros(r, c);
        for (t, band) in bands.iter().enumerate() {
            for (j, &x) in band.iter().enumerate() {
                a[(j + t, j)] = x;
            }
        }
        a
    }

    #[test]
    fn matches_dense_householder() {
        for (r, c, k, seed) in [(8, 8, 1, 1), (10, 7, 2, 2), (12, 12, 3, 3), (20, 15, 4, 4), (5, 5, 4, 5), (4, 1, 3, 6)] {
            let bands = random_bands(r, c, k, seed);
            let a = to_dense(r, c, &bands);
            let want = dense::singular_values(&a).unwrap();
            let got = band_svd(r, c, &bands, Vectors::None).unwrap().values;
            for (x, y) in got.iter().zip(&want) {
                assert!((x - y).abs() < 1e-13 * want[0], "{r}x{c} k={k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn full_vectors_reconstruct() {
        let (r, c, k) = (11, 9, 3);
        let bands = random_bands(r, c, k, 9);
        let a = to_dense(r, c, &bands);
        let out = band_svd(r, c, &bands, Vectors::Full).unwrap();
        let (u, v) = (out.left.unwrap(), out.right.unwrap());
        assert_eq!((u.nrows(), u.ncols()), (r, c));
        let s = Mat::from_fn(c, c, |i, j| if i == j { out.values[i] } else { 0.0 });
        let rec = u.matmul(&s).matmul(&v.transpose());
        for i in 0..r {
            for j in 0..c {
                assert!((rec[(i, j)] - a[(i, j)]).abs() < 1e-13 * out.values[0]);
            }
        }
    }

    #[test]
    fn leading_rows_agree_with_full() {
        let (r, c, k) = (14, 10, 2);
        let bands = random_bands(r, c, k, 10);
        let full = band_svd(r, c, &bands, Vectors::Full).unwrap();
        let part = band_svd(r, c, &bands, Vectors::LeadingRows(2)).unwrap();
        let (uf, up) = (full.left.unwrap(), part.left.unwrap());
        for l in 0..c {
            // columns may differ in sign only
            let sign = if (uf[(0, l)] * up[(0, l)] + uf[(1, l)] * up[(1, l)]) < 0.0 { -1.0 } else { 1.0 };
            for row in 0..2 {
                assert!((uf[(row, l)] - sign * up[(row, l)]).abs() < 1e-12);
            }
        }
    }
}
