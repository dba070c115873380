//! Singular values of an upper bidiagonal matrix by implicit-shift QR
//! (Golub-Kahan steps with a Wilkinson shift).
//!
//! Rotations are mirrored into optional accumulators. With `left = U` and
//! `right = V` on entry, the invariant `A = U B V^T` is maintained, so if the
//! accumulators start as the transforms that produced `B` from `A` they end as
//! the singular vectors of `A`. An accumulator may hold only some rows of `U`
//! or `V`; rotations act on its columns.

use super::{givens, Mat};
use crate::error::{Error, Result};

/// Diagonalize the upper bidiagonal matrix with diagonal `d` and
/// superdiagonal `e` in place. On return `d` is nonnegative and sorted in
/// descending order, with accumulator columns permuted to match.
pub fn bidiag_svd(
    d: &mut [f64],
    e: &mut [f64],
    mut left: Option<&mut Mat>,
    mut right: Option<&mut Mat>,
) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    assert_eq!(e.len(), n - 1, "superdiagonal length must be n - 1");
    if d.iter().chain(e.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numeric("bidiagonal matrix has non-finite entries".into()));
    }

    let eps = f64::EPSILON;
    let bnorm = d.iter().chain(e.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    let max_steps = 100 * n + 100;
    let mut steps = 0;

    loop {
        for i in 0..n - 1 {
            if e[i].abs() <= eps * (d[i].abs() + d[i + 1].abs()) || e[i].abs() <= f64::MIN_POSITIVE {
                e[i] = 0.0;
            }
        }
        for x in d.iter_mut() {
            if x.abs() <= eps * bnorm {
                *x = 0.0;
            }
        }

        let mut hi = n - 1;
        while hi > 0 && e[hi - 1] == 0.0 {
            hi -= 1;
        }
        if hi == 0 {
            break;
        }
        let mut lo = hi - 1;
        while lo > 0 && e[lo - 1] != 0.0 {
            lo -= 1;
        }

        steps += 1;
        if steps > max_steps {
            return Err(Error::Convergence {
                iterations: steps,
                residuals: e.iter().map(|x| x.abs()).collect(),
            });
        }

        if let Some(i) = (lo..hi).find(|&i| d[i] == 0.0) {
            zero_row(d, e, i, hi, left.as_deref_mut());
        } else if d[hi] == 0.0 {
            zero_col(d, e, lo, hi, right.as_deref_mut());
        } else {
            qr_step(d, e, lo, hi, left.as_deref_mut(), right.as_deref_mut());
        }
    }

    for i in 0..n {
        if d[i] < 0.0 {
            d[i] = -d[i];
            if let Some(v) = right.as_deref_mut() {
                v.col_mut(i).iter_mut().for_each(|x| *x = -*x);
            } else if let Some(u) = left.as_deref_mut() {
                u.col_mut(i).iter_mut().for_each(|x| *x = -*x);
            }
        }
    }

    // Selection sort keeps the number of column swaps at most n - 1.
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            if d[j] > d[best] {
                best = j;
            }
        }
        if best != i {
            d.swap(i, best);
            if let Some(u) = left.as_deref_mut() {
                u.swap_cols(i, best);
            }
            if let Some(v) = right.as_deref_mut() {
                v.swap_cols(i, best);
            }
        }
    }
    Ok(())
}

/// `d[i] == 0` with `i < hi`: rotate row `i` against the rows below it until
/// its superdiagonal entry is pushed off the end of the block.
fn zero_row(d: &mut [f64], e: &mut [f64], i: usize, hi: usize, mut left: Option<&mut Mat>) {
    let mut x = e[i];
    e[i] = 0.0;
    for j in i + 1..=hi {
        let (c, s, r) = givens(d[j], x);
        d[j] = r;
        if let Some(u) = left.as_deref_mut() {
            u.rotate_cols(i, j, c, -s);
        }
        if j < hi {
            x = -s * e[j];
            e[j] *= c;
        }
    }
}

/// `d[hi] == 0`: rotate column `hi` against the columns to its left.
fn zero_col(d: &mut [f64], e: &mut [f64], lo: usize, hi: usize, mut right: Option<&mut Mat>) {
    let mut x = e[hi - 1];
    e[hi - 1] = 0.0;
    for j in (lo..hi).rev() {
        let (c, s, r) = givens(d[j], x);
        d[j] = r;
        if let Some(v) = right.as_deref_mut() {
            v.rotate_cols(j, hi, c, s);
        }
        if j > lo {
            x = -s * e[j - 1];
            e[j - 1] *= c;
        }
    }
}

fn wilkinson_shift(a: f64, b: f64, c: f64) -> f64 {
    if b == 0.0 {
        return c;
    }
    let delta = 0.5 * (a - c);
    let sign = if delta >= 0.0 { 1.0 } else { -1.0 };
    c - b * b / (delta + sign * delta.hypot(b))
}

fn qr_step(
    d: &mut [f64],
    e: &mut [f64],
    lo: usize,
    hi: usize,
    mut left: Option<&mut Mat>,
    mut right: Option<&mut Mat>,
) {
    let em = if hi - 1 > lo { e[hi - 2] } else { 0.0 };
    let t11 = d[hi - 1] * d[hi - 1] + em * em;
    let t12 = d[hi - 1] * e[hi - 1];
    let t22 = d[hi] * d[hi] + e[hi - 1] * e[hi - 1];
    let mu = wilkinson_shift(t11, t12, t22);

    let mut y = d[lo] * d[lo] - mu;
    let mut z = d[lo] * e[lo];
    for k in lo..hi {
        let (c, s, r) = givens(y, z);
        if k > lo {
            e[k - 1] = r;
        }
        let (a, b) = (d[k], e[k]);
        d[k] = c * a + s * b;
        e[k] = -s * a + c * b;
        let bulge = s * d[k + 1];
        d[k + 1] *= c;
        if let Some(v) = right.as_deref_mut() {
            v.rotate_cols(k, k + 1, c, s);
        }

        let (c, s, r) = givens(d[k], bulge);
        d[k] = r;
        let (a, b) = (e[k], d[k + 1]);
        e[k] = c * a + s * b;
        d[k + 1] = -s * a + c * b;
        if let Some(u) = left.as_deref_mut() {
            u.rotate_cols(k, k + 1, c, s);
        }
        if k + 1 < hi {
            y = e[k];
            z = s * e[k + 1];
            e[k + 1] *= c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bidiag_dense(d: &[f64], e: &[f64]) -> Mat {
        let n = d.len();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if j == i + 1 {
                e[i]
            } else {
                0.0
            }
        })
    }

    fn check_reconstruction(d0: &[f64], e0: &[f64]) {
        let n = d0.len();
        let (mut d, mut e) = (d0.to_vec(), e0.to_vec());
        let mut u = Mat::identity(n);
        let mut v = Mat::identity(n);
        bidiag_svd(&mut d, &mut e, Some(&mut u), Some(&mut v)).unwrap();
        assert!(d.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.iter().all(|&x| x >= 0.0));
        let b = bidiag_dense(d0, e0);
        let s = Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 });
        let rec = u.matmul(&s).matmul(&v.transpose());
        let scale = b.frobenius_norm().max(1.0);
        for i in 0..n {
            for j in 0..n {
                assert!((rec[(i, j)] - b[(i, j)]).abs() < 1e-13 * scale, "({i},{j})");
            }
        }
        let utu = u.transpose().matmul(&u);
        let vtv = v.transpose().matmul(&v);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((utu[(i, j)] - id).abs() < 1e-13);
                assert!((vtv[(i, j)] - id).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let mut d = vec![3.0, -1.0, 2.0];
        let mut e = vec![0.0, 0.0];
        bidiag_svd(&mut d, &mut e, None, None).unwrap();
        assert_eq!(d, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn two_by_two_known_values() {
        // B^T B = [[9, 12], [12, 41]]: trace 50, determinant 225, eigenvalues 45 and 5.
        let mut d = vec![3.0, 5.0];
        let mut e = vec![4.0];
        bidiag_svd(&mut d, &mut e, None, None).unwrap();
        assert!((d[0] - 45f64.sqrt()).abs() < 1e-14 * d[0]);
        assert!((d[1] - 5f64.sqrt()).abs() < 1e-14 * d[0]);
    }

    #[test]
    fn reconstruction_generic() {
        check_reconstruction(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.5, -0.7, 1.1, 0.3]);
        check_reconstruction(&[4.0, 1e-3, 2.0, 7.0], &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn reconstruction_with_zero_diagonals() {
        check_reconstruction(&[1.0, 0.0, 3.0, 2.0], &[1.0, 2.0, 0.5]);
        check_reconstruction(&[1.0, 2.0, 3.0, 0.0], &[1.0, 2.0, 0.5]);
        check_reconstruction(&[0.0, 2.0, 0.0, 1.0, 0.0], &[1.0, 2.0, 0.5, 3.0]);
    }

    #[test]
    fn repeated_values() {
        check_reconstruction(&[2.0, 2.0, 2.0, 2.0], &[1e-9, 0.0, 1e-9]);
        check_reconstruction(&[1.0; 6], &[1.0; 5]);
    }

    #[test]
    fn rejects_non_finite() {
        let mut d = vec![1.0, f64::NAN];
        let mut e = vec![0.0];
        assert!(bidiag_svd(&mut d, &mut e, None, None).is_err());
    }
}
