//! Oracles shared by the integration tests. Nothing here calls into the
//! library's own decompositions.

#![allow(dead_code)]

use spiked_core::linalg::Mat;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.nrows();
    let mut s: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        let total: f64 = s.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-32 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if s[p][q] == 0.0 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for r in 0..n {
                    let (x, y) = (s[r][p], s[r][q]);
                    s[r][p] = c * x - sn * y;
                    s[r][q] = sn * x + c * y;
                }
                for r in 0..n {
                    let (x, y) = (s[p][r], s[q][r]);
                    s[p][r] = c * x - sn * y;
                    s[q][r] = sn * x + c * y;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| s[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `a a^T` by plain triple loop.
pub fn gram_rows(a: &Mat) -> Mat {
    let (m, n) = (a.nrows(), a.ncols());
    Mat::from_fn(m, m, |i, j| (0..n).map(|t| a[(i, t)] * a[(j, t)]).sum())
}

/// Singular values of `a` from the Jacobi eigenvalues of `a a^T`, padded or
/// cut to `count`; tiny negative eigenvalues are clamped to zero.
pub fn oracle_singular_values(a: &Mat, count: usize) -> Vec<f64> {
    let mut d: Vec<f64> = jacobi_eigenvalues(&gram_rows(a)).into_iter().map(|x| x.max(0.0).sqrt()).collect();
    d.resize(count, 0.0);
    d
}
