//! Dense SVD: Householder bidiagonalization followed by bidiagonal QR.
//!
//! Used for the dense-sampler oracle and for the small projected problems
//! inside the Lanczos solver.

use super::bidiag::bidiag_svd;
use super::{dot, norm2, Mat};
use crate::error::{Error, Result};

/// Thin SVD `A = U diag(s) V^T` with `s` descending.
#[derive(Debug, Clone)]
pub struct DenseSvd {
    pub values: Vec<f64>,
    /// `nrows x p`, `p = min(nrows, ncols)`; present when vectors were requested.
    pub u: Option<Mat>,
    /// `ncols x p`.
    pub v: Option<Mat>,
}

struct Reflector {
    v: Vec<f64>,
    tau: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto a multiple of the first axis. Returns the
    /// reflector and the resulting leading value.
    fn new(x: &[f64]) -> (Self, f64) {
        let norm = norm2(x);
        if norm == 0.0 {
            return (Reflector { v: vec![0.0; x.len()], tau: 0.0 }, 0.0);
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv = dot(&v, &v);
        let tau = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
        (Reflector { v, tau }, alpha)
    }

    fn apply(&self, y: &mut [f64]) {
        if self.tau == 0.0 {
            return;
        }
        let f = self.tau * dot(&self.v, y);
        for (yi, vi) in y.iter_mut().zip(&self.v) {
            *yi -= f * vi;
        }
    }
}

/// Reduce `a` (`r x c`, `r >= c`) to upper bidiagonal form.
fn bidiagonalize(a: &mut Mat) -> (Vec<f64>, Vec<f64>, Vec<Reflector>, Vec<Reflector>) {
    let (r, c) = (a.nrows(), a.ncols());
    debug_assert!(r >= c);
    let mut d = vec![0.0; c];
    let mut e = vec![0.0; c.saturating_sub(1)];
    let mut lefts = Vec::with_capacity(c);
    let mut rights = Vec::with_capacity(c.saturating_sub(1));

    for j in 0..c {
        let (h, alpha) = Reflector::new(&a.col(j)[j..]);
        for l in j + 1..c {
            h.apply(&mut a.col_mut(l)[j..]);
        }
        d[j] = alpha;
        lefts.push(h);

        if j + 1 < c {
            let row: Vec<f64> = (j + 1..c).map(|l| a[(j, l)]).collect();
            let (g, beta) = Reflector::new(&row);
            if g.tau != 0.0 {
                // rows j+1.. of A[:, j+1..] times the reflector, column-wise
                let mut w = vec![0.0; r - j - 1];
                for (t, l) in (j + 1..c).enumerate() {
                    let vl = g.v[t];
                    for (wi, x) in w.iter_mut().zip(&a.col(l)[j + 1..]) {
                        *wi += x * vl;
                    }
                }
                for (t, l) in (j + 1..c).enumerate() {
                    let f = g.tau * g.v[t];
                    for (x, wi) in a.col_mut(l)[j + 1..].iter_mut().zip(&w) {
                        *x -= f * wi;
                    }
                }
            }
            e[j] = beta;
            rights.push(g);
        }
    }
    (d, e, lefts, rights)
}

/// Form `H_0 H_1 ... H_{p-1}` applied to the first `ncols` identity columns,
/// where reflector `t` acts on coordinates `offset + t ..`.
fn accumulate(reflectors: &[Reflector], nrows: usize, ncols: usize, offset: usize) -> Mat {
    let mut q = Mat::from_fn(nrows, ncols, |i, j| if i == j { 1.0 } else { 0.0 });
    for (t, h) in reflectors.iter().enumerate().rev() {
        let start = t + offset;
        // columns left of `start` are untouched unit vectors
        for l in start..ncols {
            h.apply(&mut q.col_mut(l)[start..]);
        }
    }
    q
}

/// SVD of a dense matrix of any shape.
pub fn svd(a: &Mat, vectors: bool) -> Result<DenseSvd> {
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if a.nrows() < a.ncols() {
        let t = svd(&a.transpose(), vectors)?;
        return Ok(DenseSvd {
            values: t.values,
            u: t.v,
            v: t.u,
        });
    }
    let (r, c) = (a.nrows(), a.ncols());
    if c == 0 {
        return Ok(DenseSvd {
            values: vec![],
            u: vectors.then(|| Mat::zeros(r, 0)),
            v: vectors.then(|| Mat::zeros(0, 0)),
        });
    }
    let mut work = a.clone();
    let (mut d, mut e, lefts, rights) = bidiagonalize(&mut work);
    if vectors {
        let mut u = accumulate(&lefts, r, c, 0);
        let mut v = accumulate(&rights, c, c, 1);
        bidiag_svd(&mut d, &mut e, Some(&mut u), Some(&mut v))?;
        Ok(DenseSvd {
            values: d,
            u: Some(u),
            v: Some(v),
        })
    } else {
        bidiag_svd(&mut d, &mut e, None, None)?;
        Ok(DenseSvd {
            values: d,
            u: None,
            v: None,
        })
    }
}

/// Singular values only.
pub fn singular_values(a: &Mat) -> Result<Vec<f64>> {
    Ok(svd(a, false)?.values)
}
