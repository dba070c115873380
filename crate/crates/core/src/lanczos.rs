//! Golub-Kahan-Lanczos bidiagonalization for the largest singular triplets.
//!
//! Each run builds a Krylov basis with full reorthogonalization and restarts
//! thickly, keeping the leading Ritz vectors. Converged triplets are locked
//! and projected out of later runs. A single start vector only sees one
//! direction of a repeated singular value, so after the requested count is
//! locked, one more run from a fresh start looks for a larger value that was
//! missed and swaps it in.

use crate::banded::BandedSample;
use crate::error::{Error, Result};
use crate::linalg::{dense, dot, norm2, Mat};
use crate::variates::RandomStream;

/// Convergence threshold on the triplet residual, relative to the Ritz value.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// A linear operator with an adjoint.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn apply_t(&self, y: &[f64], x: &mut [f64]);
    /// Any cheap upper bound on the spectral norm; sets breakdown thresholds.
    fn norm_bound(&self) -> f64;
}

impl LinearOperator for BandedSample {
    fn nrows(&self) -> usize {
        self.block_rows()
    }

    fn ncols(&self) -> usize {
        self.block_cols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.block_matvec(x, y)
    }

    fn apply_t(&self, y: &[f64], x: &mut [f64]) {
        self.block_rmatvec(y, x)
    }

    fn norm_bound(&self) -> f64 {
        self.bands().iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl LinearOperator for Mat {
    fn nrows(&self) -> usize {
        Mat::nrows(self)
    }

    fn ncols(&self) -> usize {
        Mat::ncols(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x));
    }

    fn apply_t(&self, y: &[f64], x: &mut [f64]) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = dot(self.col(j), y);
        }
    }

    fn norm_bound(&self) -> f64 {
        self.frobenius_norm()
    }
}

#[derive(Debug, Clone)]
pub struct Triplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TopTriplets {
    /// Descending.
    pub triplets: Vec<Triplet>,
    /// Largest singular value found below the returned ones, when a
    /// verification run produced one.
    pub next_sigma: Option<f64>,
    /// Total Lanczos steps (operator application pairs).
    pub steps: usize,
}

/// Orthogonalize `w` against `basis` twice (classical Gram-Schmidt with
/// reorthogonalization). Returns the accumulated coefficients.
fn cgs2(w: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut coefs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, q) in coefs.iter_mut().zip(basis) {
            let h = dot(q, w);
            *c += h;
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= h * qi;
            }
        }
    }
    coefs
}

fn random_unit(len: usize, rng: &mut RandomStream, against: &[&[Vec<f64>]]) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..len).map(|_| rng.standard_normal()).collect();
        for basis in against {
            cgs2(&mut x, basis);
        }
        let nrm = norm2(&x);
        if nrm > 1e-8 {
            x.iter_mut().for_each(|v| *v /= nrm);
            return x;
        }
    }
}

fn combine(basis: &[Vec<f64>], coefs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (q, c) in basis.iter().zip(coefs) {
        for (o, qi) in out.iter_mut().zip(q) {
            *o += c * qi;
        }
    }
    out
}

struct RunOutcome {
    triplets: Vec<Triplet>,
    steps: usize,
}

/// One restarted run on the operator deflated by `locked`, returning its
/// `want` largest converged triplets.
fn run<Op: LinearOperator>(
    op: &Op,
    locked: &[Triplet],
    want: usize,
    rng: &mut RandomStream,
    max_cycles: usize,
) -> Result<RunOutcome> {
    let (r, c) = (op.nrows(), op.ncols());
    let free = c - locked.len();
    let p = free.min((2 * want + 16).max(24));
    let tiny = 1e-13 * op.norm_bound().max(f64::MIN_POSITIVE);
    let locked_u: Vec<Vec<f64>> = locked.iter().map(|t| t.u.clone()).collect();
    let locked_v: Vec<Vec<f64>> = locked.iter().map(|t| t.v.clone()).collect();

    let mut vs = vec![random_unit(c, rng, &[&locked_v])];
    let mut us: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut b = Mat::zeros(p, p);
    let mut start = 0;
    let mut steps = 0;
    let mut last_residuals = Vec::new();
    let mut w = vec![0.0; r];
    let mut z = vec![0.0; c];

    for _cycle in 0..max_cycles {
        let mut size = p;
        let mut beta = 0.0;
        let mut residual_dir: Option<Vec<f64>> = None;
        for j in start..p {
            steps += 1;
            op.apply(&vs[j], &mut w);
            cgs2(&mut w, &locked_u);
            let coefs = cgs2(&mut w, &us);
            for (i, h) in coefs.into_iter().enumerate() {
                b[(i, j)] = h;
            }
            let alpha = norm2(&w);
            if alpha <= tiny {
                b[(j, j)] = 0.0;
                us.push(random_unit(r, rng, &[&locked_u, &us]));
            } else {
                b[(j, j)] = alpha;
                us.push(w.iter().map(|x| x / alpha).collect());
            }

            op.apply_t(&us[j], &mut z);
            cgs2(&mut z, &locked_v);
            cgs2(&mut z, &vs);
            let nz = norm2(&z);
            if nz <= tiny {
                // invariant subspace: every Ritz value so far is exact
                size = j + 1;
                beta = 0.0;
                break;
            }
            if j + 1 < p {
                vs.push(z.iter().map(|x| x / nz).collect());
            } else {
                beta = nz;
                residual_dir = Some(z.iter().map(|x| x / nz).collect());
            }
        }

        let mut bs = Mat::zeros(size, size);
        for jj in 0..size {
            for ii in 0..=jj {
                bs[(ii, jj)] = b[(ii, jj)];
            }
        }
        let small = dense::svd(&bs, true)?;
        let (x, y) = (small.u.expect("vectors"), small.v.expect("vectors"));
        let residuals: Vec<f64> = (0..size).map(|i| beta * x[(size - 1, i)].abs()).collect();
        let take = want.min(size);
        let scale_floor = small.values[0] * RESIDUAL_TOL;
        let converged = (0..take).all(|i| residuals[i] <= RESIDUAL_TOL * small.values[i].max(scale_floor));

        if converged || size < p || size == free {
            let triplets = (0..take)
                .map(|i| Triplet {
                    sigma: small.values[i],
                    u: combine(&us[..size], (0..size).map(|l| x[(l, i)])),
                    v: combine(&vs[..size], (0..size).map(|l| y[(l, i)])),
                })
                .collect();
            return Ok(RunOutcome { triplets, steps });
        }
        last_residuals = residuals[..take].to_vec();

        // thick restart on the leading Ritz vectors
        let keep = (want + (size - want) / 2).min(size - 1);
        let new_us: Vec<Vec<f64>> = (0..keep)
            .map(|i| combine(&us[..size], (0..size).map(|l| x[(l, i)])))
            .collect();
        let mut new_vs: Vec<Vec<f64>> = (0..keep)
            .map(|i| combine(&vs[..size], (0..size).map(|l| y[(l, i)])))
            .collect();
        new_vs.push(residual_dir.expect("full cycle leaves a residual"));
        us = new_us;
        vs = new_vs;
        b = Mat::zeros(p, p);
        for i in 0..keep {
            b[(i, i)] = small.values[i];
        }
        start = keep;
    }
    Err(Error::Convergence {
        iterations: steps,
        residuals: last_residuals,
    })
}

/// Restart-cycle cap per run: `10 * ell * ceil(log2(min(m, n)))`, at least 1.
pub fn cycle_cap(ell: usize, cols: usize) -> usize {
    let log = (usize::BITS - cols.saturating_sub(1).leading_zeros()) as usize;
    (10 * ell * log).max(1)
}

/// The `ell` largest singular triplets of `op`.
pub fn top_triplets<Op: LinearOperator>(op: &Op, ell: usize) -> Result<TopTriplets> {
    let c = op.ncols();
    assert!(op.nrows() >= c, "operator must be tall");
    assert!(ell >= 1 && ell <= c, "1 <= ell <= cols");
    let max_cycles = cycle_cap(ell, c);
    let mut rng = RandomStream::new(0x1a2c_0505, (op.nrows() as u64) << 32 | c as u64);
    let mut locked: Vec<Triplet> = Vec::with_capacity(ell + 1);
    let mut steps = 0;

    while locked.len() < ell {
        let out = run(op, &locked, ell - locked.len(), &mut rng, max_cycles)?;
        steps += out.steps;
        if out.triplets.is_empty() {
            break;
        }
        locked.extend(out.triplets);
    }
    locked.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));

    let mut next_sigma = None;
    for _ in 0..ell {
        if locked.len() >= c {
            break;
        }
        let out = run(op, &locked, 1, &mut rng, max_cycles)?;
        steps += out.steps;
        let Some(found) = out.triplets.into_iter().next() else {
            break;
        };
        let smallest = locked.last().expect("ell >= 1").sigma;
        if found.sigma > smallest * (1.0 + 1e-12) {
            locked.pop();
            locked.push(found);
            locked.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
        } else {
            next_sigma = Some(found.sigma);
            break;
        }
    }

    Ok(TopTriplets {
        triplets: locked,
        next_sigma,
        steps,
    })
}
