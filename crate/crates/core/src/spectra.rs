//! Singular values of banded samples, plus the singular-vector data that the
//! spike Jacobians need.

use serde::{Deserialize, Serialize};

use crate::banded::BandedSample;
use crate::error::{domain, Result};
use crate::lanczos::{top_triplets, TopTriplets};
use crate::linalg::band::{band_svd, Vectors};
use crate::linalg::Mat;

/// Relative gap below which neighbouring singular values count as clustered.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Below this many columns `top_svd` just runs the full reduction.
const DENSE_CUTOFF: usize = 64;

/// Full singular vectors in block coordinates.
#[derive(Debug, Clone)]
pub struct SingularVectors {
    /// `block_rows x ncomputed`
    pub u: Mat,
    /// `block_cols x ncomputed`
    pub v: Mat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralResult {
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// `left_rows[l][r] = U[r, l]` for the spiked rows `r < k`.
    pub left_rows: Vec<Vec<f64>>,
    /// `right_projections[l][r] = sum_j H[r, j] V[j, l]` for `r < k`.
    pub right_projections: Vec<Vec<f64>>,
    /// Whether value `l` sits within `CLUSTER_GAP * d_1` of a neighbour.
    pub clustered: Vec<bool>,
    /// `min(m, n)`: how many singular values the full problem has.
    pub rank_bound: usize,
    #[serde(skip)]
    pub vectors: Option<SingularVectors>,
}

impl SpectralResult {
    pub fn ncomputed(&self) -> usize {
        self.singular_values.len()
    }

    /// Eigenvalues of `W = H H^T` (`m` of them): squared singular values
    /// padded with the exact zeros of the rank-deficient remainder.
    /// Only meaningful for a full spectrum.
    pub fn wishart_eigenvalues(&self, m: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.singular_values.iter().map(|d| d * d).collect();
        out.resize(m.max(out.len()), 0.0);
        out
    }

    /// Keep the leading `ell` values.
    pub fn truncate(&mut self, ell: usize) {
        let ell = ell.min(self.ncomputed());
        let next = self.singular_values.get(ell).copied();
        self.singular_values.truncate(ell);
        self.left_rows.truncate(ell);
        self.right_projections.truncate(ell);
        self.clustered = cluster_flags(&self.singular_values, next);
        if let Some(vecs) = self.vectors.as_mut() {
            vecs.u.truncate_cols(ell);
            vecs.v.truncate_cols(ell);
        }
    }
}

/// Flag values within `CLUSTER_GAP * d_1` of a neighbour. `next` is the
/// value just below the last computed one, when known.
pub fn cluster_flags(values: &[f64], next: Option<f64>) -> Vec<bool> {
    let Some(&top) = values.first() else {
        return vec![];
    };
    let tol = CLUSTER_GAP * top;
    (0..values.len())
        .map(|l| {
            let above = l > 0 && values[l - 1] - values[l] < tol;
            let below = match values.get(l + 1).copied().or(if l + 1 == values.len() { next } else { None }) {
                Some(v) => values[l] - v < tol,
                None => false,
            };
            above || below
        })
        .collect()
}

fn k_of(h: &BandedSample) -> usize {
    h.spec().k()
}

/// All `min(m, n)` singular values with the spiked rows of `U`.
///
/// Works on the `min(m, n + k) x min(m, n)` nonzero block: Givens reduction
/// of the band to bidiagonal form, then bidiagonal QR. Projections use
/// `H v_l = d_l u_l`, so `p[r, l] = d_l U[r, l]`.
pub fn full_svd(h: &BandedSample) -> Result<SpectralResult> {
    let k = k_of(h);
    let out = band_svd(h.block_rows(), h.block_cols(), h.bands(), Vectors::LeadingRows(k))?;
    let u = out.left.expect("leading rows requested");
    let d = out.values;
    let left_rows: Vec<Vec<f64>> = (0..d.len()).map(|l| (0..k).map(|r| u[(r, l)]).collect()).collect();
    let right_projections = left_rows
        .iter()
        .zip(&d)
        .map(|(row, &dl)| row.iter().map(|x| dl * x).collect())
        .collect();
    Ok(SpectralResult {
        clustered: cluster_flags(&d, None),
        singular_values: d,
        left_rows,
        right_projections,
        rank_bound: h.spec().rank_bound(),
        vectors: None,
    })
}

/// Like [`full_svd`] but also returns the full singular vectors and
/// evaluates the projections directly from `V`.
pub fn full_svd_with_vectors(h: &BandedSample) -> Result<SpectralResult> {
    let k = k_of(h);
    let out = band_svd(h.block_rows(), h.block_cols(), h.bands(), Vectors::Full)?;
    let (u, v) = (out.left.expect("full"), out.right.expect("full"));
    Ok(from_vectors(h, k, out.values, u, v, None))
}

fn from_vectors(h: &BandedSample, k: usize, d: Vec<f64>, u: Mat, v: Mat, next: Option<f64>) -> SpectralResult {
    let left_rows = (0..d.len()).map(|l| (0..k).map(|r| u[(r, l)]).collect()).collect();
    let right_projections = (0..d.len())
        .map(|l| (0..k).map(|r| h.row_dot(r, v.col(l))).collect())
        .collect();
    SpectralResult {
        clustered: cluster_flags(&d, next),
        singular_values: d,
        left_rows,
        right_projections,
        rank_bound: h.spec().rank_bound(),
        vectors: Some(SingularVectors { u, v }),
    }
}

/// The `ell` largest singular values and their vector data.
///
/// Small blocks (or requests for a large share of the spectrum) go through
/// [`full_svd`]; otherwise Lanczos bidiagonalization on the band.
pub fn top_svd(h: &BandedSample, ell: usize) -> Result<SpectralResult> {
    let c = h.block_cols();
    if ell == 0 || ell > c {
        return Err(domain(format!("ell must be in 1..={c}, got {ell}")));
    }
    if c <= DENSE_CUTOFF || 4 * ell >= c {
        let mut out = full_svd(h)?;
        out.truncate(ell);
        return Ok(out);
    }
    lanczos_svd(h, ell)
}

/// [`top_svd`] forced through the Lanczos path regardless of size.
pub fn lanczos_svd(h: &BandedSample, ell: usize) -> Result<SpectralResult> {
    let c = h.block_cols();
    if ell == 0 || ell > c {
        return Err(domain(format!("ell must be in 1..={c}, got {ell}")));
    }
    let TopTriplets { triplets, next_sigma, .. } = top_triplets(h, ell)?;
    let (r, n) = (h.block_rows(), triplets.len());
    let mut u = Mat::zeros(r, n);
    let mut v = Mat::zeros(c, n);
    for (l, t) in triplets.iter().enumerate() {
        u.col_mut(l).copy_from_slice(&t.u);
        v.col_mut(l).copy_from_slice(&t.v);
    }
    let d = triplets.iter().map(|t| t.sigma).collect();
    Ok(from_vectors(h, k_of(h), d, u, v, next_sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_banded, SpikeSpec};
    use crate::variates::RandomStream;

    #[test]
    fn diagonal_fixture() {
        let spec = SpikeSpec::new(3, 3, vec![1.0]).unwrap();
        let h = BandedSample::from_band_values(spec, vec![vec![3.0, 1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let s = full_svd(&h).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn one_by_one() {
        let spec = SpikeSpec::new(1, 1, vec![2.0]).unwrap();
        let h = BandedSample::from_band_values(spec, vec![vec![-1.5], vec![]]).unwrap();
        let s = full_svd_with_vectors(&h).unwrap();
        assert_eq!(s.singular_values, vec![1.5]);
        let vecs = s.vectors.unwrap();
        assert_eq!(vecs.u[(0, 0)].abs(), 1.0);
        assert_eq!(vecs.v[(0, 0)].abs(), 1.0);
        assert_eq!(vecs.u[(0, 0)] * vecs.v[(0, 0)] * 1.5, -1.5);
    }

    #[test]
    fn pseudo_wishart_rank() {
        let spec = SpikeSpec::new(40, 7, vec![5.0, 2.0]).unwrap();
        let h = sample_banded(&spec, &mut RandomStream::new(1, 0));
        let s = full_svd(&h).unwrap();
        assert_eq!(s.ncomputed(), 7);
        assert_eq!(s.rank_bound, 7);
        assert!(s.singular_values.iter().all(|&d| d > 0.0));
        let eig = s.wishart_eigenvalues(40);
        assert_eq!(eig.len(), 40);
        assert!(eig[7..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn projections_identity_matches_direct_formula() {
        let spec = SpikeSpec::new(15, 12, vec![6.0, 3.0, 2.0]).unwrap();
        let h = sample_banded(&spec, &mut RandomStream::new(2, 0));
        let a = full_svd(&h).unwrap();
        let b = full_svd_with_vectors(&h).unwrap();
        for l in 0..12 {
            for r in 0..3 {
                let ja = a.left_rows[l][r] * a.right_projections[l][r];
                let jb = b.left_rows[l][r] * b.right_projections[l][r];
                assert!((ja - jb).abs() < 1e-10 * a.singular_values[0], "l={l} r={r}");
            }
        }
    }

    #[test]
    fn top_svd_rejects_bad_ell() {
        let spec = SpikeSpec::new(5, 3, vec![1.0]).unwrap();
        let h = sample_banded(&spec, &mut RandomStream::new(3, 0));
        assert!(top_svd(&h, 0).is_err());
        assert!(top_svd(&h, 4).is_err());
        assert!(lanczos_svd(&h, 4).is_err());
    }

    #[test]
    fn lanczos_on_small_band_matches_full() {
        let spec = SpikeSpec::new(30, 25, vec![8.0, 4.0]).unwrap();
        let h = sample_banded(&spec, &mut RandomStream::new(4, 0));
        let full = full_svd(&h).unwrap();
        for ell in [1, 3, 25] {
            let top = lanczos_svd(&h, ell).unwrap();
            for l in 0..ell {
                let (x, y) = (top.singular_values[l], full.singular_values[l]);
                assert!((x - y).abs() <= 1e-8 * y, "ell={ell} l={l}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn cluster_flagging() {
        assert_eq!(cluster_flags(&[3.0, 2.0, 1.0], None), vec![false; 3]);
        assert_eq!(cluster_flags(&[3.0, 2.0, 2.0 - 1e-8], None), vec![false, true, true]);
        assert_eq!(cluster_flags(&[3.0, 2.0], Some(2.0)), vec![false, true]);
        assert!(cluster_flags(&[], None).is_empty());
    }
}
