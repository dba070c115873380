//! Samplers for spiked (pseudo-)Wishart spectra.
//!
//! [`sample_banded`] draws the sparse lower-banded matrix `H` whose
//! singular values have the same law as those of the dense `m x n` Gaussian
//! matrix `G` with row standard deviations `sigma_1..sigma_k, 1, .., 1`.
//! [`sample_dense`] draws `G` itself and serves as the brute-force reference.
//!
//! With 1-based indices and `sigma_i = 1` for `i > k`, the entries of `H`
//! are independent with
//!
//! * `H[i,i]   ~ sigma_i chi(n - i + 1)`        for `i <= min(m, n)`
//! * `H[i,i-k] ~ sigma_i chi(m - i + 1)`        for `k < i <= min(m, n + k)`
//! * `H[i,j]   ~ N(0, sigma_i^2)`               for `i - k < j < i`, `j <= n`, `i <= m`
//!
//! and every other entry is zero.

use serde::{Deserialize, Serialize};

use crate::banded::{BandedSample, EntryKind};
use crate::error::{domain, Error, Result};
use crate::linalg::Mat;
use crate::variates::RandomStream;

/// Ensemble parameters: `m` variables, `n` observations and the spike
/// standard deviations of the first `k` variables.
///
/// An empty spike list (`k = 0`, the uncorrelated central Wishart) is
/// normalized to `k = 1`, `sigma_1 = 1`, which has the same law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSpec {
    m: usize,
    n: usize,
    spikes: Vec<f64>,
}

impl SpikeSpec {
    pub fn new(m: usize, n: usize, spikes: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(domain(format!("m and n must be positive, got m={m}, n={n}")));
        }
        let spikes = if spikes.is_empty() { vec![1.0] } else { spikes };
        if spikes.len() > m {
            return Err(domain(format!(
                "{} spikes exceed the number of variables m={m}",
                spikes.len()
            )));
        }
        if let Some(bad) = spikes.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(domain(format!("spike standard deviations must be positive and finite, got {bad}")));
        }
        Ok(Self { m, n, spikes })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.spikes.len()
    }

    pub fn spikes(&self) -> &[f64] {
        &self.spikes
    }

    /// Standard deviation of 0-based row `i`.
    pub fn sigma(&self, i: usize) -> f64 {
        self.spikes.get(i).copied().unwrap_or(1.0)
    }

    /// Same `m`, `n` with a new spike vector.
    pub fn with_spikes(&self, spikes: Vec<f64>) -> Result<Self> {
        Self::new(self.m, self.n, spikes)
    }

    /// Number of singular values of the full `m x n` problem.
    pub fn rank_bound(&self) -> usize {
        self.m.min(self.n)
    }

    /// Rows of the nonzero block of `H`: `min(m, n + k)`.
    pub fn block_rows(&self) -> usize {
        self.m.min(self.n + self.k())
    }

    /// Columns of the nonzero block of `H`: `min(m, n)`.
    pub fn block_cols(&self) -> usize {
        self.m.min(self.n)
    }

    /// Stored length of the band at offset `t` (`H[j + t, j]`).
    pub fn band_len(&self, t: usize) -> usize {
        self.m.saturating_sub(t).min(self.n)
    }

    /// How the entry at band offset `t`, column `j` (0-based) is drawn.
    pub fn entry_kind(&self, t: usize, j: usize) -> EntryKind {
        let k = self.k();
        if t == 0 {
            EntryKind::ChiDiag((self.n - j) as u64)
        } else if t == k {
            EntryKind::ChiSub((self.m - j - k) as u64)
        } else {
            EntryKind::Normal
        }
    }
}

/// Unit-scale variates behind one banded sample, in canonical order: band
/// offsets `0..=k`, each band in ascending column order. Scaling row `i` by
/// `sigma_i` reproduces the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitNoise {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub bands: Vec<Vec<f64>>,
}

impl UnitNoise {
    /// Draw fresh unit-scale noise for the shape of `spec`.
    pub fn draw(spec: &SpikeSpec, stream: &mut RandomStream) -> Self {
        Self::draw_shifted(spec, stream, 0)
    }

    fn draw_shifted(spec: &SpikeSpec, stream: &mut RandomStream, df_shift: i64) -> Self {
        let k = spec.k();
        let bands = (0..=k)
            .map(|t| {
                (0..spec.band_len(t))
                    .map(|j| match spec.entry_kind(t, j) {
                        EntryKind::Normal => stream.standard_normal(),
                        EntryKind::ChiDiag(df) | EntryKind::ChiSub(df) => {
                            stream.standard_chi((df as i64 + df_shift).max(1) as u64)
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            m: spec.m(),
            n: spec.n(),
            k,
            bands,
        }
    }

    pub fn len(&self) -> usize {
        self.bands.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Check the recorded shape against `spec`.
    pub fn check_shape(&self, spec: &SpikeSpec) -> Result<()> {
        if (self.m, self.n, self.k) != (spec.m(), spec.n(), spec.k()) {
            return Err(domain(format!(
                "noise recorded for (m={}, n={}, k={}) does not fit (m={}, n={}, k={})",
                self.m,
                self.n,
                self.k,
                spec.m(),
                spec.n(),
                spec.k()
            )));
        }
        if self.bands.len() != spec.k() + 1
            || self.bands.iter().enumerate().any(|(t, b)| b.len() != spec.band_len(t))
        {
            return Err(domain("noise band lengths do not match the spec"));
        }
        Ok(())
    }
}

/// Scale recorded unit noise by the row standard deviations of `spec`.
pub(crate) fn scale_noise(spec: &SpikeSpec, noise: &UnitNoise) -> Result<BandedSample> {
    noise.check_shape(spec)?;
    let bands = noise
        .bands
        .iter()
        .enumerate()
        .map(|(t, band)| {
            band.iter()
                .enumerate()
                .map(|(j, &z)| spec.sigma(j + t) * z)
                .collect()
        })
        .collect();
    Ok(BandedSample::from_bands(spec.clone(), bands))
}

/// Draw one banded sample.
pub fn sample_banded(spec: &SpikeSpec, stream: &mut RandomStream) -> BandedSample {
    sample_banded_with_noise(spec, stream).0
}

/// Draw one banded sample together with the unit-scale noise it was built
/// from, for replay under other spikes.
pub fn sample_banded_with_noise(spec: &SpikeSpec, stream: &mut RandomStream) -> (BandedSample, UnitNoise) {
    let noise = UnitNoise::draw(spec, stream);
    let h = scale_noise(spec, &noise).expect("noise drawn for this spec");
    (h, noise)
}

/// Banded sampler with every chi degree of freedom shifted by `df_shift`
/// (clamped at 1). Only useful to check that validation catches a wrong
/// sampler.
#[doc(hidden)]
pub fn sample_banded_df_shifted(spec: &SpikeSpec, stream: &mut RandomStream, df_shift: i64) -> BandedSample {
    let noise = UnitNoise::draw_shifted(spec, stream, df_shift);
    scale_noise(spec, &noise).expect("noise drawn for this spec")
}

/// One dense draw of `G` (`m x n`, row `i` with standard deviation `sigma_i`).
#[derive(Debug, Clone)]
pub struct DenseSample {
    pub spec: SpikeSpec,
    pub values: Mat,
}

/// Largest dense sample we are willing to allocate, in entries.
const DENSE_LIMIT: usize = 1 << 28;

/// Draw `G` entry by entry in row-major order.
pub fn sample_dense(spec: &SpikeSpec, stream: &mut RandomStream) -> Result<DenseSample> {
    let (m, n) = (spec.m(), spec.n());
    let size = m
        .checked_mul(n)
        .filter(|&s| s <= DENSE_LIMIT)
        .ok_or_else(|| Error::Resource(format!("dense sample of {m} x {n} entries is too large")))?;
    debug_assert!(size > 0);
    let mut g = Mat::zeros(m, n);
    for i in 0..m {
        let sigma = spec.sigma(i);
        for j in 0..n {
            g[(i, j)] = sigma * stream.standard_normal();
        }
    }
    Ok(DenseSample {
        spec: spec.clone(),
        values: g,
    })
}
