//! Sampling the spectra of spiked Wishart and spiked pseudo-Wishart matrices.
//!
//! The eigenvalues of `W = G G^T`, with `G` an `m x n` Gaussian matrix whose
//! first `k` rows have standard deviations `sigma_1..sigma_k` and the rest 1,
//! have the same law as the squared singular values of a lower-banded matrix
//! `H` with `k + 1` nonzero diagonals of independent chi and normal entries.
//! Drawing `H` costs `O(k min(m, n))` variates instead of `m n`, and its band
//! structure makes the singular values cheap.
//!
//! Modules:
//! * [`variates`]: seedable normal and chi draws with independent substreams.
//! * [`sampler`]: ensemble parameters, the banded sampler and the dense
//!   reference sampler.
//! * [`banded`]: band storage, products and text formats.
//! * [`spectra`]: full and top-`l` singular values with vector data.
//! * [`gradfit`]: spike Jacobians by replaying fixed noise, batch means and a
//!   Levenberg-Marquardt spike fitter.
//! * [`stats`]: Kolmogorov-Smirnov test, histograms, summaries.

pub mod banded;
pub mod error;
pub mod gradfit;
pub mod lanczos;
pub mod linalg;
pub mod sampler;
pub mod spectra;
pub mod stats;
pub mod variates;

pub use banded::{band_matvec, band_rmatvec, BandedSample, EntryKind};
pub use error::{Error, Result};
pub use sampler::{sample_banded, sample_banded_with_noise, sample_dense, DenseSample, SpikeSpec, UnitNoise};
pub use spectra::{full_svd, top_svd, SpectralResult};
pub use variates::{sample_chi, sample_normal, RandomStream};
