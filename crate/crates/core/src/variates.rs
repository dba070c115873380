//! Seedable scalar variates: normals and chi (not chi-squared) draws.
//!
//! A [`RandomStream`] wraps a ChaCha8 generator. The 64-bit seed selects the
//! key and `stream_id` selects one of ChaCha's 2^64 independent streams, so
//! batch work can hand one substream to each sample and stay reproducible no
//! matter how the samples are scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{domain, Result};

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derive the `index`-th child stream. Children share the seed and get a
    /// stream id mixed from the parent's id and `index`, so they are
    /// independent of the parent and of each other.
    pub fn substream(&self, index: u64) -> RandomStream {
        let id = splitmix64(splitmix64(self.stream_id) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        RandomStream::new(self.seed, id)
    }

    /// One N(0, 1) draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// One chi draw with `df` degrees of freedom and unit scale.
    ///
    /// Drawn as the square root of a chi-squared variate, which `rand_distr`
    /// generates by Marsaglia-Tsang rejection on Gamma(df/2, 2), so the cost
    /// does not grow with `df`. Panics if `df == 0`.
    pub fn standard_chi(&mut self, df: u64) -> f64 {
        assert!(df > 0, "chi needs at least one degree of freedom");
        let chi2 = ChiSquared::new(df as f64).expect("df is positive");
        let x: f64 = chi2.sample(&mut self.rng);
        x.sqrt()
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("standard deviation must be positive and finite, got {sigma}")))
    }
}

/// One draw from N(0, sigma^2). The value is exactly `sigma` times the unit
/// draw the stream would have produced.
pub fn sample_normal(stream: &mut RandomStream, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(sigma * stream.standard_normal())
}

/// One draw of `sigma * chi_df`.
pub fn sample_chi(stream: &mut RandomStream, df: u64, sigma: f64) -> Result<f64> {
    if df == 0 {
        return Err(domain("chi degrees of freedom must be at least 1"));
    }
    check_sigma(sigma)?;
    Ok(sigma * stream.standard_chi(df))
}
