//! Counter-based random streams.
//!
//! Every consumer draws from a stream keyed by `(seed, domain, index)`: the
//! Monte Carlo engine uses one stream per replicate, ground truth and
//! observation noise use their own domains. Streams are ChaCha8 keyed by a
//! mixed seed with the index selecting the ChaCha stream, so a replicate's
//! draws never depend on which worker ran it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Separates independent uses of the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    Simulation,
    Truth,
    Observation,
    Reservoir,
    Other(u64),
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Simulation => 0x6d63_5f72_6570_6c69,
            StreamDomain::Truth => 0x7472_7574_685f_6475,
            StreamDomain::Observation => 0x6f62_735f_6e6f_6973,
            StreamDomain::Reservoir => 0x7265_7365_7276_6f69,
            StreamDomain::Other(t) => splitmix64(t ^ 0x0123_4567_89ab_cdef),
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Folds a sequence of words into one seed. Order-sensitive.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, domain: StreamDomain, index: u64) -> Self {
        let key = splitmix64(seed ^ domain.tag());
        let mut inner = ChaCha8Rng::seed_from_u64(key);
        inner.set_stream(index);
        RngStream { inner }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform integer in [0, bound).
    pub fn below(&mut self, bound: u64) -> u64 {
        self.inner.random_range(0..bound)
    }
}
