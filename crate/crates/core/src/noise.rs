//! Reproducible noise keyed by `(seed, datum, sample)`.
//!
//! Each key selects its own ChaCha stream, so draws for one `(datum,
//! sample)` pair never depend on how many draws other pairs consumed or in
//! which order they ran.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Source of the two primitive draws label sampling needs.
pub trait LabelNoise {
    fn standard_normal(&mut self) -> f64;
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64;
}

/// Separates the streams used for different purposes under the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    Labels = 1,
    Init = 2,
    Data = 3,
}

pub struct SeedStream {
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(domain: StreamDomain, seed: u64, datum: u64, sample: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        key[16..24].copy_from_slice(&datum.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(sample);
        Self { rng }
    }

    /// Stream for the `sample`-th label drawn for `datum`.
    pub fn labels(seed: u64, datum: usize, sample: usize) -> Self {
        Self::new(StreamDomain::Labels, seed, datum as u64, sample as u64)
    }
}

impl LabelNoise for SeedStream {
    fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Noise source that always returns zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroNoise;

impl LabelNoise for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }

    fn uniform(&mut self) -> f64 {
        0.0
    }
}
