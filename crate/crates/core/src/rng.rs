//! Deterministic random-number streams for reproducible parallel runs.
//!
//! Every chain (or replica) owns a ChaCha stream keyed by `(seed, stream)`.
//! Streams are independent of thread scheduling, so replica-level parallelism
//! reproduces the sequential draws bit for bit.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Counter-based generator stream identified by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct ChainRng {
    inner: ChaCha8Rng,
}

impl ChainRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// One draw from N(0, 1).
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// A standard Gaussian vector, coordinates drawn in order.
    pub fn normal_vector(&mut self, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| self.standard_normal())
    }

    /// One draw from U(0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }
}
