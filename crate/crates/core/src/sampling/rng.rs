use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8 (`rand_chacha::ChaCha8Rng`): the 64-bit seed is expanded
/// into a 256-bit key with `SeedableRng::seed_from_u64`, and `stream_id`
/// selects the 64-bit ChaCha stream (nonce). Distinct stream ids under one
/// seed are non-overlapping keystreams, so repetition `r` of an experiment
/// simply uses `stream_id = r`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index in `0..n` by 64x64 -> 128 multiply-shift. The bias is at most
    /// `n / 2^64`.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Two independent standard normals by Box-Muller, using `libm` so the
    /// values are identical on every platform:
    /// `r = sqrt(-2 ln u1)`, `(r cos 2 pi u2, r sin 2 pi u2)` with
    /// `u1 = 1 - next_f64()` in `(0, 1]` and `u2 = next_f64()`.
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * libm::log(u1)).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * libm::cos(theta), r * libm::sin(theta))
    }
}
