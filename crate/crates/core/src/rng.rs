//! Reproducible random-number streams.
//!
//! Streams are keyed by `(seed, stream_id)` so that replications and the
//! different draw sites inside one run never share generator state. Identical
//! keys and draw index give bit-identical values on every platform.

use rand_core::RngCore;
use rand_pcg::Pcg64;

/// A splittable random stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    pcg: Pcg64,
}

impl RngStream {
    /// Creates the stream for `(seed, stream_id)`.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        // Spread the seed over the 128-bit state with splitmix steps so that
        // nearby seeds produce unrelated states.
        let hi = splitmix64(seed);
        let lo = splitmix64(hi ^ 0x9e37_79b9_7f4a_7c15);
        let state = ((hi as u128) << 64) | lo as u128;
        let stream = ((splitmix64(stream_id) as u128) << 64) | stream_id as u128;
        RngStream {
            pcg: Pcg64::new(state, stream),
        }
    }

    /// Uniform draw on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.pcg.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `(0, 1]`, safe as argument of `ln`.
    #[inline]
    pub fn next_f64_open(&mut self) -> f64 {
        1.0 - self.next_f64()
    }

    /// Standard normal draw (Box-Muller; consumes two uniforms).
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
