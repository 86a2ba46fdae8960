//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 generator. The 256-bit key is expanded from a
//! 64-bit seed with `SeedableRng::seed_from_u64`, and the ChaCha stream
//! counter selects one of 2^64 independent substreams. So
//! `substream(seed, k)` is the key from `seed` with stream `k`.
//!
//! Experiments give every trial its own substream, which makes results
//! independent of scheduling and thread count.

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recorded in report metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9); key = seed_from_u64(seed), stream = substream index";

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Position within the stream, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Rebuild a stream at a recorded position.
    pub fn at_word_pos(seed: u64, stream: u64, word_pos: u128) -> Self {
        let mut out = Self::new(seed, stream);
        out.inner.set_word_pos(word_pos);
        out
    }

    /// Substream `k` under the same key. Position in `self` is irrelevant.
    pub fn substream(&self, k: u64) -> Self {
        Self::new(self.seed, k)
    }

    /// A stream with a fresh key derived from `(seed, stream, label)`, for
    /// separating the sub-experiments of one run.
    pub fn child(&self, label: u64) -> Self {
        let key = splitmix64(self.seed ^ splitmix64(self.stream ^ splitmix64(label)));
        Self::new(key, 0)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform integer in `[0, bound)` by rejection on `bits(bound)` random bits.
///
/// Panics if `bound` is zero.
pub fn random_biguint_below<R: RngCore + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(bound.bits() > 0, "empty range");
    let bits = bound.bits();
    let n_bytes = bits.div_ceil(8) as usize;
    let top_mask = match bits % 8 {
        0 => 0xff,
        r => (1u8 << r) - 1,
    };
    let mut buf = vec![0u8; n_bytes];
    loop {
        rng.fill_bytes(&mut buf);
        buf[n_bytes - 1] &= top_mask;
        let candidate = BigUint::from_bytes_le(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform integer with exactly `bits` random bits, i.e. in `[0, 2^bits)`.
pub fn random_biguint_bits<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    if bits == 0 {
        return BigUint::default();
    }
    let bound = BigUint::from(1u8) << bits;
    random_biguint_below(&bound, rng)
}
