//! Reproducible random streams.
//!
//! All randomness comes from ChaCha8 (the 8-round ChaCha stream cipher used
//! as a counter-based generator). A 64-bit user seed is expanded into the
//! 256-bit ChaCha key with four consecutive SplitMix64 outputs, written
//! little-endian. A *stream id* selects the ChaCha nonce, and a substream
//! index selects a disjoint block of the keystream:
//!
//! ```text
//! key      = splitmix64^1..4(seed)
//! nonce    = stream id
//! position = index * WORDS_PER_SUBSTREAM   (32-bit words)
//! ```
//!
//! Per-trial substreams therefore depend only on `(seed, stream, trial)`,
//! never on execution order, which lets the simulators fan out over threads
//! and still produce bit-identical output.
//!
//! Uniform reals are `(u64 >> 11) * 2^-53`, which lies in `[0, 1)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Keystream words reserved per substream. A substream that draws more than
/// `WORDS_PER_SUBSTREAM / 2` 64-bit values runs into the next one.
pub const WORDS_PER_SUBSTREAM: u128 = 64;

/// Stream ids used by the simulators and the pipeline.
pub mod streams {
    pub const TRIALS: u64 = 0;
    pub const DETECTOR: u64 = 1;
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of SplitMix64 applied to `state`; returns the output word.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a tag into a seed, for deriving independent seeds for separate
/// pipeline stages from one master seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut s = seed ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut s)
}

fn expand_key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Factory for indexed substreams of one `(seed, stream)` pair.
#[derive(Clone, Debug)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut base = ChaCha8Rng::from_seed(expand_key(seed));
        base.set_stream(stream);
        StreamFactory { base }
    }

    /// The substream for `index`, positioned at the start of its block.
    pub fn substream(&self, index: u64) -> RandomStream {
        let mut rng = self.base.clone();
        rng.set_word_pos(index as u128 * WORDS_PER_SUBSTREAM);
        RandomStream { rng }
    }

    /// A single unbounded stream starting at keystream position zero.
    pub fn sequential(&self) -> RandomStream {
        self.substream(0)
    }
}

/// A positioned ChaCha8 stream.
#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from the cumulative distribution `cdf` (last entry is
    /// treated as 1 regardless of rounding).
    #[inline]
    pub fn categorical(&mut self, cdf: &[f64]) -> usize {
        sample_cdf(cdf, self.uniform())
    }

    pub(crate) fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Inverse-CDF lookup: the first index whose cumulative weight exceeds `u`.
#[inline]
pub fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    let last = cdf.len() - 1;
    cdf[..last].iter().position(|&c| u < c).unwrap_or(last)
}

/// Running sums of `weights`.
pub fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}
