//! Counter-addressed random streams.
//!
//! Every Gaussian draw is addressed by `(seed, stream, index)`. Draw `index`
//! of a stream occupies ChaCha8 words `4 * index .. 4 * index + 4` (two
//! `u64`s fed to Box-Muller), so the value for a given site never depends on
//! which other sites were sampled, or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream carrying the per-site Gaussian vector.
pub const STREAM_SITES: u64 = 0;
/// Stream used to draw random deletion sets.
pub const STREAM_DELETION: u64 = 1;
/// Stream used by bootstrap resampling.
pub const STREAM_BOOTSTRAP: u64 = 2;

const WORDS_PER_NORMAL: u128 = 4;

#[derive(Clone, Debug)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Standard normal number `index` of this stream.
    pub fn normal_at(&mut self, index: u64) -> f64 {
        self.rng.set_word_pos(u128::from(index) * WORDS_PER_NORMAL);
        self.next_normal()
    }

    /// Fills `out` with draws `start, start + 1, ...`.
    pub fn fill(&mut self, start: u64, out: &mut [f64]) {
        self.rng.set_word_pos(u128::from(start) * WORDS_PER_NORMAL);
        for x in out.iter_mut() {
            *x = self.next_normal();
        }
    }

    fn next_normal(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        box_muller(a, b)
    }
}

fn box_muller(a: u64, b: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((a >> 11) as f64 + 1.0) * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// SplitMix64 finaliser; used to derive per-trial seeds from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A general-purpose generator on a dedicated stream of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
