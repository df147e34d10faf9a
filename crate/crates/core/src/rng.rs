//! Seeded, splittable random streams.
//!
//! Every replication owns independent ChaCha8 streams. The key is derived from
//! the base seed and the stream's purpose; the ChaCha stream id is the
//! replication index. Replication `k` therefore sees the same numbers no
//! matter how many replications run or in which order they execute.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type RandomSource = ChaCha8Rng;

/// What a stream is used for. Separate streams keep the objective noise of a
/// replication identical across algorithms (common random numbers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKind {
    Algorithm,
    Objective,
    Hypermodel,
    Path,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Algorithm => 0x0A16_0000_0000_0001,
            StreamKind::Objective => 0x0B1E_0000_0000_0002,
            StreamKind::Hypermodel => 0x04E9_0000_0000_0003,
            StreamKind::Path => 0x0FA7_0000_0000_0004,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedScheme {
    base_seed: u64,
}

impl SeedScheme {
    pub fn new(base_seed: u64) -> Self {
        SeedScheme { base_seed }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream(&self, replication: u64, kind: StreamKind) -> RandomSource {
        let key = splitmix64(self.base_seed ^ kind.tag());
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(replication);
        rng
    }

    /// A scheme whose streams are disjoint from this one's, used to give
    /// sub-experiments (one per sweep point) their own seeds.
    pub fn derive(&self, salt: u64) -> SeedScheme {
        SeedScheme::new(splitmix64(self.base_seed.wrapping_add(splitmix64(salt))))
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One uniform variate in `[0, 1)`.
#[inline]
pub fn uniform(rng: &mut RandomSource) -> f64 {
    rng.random::<f64>()
}
