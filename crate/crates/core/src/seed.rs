//! Seeds and the derivation scheme used to split one master seed into
//! independent per-replication and per-mechanism streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit seed. Generators built from it are ChaCha8, so streams are
/// identical on every platform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub u64);

impl Seed {
    /// Seed for sub-stream `stream`: the `stream + 1`-th SplitMix64 output
    /// starting from state `self`.
    pub fn derive(self, stream: u64) -> Seed {
        Seed(splitmix64(self.0.wrapping_add(
            stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA),
        )))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}
