//! Root-seed splitting.
//!
//! Every consumer of randomness derives its own stream from one root seed, so
//! a single number reproduces a whole run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Consumers of randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init,
    Attack,
    DataOrder,
    Data,
    Landscape,
    Mixup,
    Eval,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Init => 0x494e_4954,
            Stream::Attack => 0x4154_544b,
            Stream::DataOrder => 0x4f52_4452,
            Stream::Data => 0x4441_5441,
            Stream::Landscape => 0x4c41_4e44,
            Stream::Mixup => 0x4d49_5855,
            Stream::Eval => 0x4556_414c,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of `(stream, index)` from `root`.
pub fn derive(root: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ stream.tag()) ^ index)
}

/// Mixes an extra index into an already derived seed.
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
