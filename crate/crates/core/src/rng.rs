//! Named, independent random substreams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement,
    FadingHu,
    FadingHi,
    FadingIu,
    CsiError,
    InitWet,
    InitOffload,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::FadingHu => 2,
            Stream::FadingHi => 3,
            Stream::FadingIu => 4,
            Stream::CsiError => 5,
            Stream::InitWet => 6,
            Stream::InitOffload => 7,
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// SplitMix64 finalizer, used to derive per-row seeds.
pub fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn combine(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}
