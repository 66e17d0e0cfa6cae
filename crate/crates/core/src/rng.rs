//! Seeded random streams. Every random draw in the crate comes from one
//! user seed split into named, independent ChaCha streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named substreams of a single seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Permutation,
    RowSelection,
    Mask,
    Synthetic,
}

impl Substream {
    fn id(self) -> u64 {
        match self {
            Substream::Permutation => 1,
            Substream::RowSelection => 2,
            Substream::Mask => 3,
            Substream::Synthetic => 4,
        }
    }
}

pub fn substream(seed: u64, stream: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
