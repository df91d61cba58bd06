//! Named random substreams derived from one experiment seed.

use std::hash::Hasher;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stage `label` (and repetition `index`) of a run seeded with `seed`.
///
/// The seed selects the ChaCha key and the label/index pair selects the
/// stream, so stages never share random numbers.
pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(label, index));
    rng
}

/// Seed value for APIs that take a `u64` rather than a generator.
pub fn subseed(seed: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, label, index).next_u64()
}

fn stream_id(label: &str, index: u64) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(label.as_bytes());
    h.write_u64(index);
    h.finish()
}
