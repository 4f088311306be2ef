//! Seed-derived random streams.
//!
//! A run seed `s` expands into several ChaCha8 streams sharing the same key
//! (`ChaCha8Rng::seed_from_u64(s)`) and differing in the ChaCha stream id.
//! Distinct stream ids give non-overlapping keystreams, so initialization,
//! per-iteration batches and evaluation references never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Initial positions of the compressed points.
    Init = 0,
    /// The fresh batch drawn at every iteration, consumed in iteration order.
    Batches = 1,
    /// Reference samples for loss re-estimation.
    Evaluation = 2,
    /// The i.i.d. comparison set.
    Baseline = 3,
    /// Reference samples for i.i.d.-vs-compressed comparisons.
    Reference = 4,
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
