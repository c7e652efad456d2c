//! Seeded random streams.
//!
//! Every source of randomness in the crate derives from a single master
//! seed through ChaCha streams, so any run is replayable from the seed
//! recorded in its manifest. Stream ids keep the purposes independent:
//! reseeding one stage never shifts the draws of another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed stream ids for the pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Dataset partitioning.
    Split,
    /// Parameter initialization.
    Init,
    /// Mini-batch shuffling.
    Shuffle,
    /// Synthetic sample generation; one sub-stream per sample.
    SynthSample(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Split => 1,
            Stream::Init => 2,
            Stream::Shuffle => 3,
            Stream::SynthSample(i) => 1_000_000 + i,
        }
    }
}

/// A ChaCha generator on the given stream of the master seed.
pub fn stream_rng(master_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.id());
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let mut a = stream_rng(7, Stream::Split);
        let mut b = stream_rng(7, Stream::Split);
        let mut c = stream_rng(7, Stream::Init);
        let xa: f64 = a.random();
        let xb: f64 = b.random();
        let xc: f64 = c.random();
        assert_eq!(xa.to_bits(), xb.to_bits());
        assert_ne!(xa.to_bits(), xc.to_bits());
    }
}
