//! Named, counter-addressed random substreams.
//!
//! A stream is identified by `(master seed, purpose, index)`; drawing from
//! one worker's stream never shifts another's, so results do not depend on
//! iteration or thread order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Population,
    Assignment,
    Bdm,
    Noise,
    Learning,
    Clustering,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Population => 0x706f_7075,
            Stream::Assignment => 0x6173_7369,
            Stream::Bdm => 0x6264_6d00,
            Stream::Noise => 0x6e6f_6973,
            Stream::Learning => 0x6c65_6172,
            Stream::Clustering => 0x636c_7573,
        }
    }
}

/// SplitMix64 finalizer, used to spread the seed and tag over the key.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let a = mix(seed);
    let b = mix(a ^ stream.tag());
    let c = mix(b);
    let d = mix(c ^ stream.tag().rotate_left(32));
    for (chunk, word) in key.chunks_mut(8).zip([a, b, c, d]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
