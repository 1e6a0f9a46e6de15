//! Counter-based substreams: replicate `i` of a scenario always draws from
//! ChaCha8 stream `i` under the scenario seed, whatever thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
