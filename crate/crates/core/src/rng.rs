//! Counter-based random streams keyed by `(seed, experiment, replication)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha8 stream: the key holds `seed` and `experiment`, the stream id is
/// `replication`. Draws never depend on which thread consumes the stream.
pub fn stream_rng(seed: u64, experiment: u64, replication: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&experiment.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replication);
    rng
}
