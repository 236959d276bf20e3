//! Seeding policy: every run consumes one user-provided `u64` seed, and each
//! independent unit of work (output image, scene) draws from its own counter
//! derived stream. Stream `k` depends only on `(seed, k)`, never on worker
//! count or scheduling, which keeps parallel runs byte-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for work unit `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
