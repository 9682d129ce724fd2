use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent streams drawn from one user seed so that, e.g., changing the
/// capacity draws never shifts the agent draws.
pub(crate) mod stream {
    pub const NETWORK: u64 = 1;
    pub const AGENTS: u64 = 2;
    pub const PARAMS: u64 = 3;
    pub const TRIALS: u64 = 1 << 32;
}

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
