//! Stable seed derivation.
//!
//! Episode seeds are derived from run-level seeds with a fixed hash so that
//! results are reproducible across platforms and independent of scheduling:
//! changing one problem's id changes only that episode's randomness.

/// FNV-1a over length-prefixed parts. Fixed algorithm, platform independent.
pub fn stable_hash64(parts: &[&[u8]]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    for part in parts {
        eat(&(part.len() as u64).to_le_bytes());
        eat(part);
    }
    h
}

/// Seed for one episode: `hash(run_seed, strategy_name, problem_id)`.
pub fn episode_seed(run_seed: u64, strategy_name: &str, problem_id: &str) -> u64 {
    stable_hash64(&[
        &run_seed.to_le_bytes(),
        strategy_name.as_bytes(),
        problem_id.as_bytes(),
    ])
}

/// Seed for the `index`-th item in a derived stream (oracle repetitions,
/// cascade attempts, suite problems).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    stable_hash64(&[&base.to_le_bytes(), &index.to_le_bytes()])
}
