//! Deterministic seed derivation.
//!
//! * replication `k` of a batch uses `mix64(master ^ mix64(k + 1))`;
//! * the instance of a batch uses `mix64(master ^ fnv1a64("instance"))`;
//! * an episode seeded with `s` draws customers from ChaCha8 stream 0 and
//!   feeds policy-internal randomness from `mix64(s ^ POLICY_SALT)`.
//!
//! `mix64` is the SplitMix64 finaliser.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const POLICY_SALT: u64 = 0x5851_f42d_4c95_7f2d;

pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn replication_seed(master: u64, k: u64) -> u64 {
    mix64(master ^ mix64(k.wrapping_add(1)))
}

pub fn instance_seed(master: u64) -> u64 {
    mix64(master ^ fnv1a64(b"instance"))
}

/// Instance seed when instances are redrawn for every replication.
pub fn replication_instance_seed(master: u64, k: u64) -> u64 {
    mix64(instance_seed(master) ^ mix64(k.wrapping_add(1)))
}

pub fn customer_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

pub fn policy_seed(seed: u64) -> u64 {
    mix64(seed ^ POLICY_SALT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0 are mix64(0), mix64(golden), ...
        assert_eq!(mix64(0), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn fnv_reference_value() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn streams_are_distinct() {
        let seeds: std::collections::HashSet<u64> =
            (0..1000).map(|k| replication_seed(42, k)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(instance_seed(42), replication_seed(42, 0));
        assert_ne!(policy_seed(7), 7);
    }
}
