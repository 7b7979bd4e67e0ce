//! Seed derivation. Every random draw in the simulator comes from a ChaCha
//! stream selected by `(seed, domain, index)`, so a sweep's noise depends only
//! on its own index and parallel runs agree with serial ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DOMAIN_ASE: u64 = 0x41_5345;
pub(crate) const DOMAIN_LASER: u64 = 0x4c_4153;
pub(crate) const DOMAIN_WALK: u64 = 0x57_414c;
pub(crate) const DOMAIN_JONES: u64 = 0x4a_4f4e;

pub(crate) fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}
