//! Splittable seeds.
//!
//! Every random draw in the crate goes through a [`Seed`]. A seed is a 64-bit
//! value plus a stream index; the pair fully determines the generator, and
//! [`Seed::child`] derives independent sub-seeds for per-stratum, per-kernel
//! or per-trial streams so results never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    pub stream: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl Seed {
    pub const fn new(value: u64) -> Self {
        Seed { value, stream: 0 }
    }

    pub const fn with_stream(value: u64, stream: u64) -> Self {
        Seed { value, stream }
    }

    /// Derives the `index`-th sub-seed. Children of distinct parents or
    /// distinct indices use unrelated generator keys.
    pub fn child(&self, index: u64) -> Seed {
        Seed {
            value: splitmix64(self.value ^ splitmix64(self.stream.wrapping_add(0x5EED))),
            stream: index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.value);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed::new(value)
    }
}
