//! Seeded random stream shared by every stochastic component of a run.
//!
//! The generator is xoshiro256++ with its 256-bit state expanded from the
//! 64-bit seed by SplitMix64 (`SeedableRng::seed_from_u64`).

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
