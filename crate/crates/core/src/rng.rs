//! The pinned random-number generator.
//!
//! Every stochastic routine takes an explicit `&mut impl Rng`. Experiments use
//! [`TrialRng`] (ChaCha with 8 rounds) seeded through [`trial_rng`], so a
//! `(base_seed, trial)` pair always reproduces the same stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Stream for trial `trial` of a batch started from `base_seed`.
pub fn trial_rng(base_seed: u64, trial: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(base_seed ^ trial)
}
