//! Seeded randomness shared by the generators and the trainer.
//!
//! Every stream is a ChaCha8 generator seeded from a single `u64`. Normal
//! deviates use the Box-Muller transform (cosine branch only, one uniform
//! pair per deviate) so generated data is reproducible from the seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type WtaRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> WtaRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform deviate in `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Standard normal deviate via Box-Muller.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - u lies in (0, 1], keeping the logarithm finite.
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
