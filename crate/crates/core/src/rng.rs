//! Seeded random streams.
//!
//! One experiment seed fans out into independent ChaCha streams, one per
//! measurement setting, so results never depend on the order settings run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson draw that accepts a zero mean.
pub fn poisson<R: rand::Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive mean");
    dist.sample(rng) as u64
}
