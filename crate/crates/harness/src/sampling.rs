//! Seeded random draws. Every batch item gets its own ChaCha stream so results
//! do not depend on scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparsemap::{FactorSpec, Potentials};

/// Generator for item `index` of a run seeded with `seed`.
pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normal<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Potentials with independent `N(0, scale^2)` entries.
pub fn random_potentials<R: Rng>(spec: &FactorSpec, rng: &mut R, scale: f64) -> Potentials {
    let unary = standard_normal(rng, spec.unary_dim()).into_iter().map(|x| scale * x).collect();
    let factor = standard_normal(rng, spec.factor_dim()).into_iter().map(|x| scale * x).collect();
    Potentials::new(spec, unary, factor).expect("finite draws of the right length")
}
