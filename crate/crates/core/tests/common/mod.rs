#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparsemap::{FactorSpec, Kind, Potentials};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dims small enough to enumerate.
pub fn small_spec<R: Rng>(kind: Kind, rng: &mut R) -> FactorSpec {
    match kind {
        Kind::Dense => FactorSpec::dense(rng.random_range(2..=10)),
        Kind::Sequence => FactorSpec::sequence(rng.random_range(1..=4), rng.random_range(1..=3)),
        Kind::Arborescence => FactorSpec::arborescence(rng.random_range(1..=4)),
        Kind::Matching => FactorSpec::matching(rng.random_range(1..=4), rng.random_range(1..=4)),
    }
    .unwrap()
}

pub const KINDS: [Kind; 4] = [Kind::Dense, Kind::Sequence, Kind::Arborescence, Kind::Matching];

pub fn instance<R: Rng>(kind: Kind, rng: &mut R, scale: f64) -> (FactorSpec, Potentials) {
    let spec = small_spec(kind, rng);
    let pot = sparsemap_testkit::random_potentials(&spec, rng, scale);
    (spec, pot)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
