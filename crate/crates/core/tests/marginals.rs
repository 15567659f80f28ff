mod common;

use common::{max_abs_diff, rng};
use rand::Rng;
use sparsemap::{marginals, sparsemap_active_set, FactorSpec, Kind, Potentials, SolverSettings};
use sparsemap_testkit::{enumerated_marginals, random_potentials, Vertices};

#[test]
fn marginals_match_enumeration() {
    let mut rng = rng(31);
    for kind in [Kind::Dense, Kind::Sequence, Kind::Arborescence] {
        for _ in 0..100 {
            let (spec, pot) = common::instance(kind, &mut rng, 1.0);
            let ours = marginals(&spec, &pot).unwrap();
            let brute = enumerated_marginals(&spec, &pot);
            assert!(max_abs_diff(&ours.u, &brute.u) <= 1e-10, "{spec:?}");
            assert!(max_abs_diff(&ours.v, &brute.v) <= 1e-10, "{spec:?}");
            assert!((ours.log_partition - brute.log_partition).abs() <= 1e-10);
        }
    }
}

#[test]
fn marginals_are_normalized_and_dense() {
    let mut rng = rng(32);
    for _ in 0..20 {
        let spec = FactorSpec::sequence(rng.random_range(2..8), rng.random_range(2..5)).unwrap();
        let FactorSpec::Sequence { len, tags } = spec else { unreachable!() };
        let res = marginals(&spec, &random_potentials(&spec, &mut rng, 2.0)).unwrap();
        for pos in 0..len {
            let total: f64 = (0..tags).map(|t| res.u[spec.seq_unary(pos, t)]).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(res.u.iter().chain(&res.v).all(|&x| x > 0.0));

        let tree = FactorSpec::arborescence(rng.random_range(2..12)).unwrap();
        let FactorSpec::Arborescence { len } = tree else { unreachable!() };
        let res = marginals(&tree, &random_potentials(&tree, &mut rng, 2.0)).unwrap();
        for m in 1..=len {
            let total: f64 = (0..=len).filter_map(|h| tree.arc_index(h, m)).map(|i| res.u[i]).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        assert!(res.u.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn log_partition_counts_tied_maximizers() {
    // three tied best structures and the rest far below
    let spec = FactorSpec::dense(5).unwrap();
    let pot = Potentials::new(&spec, vec![0.0, 0.0, -60.0, 0.0, -60.0], vec![]).unwrap();
    let res = marginals(&spec, &pot).unwrap();
    assert!((res.log_partition - 3f64.ln()).abs() < 1e-12);
    let spec = FactorSpec::arborescence(3).unwrap();
    let res = marginals(&spec, &Potentials::zeros(&spec)).unwrap();
    assert!((res.log_partition - (Vertices::new(&spec).len() as f64).ln()).abs() < 1e-12);
}

#[test]
fn sparsemap_is_sparser_than_marginals() {
    let mut rng = rng(33);
    let mut strictly_sparse = 0;
    let trials = 100;
    for t in 0..trials {
        let kind = [Kind::Sequence, Kind::Arborescence][t % 2];
        let (spec, pot) = common::instance(kind, &mut rng, 1.0);
        let sol = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap().solution;
        let count = Vertices::new(&spec).len();
        assert!(sol.support_size() >= 1 && sol.support_size() <= count);
        if sol.support_size() < count || count == 1 {
            strictly_sparse += 1;
        }
    }
    assert!(strictly_sparse * 100 >= 95 * trials);
}

#[test]
fn overflow_scale_tree_is_reported() {
    let spec = FactorSpec::arborescence(3).unwrap();
    let mut unary = vec![0.0; 9];
    unary[0] = 1e308;
    unary[1] = -1e308;
    let pot = Potentials::new(&spec, unary, vec![]).unwrap();
    assert!(marginals(&spec, &pot).is_err());
}
