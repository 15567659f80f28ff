mod common;

use common::{instance, max_abs_diff, rng, KINDS};
use proptest::prelude::*;
use sparsemap::solution::combine_support;
use sparsemap::{
    map_oracle, sparsemap_active_set, sparsemap_cg, wolfe_gap, CgVariant, FactorSpec, Kind,
    Potentials, SolveStatus, SolverSettings, SparseSolution,
};
use sparsemap_testkit::{brute_force_sparsemap, random_potentials, sparsemax};

fn assert_solution_invariants(spec: &FactorSpec, sol: &SparseSolution) {
    let total: f64 = sol.weights().iter().sum();
    assert!((total - 1.0).abs() <= 1e-9, "weights sum to {total}");
    assert!(sol.weights().iter().all(|&w| w > 0.0));
    let (u, v) = combine_support(spec, sol.support.iter().map(|(c, w)| (c, *w)));
    assert!(max_abs_diff(&u, &sol.u) <= 1e-9);
    assert!(max_abs_diff(&v, &sol.v) <= 1e-9);
    for i in 0..sol.support.len() {
        for j in 0..i {
            assert_ne!(sol.support[i].0, sol.support[j].0, "duplicate support column");
        }
    }
}

#[test]
fn active_set_matches_brute_force_qp() {
    let mut rng = rng(21);
    for kind in [Kind::Sequence, Kind::Arborescence, Kind::Matching] {
        for _ in 0..40 {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
            let brute = brute_force_sparsemap(&spec, &pot, 1.0);
            let err = max_abs_diff(&out.solution.u, &brute.u);
            assert!(err <= 1e-6, "{kind} {spec:?}: error {err}");
            assert!((out.solution.objective - brute.objective).abs() <= 1e-6);
            assert_eq!(out.solution.status, SolveStatus::Converged);
            assert_solution_invariants(&spec, &out.solution);
        }
    }
}

#[test]
fn dense_kind_is_sparsemax() {
    let mut rng = rng(22);
    for _ in 0..300 {
        let (spec, pot) = instance(Kind::Dense, &mut rng, 1.0);
        let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
        assert!(max_abs_diff(&out.solution.u, &sparsemax(&pot.unary)) <= 1e-8);
    }
}

#[test]
fn optimality_certificate_and_frugality() {
    let mut rng = rng(23);
    for kind in KINDS {
        for _ in 0..30 {
            let spec = match kind {
                Kind::Dense => FactorSpec::dense(30).unwrap(),
                Kind::Sequence => FactorSpec::sequence(8, 4).unwrap(),
                Kind::Arborescence => FactorSpec::arborescence(9).unwrap(),
                Kind::Matching => FactorSpec::matching(7, 9).unwrap(),
            };
            let pot = random_potentials(&spec, &mut rng, 1.0);
            let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
            let sol = &out.solution;
            assert_eq!(sol.status, SolveStatus::Converged, "{kind}");
            assert_solution_invariants(&spec, sol);
            assert!(sol.support_size() <= spec.unary_dim() + 1);
            let best = map_oracle(&spec, &pot.adjusted(&sol.u)).unwrap();
            assert!(best.score <= out.tau + 1e-8, "{kind}: {} > {}", best.score, out.tau);
            for w in sol.trace.windows(2) {
                assert!(w[1].objective >= w[0].objective - 1e-12, "{kind}: objective decreased");
            }
        }
    }
}

#[test]
fn cg_variants_agree_with_active_set() {
    let mut rng = rng(24);
    let settings = SolverSettings {
        max_iter: 100_000,
        gap_tol: 1e-10,
        ..SolverSettings::default()
    };
    for kind in KINDS {
        for _ in 0..8 {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let reference = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap().solution;
            for variant in CgVariant::ALL {
                let sol = sparsemap_cg(&spec, &pot, variant, &settings).unwrap();
                assert_solution_invariants(&spec, &sol);
                assert!(sol.objective <= reference.objective + 1e-9);
                if variant != CgVariant::Vanilla {
                    assert_eq!(sol.status, SolveStatus::Converged, "{} on {kind}", variant.name());
                }
                if sol.status == SolveStatus::Converged {
                    let err = max_abs_diff(&sol.u, &reference.u);
                    assert!(err <= 1e-5, "{} on {kind}: u error {err}", variant.name());
                } else {
                    // sublinear rate: only the objective is close
                    assert!(reference.objective - sol.objective <= 1e-4);
                }
            }
        }
    }
}

#[test]
fn wolfe_gap_bounds_suboptimality() {
    let mut rng = rng(25);
    for kind in [Kind::Sequence, Kind::Arborescence, Kind::Matching] {
        for max_iter in [1, 2, 3, 5, 8] {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let best = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap().solution;
            for variant in CgVariant::ALL {
                let settings = SolverSettings {
                    max_iter,
                    ..SolverSettings::default()
                };
                let sol = sparsemap_cg(&spec, &pot, variant, &settings).unwrap();
                let fwd = map_oracle(&spec, &pot.adjusted(&sol.u)).unwrap().column;
                let d_u: Vec<f64> = fwd.unary_dense(spec.unary_dim()).iter().zip(&sol.u).map(|(a, b)| a - b).collect();
                let d_v: Vec<f64> = fwd.factor_dense(spec.factor_dim()).iter().zip(&sol.v).map(|(a, b)| a - b).collect();
                let gap = wolfe_gap(&d_u, &d_v, &sol.u, &pot).unwrap();
                assert!(best.objective - sol.objective <= gap + 1e-9);
            }
        }
    }
}

#[test]
fn dominant_structure_is_a_vertex_solution() {
    for spec in [
        FactorSpec::sequence(4, 3).unwrap(),
        FactorSpec::arborescence(5).unwrap(),
        FactorSpec::matching(3, 4).unwrap(),
    ] {
        let cols = sparsemap::enumerate_structures(&spec).unwrap();
        let target = &cols[cols.len() / 2];
        let mut unary = vec![0.0; spec.unary_dim()];
        target.add_unary_to(&mut unary, 2.0 * spec.unary_dim() as f64);
        let pot = Potentials::new(&spec, unary, vec![0.0; spec.factor_dim()]).unwrap();
        let sol = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap().solution;
        assert_eq!(sol.support_size(), 1);
        assert_eq!(&sol.support[0].0, target);
        assert_eq!(sol.support[0].1, 1.0);
        for variant in CgVariant::ALL {
            let cg = sparsemap_cg(&spec, &pot, variant, &SolverSettings::default()).unwrap();
            assert_eq!(cg.iterations, 1, "{}", variant.name());
            assert_eq!(cg.support.len(), 1);
        }
    }
}

#[test]
fn scaled_potentials_stay_converged() {
    // large-magnitude potentials push the solution to few, sharply weighted structures
    let mut rng = rng(26);
    for scale in [0.01, 0.1, 10.0, 100.0] {
        for kind in KINDS {
            let (spec, pot) = instance(kind, &mut rng, scale);
            let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
            assert_eq!(out.solution.status, SolveStatus::Converged);
            assert_solution_invariants(&spec, &out.solution);
            if kind != Kind::Dense {
                let brute = brute_force_sparsemap(&spec, &pot, 1.0);
                assert!(max_abs_diff(&out.solution.u, &brute.u) <= 1e-6, "{kind} at {scale}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sparsemax_equivalence(x in prop::collection::vec(-3.0f64..3.0, 2..=10)) {
        let spec = FactorSpec::dense(x.len()).unwrap();
        let pot = Potentials::new(&spec, x.clone(), vec![]).unwrap();
        let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
        prop_assert!(max_abs_diff(&out.solution.u, &sparsemax(&x)) <= 1e-8);
    }

    #[test]
    fn sequence_solutions_respect_invariants(n in 1usize..6, m in 1usize..4, seed in any::<u64>()) {
        let spec = FactorSpec::sequence(n, m).unwrap();
        let pot = random_potentials(&spec, &mut common::rng(seed), 1.0);
        let out = sparsemap_active_set(&spec, &pot, &SolverSettings::default()).unwrap();
        assert_solution_invariants(&spec, &out.solution);
        prop_assert!(out.solution.u.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
        for pos in 0..n {
            let block: f64 = (0..m).map(|t| out.solution.u[spec.seq_unary(pos, t)]).sum();
            prop_assert!((block - 1.0).abs() < 1e-9);
        }
    }
}
