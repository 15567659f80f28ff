mod common;

use common::{instance, rng, KINDS};
use rand::Rng;
use rand_distr::StandardNormal;
use sparsemap::{
    check_scaling_property, enumerate_structures, fy_loss, fy_loss_scaled, hamming_cost_vector,
    sparsemap_active_set, FactorSpec, Kind, Loss, LossKind, Potentials, SolverSettings,
    StructureColumn,
};
use sparsemap_testkit::{brute_force_sparsemap, Vertices};

fn kinds_for(spec: &FactorSpec) -> Vec<LossKind> {
    LossKind::ALL
        .into_iter()
        .filter(|k| spec.kind() != Kind::Matching || !matches!(k, LossKind::Crf | LossKind::MarginCrf))
        .collect()
}

fn random_gold<R: Rng>(spec: &FactorSpec, rng: &mut R) -> StructureColumn {
    let cols = enumerate_structures(spec).unwrap();
    cols[rng.random_range(0..cols.len())].clone()
}

fn value(kind: LossKind, spec: &FactorSpec, pot: &Potentials, gold: &StructureColumn) -> f64 {
    fy_loss(&Loss::standard(kind), spec, pot, gold).unwrap().value
}

/// Loss for strength `t` straight from its definition over the enumerated
/// vertices: conjugate by enumeration (log-sum-exp, max) or the brute-force
/// QP, cost as an explicit Hamming count.
fn definition_value(kind: LossKind, spec: &FactorSpec, pot: &Potentials, gold: &StructureColumn, t: f64) -> f64 {
    let verts = Vertices::new(spec);
    let theta = verts.scores(pot);
    let gold_m = gold.unary_dense(spec.unary_dim());
    let cost = if kind.is_margin() { 1.0 } else { 0.0 };
    let hamming: Vec<f64> = verts
        .m
        .iter()
        .map(|m| cost * m.iter().zip(&gold_m).filter(|(a, b)| a != b).count() as f64)
        .collect();
    let gold_score = gold.score(pot);
    match kind {
        LossKind::Perceptron | LossKind::StructuredSvm => {
            theta.iter().zip(&hamming).map(|(s, h)| s + h).fold(f64::NEG_INFINITY, f64::max) - gold_score
        }
        LossKind::Crf | LossKind::MarginCrf => {
            let z: Vec<f64> = theta.iter().zip(&hamming).map(|(s, h)| s / t + h).collect();
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            t * (max + z.iter().map(|x| (x - max).exp()).sum::<f64>().ln()) - gold_score
        }
        LossKind::Sparsemap | LossKind::MarginSparsemap => {
            let c = hamming_cost_vector(spec, gold, t * cost);
            let augmented = pot.with_unary_offset(&c.vector);
            brute_force_sparsemap(spec, &augmented, t).objective + c.constant + 0.5 * t * gold.unary_norm_sq() as f64
                - gold_score
        }
    }
}

#[test]
fn values_match_definition() {
    let mut rng = rng(51);
    for kind in KINDS {
        for _ in 0..15 {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let gold = random_gold(&spec, &mut rng);
            for loss in kinds_for(&spec) {
                let ours = value(loss, &spec, &pot, &gold);
                let brute = definition_value(loss, &spec, &pot, &gold, 1.0);
                assert!((ours - brute).abs() <= 1e-8, "{loss:?} on {spec:?}: {ours} vs {brute}");
            }
        }
    }
}

#[test]
fn crf_value_is_log_partition_minus_gold_score() {
    let mut rng = rng(52);
    let spec = FactorSpec::sequence(3, 2).unwrap();
    for _ in 0..20 {
        let pot = sparsemap_testkit::random_potentials(&spec, &mut rng, 1.0);
        let gold = random_gold(&spec, &mut rng);
        let lp = sparsemap_testkit::enumerated_marginals(&spec, &pot).log_partition;
        assert!((value(LossKind::Crf, &spec, &pot, &gold) - (lp - gold.score(&pot))).abs() <= 1e-10);
    }
}

#[test]
fn non_negative() {
    let mut rng = rng(53);
    for i in 0..500 {
        let (spec, pot) = instance(KINDS[i % 4], &mut rng, [0.3, 1.0, 3.0][i % 3]);
        let gold = random_gold(&spec, &mut rng);
        for loss in kinds_for(&spec) {
            let v = value(loss, &spec, &pot, &gold);
            assert!(v >= -1e-9, "{loss:?} on {spec:?}: {v}");
        }
    }
}

#[test]
fn zero_at_margin_separated_gold() {
    let mut rng = rng(54);
    for kind in KINDS {
        for _ in 0..10 {
            let spec = common::small_spec(kind, &mut rng);
            let gold = random_gold(&spec, &mut rng);
            let mut unary = vec![0.0; spec.unary_dim()];
            gold.add_unary_to(&mut unary, 60.0);
            let pot = Potentials::new(&spec, unary, vec![0.0; spec.factor_dim()]).unwrap();
            for loss in kinds_for(&spec) {
                let res = fy_loss(&Loss::standard(loss), &spec, &pot, &gold).unwrap();
                assert!(res.value.abs() <= 1e-9, "{loss:?} on {spec:?}: {}", res.value);
                assert!(res.grad_unary.iter().chain(&res.grad_factor).all(|g| g.abs() <= 1e-9));
            }
        }
    }
}

#[test]
fn convexity_probes() {
    let mut rng = rng(55);
    for kind in KINDS {
        for _ in 0..25 {
            let (spec, a) = instance(kind, &mut rng, 1.0);
            let b = sparsemap_testkit::random_potentials(&spec, &mut rng, 1.0);
            let gold = random_gold(&spec, &mut rng);
            let alpha: f64 = rng.random();
            let mix = Potentials::new(
                &spec,
                a.unary.iter().zip(&b.unary).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect(),
                a.factor.iter().zip(&b.factor).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect(),
            )
            .unwrap();
            for loss in kinds_for(&spec) {
                let lhs = value(loss, &spec, &mix, &gold);
                let rhs = alpha * value(loss, &spec, &a, &gold) + (1.0 - alpha) * value(loss, &spec, &b, &gold);
                assert!(lhs <= rhs + 1e-9, "{loss:?} on {spec:?}");
            }
        }
    }
}

#[test]
fn subgradient_inequality() {
    let mut rng = rng(56);
    for kind in KINDS {
        for _ in 0..25 {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let other = sparsemap_testkit::random_potentials(&spec, &mut rng, 1.0);
            let gold = random_gold(&spec, &mut rng);
            for loss in kinds_for(&spec) {
                let res = fy_loss(&Loss::standard(loss), &spec, &pot, &gold).unwrap();
                let linear: f64 = res.grad_unary.iter().zip(other.unary.iter().zip(&pot.unary)).map(|(g, (x, y))| g * (x - y)).sum::<f64>()
                    + res.grad_factor.iter().zip(other.factor.iter().zip(&pot.factor)).map(|(g, (x, y))| g * (x - y)).sum::<f64>();
                assert!(value(loss, &spec, &other, &gold) >= res.value + linear - 1e-9, "{loss:?}");
            }
        }
    }
}

#[test]
fn smooth_gradients_match_finite_differences() {
    let mut rng = rng(57);
    let eps = 1e-5;
    for kind in [Kind::Sequence, Kind::Arborescence, Kind::Dense] {
        for _ in 0..10 {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let gold = random_gold(&spec, &mut rng);
            for loss in [LossKind::Crf, LossKind::MarginCrf, LossKind::Sparsemap] {
                let res = fy_loss(&Loss::standard(loss), &spec, &pot, &gold).unwrap();
                let grad: Vec<f64> = res.grad_unary.iter().chain(&res.grad_factor).copied().collect();
                let mut fd = Vec::new();
                for j in 0..grad.len() {
                    let shifted = |sign: f64| {
                        let mut q = pot.clone();
                        if j < spec.unary_dim() {
                            q.unary[j] += sign * eps;
                        } else {
                            q.factor[j - spec.unary_dim()] += sign * eps;
                        }
                        value(loss, &spec, &q, &gold)
                    };
                    fd.push((shifted(1.0) - shifted(-1.0)) / (2.0 * eps));
                }
                let scale = fd.iter().chain(&grad).fold(1e-6f64, |a, x| a.max(x.abs()));
                let err = common::max_abs_diff(&grad, &fd) / scale;
                // the sparsemap loss is smooth (its gradient is Lipschitz), so it
                // needs no support-stability screening
                assert!(err <= 1e-4, "{loss:?} on {spec:?}: {err}");
            }
        }
    }
}

#[test]
fn sparsemap_gradient_is_supported_on_footprints() {
    let mut rng = rng(58);
    for kind in KINDS {
        for _ in 0..20 {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let gold = random_gold(&spec, &mut rng);
            for loss in [LossKind::Sparsemap, LossKind::MarginSparsemap] {
                let res = fy_loss(&Loss::standard(loss), &spec, &pot, &gold).unwrap();
                let cost = hamming_cost_vector(&spec, &gold, Loss::standard(loss).cost_scale());
                let sol = sparsemap_active_set(&spec, &pot.with_unary_offset(&cost.vector), &SolverSettings {
                    max_iter: 1000,
                    ..SolverSettings::default()
                })
                .unwrap()
                .solution;
                for (j, g) in res.grad_unary.iter().enumerate() {
                    let touched = gold.unary_indices().contains(&j)
                        || sol.support.iter().any(|(c, _)| c.unary_indices().contains(&j));
                    assert!(touched || *g == 0.0);
                }
            }
        }
    }
}

#[test]
fn scaling_identity() {
    let mut rng = rng(59);
    for kind in [Kind::Dense, Kind::Sequence, Kind::Arborescence] {
        for _ in 0..10 {
            let (spec, pot) = instance(kind, &mut rng, 1.0);
            let gold = random_gold(&spec, &mut rng);
            for loss in [LossKind::Crf, LossKind::MarginCrf, LossKind::Sparsemap, LossKind::MarginSparsemap] {
                for t in [0.5, 2.0, 3.7] {
                    let l = Loss::standard(loss);
                    assert!(check_scaling_property(&l, &spec, &pot, &gold, t).unwrap(), "{loss:?} t={t}");
                    let ours = fy_loss_scaled(&l, &spec, &pot, &gold, t, &SolverSettings::default()).unwrap().value;
                    let brute = definition_value(loss, &spec, &pot, &gold, t);
                    assert!((ours - brute).abs() <= 1e-8 * brute.abs().max(1.0), "{loss:?} t={t}");
                }
            }
        }
    }
}

#[test]
fn scaling_examples() {
    let spec = FactorSpec::dense(3).unwrap();
    let pot = Potentials::new(&spec, vec![1.0, 0.5, -1.0], vec![]).unwrap();
    let gold = enumerate_structures(&spec).unwrap()[0].clone();
    assert!(check_scaling_property(&Loss::standard(LossKind::Sparsemap), &spec, &pot, &gold, 2.0).unwrap());
    let seq = FactorSpec::sequence(2, 2).unwrap();
    let mut rng = rng(60);
    let pot: Vec<f64> = (0..seq.unary_dim() + seq.factor_dim()).map(|_| rng.sample(StandardNormal)).collect();
    let pot = Potentials::new(&seq, pot[..4].to_vec(), pot[4..].to_vec()).unwrap();
    let gold = enumerate_structures(&seq).unwrap()[2].clone();
    assert!(check_scaling_property(&Loss::standard(LossKind::Crf), &seq, &pot, &gold, 0.5).unwrap());
}
