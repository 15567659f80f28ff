//! Reference oracles for testing `sparsemap`.
//!
//! Everything here works on the explicit, enumerated vertex set of small
//! instances and shares no numerical code with the solvers under test: dense
//! indicator vectors instead of sparse index lists, Gaussian elimination
//! instead of Cholesky updates, explicit sums instead of dynamic programs.

use rand::Rng;
use rand_distr::StandardNormal;
use sparsemap::{enumerate_structures, FactorSpec, Potentials, StructureColumn};

/// Random standard-normal potentials times `scale`.
pub fn random_potentials<R: Rng>(spec: &FactorSpec, rng: &mut R, scale: f64) -> Potentials {
    let mut draw = |n: usize| {
        (0..n)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect::<Vec<_>>()
    };
    let unary = draw(spec.unary_dim());
    let factor = draw(spec.factor_dim());
    Potentials::new(spec, unary, factor).unwrap()
}

/// Euclidean projection onto the probability simplex (sparsemax) by sorting
/// and thresholding.
pub fn sparsemax(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &z) in sorted.iter().enumerate() {
        cumsum += z;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if z > t {
            tau = t;
        }
    }
    x.iter().map(|&z| (z - tau).max(0.0)).collect()
}

/// Dense view of every structure of a small spec.
pub struct Vertices {
    pub columns: Vec<StructureColumn>,
    pub m: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
}

impl Vertices {
    pub fn new(spec: &FactorSpec) -> Self {
        let columns = enumerate_structures(spec).unwrap();
        let m = columns.iter().map(|c| c.unary_dense(spec.unary_dim())).collect();
        let n = columns.iter().map(|c| c.factor_dense(spec.factor_dim())).collect();
        Vertices { columns, m, n }
    }

    /// `theta_s` by explicit dot products.
    pub fn scores(&self, pot: &Potentials) -> Vec<f64> {
        self.m
            .iter()
            .zip(&self.n)
            .map(|(m, n)| dot(m, &pot.unary) + dot(n, &pot.factor))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximum structure score by enumeration.
pub fn enumerated_max(spec: &FactorSpec, pot: &Potentials) -> f64 {
    Vertices::new(spec)
        .scores(pot)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Gibbs marginals and log-partition by enumeration.
pub struct EnumeratedMarginals {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub log_partition: f64,
    pub probabilities: Vec<f64>,
}

pub fn enumerated_marginals(spec: &FactorSpec, pot: &Potentials) -> EnumeratedMarginals {
    let verts = Vertices::new(spec);
    let scores = verts.scores(pot);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let log_partition = max + total.ln();
    let probabilities: Vec<f64> = scores.iter().map(|s| (s - log_partition).exp()).collect();
    let mut u = vec![0.0; spec.unary_dim()];
    let mut v = vec![0.0; spec.factor_dim()];
    for (p, (m, n)) in probabilities.iter().zip(verts.m.iter().zip(&verts.n)) {
        for (x, mi) in u.iter_mut().zip(m) {
            *x += p * mi;
        }
        for (x, ni) in v.iter_mut().zip(n) {
            *x += p * ni;
        }
    }
    EnumeratedMarginals {
        u,
        v,
        log_partition,
        probabilities,
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None`
/// when a pivot falls below `1e-10`.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Exact SparseMAP solution of a small instance.
pub struct BruteForceSolution {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub objective: f64,
    /// Indices into the enumeration with their weights.
    pub support: Vec<(usize, f64)>,
    pub tau: f64,
}

/// SparseMAP over the explicit vertex set
///
/// ```text
///     maximize theta^T y - penalty/2 ||M y||^2   over the simplex in R^D
/// ```
///
/// An accelerated projected-gradient run narrows down the candidate vertices;
/// supports drawn from the candidates are then enumerated by increasing size,
/// the restricted KKT system of each is solved by Gaussian elimination, and
/// the first feasible solution whose multiplier dominates every vertex's
/// adjusted score (the global optimality certificate) is returned.
pub fn brute_force_sparsemap(spec: &FactorSpec, pot: &Potentials, penalty: f64) -> BruteForceSolution {
    let verts = Vertices::new(spec);
    let theta = verts.scores(pot);
    let d = verts.len();
    let k = spec.unary_dim();
    let mu = |y: &[f64]| {
        let mut u = vec![0.0; k];
        for (w, m) in y.iter().zip(&verts.m) {
            for (x, mi) in u.iter_mut().zip(m) {
                *x += w * mi;
            }
        }
        u
    };

    // projected gradient on f(y) = penalty/2 ||M y||^2 - theta^T y
    let lipschitz = penalty * verts.m.iter().map(|m| m.iter().sum::<f64>()).fold(0.0, f64::max) * d as f64;
    let step = 1.0 / lipschitz.max(1e-12);
    let mut y = vec![1.0 / d as f64; d];
    let mut z = y.clone();
    let mut t_mom = 1.0f64;
    for _ in 0..4000 {
        let u = mu(&z);
        let grad: Vec<f64> = (0..d).map(|s| penalty * dot(&verts.m[s], &u) - theta[s]).collect();
        let moved: Vec<f64> = z.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let y_next = sparsemax(&moved);
        let t_next = (1.0 + (1.0 + 4.0 * t_mom * t_mom).sqrt()) / 2.0;
        z = y_next
            .iter()
            .zip(&y)
            .map(|(a, b)| a + (t_mom - 1.0) / t_next * (a - b))
            .collect();
        y = y_next;
        t_mom = t_next;
    }
    let u_approx = mu(&y);
    let adjusted: Vec<f64> = (0..d)
        .map(|s| theta[s] - penalty * dot(&verts.m[s], &u_approx))
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| adjusted[b].partial_cmp(&adjusted[a]).unwrap());

    let spread = adjusted[order[0]] - adjusted[order[d - 1]];
    for &(window, cap) in &[(1e-4, 12usize), (1e-3, 14), (1e-2, 14)] {
        let best = adjusted[order[0]];
        let cands: Vec<usize> = order
            .iter()
            .copied()
            .take_while(|&s| adjusted[s] >= best - window * (1.0 + spread))
            .take(cap)
            .collect();
        let c = cands.len();
        let mut masks: Vec<u32> = (1..(1u32 << c)).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        for mask in masks {
            let subset: Vec<usize> = (0..c).filter(|i| mask >> i & 1 == 1).map(|i| cands[i]).collect();
            if let Some(sol) = certify(&verts, &theta, penalty, &subset) {
                return sol;
            }
        }
    }
    dense_active_set(&verts, &theta, penalty).expect("brute-force oracle failed to certify an optimum")
}

// Primal active-set method over the explicit vertex list with exhaustive
// pricing; used when the optimal face holds too many near-tied vertices for
// subset enumeration. The result still has to pass `certify`.
fn dense_active_set(verts: &Vertices, theta: &[f64], penalty: f64) -> Option<BruteForceSolution> {
    let d = verts.len();
    let start = (0..d).max_by(|&a, &b| theta[a].partial_cmp(&theta[b]).unwrap())?;
    let mut support = vec![start];
    let mut y = vec![1.0];
    for _ in 0..10_000 {
        let (y_hat, tau) = kkt(verts, theta, penalty, &support)?;
        if y_hat.iter().all(|&w| w >= 0.0) {
            y = y_hat;
            let mut u = vec![0.0; verts.m[0].len()];
            for (&w, &s) in y.iter().zip(&support) {
                for (x, mi) in u.iter_mut().zip(&verts.m[s]) {
                    *x += w * mi;
                }
            }
            let mut violators: Vec<(f64, usize)> = (0..d)
                .filter(|s| !support.contains(s))
                .map(|s| (theta[s] - penalty * dot(&verts.m[s], &u) - tau, s))
                .filter(|&(v, _)| v > 1e-12 * (1.0 + tau.abs()))
                .collect();
            if violators.is_empty() {
                return certify(verts, theta, penalty, &support);
            }
            violators.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let entering = violators.iter().map(|&(_, s)| s).find(|&s| {
                let mut trial = support.clone();
                trial.push(s);
                kkt(verts, theta, penalty, &trial).is_some()
            })?;
            support.push(entering);
            y.push(0.0);
        } else {
            let mut gamma = 1.0;
            let mut leaving = 0;
            for (i, (&w, &wh)) in y.iter().zip(&y_hat).enumerate() {
                if w > wh && w / (w - wh) < gamma {
                    gamma = w / (w - wh);
                    leaving = i;
                }
            }
            for (w, wh) in y.iter_mut().zip(&y_hat) {
                *w += gamma * (wh - *w);
            }
            support.remove(leaving);
            y.remove(leaving);
        }
    }
    None
}

fn kkt(verts: &Vertices, theta: &[f64], penalty: f64, subset: &[usize]) -> Option<(Vec<f64>, f64)> {
    let r = subset.len();
    let mut a = vec![vec![0.0; r + 1]; r + 1];
    let mut b = vec![0.0; r + 1];
    for (i, &s) in subset.iter().enumerate() {
        for (j, &t) in subset.iter().enumerate() {
            a[i][j] = penalty * dot(&verts.m[s], &verts.m[t]);
        }
        a[i][r] = 1.0;
        a[r][i] = 1.0;
        b[i] = theta[s];
    }
    b[r] = 1.0;
    let mut x = gauss_solve(a, b)?;
    let tau = x.pop()?;
    Some((x, tau))
}

fn certify(verts: &Vertices, theta: &[f64], penalty: f64, subset: &[usize]) -> Option<BruteForceSolution> {
    let (x, tau) = kkt(verts, theta, penalty, subset)?;
    let weights = &x[..];
    if weights.iter().any(|&w| w < -1e-12) {
        return None;
    }
    let k = verts.m[0].len();
    let kf = verts.n[0].len();
    let mut u = vec![0.0; k];
    let mut v = vec![0.0; kf];
    for (&w, &s) in weights.iter().zip(subset) {
        for (x, mi) in u.iter_mut().zip(&verts.m[s]) {
            *x += w * mi;
        }
        for (x, ni) in v.iter_mut().zip(&verts.n[s]) {
            *x += w * ni;
        }
    }
    let tol = 1e-9 * (1.0 + tau.abs());
    for s in 0..verts.len() {
        if theta[s] - penalty * dot(&verts.m[s], &u) > tau + tol {
            return None;
        }
    }
    let objective = dot(weights, &subset.iter().map(|&s| theta[s]).collect::<Vec<_>>())
        - 0.5 * penalty * dot(&u, &u);
    Some(BruteForceSolution {
        u,
        v,
        objective,
        support: subset.iter().copied().zip(weights.iter().copied()).collect(),
        tau,
    })
}
