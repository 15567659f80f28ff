use crate::model::{FactorSpec, Potentials};

/// Max-sum Viterbi decoding; returns the tag path.
///
/// Ties prefer the lower tag index, both for the final tag and for each
/// backpointer.
pub fn viterbi(spec: &FactorSpec, pot: &Potentials) -> Vec<usize> {
    let FactorSpec::Sequence { len, tags } = *spec else {
        panic!("viterbi called on {} spec", spec.kind())
    };
    let mut best: Vec<f64> = (0..tags)
        .map(|t| pot.factor[spec.seq_start(t)] + pot.unary[spec.seq_unary(0, t)])
        .collect();
    let mut backpointers = vec![vec![0usize; tags]; len];
    let mut next = vec![0.0; tags];
    for pos in 1..len {
        for b in 0..tags {
            let mut arg = 0;
            let mut val = f64::NEG_INFINITY;
            for (a, &prev) in best.iter().enumerate() {
                let cand = prev + pot.factor[spec.seq_transition(pos, a, b)];
                if cand > val {
                    val = cand;
                    arg = a;
                }
            }
            backpointers[pos][b] = arg;
            next[b] = val + pot.unary[spec.seq_unary(pos, b)];
        }
        std::mem::swap(&mut best, &mut next);
    }
    let mut last = 0;
    let mut val = f64::NEG_INFINITY;
    for (t, &score) in best.iter().enumerate() {
        let cand = score + pot.factor[spec.seq_end(t)];
        if cand > val {
            val = cand;
            last = t;
        }
    }
    let mut path = vec![0; len];
    path[len - 1] = last;
    for pos in (1..len).rev() {
        path[pos - 1] = backpointers[pos][path[pos]];
    }
    path
}
