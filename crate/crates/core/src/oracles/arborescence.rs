/// Maximum-weight spanning arborescence rooted at node 0 (Chu-Liu/Edmonds).
///
/// `scores[h][m]` is the weight of the arc `h -> m`; missing arcs are
/// `f64::NEG_INFINITY`. Every non-root node needs at least one finite
/// incoming arc. Returns the parent of every node (`parents[0]` is 0).
///
/// Cycles are contracted explicitly, one per round, at `O(n^2)` per round.
pub fn max_arborescence(scores: &[Vec<f64>]) -> Vec<usize> {
    let n = scores.len();
    let mut parent = vec![0usize; n];
    for v in 1..n {
        let mut best: Option<usize> = None;
        for (u, row) in scores.iter().enumerate() {
            if u == v || row[v] == f64::NEG_INFINITY {
                continue;
            }
            if best.is_none_or(|b| row[v] > scores[b][v]) {
                best = Some(u);
            }
        }
        parent[v] = best.expect("node without incoming arc");
    }

    let Some(cycle) = find_cycle(&parent) else {
        return parent;
    };
    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }

    // contracted graph: outside nodes keep their relative order, the cycle
    // becomes the last node
    let outside: Vec<usize> = (0..n).filter(|&v| !in_cycle[v]).collect();
    let mut new_id = vec![usize::MAX; n];
    for (k, &v) in outside.iter().enumerate() {
        new_id[v] = k;
    }
    let c = outside.len();
    let mut contracted = vec![vec![f64::NEG_INFINITY; c + 1]; c + 1];
    let mut enter_at = vec![usize::MAX; c + 1];
    let mut leave_from = vec![usize::MAX; c + 1];
    for u in 0..n {
        for v in 1..n {
            let s = scores[u][v];
            if u == v || s == f64::NEG_INFINITY {
                continue;
            }
            match (in_cycle[u], in_cycle[v]) {
                (false, false) => contracted[new_id[u]][new_id[v]] = s,
                (false, true) => {
                    let adjusted = s - scores[parent[v]][v];
                    if adjusted > contracted[new_id[u]][c] {
                        contracted[new_id[u]][c] = adjusted;
                        enter_at[new_id[u]] = v;
                    }
                }
                (true, false) => {
                    if s > contracted[c][new_id[v]] {
                        contracted[c][new_id[v]] = s;
                        leave_from[new_id[v]] = u;
                    }
                }
                (true, true) => {}
            }
        }
    }

    let sub = max_arborescence(&contracted);
    let mut result = parent;
    for &v in outside.iter().skip(1) {
        let p = sub[new_id[v]];
        result[v] = if p == c { leave_from[new_id[v]] } else { outside[p] };
    }
    let entry = sub[c];
    result[enter_at[entry]] = outside[entry];
    result
}

fn find_cycle(parent: &[usize]) -> Option<Vec<usize>> {
    let n = parent.len();
    // 0 = unvisited, 1 = on current walk, 2 = done
    let mut state = vec![0u8; n];
    state[0] = 2;
    for start in 1..n {
        let mut walk = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            walk.push(v);
            v = parent[v];
        }
        if state[v] == 1 {
            let pos = walk.iter().position(|&w| w == v).expect("cycle node on walk");
            return Some(walk[pos..].to_vec());
        }
        for w in walk {
            state[w] = 2;
        }
    }
    None
}
