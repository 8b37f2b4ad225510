//! Weighted Euclidean projection onto order cones.
//!
//! The order cone `C(P)` is the set of nonnegative functions on `P` that are
//! nondecreasing along the order. Projection first solves the weighted
//! isotonic regression (no sign constraint) and then clamps negative values
//! to zero; clamping commutes with isotonic regression, which the oracle tests
//! below check numerically.
//!
//! Three exact solvers are used depending on the shape of the order:
//! pool-adjacent-violators for chains, minimum-block merging for forests
//! (every element covers at most one other), and recursive partitioning by
//! maximum-weight upsets for arbitrary posets.

use crate::error::{NdError, Result};
use crate::poset::Poset;

/// A weighted projection of `y` onto `C(P)`.
#[derive(Debug, Clone)]
pub struct ProjectionProblem<'a> {
    y: Vec<f64>,
    w: Vec<f64>,
    poset: &'a Poset,
}

impl<'a> ProjectionProblem<'a> {
    /// Unit weights.
    pub fn new(y: Vec<f64>, poset: &'a Poset) -> Result<Self> {
        let w = vec![1.0; y.len()];
        Self::with_weights(y, w, poset)
    }

    pub fn with_weights(y: Vec<f64>, w: Vec<f64>, poset: &'a Poset) -> Result<Self> {
        if y.len() != poset.size() || w.len() != poset.size() {
            return Err(NdError::ShapeMismatch(format!(
                "target of length {} and weights of length {} for a poset of {} elements",
                y.len(),
                w.len(),
                poset.size()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NdError::InvalidArgument("projection target must be finite".into()));
        }
        if w.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(NdError::InvalidArgument("weights must be positive and finite".into()));
        }
        Ok(ProjectionProblem { y, w, poset })
    }

    pub fn target(&self) -> &[f64] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn poset(&self) -> &Poset {
        self.poset
    }

    /// Weighted squared distance from the target.
    pub fn objective(&self, v: &[f64]) -> f64 {
        self.y
            .iter()
            .zip(&self.w)
            .zip(v)
            .map(|((y, w), v)| w * (y - v) * (y - v))
            .sum()
    }
}

/// Weighted least-squares nondecreasing fit on a chain (pool adjacent
/// violators).
pub fn pava_chain(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len(), "pava_chain: length mismatch");
    // Each block: (weighted sum, weight, count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((wi * yi, wi, 1));
        while blocks.len() > 1 {
            let (s2, w2, n2) = blocks[blocks.len() - 1];
            let (s1, w1, n1) = blocks[blocks.len() - 2];
            if s1 / w1 <= s2 / w2 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, w1 + w2, n1 + n2);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, w, n) in blocks {
        out.extend(std::iter::repeat_n(s / w, n));
    }
    out
}

/// Isotonic regression on a forest order in which every element covers at
/// most one other element (its parent).
///
/// Repeatedly takes the block of smallest value: if it has no parent block
/// its value is final, otherwise it is pooled with its parent block. Pooling
/// the global minimum into its parent is always optimal because the parent's
/// level set cannot have a mean below that minimum.
fn tree_isotonic(y: &[f64], w: &[f64], poset: &Poset) -> Vec<f64> {
    let p = y.len();
    let parent: Vec<Option<usize>> = (0..p).map(|x| poset.lower_covers(x).first().copied()).collect();
    // Union-find block labels. A block's representative is its lowest
    // element, so `parent[rep]` links it to the parent block.
    let mut block: Vec<usize> = (0..p).collect();
    let mut sum: Vec<f64> = y.iter().zip(w).map(|(a, b)| a * b).collect();
    let mut weight: Vec<f64> = w.to_vec();
    let mut alive: Vec<bool> = vec![true; p];
    let mut value = vec![0.0; p];
    let mut finalized = vec![false; p];
    let find = |block: &mut Vec<usize>, mut x: usize| {
        while block[x] != x {
            block[x] = block[block[x]];
            x = block[x];
        }
        x
    };
    loop {
        let mut best: Option<usize> = None;
        for b in 0..p {
            if alive[b] && !finalized[b] {
                let better = match best {
                    None => true,
                    Some(c) => sum[b] / weight[b] < sum[c] / weight[c],
                };
                if better {
                    best = Some(b);
                }
            }
        }
        let Some(b) = best else { break };
        let parent_block = parent[b].map(|x| find(&mut block, x));
        match parent_block {
            Some(pb) if !finalized[pb] => {
                block[b] = pb;
                sum[pb] += sum[b];
                weight[pb] += weight[b];
                alive[b] = false;
            }
            _ => {
                finalized[b] = true;
                value[b] = sum[b] / weight[b];
            }
        }
    }
    (0..p).map(|x| value[find(&mut block, x)]).collect()
}

/// Maximum flow on a dense capacity matrix (Edmonds–Karp); returns the set of
/// vertices reachable from `s` in the final residual graph.
fn min_cut_source_side(cap: &mut [Vec<f64>], s: usize, t: usize, eps: f64) -> Vec<bool> {
    let n = cap.len();
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > eps {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return prev.iter().map(|&p| p != usize::MAX).collect();
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = prev[v];
            bottleneck = bottleneck.min(cap[u][v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
    }
}

/// Isotonic regression on an arbitrary poset by recursive partitioning: a
/// set is split at the upset maximising `Σ w (y - mean)`, found by a minimum
/// cut, until no upset has positive excess.
fn partition_isotonic(y: &[f64], w: &[f64], poset: &Poset) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
    let mut stack = vec![(0..y.len()).collect::<Vec<usize>>()];
    while let Some(set) = stack.pop() {
        let wsum: f64 = set.iter().map(|&i| w[i]).sum();
        let mean = set.iter().map(|&i| w[i] * y[i]).sum::<f64>() / wsum;
        if set.len() == 1 {
            out[set[0]] = mean;
            continue;
        }
        let d: Vec<f64> = set.iter().map(|&i| w[i] * (y[i] - mean)).collect();
        let n = set.len();
        let (s, t) = (n, n + 1);
        let mut cap = vec![vec![0.0; n + 2]; n + 2];
        let big: f64 = d.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        for (a, &da) in d.iter().enumerate() {
            if da > 0.0 {
                cap[s][a] = da;
            } else if da < 0.0 {
                cap[a][t] = -da;
            }
            for b in 0..n {
                if a != b && poset.leq(set[a], set[b]) {
                    cap[a][b] = big;
                }
            }
        }
        let eps = 1e-14 * scale * wsum;
        let side = min_cut_source_side(&mut cap, s, t, eps);
        let upper: Vec<usize> = (0..n).filter(|&a| side[a]).map(|a| set[a]).collect();
        let excess: f64 = (0..n).filter(|&a| side[a]).map(|a| d[a]).sum();
        if upper.is_empty() || upper.len() == n || excess <= 1e-12 * scale * wsum {
            for &i in &set {
                out[i] = mean;
            }
            continue;
        }
        let lower: Vec<usize> = (0..n).filter(|&a| !side[a]).map(|a| set[a]).collect();
        stack.push(lower);
        stack.push(upper);
    }
    out
}

/// Weighted isotonic regression (no sign constraint) on any poset.
pub fn isotonic_regression(y: &[f64], w: &[f64], poset: &Poset) -> Vec<f64> {
    if let Some(order) = poset.chain_order() {
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let ws: Vec<f64> = order.iter().map(|&i| w[i]).collect();
        let fit = pava_chain(&ys, &ws);
        let mut out = vec![0.0; y.len()];
        for (&i, v) in order.iter().zip(fit) {
            out[i] = v;
        }
        out
    } else if poset.is_simplicial() {
        tree_isotonic(y, w, poset)
    } else {
        partition_isotonic(y, w, poset)
    }
}

/// Projection onto `C(P)`: isotonic regression followed by clamping at zero.
pub fn project_order_cone(prob: &ProjectionProblem<'_>) -> Vec<f64> {
    isotonic_regression(&prob.y, &prob.w, prob.poset)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect()
}

/// Unit-weight convenience wrapper around [`project_order_cone`].
pub fn project(y: &[f64], poset: &Poset) -> Vec<f64> {
    let w = vec![1.0; y.len()];
    isotonic_regression(y, &w, poset)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dual coordinate ascent for `min Σ w (v - y)^2` over `C(P)`, run to
    /// numerical convergence. Independent of the solvers above.
    fn oracle(y: &[f64], w: &[f64], poset: &Poset) -> Vec<f64> {
        let p = y.len();
        let mut rows: Vec<Vec<(usize, f64)>> = (0..p).map(|i| vec![(i, 1.0)]).collect();
        for &(a, b) in poset.covers() {
            rows.push(vec![(b, 1.0), (a, -1.0)]);
        }
        let mut lambda = vec![0.0; rows.len()];
        let mut v = y.to_vec();
        for _ in 0..200_000 {
            let mut change = 0.0f64;
            for (k, row) in rows.iter().enumerate() {
                let val: f64 = row.iter().map(|&(i, c)| c * v[i]).sum();
                let norm: f64 = row.iter().map(|&(i, c)| c * c / w[i]).sum();
                let new = (lambda[k] - val / norm).max(0.0);
                let delta = new - lambda[k];
                if delta != 0.0 {
                    for &(i, c) in row {
                        v[i] += delta * c / w[i];
                    }
                    lambda[k] = new;
                    change = change.max(delta.abs());
                }
            }
            if change < 1e-15 {
                break;
            }
        }
        v
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn pava_examples() {
        assert_close(&pava_chain(&[3.0, 1.0, 2.0], &[1.0; 3]), &[2.0; 3], 1e-15);
        assert_eq!(pava_chain(&[1.0, 2.0, 2.0, 5.0], &[1.0; 4]), vec![1.0, 2.0, 2.0, 5.0]);
        assert_close(&pava_chain(&[2.0, 1.0], &[3.0, 1.0]), &[1.75, 1.75], 1e-15);
        let y = [3.0, 1.0, 2.0];
        let o = oracle(&y, &[1.0; 3], &Poset::chain(3));
        assert_close(&o, &[2.0; 3], 1e-9);
    }

    #[test]
    fn projection_examples() {
        let chain = Poset::chain(3);
        let pr = ProjectionProblem::new(vec![-1.0, 0.0, 2.0], &chain).unwrap();
        assert_eq!(project_order_cone(&pr), vec![0.0, 0.0, 2.0]);

        let collider = Poset::star(3);
        let pr = ProjectionProblem::new(vec![2.0, 0.0, 1.0], &collider).unwrap();
        assert_close(&project_order_cone(&pr), &[1.5, 0.0, 1.5], 1e-12);

        let tree = Poset::from_relation(&["r", "a", "b", "c"], &[("r", "a"), ("r", "b"), ("b", "c")])
            .unwrap();
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let pr = ProjectionProblem::new(y.clone(), &tree).unwrap();
        assert_eq!(project_order_cone(&pr), y);
    }

    #[test]
    fn rejects_bad_weights() {
        let c = Poset::chain(2);
        assert!(ProjectionProblem::with_weights(vec![1.0, 2.0], vec![1.0, 0.0], &c).is_err());
        assert!(ProjectionProblem::new(vec![1.0], &c).is_err());
    }

    fn random_poset(p: usize, edges: &[(usize, usize)]) -> Poset {
        // Orient every edge from lower to higher index so the relation is acyclic.
        let e: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(a, b)| (a % p, b % p))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        Poset::from_index_relation((0..p).map(|i| i.to_string()).collect(), &e).unwrap()
    }

    proptest! {
        #[test]
        fn matches_oracle(
            p in 1usize..7,
            edges in proptest::collection::vec((0usize..7, 0usize..7), 0..10),
            y in proptest::collection::vec(-3.0f64..3.0, 7),
            w in proptest::collection::vec(0.2f64..3.0, 7),
        ) {
            let poset = random_poset(p, &edges);
            let (y, w) = (&y[..p], &w[..p]);
            let prob = ProjectionProblem::with_weights(y.to_vec(), w.to_vec(), &poset).unwrap();
            let v = project_order_cone(&prob);
            let o = oracle(y, w, &poset);
            let (fv, fo) = (prob.objective(&v), prob.objective(&o));
            prop_assert!(fv <= fo + 1e-8 * (1.0 + fo), "{fv} vs {fo}");
            // Feasibility.
            prop_assert!(v.iter().all(|&x| x >= 0.0));
            for &(a, b) in poset.covers() {
                prop_assert!(v[a] <= v[b] + 1e-12);
            }
        }

        #[test]
        fn idempotent_and_nonexpansive(
            p in 1usize..7,
            edges in proptest::collection::vec((0usize..7, 0usize..7), 0..10),
            y1 in proptest::collection::vec(-3.0f64..3.0, 7),
            y2 in proptest::collection::vec(-3.0f64..3.0, 7),
        ) {
            let poset = random_poset(p, &edges);
            let a = project(&y1[..p], &poset);
            let b = project(&y2[..p], &poset);
            let aa = project(&a, &poset);
            for (x, y) in a.iter().zip(&aa) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let d_out: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
            let d_in: f64 = y1[..p].iter().zip(&y2[..p]).map(|(x, y)| (x - y).powi(2)).sum();
            prop_assert!(d_out <= d_in + 1e-12);
        }
    }
}
