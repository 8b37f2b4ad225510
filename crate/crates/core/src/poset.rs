//! Finite partially ordered sets.
//!
//! A [`Poset`] is stored through its Hasse diagram (the cover relation) plus
//! the dense reachability matrix derived from it. Elements are indexed
//! `0..p` in declaration order and every other module maps tensor mode
//! indices onto these element indices.

use std::collections::HashMap;

use crate::error::{NdError, Result};

/// Largest poset for which connected upsets are enumerated.
pub const MAX_UPSET_ELEMENTS: usize = 24;
/// Largest poset for which antichains are counted.
pub const MAX_ANTICHAIN_ELEMENTS: usize = 30;
/// Largest poset for which all linear extensions are listed.
pub const MAX_EXTENSION_ELEMENTS: usize = 12;

/// A finite poset with its cover relation and reflexive-transitive closure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    covers: Vec<(usize, usize)>,
    upper: Vec<Vec<usize>>,
    lower: Vec<Vec<usize>>,
    leq: Vec<bool>,
}

impl Poset {
    /// Builds a poset from labels and an arbitrary (possibly redundant) set of
    /// relation edges `x < y`. The transitive reduction is stored as the cover
    /// relation.
    pub fn from_relation<S: AsRef<str>>(labels: &[S], edges: &[(S, S)]) -> Result<Poset> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let x = *index
                .get(a.as_ref())
                .ok_or_else(|| NdError::UnknownLabel(a.as_ref().to_string()))?;
            let y = *index
                .get(b.as_ref())
                .ok_or_else(|| NdError::UnknownLabel(b.as_ref().to_string()))?;
            idx_edges.push((x, y));
        }
        Poset::from_index_relation(labels, &idx_edges)
    }

    /// Same as [`Poset::from_relation`] with edges given by element index.
    pub fn from_index_relation(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Poset> {
        let p = labels.len();
        if p == 0 {
            return Err(NdError::InvalidArgument("poset must have at least one element".into()));
        }
        let mut adj = vec![Vec::new(); p];
        for &(x, y) in edges {
            if x >= p || y >= p {
                return Err(NdError::UnknownLabel(format!("#{}", x.max(y))));
            }
            if x == y {
                return Err(NdError::Cycle(labels[x].clone()));
            }
            adj[x].push(y);
        }
        let order = topological_order(&adj).map_err(|v| NdError::Cycle(labels[v].clone()))?;

        // Reachability by reverse topological sweep.
        let mut leq = vec![false; p * p];
        for &x in order.iter().rev() {
            leq[x * p + x] = true;
            for &y in &adj[x] {
                for z in 0..p {
                    if leq[y * p + z] {
                        leq[x * p + z] = true;
                    }
                }
            }
        }
        Ok(Poset::from_closure(labels, leq))
    }

    /// Builds the poset from a closed (reflexive, transitive, antisymmetric)
    /// relation matrix.
    fn from_closure(labels: Vec<String>, leq: Vec<bool>) -> Poset {
        let p = labels.len();
        let lt = |x: usize, y: usize| x != y && leq[x * p + y];
        let mut covers = Vec::new();
        for x in 0..p {
            for y in 0..p {
                if lt(x, y) && !(0..p).any(|z| lt(x, z) && lt(z, y)) {
                    covers.push((x, y));
                }
            }
        }
        Poset::from_parts(labels, covers, leq)
    }

    fn from_parts(labels: Vec<String>, covers: Vec<(usize, usize)>, leq: Vec<bool>) -> Poset {
        let p = labels.len();
        let mut upper = vec![Vec::new(); p];
        let mut lower = vec![Vec::new(); p];
        for &(x, y) in &covers {
            upper[x].push(y);
            lower[y].push(x);
        }
        Poset {
            labels,
            covers,
            upper,
            lower,
            leq,
        }
    }

    /// The chain `1 < 2 < ... < p`.
    pub fn chain(p: usize) -> Poset {
        let labels: Vec<String> = (1..=p.max(1)).map(|i| i.to_string()).collect();
        let edges: Vec<(usize, usize)> = (1..p).map(|i| (i - 1, i)).collect();
        Poset::from_index_relation(labels, &edges).expect("chain is acyclic")
    }

    /// The antichain on `p` elements: no order constraints besides nonnegativity.
    pub fn trivial(p: usize) -> Poset {
        let labels: Vec<String> = (1..=p.max(1)).map(|i| i.to_string()).collect();
        Poset::from_index_relation(labels, &[]).expect("no edges")
    }

    /// The order `x_1, ..., x_{p-1} < x_p` (a single top covering everything else).
    pub fn star(p: usize) -> Poset {
        let labels: Vec<String> = (1..=p.max(1)).map(|i| i.to_string()).collect();
        let edges: Vec<(usize, usize)> = (0..p.saturating_sub(1)).map(|i| (i, p - 1)).collect();
        Poset::from_index_relation(labels, &edges).expect("star is acyclic")
    }

    /// Coordinatewise product. Elements are enumerated row-major (last factor
    /// fastest), matching the flat layout of [`crate::Tensor`].
    pub fn product(factors: &[Poset]) -> Result<Poset> {
        if factors.is_empty() {
            return Err(NdError::InvalidArgument("product needs at least one factor".into()));
        }
        let shape: Vec<usize> = factors.iter().map(Poset::size).collect();
        let n: usize = shape.iter().product();
        let strides = row_major_strides(&shape);
        let mut labels = Vec::with_capacity(n);
        for flat in 0..n {
            let parts: Vec<&str> = factors
                .iter()
                .enumerate()
                .map(|(j, f)| f.labels[(flat / strides[j]) % shape[j]].as_str())
                .collect();
            labels.push(if factors.len() == 1 {
                parts[0].to_string()
            } else {
                format!("({})", parts.join(","))
            });
        }
        let mut leq = vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                leq[x * n + y] = factors.iter().enumerate().all(|(j, f)| {
                    let xi = (x / strides[j]) % shape[j];
                    let yi = (y / strides[j]) % shape[j];
                    f.leq(xi, yi)
                });
            }
        }
        // Covers of a product move one coordinate along a cover of that factor.
        let mut covers = Vec::new();
        for x in 0..n {
            for (j, f) in factors.iter().enumerate() {
                let xi = (x / strides[j]) % shape[j];
                for &yi in f.upper_covers(xi) {
                    covers.push((x, x - xi * strides[j] + yi * strides[j]));
                }
            }
        }
        covers.sort_unstable();
        Ok(Poset::from_parts(labels, covers, leq))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Cover pairs `(x, y)` with `x ⋖ y`, sorted.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    /// Elements covering `x`.
    pub fn upper_covers(&self, x: usize) -> &[usize] {
        &self.upper[x]
    }

    /// Elements covered by `x`.
    pub fn lower_covers(&self, x: usize) -> &[usize] {
        &self.lower[x]
    }

    /// `x ⪯ y`.
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.leq[x * self.size() + y]
    }

    pub fn comparable(&self, x: usize, y: usize) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }

    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.size()).filter(|&x| self.lower[x].is_empty()).collect()
    }

    pub fn maximal_elements(&self) -> Vec<usize> {
        (0..self.size()).filter(|&x| self.upper[x].is_empty()).collect()
    }

    /// True iff two distinct elements are covered by a common element.
    pub fn has_collider(&self) -> bool {
        self.lower.iter().any(|l| l.len() >= 2)
    }

    /// A collider-free order has a simplicial order cone.
    pub fn is_simplicial(&self) -> bool {
        !self.has_collider()
    }

    /// True if the poset carries no order constraints.
    pub fn is_trivial(&self) -> bool {
        self.covers.is_empty()
    }

    /// For a total order, the elements from bottom to top.
    pub fn chain_order(&self) -> Option<Vec<usize>> {
        let p = self.size();
        if self.covers.len() != p - 1 {
            return None;
        }
        let mins = self.minimal_elements();
        if mins.len() != 1 {
            return None;
        }
        let mut order = vec![mins[0]];
        while order.len() < p {
            let last = *order.last().unwrap();
            match self.upper[last].as_slice() {
                [next] => order.push(*next),
                _ => return None,
            }
        }
        Some(order)
    }

    pub fn is_chain(&self) -> bool {
        self.chain_order().is_some()
    }

    /// A chain whose order agrees with element indices (`0 < 1 < ... < p-1`).
    pub fn is_index_chain(&self) -> bool {
        self.chain_order()
            .map(|o| o.iter().enumerate().all(|(i, &x)| i == x))
            .unwrap_or(false)
    }

    /// True for the order where every other element is covered by a single top,
    /// with `p >= 3` (so that it contains a collider).
    pub fn is_star(&self) -> bool {
        let p = self.size();
        if p < 3 {
            return false;
        }
        let maxs = self.maximal_elements();
        maxs.len() == 1 && self.lower[maxs[0]].len() == p - 1 && self.covers.len() == p - 1
    }

    /// Non-empty, connected upsets, sorted by size and then lexicographically.
    ///
    /// These index the extremal rays of the order cone. The enumeration
    /// walks the upset lattice top-down and is exponential in the worst case,
    /// so it is guarded at [`MAX_UPSET_ELEMENTS`].
    pub fn connected_upsets(&self) -> Result<Vec<Vec<usize>>> {
        let p = self.size();
        if p > MAX_UPSET_ELEMENTS {
            return Err(NdError::TooLarge {
                what: "connected upset enumeration",
                size: p,
                limit: MAX_UPSET_ELEMENTS,
            });
        }
        let order = self.linear_extension();
        let upper_mask: Vec<u32> = (0..p).map(|x| mask_of(&self.upper[x])).collect();
        let neighbour_mask: Vec<u32> = (0..p)
            .map(|x| mask_of(&self.upper[x]) | mask_of(&self.lower[x]))
            .collect();

        let mut found = Vec::new();
        // Decide elements from the top of the linear extension downwards; an
        // element may join only if all of its upper covers already did.
        let mut stack: Vec<(usize, u32)> = vec![(0, 0)];
        while let Some((depth, set)) = stack.pop() {
            if depth == p {
                if set != 0 && is_connected(set, &neighbour_mask) {
                    found.push(set);
                }
                continue;
            }
            let x = order[p - 1 - depth];
            stack.push((depth + 1, set));
            if upper_mask[x] & !set == 0 {
                stack.push((depth + 1, set | (1 << x)));
            }
        }
        let mut upsets: Vec<Vec<usize>> = found.into_iter().map(bits_to_vec).collect();
        upsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(upsets)
    }

    /// Number of non-empty antichains.
    pub fn count_antichains(&self) -> Result<u64> {
        let p = self.size();
        if p > MAX_ANTICHAIN_ELEMENTS {
            return Err(NdError::TooLarge {
                what: "antichain counting",
                size: p,
                limit: MAX_ANTICHAIN_ELEMENTS,
            });
        }
        let comparable_mask: Vec<u64> = (0..p)
            .map(|x| {
                (0..p)
                    .filter(|&y| self.comparable(x, y))
                    .fold(0u64, |m, y| m | (1 << y))
            })
            .collect();
        // Count independent sets of the comparability graph.
        fn count(next: usize, blocked: u64, cmp: &[u64]) -> u64 {
            let p = cmp.len();
            let mut x = next;
            while x < p && blocked & (1 << x) != 0 {
                x += 1;
            }
            if x >= p {
                return 1;
            }
            count(x + 1, blocked, cmp) + count(x + 1, blocked | cmp[x], cmp)
        }
        Ok(count(0, 0, &comparable_mask) - 1)
    }

    /// Some linear extension, bottom to top (Kahn's algorithm, smallest index first).
    pub fn linear_extension(&self) -> Vec<usize> {
        let p = self.size();
        let mut indeg: Vec<usize> = self.lower.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..p).filter(|&x| indeg[x] == 0).collect();
        let mut out = Vec::with_capacity(p);
        while let Some(pos) = ready.iter().enumerate().min_by_key(|(_, &x)| x).map(|(i, _)| i) {
            let x = ready.swap_remove(pos);
            out.push(x);
            for &y in &self.upper[x] {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    ready.push(y);
                }
            }
        }
        out
    }

    /// Every linear extension (topological ordering), each listed bottom to top.
    pub fn linear_extensions(&self) -> Result<Vec<Vec<usize>>> {
        let p = self.size();
        if p > MAX_EXTENSION_ELEMENTS {
            return Err(NdError::TooLarge {
                what: "linear extension enumeration",
                size: p,
                limit: MAX_EXTENSION_ELEMENTS,
            });
        }
        let mut out = Vec::new();
        let mut indeg: Vec<usize> = self.lower.iter().map(Vec::len).collect();
        let mut prefix = Vec::with_capacity(p);
        let mut used = vec![false; p];
        self.extend(&mut prefix, &mut used, &mut indeg, &mut out);
        Ok(out)
    }

    fn extend(
        &self,
        prefix: &mut Vec<usize>,
        used: &mut [bool],
        indeg: &mut [usize],
        out: &mut Vec<Vec<usize>>,
    ) {
        let p = self.size();
        if prefix.len() == p {
            out.push(prefix.clone());
            return;
        }
        for x in 0..p {
            if used[x] || indeg[x] != 0 {
                continue;
            }
            used[x] = true;
            prefix.push(x);
            for &y in &self.upper[x] {
                indeg[y] -= 1;
            }
            self.extend(prefix, used, indeg, out);
            for &y in &self.upper[x] {
                indeg[y] += 1;
            }
            prefix.pop();
            used[x] = false;
        }
    }

    /// Principal upset `[x, ∞)`.
    pub fn principal_upset(&self, x: usize) -> Vec<usize> {
        (0..self.size()).filter(|&y| self.leq(x, y)).collect()
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for j in (0..shape.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * shape[j + 1];
    }
    strides
}

/// Kahn ordering; on failure returns some vertex lying on a cycle.
fn topological_order(adj: &[Vec<usize>]) -> std::result::Result<Vec<usize>, usize> {
    let p = adj.len();
    let mut indeg = vec![0usize; p];
    for targets in adj {
        for &y in targets {
            indeg[y] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..p).filter(|&x| indeg[x] == 0).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(x) = queue.pop() {
        order.push(x);
        for &y in &adj[x] {
            indeg[y] -= 1;
            if indeg[y] == 0 {
                queue.push(y);
            }
        }
    }
    if order.len() == p {
        Ok(order)
    } else {
        Err((0..p).find(|&x| indeg[x] > 0).unwrap_or(0))
    }
}

fn mask_of(items: &[usize]) -> u32 {
    items.iter().fold(0u32, |m, &x| m | (1 << x))
}

fn bits_to_vec(mut set: u32) -> Vec<usize> {
    let mut out = Vec::with_capacity(set.count_ones() as usize);
    while set != 0 {
        let x = set.trailing_zeros() as usize;
        out.push(x);
        set &= set - 1;
    }
    out
}

/// Connectivity of the undirected Hasse subgraph induced by `set`.
fn is_connected(set: u32, neighbours: &[u32]) -> bool {
    let start = set & set.wrapping_neg();
    let mut seen = start;
    let mut frontier = start;
    while frontier != 0 {
        let x = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = neighbours[x] & set & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collider() -> Poset {
        Poset::from_relation(&["a", "b", "c"], &[("a", "c"), ("b", "c")]).unwrap()
    }

    #[test]
    fn reduces_redundant_edges() {
        let p = Poset::from_relation(&["1", "2", "3"], &[("1", "2"), ("2", "3"), ("1", "3")]).unwrap();
        assert_eq!(p.covers(), &[(0, 1), (1, 2)]);
        assert!(p.leq(0, 2));
        let c = collider();
        assert_eq!(c.covers(), &[(0, 2), (1, 2)]);
    }

    #[test]
    fn rejects_cycles_and_unknown_labels() {
        let err = Poset::from_relation(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap_err();
        assert!(matches!(err, NdError::Cycle(_)));
        let err = Poset::from_relation(&["a", "b"], &[("a", "z")]).unwrap_err();
        assert_eq!(err, NdError::UnknownLabel("z".into()));
    }

    #[test]
    fn chain_and_trivial() {
        assert_eq!(Poset::chain(4).covers(), &[(0, 1), (1, 2), (2, 3)]);
        assert!(Poset::trivial(3).covers().is_empty());
        let one = Poset::chain(1);
        assert_eq!(one.size(), 1);
        assert!(one.covers().is_empty());
        assert!(Poset::chain(4).is_index_chain());
    }

    #[test]
    fn products() {
        let g = Poset::product(&[Poset::chain(2), Poset::chain(3)]).unwrap();
        assert_eq!((g.size(), g.covers().len()), (6, 7));
        let t = Poset::product(&[Poset::trivial(2), Poset::trivial(2)]).unwrap();
        assert_eq!((t.size(), t.covers().len()), (4, 0));
        let sel = Poset::product(&[collider(), Poset::chain(4)]).unwrap();
        assert_eq!((sel.size(), sel.covers().len()), (12, 17));
    }

    #[test]
    fn connected_upsets_examples() {
        assert_eq!(
            Poset::chain(3).connected_upsets().unwrap(),
            vec![vec![2], vec![1, 2], vec![0, 1, 2]]
        );
        assert_eq!(
            collider().connected_upsets().unwrap(),
            vec![vec![2], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
        );
        let g = Poset::product(&[Poset::chain(2), Poset::chain(3)]).unwrap();
        assert_eq!(g.connected_upsets().unwrap().len(), 9);
        // Disconnected upsets of the antichain are excluded.
        assert_eq!(Poset::trivial(3).connected_upsets().unwrap().len(), 3);
    }

    #[test]
    fn antichains() {
        assert_eq!(Poset::chain(5).count_antichains().unwrap(), 5);
        assert_eq!(Poset::trivial(3).count_antichains().unwrap(), 7);
        let g = Poset::product(&[Poset::chain(2), Poset::chain(3)]).unwrap();
        assert_eq!(g.count_antichains().unwrap(), 9);
    }

    #[test]
    fn colliders() {
        assert!(!Poset::chain(5).has_collider());
        assert!(collider().has_collider());
        // Rooted tree with edges directed away from the root.
        let labels = ["x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"];
        let edges = [
            ("x0", "x1"),
            ("x0", "x2"),
            ("x1", "x3"),
            ("x1", "x4"),
            ("x1", "x5"),
            ("x2", "x6"),
            ("x2", "x7"),
            ("x7", "x8"),
        ];
        let tree = Poset::from_relation(&labels, &edges).unwrap();
        assert!(tree.is_simplicial());
        assert_eq!(tree.connected_upsets().unwrap().len(), 9);
    }

    #[test]
    fn extensions() {
        assert_eq!(Poset::chain(3).linear_extensions().unwrap().len(), 1);
        assert_eq!(Poset::trivial(3).linear_extensions().unwrap().len(), 6);
        let sq = Poset::product(&[Poset::chain(2), Poset::chain(2)]).unwrap();
        assert_eq!(sq.linear_extensions().unwrap().len(), 2);
        assert!(matches!(
            Poset::trivial(13).linear_extensions(),
            Err(NdError::TooLarge { .. })
        ));
    }

    #[test]
    fn star_detection() {
        assert!(Poset::star(3).is_star());
        assert!(Poset::star(5).is_star());
        assert!(!Poset::chain(3).is_star());
        assert_eq!(Poset::star(4).connected_upsets().unwrap().len(), 8);
    }

    #[test]
    fn upset_guard() {
        assert!(matches!(
            Poset::trivial(25).connected_upsets(),
            Err(NdError::TooLarge { .. })
        ));
    }
}
