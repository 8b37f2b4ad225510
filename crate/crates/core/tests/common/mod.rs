#![allow(dead_code)]

use ndrank::{finite_rank_vrep, order_cone_vrep, Poset, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn labels(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("e{i}")).collect()
}

/// Random order on `p` elements: each pair `i < j` (by index) is related
/// with probability `density`.
pub fn random_poset(rng: &mut ChaCha8Rng, p: usize, density: f64) -> Poset {
    let mut edges = Vec::new();
    for j in 0..p {
        for i in 0..j {
            if rng.random_bool(density) {
                edges.push((i, j));
            }
        }
    }
    Poset::from_index_relation(labels(p), &edges).unwrap()
}

/// Random collider-free order: every element has at most one lower cover.
pub fn random_forest(rng: &mut ChaCha8Rng, p: usize) -> Poset {
    let mut edges = Vec::new();
    for j in 1..p {
        if rng.random_bool(0.75) {
            edges.push((rng.random_range(0..j), j));
        }
    }
    Poset::from_index_relation(labels(p), &edges).unwrap()
}

/// Random member of the order cone: a conic combination of its rays.
pub fn random_cone_point(rng: &mut ChaCha8Rng, poset: &Poset) -> Vec<f64> {
    let v = order_cone_vrep(poset).unwrap();
    let mut x = vec![0.0; poset.size()];
    for g in v.generators() {
        if rng.random_bool(0.6) {
            let c = rng.random_range(0.1..2.0);
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi += c * gi;
            }
        }
    }
    if x.iter().all(|&v| v == 0.0) {
        x = v.generators()[0].clone();
    }
    x
}

/// Conic combination of `terms` random generators of the finite-rank cone.
pub fn random_finite_rank(rng: &mut ChaCha8Rng, posets: &[Poset], terms: usize) -> Tensor {
    let gens = finite_rank_vrep(posets).unwrap();
    let shape: Vec<usize> = posets.iter().map(Poset::size).collect();
    let mut t = Tensor::zeros(&shape);
    for _ in 0..terms {
        let g = &gens[rng.random_range(0..gens.len())];
        t = t.add(&g.scale(rng.random_range(0.5..2.0))).unwrap();
    }
    t
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_mode_poset(rng: &mut ChaCha8Rng, p: usize) -> Poset {
    match rng.random_range(0..4) {
        0 => Poset::chain(p),
        1 => Poset::trivial(p),
        2 if p >= 3 => Poset::star(p),
        _ => random_poset(rng, p, 0.4),
    }
}
