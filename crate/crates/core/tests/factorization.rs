//! Behaviour of the factorization routines on random members of the model.

mod common;

use common::*;
use ndrank::factor::{
    rank1_exponential, rank1_gaussian, rank1_multinomial, rank1_poisson, rank2_matrix_exact,
    rank_bounds, Loss,
};
use ndrank::{
    hals, is_monotone, membership_finite_rank, FitConfig, InitStrategy, NDFactorization, Poset,
    Tensor,
};
use proptest::prelude::*;
use rand::Rng;

fn random_shape(r: &mut rand_chacha::ChaCha8Rng, modes: usize, max: usize) -> Vec<usize> {
    (0..modes).map(|_| r.random_range(2..=max)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every single block update leaves the objective no larger.
    #[test]
    fn block_updates_descend(seed in any::<u64>(), rank in 1usize..4) {
        let mut r = rng(seed);
        let shape = random_shape(&mut r, 3, 4);
        let posets: Vec<Poset> = shape.iter().map(|&p| random_mode_poset(&mut r, p)).collect();
        let n: usize = shape.iter().product();
        let t = Tensor::new(shape, random_vec(&mut r, n, 0.0, 5.0)).unwrap();
        let cfg = FitConfig {
            rank,
            max_sweeps: 40,
            restarts: 2,
            seed,
            init: InitStrategy::Mixed,
            record_blocks: true,
            threads: Some(1),
            ..FitConfig::default()
        };
        let (f, report) = hals(&t, &posets, &cfg).unwrap();
        for trace in &report.block_traces {
            for w in trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0]), "{} -> {}", w[0], w[1]);
            }
        }
        for trace in &report.traces {
            for w in trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0]));
            }
        }
        // Feasibility of the factors and of the reconstruction.
        prop_assert!(f.is_feasible(&posets, 1e-12).unwrap());
        let product = Poset::product(&posets).unwrap();
        prop_assert!(is_monotone(&f.reconstruct(), &product, None).unwrap().is_member());
        if posets.iter().filter(|p| p.has_collider()).count() <= 1 {
            prop_assert!(membership_finite_rank(&f.reconstruct(), &posets, None).unwrap().is_member());
        }
    }

    /// Permuting terms and trading scale between modes leaves the tensor unchanged.
    #[test]
    fn gauge_invariance(seed in any::<u64>(), rank in 1usize..4) {
        let mut r = rng(seed);
        let shape = random_shape(&mut r, 3, 4);
        let terms: Vec<Vec<Vec<f64>>> = (0..rank)
            .map(|_| shape.iter().map(|&p| random_vec(&mut r, p, 0.1, 2.0)).collect())
            .collect();
        let base = NDFactorization::from_terms(shape.clone(), terms.clone()).unwrap().reconstruct();
        let mut moved = terms.clone();
        moved.reverse();
        let alpha = r.random_range(0.1..10.0);
        for v in moved[0][0].iter_mut() {
            *v *= alpha;
        }
        for v in moved[0][1].iter_mut() {
            *v /= alpha;
        }
        let other = NDFactorization::from_terms(shape, moved).unwrap().reconstruct();
        prop_assert!(base.distance(&other).unwrap() < 1e-12 * (1.0 + base.frobenius()));
    }

    /// With as many terms as the rank upper bound, members are fitted exactly.
    #[test]
    fn upper_bound_rank_suffices(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = random_shape(&mut r, 2, 3);
        let posets: Vec<Poset> = shape.iter().map(|&p| random_mode_poset(&mut r, p)).collect();
        let bound = rank_bounds(&posets).unwrap().upper;
        let t = random_finite_rank(&mut r, &posets, 2 * bound);
        let cfg = FitConfig {
            rank: bound,
            max_sweeps: 5000,
            rel_tol: 1e-13,
            restarts: 5,
            seed,
            init: InitStrategy::Mixed,
            ..FitConfig::default()
        };
        let (_, report) = hals(&t, &posets, &cfg).unwrap();
        prop_assert!(report.residual < 1e-6 * t.frobenius(), "residual {} for rank {}", report.residual, bound);
    }

    /// Monotone rank-one inputs are reproduced by every likelihood solver.
    #[test]
    fn rank_one_exactness(seed in any::<u64>(), modes in 1usize..4) {
        let mut r = rng(seed);
        let shape = random_shape(&mut r, modes, 4);
        let posets: Vec<Poset> = shape.iter().map(|&p| random_mode_poset(&mut r, p)).collect();
        let vs: Vec<Vec<f64>> = posets
            .iter()
            .map(|p| random_cone_point(&mut r, p).iter().map(|v| v + 0.5).collect())
            .collect();
        let t = Tensor::outer(&vs).unwrap();
        let total = t.sum();
        let scale = t.frobenius();
        let g = rank1_gaussian(&t, &posets).unwrap();
        prop_assert!(!g.fallback);
        prop_assert!(g.factorization.residual(&t).unwrap() < 1e-10 * scale);
        prop_assert!(rank1_poisson(&t).unwrap().residual(&t).unwrap() < 1e-10 * scale);
        prop_assert!(rank1_exponential(&t, &posets).unwrap().residual(&t).unwrap() < 1e-10 * scale);
        let probs = t.scale(1.0 / total);
        let m = rank1_multinomial(&t).unwrap();
        prop_assert!(m.residual(&probs).unwrap() < 1e-10 * probs.frobenius());
        let best = Loss::Multinomial.objective(&t, &probs).unwrap();
        let got = Loss::Multinomial.objective(&t, &m.reconstruct()).unwrap();
        prop_assert!((got - best).abs() <= 1e-10 * best.abs().max(1.0));
    }

    /// Sums of two monotone outer products are factored exactly.
    #[test]
    fn rank_two_exactness(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = random_shape(&mut r, 2, 6);
        let posets: Vec<Poset> = shape.iter().map(|&p| random_mode_poset(&mut r, p)).collect();
        let terms: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|_| posets.iter().map(|p| random_cone_point(&mut r, p)).collect())
            .collect();
        let t = NDFactorization::from_terms(shape, terms).unwrap().reconstruct();
        let out = rank2_matrix_exact(&t, &posets).unwrap();
        let f = out.factorization().expect("a rank-two member is factored exactly");
        prop_assert!(f.residual(&t).unwrap() <= 1e-8 * (1.0 + t.frobenius()));
        prop_assert!(f.is_feasible(&posets, 1e-9).unwrap());
    }
}

#[test]
fn non_gaussian_losses_reject_nonpositive_data() {
    let t = Tensor::from_rows(&[vec![1.0, 0.0], vec![2.0, 3.0]]).unwrap();
    let posets = [Poset::chain(2), Poset::chain(2)];
    assert!(rank1_exponential(&t, &posets).is_err());
    let neg = Tensor::from_rows(&[vec![1.0, -1.0], vec![2.0, 3.0]]).unwrap();
    assert!(rank1_poisson(&neg).is_err());
    assert!(rank1_multinomial(&neg).is_err());
}

#[test]
fn restarts_are_reproducible() {
    let t = ndrank::fixtures::cchs();
    let posets = ndrank::fixtures::fixture_posets("cchs").unwrap();
    let cfg = FitConfig {
        rank: 2,
        restarts: 4,
        seed: 11,
        ..FitConfig::default()
    };
    let (a, ra) = hals(&t, &posets, &cfg).unwrap();
    let (b, rb) = hals(&t, &posets, &FitConfig { threads: Some(1), ..cfg.clone() }).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.restart_rss, rb.restart_rss);
}
