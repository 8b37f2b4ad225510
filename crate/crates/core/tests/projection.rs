//! Optimality conditions of the order cone projection.

mod common;

use common::*;
use ndrank::{order_cone_vrep, project_order_cone, ProjectionProblem};
use proptest::prelude::*;

fn wdot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// `v*` is the projection iff `<y - v*, v*>_w = 0` and `<y - v*, g>_w <= 0`
    /// for every ray `g` of the cone.
    #[test]
    fn kkt_conditions(seed in any::<u64>(), p in 1usize..8, weighted in any::<bool>()) {
        let mut r = rng(seed);
        let poset = random_poset(&mut r, p, 0.4);
        let y = random_vec(&mut r, p, -2.0, 3.0);
        let w = if weighted { random_vec(&mut r, p, 0.2, 3.0) } else { vec![1.0; p] };
        let prob = ProjectionProblem::with_weights(y.clone(), w.clone(), &poset).unwrap();
        let v = project_order_cone(&prob);
        let resid: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a - b).collect();
        prop_assert!(wdot(&resid, &v, &w).abs() < 1e-9);
        for g in order_cone_vrep(&poset).unwrap().generators() {
            prop_assert!(wdot(&resid, g, &w) < 1e-9);
        }
    }

    #[test]
    fn projection_of_member_is_identity(seed in any::<u64>(), p in 1usize..8) {
        let mut r = rng(seed);
        let poset = random_poset(&mut r, p, 0.4);
        let y = random_cone_point(&mut r, &poset);
        let v = project_order_cone(&ProjectionProblem::new(y.clone(), &poset).unwrap());
        for (a, b) in y.iter().zip(&v) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
