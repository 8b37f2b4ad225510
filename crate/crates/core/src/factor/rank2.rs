//! Exact rank-two ND factorization of matrices.
//!
//! If the best unconstrained rank-two approximation `T2` of `T` has finite ND
//! rank, it has ND rank at most two and is then the best ND rank-two
//! approximation. The two terms are read off from the rows of `T2`, which
//! span a two-dimensional subspace and lie in `C(P_2)`.

use nalgebra::DMatrix;

use super::{norm, NDFactorization};
use crate::cone::{is_monotone, membership_finite_rank, MembershipCertificate};
use crate::error::{NdError, Result};
use crate::isotonic::project;
use crate::poset::Poset;
use crate::tensor::Tensor;

/// Which pair of generating rows was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank2Extraction {
    /// The two rows of `T2` with the largest angle between them.
    MinVolume,
    /// The two extremal rays of `rowspace(T2) ∩ C(P_2)`.
    MaxVolume,
    /// `T2` has rank one; the second term has `λ = 0`.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rank2Outcome {
    Exact {
        factorization: NDFactorization,
        truncation: Tensor,
        extraction: Rank2Extraction,
    },
    /// `T2` is not representable; callers should fall back to `hals` with
    /// rank two.
    Fallback {
        truncation: Tensor,
        certificate: Option<MembershipCertificate>,
        reason: String,
    },
}

impl Rank2Outcome {
    pub fn is_exact(&self) -> bool {
        matches!(self, Rank2Outcome::Exact { .. })
    }

    pub fn truncation(&self) -> &Tensor {
        match self {
            Rank2Outcome::Exact { truncation, .. } | Rank2Outcome::Fallback { truncation, .. } => {
                truncation
            }
        }
    }

    pub fn factorization(&self) -> Option<&NDFactorization> {
        match self {
            Rank2Outcome::Exact { factorization, .. } => Some(factorization),
            Rank2Outcome::Fallback { .. } => None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares with nonnegative coefficients on two columns `b1`, `b2`.
fn nnls2(y: &[f64], b1: &[f64], b2: &[f64]) -> (f64, f64) {
    let (g11, g12, g22) = (dot(b1, b1), dot(b1, b2), dot(b2, b2));
    let (r1, r2) = (dot(b1, y), dot(b2, y));
    let det = g11 * g22 - g12 * g12;
    if det > 1e-14 * g11 * g22 {
        let a1 = (g22 * r1 - g12 * r2) / det;
        let a2 = (g11 * r2 - g12 * r1) / det;
        if a1 >= 0.0 && a2 >= 0.0 {
            return (a1, a2);
        }
    }
    let only1 = (r1 / g11).max(0.0);
    let only2 = (r2 / g22).max(0.0);
    let err = |a: f64, b: f64| {
        y.iter()
            .zip(b1.iter().zip(b2))
            .map(|(y, (u, v))| (y - a * u - b * v).powi(2))
            .sum::<f64>()
    };
    if err(only1, 0.0) <= err(0.0, only2) {
        (only1, 0.0)
    } else {
        (0.0, only2)
    }
}

fn is_in_cone(v: &[f64], poset: &Poset, tol: f64) -> Result<bool> {
    let t = Tensor::new(vec![v.len()], v.to_vec())?;
    Ok(is_monotone(&t, poset, Some(tol))?.is_member())
}

/// Rows of `T2` as vectors.
fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    let (m, n) = (t.shape()[0], t.shape()[1]);
    (0..m).map(|i| t.data()[i * n..(i + 1) * n].to_vec()).collect()
}

/// Coefficients of every row of `t2` on `(b1, b2)`, returned as the columns
/// `a1`, `a2`.
fn coefficients(t2: &Tensor, b1: &[f64], b2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    rows(t2).iter().map(|r| nnls2(r, b1, b2)).unzip()
}

fn min_volume_pair(t2: &Tensor) -> Option<(Vec<f64>, Vec<f64>)> {
    let rs: Vec<Vec<f64>> = rows(t2).into_iter().filter(|r| norm(r) > 0.0).collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            let c = dot(&rs[i], &rs[j]) / (norm(&rs[i]) * norm(&rs[j]));
            if best.is_none_or(|(bc, _, _)| c < bc) {
                best = Some((c, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (rs[i].clone(), rs[j].clone()))
}

/// Extremal rays of the two-dimensional cone `span(w1, w2) ∩ C(P)`, found by
/// intersecting the angular sectors allowed by each defining halfspace of
/// `C(P)` around a reference direction known to be inside.
fn max_volume_pair(
    w1: &[f64],
    w2: &[f64],
    reference: &[f64],
    poset: &Poset,
) -> Option<(Vec<f64>, Vec<f64>)> {
    use std::f64::consts::PI;
    let p = w1.len();
    let phi0 = dot(reference, w2).atan2(dot(reference, w1));
    let mut halfspaces: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut h = vec![0.0; p];
            h[i] = 1.0;
            h
        })
        .collect();
    for &(a, b) in poset.covers() {
        let mut h = vec![0.0; p];
        h[b] = 1.0;
        h[a] = -1.0;
        halfspaces.push(h);
    }
    let (mut lo, mut hi) = (-PI, PI);
    for h in &halfspaces {
        let (n1, n2) = (dot(h, w1), dot(h, w2));
        if n1.hypot(n2) < 1e-13 {
            continue;
        }
        // Allowed directions: within π/2 of the normal's angle.
        let mut delta = n2.atan2(n1) - phi0;
        while delta > PI {
            delta -= 2.0 * PI;
        }
        while delta <= -PI {
            delta += 2.0 * PI;
        }
        lo = lo.max(delta - PI / 2.0);
        hi = hi.min(delta + PI / 2.0);
    }
    if lo >= hi {
        return None;
    }
    let dir = |ang: f64| -> Vec<f64> {
        let (c, s) = ((phi0 + ang).cos(), (phi0 + ang).sin());
        w1.iter().zip(w2).map(|(a, b)| c * a + s * b).collect()
    };
    Some((dir(lo), dir(hi)))
}

/// Exact ND rank-two factorization of the SVD truncation `T2`, or a fallback
/// flag when `T2` does not have finite ND rank (or no valid pair is found).
pub fn rank2_matrix_exact(t: &Tensor, posets: &[Poset]) -> Result<Rank2Outcome> {
    if t.order() != 2 || posets.len() != 2 {
        return Err(NdError::ShapeMismatch("rank-two extraction needs a matrix".into()));
    }
    if t.shape() != [posets[0].size(), posets[1].size()] {
        return Err(NdError::ShapeMismatch(format!(
            "matrix shape {:?} does not match poset sizes",
            t.shape()
        )));
    }
    let (m, n) = (t.shape()[0], t.shape()[1]);
    let mat = DMatrix::from_row_slice(m, n, t.data());
    let svd = mat.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = |k: usize| order.get(k).map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let (s1, s2) = (sigma(0), sigma(1));
    let degenerate = s2 <= 1e-12 * s1.max(f64::MIN_POSITIVE);
    let kept = if degenerate { 1 } else { 2 };
    let mut t2 = vec![0.0; m * n];
    for &k in order.iter().take(kept) {
        let s = svd.singular_values[k];
        for i in 0..m {
            for j in 0..n {
                t2[i * n + j] += s * u[(i, k)] * vt[(k, j)];
            }
        }
    }
    let t2 = Tensor::new(vec![m, n], t2)?;
    let tol = 1e-9 * (1.0 + t.max_abs());
    // The extraction below validates its own output, so the membership
    // pre-check is skipped when the facet computation is out of reach.
    let cert = match membership_finite_rank(&t2, posets, Some(tol)) {
        Ok(c) => Some(c),
        Err(NdError::TooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    if let Some(c) = cert.as_ref().filter(|c| !c.is_member()) {
        return Ok(Rank2Outcome::Fallback {
            truncation: t2,
            certificate: Some(c.clone()),
            reason: "rank-two truncation does not have finite ND rank".into(),
        });
    }
    let clean = |v: Vec<f64>, p: &Poset| project(&v, p);

    if degenerate || s1 == 0.0 {
        let k = order[0];
        let mut a: Vec<f64> = (0..m).map(|i| u[(i, k)]).collect();
        let mut b: Vec<f64> = (0..n).map(|j| vt[(k, j)]).collect();
        if a.iter().sum::<f64>() < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
            b.iter_mut().for_each(|x| *x = -*x);
        }
        let a = clean(a, &posets[0]);
        let b = clean(b, &posets[1]);
        let ones = |p: usize| vec![1.0 / (p as f64).sqrt(); p];
        let mut f = NDFactorization::new(
            vec![m, n],
            vec![s1, 0.0],
            vec![vec![a, b], vec![ones(m), ones(n)]],
        )?;
        f.normalize();
        return Ok(Rank2Outcome::Exact {
            factorization: f,
            truncation: t2,
            extraction: Rank2Extraction::Degenerate,
        });
    }

    let try_pair = |b1: Vec<f64>, b2: Vec<f64>| -> Result<Option<NDFactorization>> {
        if !is_in_cone(&b1, &posets[1], tol)? || !is_in_cone(&b2, &posets[1], tol)? {
            return Ok(None);
        }
        let (a1, a2) = coefficients(&t2, &b1, &b2);
        if !is_in_cone(&a1, &posets[0], tol)? || !is_in_cone(&a2, &posets[0], tol)? {
            return Ok(None);
        }
        let terms = vec![
            vec![clean(a1, &posets[0]), clean(b1, &posets[1])],
            vec![clean(a2, &posets[0]), clean(b2, &posets[1])],
        ];
        let f = NDFactorization::from_terms(vec![m, n], terms)?;
        let err = f.residual(&t2)?;
        Ok((err <= 1e-8 * (1.0 + t2.frobenius())).then_some(f))
    };

    if let Some((b1, b2)) = min_volume_pair(&t2) {
        if let Some(f) = try_pair(b1, b2)? {
            return Ok(Rank2Outcome::Exact {
                factorization: f,
                truncation: t2,
                extraction: Rank2Extraction::MinVolume,
            });
        }
    }
    let w1: Vec<f64> = (0..n).map(|j| vt[(order[0], j)]).collect();
    let w2: Vec<f64> = (0..n).map(|j| vt[(order[1], j)]).collect();
    let reference: Vec<f64> = rows(&t2).iter().fold(vec![0.0; n], |acc, r| {
        let s = norm(r).max(f64::MIN_POSITIVE);
        acc.iter().zip(r).map(|(a, x)| a + x / s).collect()
    });
    if let Some((b1, b2)) = max_volume_pair(&w1, &w2, &reference, &posets[1]) {
        if let Some(f) = try_pair(b1, b2)? {
            return Ok(Rank2Outcome::Exact {
                factorization: f,
                truncation: t2,
                extraction: Rank2Extraction::MaxVolume,
            });
        }
    }
    Ok(Rank2Outcome::Fallback {
        truncation: t2,
        certificate: cert,
        reason: "no generating pair of rows gives monotone coefficients".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_term_member() {
        let posets = [Poset::chain(3), Poset::chain(4)];
        let t1 = Tensor::outer(&[vec![1.0, 1.0, 2.0], vec![0.0, 1.0, 1.0, 1.0]]).unwrap();
        let t2 = Tensor::outer(&[vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 2.0, 3.0]]).unwrap();
        let t = t1.add(&t2).unwrap();
        let out = rank2_matrix_exact(&t, &posets).unwrap();
        let f = out.factorization().expect("exact");
        assert!(f.residual(&t).unwrap() < 1e-8);
        assert!(f.is_feasible(&posets, 1e-9).unwrap());
    }

    #[test]
    fn rank_one_is_degenerate() {
        let posets = [Poset::chain(2), Poset::chain(3)];
        let t = Tensor::outer(&[vec![1.0, 2.0], vec![1.0, 2.0, 3.0]]).unwrap();
        match rank2_matrix_exact(&t, &posets).unwrap() {
            Rank2Outcome::Exact {
                factorization,
                extraction,
                ..
            } => {
                assert_eq!(extraction, Rank2Extraction::Degenerate);
                assert_eq!(factorization.lambdas()[1], 0.0);
                assert!(factorization.residual(&t).unwrap() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_member_falls_back() {
        let posets = [Poset::chain(2), Poset::chain(3)];
        let t = Tensor::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]]).unwrap();
        assert!(!rank2_matrix_exact(&t, &posets).unwrap().is_exact());
    }

    #[test]
    fn nnls_clamps() {
        assert_eq!(nnls2(&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]), (1.0, 0.0));
        let (a, b) = nnls2(&[-1.0, 2.0], &[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!((a, b), (0.0, 2.0));
    }
}
