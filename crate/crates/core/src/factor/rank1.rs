//! Rank-one fits under Gaussian, multinomial, Poisson and exponential
//! likelihoods.
//!
//! When every fibre of `T` is already in its order cone, the unconstrained
//! optimum of each likelihood lies in the finite ND rank cone, so closed
//! forms (multinomial, Poisson) or fixed-point iterations (Gaussian,
//! exponential) solve the constrained problem.

use serde::{Deserialize, Serialize};

use super::{hals, norm, FitConfig, NDFactorization};
use crate::cone::is_monotone;
use crate::error::{NdError, Result};
use crate::poset::Poset;
use crate::tensor::Tensor;

const FIXED_POINT_TOL: f64 = 1e-13;
const EXPONENTIAL_TOL: f64 = 1e-10;
const MAX_FIXED_POINT_ITERS: usize = 100_000;

/// Likelihood model for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    Gaussian,
    Multinomial,
    Poisson,
    Exponential,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::Gaussian => "gaussian",
            Loss::Multinomial => "multinomial",
            Loss::Poisson => "poisson",
            Loss::Exponential => "exponential",
        }
    }

    /// Negative log-likelihood of `T` at mean `θ`, up to terms that do not
    /// depend on `θ`. Zero counts drop their `T log θ` term.
    pub fn objective(self, t: &Tensor, theta: &Tensor) -> Result<f64> {
        if t.shape() != theta.shape() {
            return Err(NdError::ShapeMismatch("data and mean differ in shape".into()));
        }
        let pairs = t.data().iter().zip(theta.data());
        Ok(match self {
            Loss::Gaussian => pairs.map(|(x, m)| (x - m) * (x - m)).sum(),
            Loss::Multinomial => pairs
                .filter(|(x, _)| **x != 0.0)
                .map(|(x, m)| -x * m.ln())
                .sum(),
            Loss::Poisson => pairs
                .map(|(x, m)| if *x == 0.0 { *m } else { m - x * m.ln() })
                .sum(),
            Loss::Exponential => pairs.map(|(x, m)| m.ln() + x / m).sum(),
        })
    }
}

impl std::str::FromStr for Loss {
    type Err = NdError;

    fn from_str(s: &str) -> Result<Loss> {
        match s {
            "gaussian" => Ok(Loss::Gaussian),
            "multinomial" => Ok(Loss::Multinomial),
            "poisson" => Ok(Loss::Poisson),
            "exponential" => Ok(Loss::Exponential),
            other => Err(NdError::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

fn check_shape(t: &Tensor, posets: &[Poset]) -> Result<()> {
    let shape: Vec<usize> = posets.iter().map(Poset::size).collect();
    if t.shape() != shape.as_slice() {
        return Err(NdError::ShapeMismatch(format!(
            "tensor shape {:?} does not match poset sizes {:?}",
            t.shape(),
            shape
        )));
    }
    Ok(())
}

/// True if every fibre of `T` lies in the order cone of its mode.
fn fibres_monotone(t: &Tensor, posets: &[Poset]) -> Result<bool> {
    let grid = Poset::product(posets)?;
    Ok(is_monotone(t, &grid, None)?.is_member())
}

/// Mode-`j` marginal divided by the number of fibres along mode `j`.
pub fn averaged_marginal(t: &Tensor, mode: usize) -> Result<Vec<f64>> {
    if mode >= t.order() {
        return Err(NdError::ShapeMismatch(format!(
            "mode {mode} out of range for order {}",
            t.order()
        )));
    }
    let fibres = (t.len() / t.shape()[mode]) as f64;
    Ok(t.mode_marginal(mode).into_iter().map(|v| v / fibres).collect())
}

fn contract_others(t: &Tensor, vecs: &[Vec<f64>], mode: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let shape = t.shape();
    let mut out = vec![0.0; shape[mode]];
    let mut idx = vec![0usize; shape.len()];
    for &x in t.data() {
        let w: f64 = vecs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != mode)
            .map(|(j, v)| v[idx[j]])
            .product();
        out[idx[mode]] += f(x, w);
        for j in (0..shape.len()).rev() {
            idx[j] += 1;
            if idx[j] < shape[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let d: f64 = new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    d / norm(old).max(1e-300)
}

/// Result of [`rank1_gaussian`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Gaussian {
    pub factorization: NDFactorization,
    /// Set when some fibre was outside its order cone and the fit fell back
    /// to rank-one HALS.
    pub fallback: bool,
}

/// Best ND rank-one least-squares fit.
///
/// Under the fibre hypothesis this iterates the stationarity equation
/// `v_j ∝ Σ T ∏_{l≠j} v_l` (a higher-order power iteration), which stays in
/// the order cones. Otherwise rank-one HALS is used and `fallback` is set.
pub fn rank1_gaussian(t: &Tensor, posets: &[Poset]) -> Result<Rank1Gaussian> {
    check_shape(t, posets)?;
    let shape = t.shape().to_vec();
    if t.max_abs() == 0.0 {
        let zeros = shape.iter().map(|&p| vec![0.0; p]).collect();
        return Ok(Rank1Gaussian {
            factorization: NDFactorization::new(shape, vec![0.0], vec![zeros])?,
            fallback: false,
        });
    }
    if !fibres_monotone(t, posets)? {
        let (f, _) = hals(t, posets, &FitConfig::with_rank(1))?;
        return Ok(Rank1Gaussian {
            factorization: f,
            fallback: true,
        });
    }
    let mut vecs: Vec<Vec<f64>> = shape.iter().map(|&p| vec![1.0 / (p as f64).sqrt(); p]).collect();
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let mut change = 0.0f64;
        for j in 0..shape.len() {
            let mut v = contract_others(t, &vecs, j, |x, w| x * w);
            let n = norm(&v);
            if n == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= n);
            change = change.max(rel_change(&v, &vecs[j]));
            vecs[j] = v;
        }
        if change < FIXED_POINT_TOL {
            break;
        }
    }
    let lambda = contract_others(t, &vecs, 0, |x, w| x * w)
        .iter()
        .zip(&vecs[0])
        .map(|(a, b)| a * b)
        .sum();
    Ok(Rank1Gaussian {
        factorization: NDFactorization::new(shape, vec![lambda], vec![vecs])?,
        fallback: false,
    })
}

fn check_nonnegative(t: &Tensor) -> Result<()> {
    if let Some((index, &value)) = t.data().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(NdError::NonNegativityViolated { index, value });
    }
    Ok(())
}

fn simplex_marginals(t: &Tensor) -> Result<Vec<Vec<f64>>> {
    (0..t.order())
        .map(|j| {
            let v = averaged_marginal(t, j)?;
            let s: f64 = v.iter().sum();
            Ok(v.into_iter().map(|x| x / s).collect())
        })
        .collect()
}

/// Multinomial maximum-likelihood rank-one fit: the product of the mode
/// marginals, each normalized to the probability simplex (so `λ = 1` and the
/// fitted mean sums to one).
pub fn rank1_multinomial(t: &Tensor) -> Result<NDFactorization> {
    check_nonnegative(t)?;
    if t.sum() == 0.0 {
        return Err(NdError::InvalidArgument(
            "multinomial fit needs at least one positive count".into(),
        ));
    }
    NDFactorization::new(t.shape().to_vec(), vec![1.0], vec![simplex_marginals(t)?])
}

/// Poisson maximum-likelihood rank-one fit: the multinomial fit scaled by
/// `c = Σ T`, stored as `λ = c`.
pub fn rank1_poisson(t: &Tensor) -> Result<NDFactorization> {
    check_nonnegative(t)?;
    let c = t.sum();
    let shape = t.shape().to_vec();
    if c == 0.0 {
        let zeros = shape.iter().map(|&p| vec![0.0; p]).collect();
        return NDFactorization::new(shape, vec![0.0], vec![zeros]);
    }
    NDFactorization::new(shape, vec![c], vec![simplex_marginals(t)?])
}

/// Exponential maximum-likelihood rank-one fit by cyclic exact block
/// updates `v_j[i] = mean over fibres of T / ∏_{l≠j} v_l`.
pub fn rank1_exponential(t: &Tensor, posets: &[Poset]) -> Result<NDFactorization> {
    check_shape(t, posets)?;
    if let Some((index, &value)) = t.data().iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(NdError::NonPositiveEntry { index, value });
    }
    let shape = t.shape().to_vec();
    let mut vecs: Vec<Vec<f64>> = shape.iter().map(|&p| vec![1.0; p]).collect();
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let mut change = 0.0f64;
        for j in 0..shape.len() {
            let fibres = (t.len() / shape[j]) as f64;
            let v: Vec<f64> = contract_others(t, &vecs, j, |x, w| x / w)
                .into_iter()
                .map(|s| s / fibres)
                .collect();
            change = change.max(rel_change(&v, &vecs[j]));
            vecs[j] = v;
        }
        // Keep the gauge fixed so that convergence is measured on shape only.
        let norms: Vec<f64> = vecs.iter().map(|v| norm(v)).collect();
        let g = norms.iter().map(|n| n.ln()).sum::<f64>() / norms.len() as f64;
        for (v, n) in vecs.iter_mut().zip(&norms) {
            let c = g.exp() / n;
            v.iter_mut().for_each(|x| *x *= c);
        }
        if change < EXPONENTIAL_TOL {
            break;
        }
    }
    let mut f = NDFactorization::new(shape, vec![1.0], vec![vecs])?;
    f.normalize();
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn marginal_examples() {
        let t = Tensor::new(vec![2, 2], vec![0.25; 4]).unwrap();
        assert_eq!(averaged_marginal(&t, 0).unwrap(), vec![0.25, 0.25]);
        let m = rank1_multinomial(&t).unwrap();
        assert!(close(&m.reconstruct().into_data(), &[0.25; 4], 1e-15));
        let p = rank1_poisson(&Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()).unwrap();
        assert_eq!(p.lambdas(), &[10.0]);
    }

    #[test]
    fn product_pmf_recovered() {
        let q1 = vec![0.2, 0.3, 0.5];
        let q2 = vec![0.1, 0.4, 0.5];
        let t = Tensor::outer(&[q1.clone(), q2.clone()]).unwrap();
        let m = rank1_multinomial(&t).unwrap();
        assert!(close(&m.factors()[0][0], &q1, 1e-15));
        assert!(close(&m.factors()[0][1], &q2, 1e-15));
        assert!(matches!(
            rank1_multinomial(&Tensor::new(vec![2], vec![1.0, -1.0]).unwrap()),
            Err(NdError::NonNegativityViolated { index: 1, .. })
        ));
    }

    #[test]
    fn exponential_examples() {
        let posets = [Poset::chain(2), Poset::chain(2)];
        let ones = Tensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        let f = rank1_exponential(&ones, &posets).unwrap();
        let v = &f.factors()[0];
        assert!((v[0][0] - v[0][1]).abs() < 1e-12 && (v[1][0] - v[1][1]).abs() < 1e-12);
        let t = Tensor::outer(&[vec![1.0, 2.0, 3.0], vec![0.5, 1.0, 4.0]]).unwrap();
        let f = rank1_exponential(&t, &[Poset::chain(3), Poset::chain(3)]).unwrap();
        assert!(f.residual(&t).unwrap() < 1e-9);
        assert!(matches!(
            rank1_exponential(&Tensor::zeros(&[2, 2]), &posets),
            Err(NdError::NonPositiveEntry { .. })
        ));
    }

    #[test]
    fn gaussian_examples() {
        let posets = [Poset::chain(3), Poset::chain(2)];
        let t = Tensor::outer(&[vec![1.0, 2.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let g = rank1_gaussian(&t, &posets).unwrap();
        assert!(!g.fallback);
        assert!(g.factorization.residual(&t).unwrap() < 1e-12);
        let z = rank1_gaussian(&Tensor::zeros(&[3, 2]), &posets).unwrap();
        assert_eq!(z.factorization.reconstruct(), Tensor::zeros(&[3, 2]));
        let bad = Tensor::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!(rank1_gaussian(&bad, &posets).unwrap().fallback);
    }
}
