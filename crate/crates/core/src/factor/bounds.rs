//! ND rank bounds and tri-factorization checks.

use serde::{Deserialize, Serialize};

use crate::cone::order_cone_vrep;
use crate::error::{NdError, Result};
use crate::poset::Poset;
use crate::tensor::{LinearMap, Tensor};

/// Rank bounds determined by the per-mode posets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankBounds {
    /// Number of extremal rays `q_j` of each order cone.
    pub q: Vec<usize>,
    /// `∏ q_j` over all modes except one with the largest `q_j`; every tensor
    /// of finite ND rank has ND rank at most this.
    pub upper: usize,
    /// Exact maximum ND rank where known.
    pub exact_max: Option<usize>,
    /// Smallest typical ND rank where known (matrices).
    pub typical_min: Option<usize>,
    /// Inclusive range containing every typical ND rank where known.
    pub typical_range: Option<(usize, usize)>,
}

/// Computes [`RankBounds`] for a list of mode posets.
///
/// For matrices the maximum ND rank is `min(q_1, q_2)` when one of the two
/// posets is collider-free, and `2^{p-1}` when both are the `p`-element order
/// with a single top covering everything else. In both cases the typical
/// ranks lie between `min(p_1, p_2)` and that maximum.
pub fn rank_bounds(posets: &[Poset]) -> Result<RankBounds> {
    if posets.is_empty() {
        return Err(NdError::InvalidArgument("at least one poset is required".into()));
    }
    let q = posets
        .iter()
        .map(|p| p.connected_upsets().map(|u| u.len()))
        .collect::<Result<Vec<usize>>>()?;
    let mut sorted = q.clone();
    sorted.sort_unstable();
    let upper = sorted[..sorted.len() - 1]
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .ok_or(NdError::TooLarge {
            what: "rank upper bound",
            size: usize::MAX,
            limit: usize::MAX,
        })?;
    let mut exact_max = None;
    if posets.len() == 1 {
        exact_max = Some(1);
    } else if posets.len() == 2 {
        if posets.iter().any(Poset::is_simplicial) {
            exact_max = Some(q[0].min(q[1]));
        } else if posets[0].is_star() && posets[1].is_star() && posets[0].size() == posets[1].size()
        {
            exact_max = Some(1usize << (posets[0].size() - 1));
        }
    }
    let (typical_min, typical_range) = match (posets.len(), exact_max) {
        (2, Some(max)) => {
            let lo = posets[0].size().min(posets[1].size());
            (Some(lo), Some((lo, max)))
        }
        _ => (None, None),
    };
    Ok(RankBounds {
        q,
        upper,
        exact_max,
        typical_min,
        typical_range,
    })
}

/// Outcome of [`tri_factorization_verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriFactorCheck {
    pub holds: bool,
    /// `‖T − V_1 H V_2^T‖_F`.
    pub residual: f64,
}

/// Checks `T = V_1 H V_2^T`, where the columns of `V_j` are the extremal rays
/// of `C(P_j)` (in [`order_cone_vrep`] order) and `H` is a nonnegative
/// `q_1 x q_2` matrix.
pub fn tri_factorization_verify(
    t: &Tensor,
    h: &Tensor,
    posets: &[Poset],
    tol: f64,
) -> Result<TriFactorCheck> {
    if t.order() != 2 || posets.len() != 2 || h.order() != 2 {
        return Err(NdError::ShapeMismatch(
            "tri-factorization needs matrices and two posets".into(),
        ));
    }
    if let Some((index, &value)) = h.data().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(NdError::NonNegativityViolated { index, value });
    }
    let v1 = order_cone_vrep(&posets[0])?.matrix();
    let v2 = order_cone_vrep(&posets[1])?.matrix();
    if h.shape() != [v1.cols(), v2.cols()] {
        return Err(NdError::ShapeMismatch(format!(
            "H has shape {:?} but the order cones have {} and {} rays",
            h.shape(),
            v1.cols(),
            v2.cols()
        )));
    }
    if t.shape() != [v1.rows(), v2.rows()] {
        return Err(NdError::ShapeMismatch(format!(
            "T has shape {:?} but the posets have {} and {} elements",
            t.shape(),
            v1.rows(),
            v2.rows()
        )));
    }
    let hm = LinearMap::new(v1.cols(), v2.cols(), h.data().to_vec())?;
    let prod = v1.matmul(&hm)?.matmul(&v2.transpose())?;
    let recon = Tensor::new(vec![prod.rows(), prod.cols()], prod.entries().to_vec())?;
    let residual = t.distance(&recon)?;
    Ok(TriFactorCheck {
        holds: residual <= tol,
        residual,
    })
}
