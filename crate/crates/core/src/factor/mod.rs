//! Factorization solvers and rank analysis.
//!
//! - [`hals`]: ND hierarchical alternating least squares with restarts.
//! - [`rank1_gaussian`], [`rank1_multinomial`], [`rank1_poisson`],
//!   [`rank1_exponential`]: rank-one fits under the four likelihoods.
//! - [`rank2_matrix_exact`]: exact rank-two matrix factorization from the
//!   truncated SVD when it has finite ND rank.
//! - [`rank_bounds`], [`tri_factorization_verify`]: rank bounds and the
//!   generator-coordinate check `T = V_1 H V_2^T`.

mod bounds;
mod hals;
mod rank1;
mod rank2;

use serde::{Deserialize, Serialize};

use crate::cone::is_monotone;
use crate::error::{NdError, Result};
use crate::poset::Poset;
use crate::tensor::Tensor;

pub use bounds::{rank_bounds, tri_factorization_verify, RankBounds, TriFactorCheck};
pub use hals::{hals, init_als_project, resolve_threads, ALS_INIT_SWEEPS};
pub use rank1::{
    averaged_marginal, rank1_exponential, rank1_gaussian, rank1_multinomial, rank1_poisson, Loss,
    Rank1Gaussian,
};
pub use rank2::{rank2_matrix_exact, Rank2Extraction, Rank2Outcome};

/// A sum of `r` scaled rank-one terms `Σ_i λ_i ⊗_j v^{(ij)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NDFactorization {
    shape: Vec<usize>,
    lambdas: Vec<f64>,
    /// `factors[i][j]` is the mode-`j` vector of term `i`.
    factors: Vec<Vec<Vec<f64>>>,
}

impl NDFactorization {
    pub fn new(shape: Vec<usize>, lambdas: Vec<f64>, factors: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if lambdas.len() != factors.len() {
            return Err(NdError::ShapeMismatch(format!(
                "{} scales for {} terms",
                lambdas.len(),
                factors.len()
            )));
        }
        for term in &factors {
            if term.len() != shape.len() || term.iter().zip(&shape).any(|(v, &p)| v.len() != p) {
                return Err(NdError::ShapeMismatch(format!(
                    "term vector lengths do not match shape {shape:?}"
                )));
            }
        }
        if lambdas
            .iter()
            .chain(factors.iter().flatten().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(NdError::InvalidArgument("factorization values must be finite".into()));
        }
        Ok(NDFactorization {
            shape,
            lambdas,
            factors,
        })
    }

    /// Builds a normalized factorization from unscaled terms.
    pub fn from_terms(shape: Vec<usize>, terms: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let lambdas = vec![1.0; terms.len()];
        let mut f = NDFactorization::new(shape, lambdas, terms)?;
        f.normalize();
        Ok(f)
    }

    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn factors(&self) -> &[Vec<Vec<f64>>] {
        &self.factors
    }

    /// Rescales every vector to unit ℓ2 norm, moving the scale into `λ`.
    /// Terms with a zero vector get `λ = 0`.
    pub fn normalize(&mut self) {
        for (lambda, term) in self.lambdas.iter_mut().zip(&mut self.factors) {
            for v in term.iter_mut() {
                let n = norm(v);
                if n > 0.0 {
                    v.iter_mut().for_each(|x| *x /= n);
                    *lambda *= n;
                } else {
                    *lambda = 0.0;
                }
            }
        }
    }

    /// Orders terms by decreasing `λ` (stable).
    pub fn sort_terms(&mut self) {
        let mut idx: Vec<usize> = (0..self.rank()).collect();
        idx.sort_by(|&a, &b| self.lambdas[b].total_cmp(&self.lambdas[a]));
        self.lambdas = idx.iter().map(|&i| self.lambdas[i]).collect();
        self.factors = idx.iter().map(|&i| self.factors[i].clone()).collect();
    }

    /// `Σ_i λ_i ⊗_j v^{(ij)}`.
    pub fn reconstruct(&self) -> Tensor {
        let mut out = Tensor::zeros(&self.shape);
        for (lambda, term) in self.lambdas.iter().zip(&self.factors) {
            if *lambda == 0.0 {
                continue;
            }
            let t = Tensor::outer(term).expect("term vectors are non-empty");
            for (o, v) in out.data_mut().iter_mut().zip(t.data()) {
                *o += lambda * v;
            }
        }
        out
    }

    /// `‖T − reconstruction‖_F`.
    pub fn residual(&self, t: &Tensor) -> Result<f64> {
        t.distance(&self.reconstruct())
    }

    /// True if every factor vector lies in the order cone of its poset.
    pub fn is_feasible(&self, posets: &[Poset], tol: f64) -> Result<bool> {
        if posets.len() != self.shape.len() {
            return Err(NdError::ShapeMismatch("one poset per mode is required".into()));
        }
        for term in &self.factors {
            for (v, p) in term.iter().zip(posets) {
                let t = Tensor::new(vec![v.len()], v.clone())?;
                if !is_monotone(&t, p, Some(tol))?.is_member() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Unscaled per-term vectors where mode `j != absorb` has ℓ1 norm
    /// `targets[j]` and mode `absorb` carries the remaining scale.
    pub fn l1_gauge(&self, targets: &[f64], absorb: usize) -> Result<Vec<Vec<Vec<f64>>>> {
        if targets.len() != self.shape.len() || absorb >= self.shape.len() {
            return Err(NdError::ShapeMismatch("one ℓ1 target per mode is required".into()));
        }
        Ok(self
            .factors
            .iter()
            .zip(&self.lambdas)
            .map(|(term, &lambda)| {
                let mut scale = lambda;
                let mut out: Vec<Vec<f64>> = term.clone();
                for (j, v) in out.iter_mut().enumerate() {
                    if j == absorb {
                        continue;
                    }
                    let l1: f64 = v.iter().map(|x| x.abs()).sum();
                    if l1 > 0.0 {
                        let c = targets[j] / l1;
                        v.iter_mut().for_each(|x| *x *= c);
                        scale /= c;
                    }
                }
                out[absorb].iter_mut().for_each(|x| *x *= scale);
                out
            })
            .collect())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// How each restart of [`hals`] is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitStrategy {
    /// Unconstrained alternating least squares followed by projection.
    AlsProject,
    /// Random conic combinations of principal upset indicators.
    RandomCone,
    /// Alternates the two strategies across restarts, starting with
    /// [`InitStrategy::AlsProject`].
    Mixed,
}

/// Solver settings for [`hals`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub rank: usize,
    pub max_sweeps: usize,
    /// Stop when the relative Frobenius change of the reconstruction between
    /// sweeps falls below this.
    pub rel_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitStrategy,
    /// Cap on concurrently running restarts; `None` reads `NDRANK_THREADS`
    /// and otherwise uses the rayon default.
    pub threads: Option<usize>,
    /// Record the objective after every block update (for diagnostics).
    pub record_blocks: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            rank: 1,
            max_sweeps: 500,
            rel_tol: 1e-9,
            restarts: 5,
            seed: 0,
            init: InitStrategy::AlsProject,
            threads: None,
            record_blocks: false,
        }
    }
}

impl FitConfig {
    pub fn with_rank(rank: usize) -> Self {
        FitConfig {
            rank,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(NdError::InvalidArgument("rank must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(NdError::InvalidArgument("rel_tol must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(NdError::InvalidArgument("at least one restart is required".into()));
        }
        if self.threads == Some(0) {
            return Err(NdError::InvalidArgument("thread cap must be positive".into()));
        }
        Ok(())
    }
}

/// Diagnostics of one [`hals`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Residual sum of squares after initialization and after each sweep,
    /// one trace per restart.
    pub traces: Vec<Vec<f64>>,
    /// Objective after every block update, per restart (only when
    /// [`FitConfig::record_blocks`] is set).
    pub block_traces: Vec<Vec<f64>>,
    /// Final residual sum of squares of each restart.
    pub restart_rss: Vec<f64>,
    /// Residual sum of squares of the returned factorization.
    pub rss: f64,
    /// `‖T − reconstruction‖_F` of the returned factorization.
    pub residual: f64,
    /// Sweeps used by the best restart.
    pub sweeps: usize,
    pub best_restart: usize,
    /// The best restart stopped on the relative-change criterion rather than
    /// the sweep cap.
    pub converged: bool,
}

impl FitReport {
    /// Objective trace of the returned run.
    pub fn best_trace(&self) -> &[f64] {
        &self.traces[self.best_restart]
    }
}
