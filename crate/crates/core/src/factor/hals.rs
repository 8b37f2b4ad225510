//! ND hierarchical alternating least squares.
//!
//! Each block update fixes every vector except `v^{(st)}`, forms the residual
//! with term `s` added back, computes the unconstrained minimiser coordinate
//! by coordinate and projects it onto `C(P_t)`. Because the objective in
//! `v^{(st)}` is a uniformly weighted squared distance, that projection is the
//! exact block minimiser and the objective never increases.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use super::{norm, FitConfig, FitReport, InitStrategy, NDFactorization};
use crate::error::{NdError, Result};
use crate::isotonic::project;
use crate::poset::Poset;
use crate::tensor::Tensor;

/// Unconstrained ALS sweeps used by [`init_als_project`].
pub const ALS_INIT_SWEEPS: usize = 25;

/// Sweeps of the rank-one refit used to revive a collapsed term.
const REVIVE_SWEEPS: usize = 50;

type Terms = Vec<Vec<Vec<f64>>>;

/// Walks all multi-indices of `shape` in row-major order.
fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let n: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..n {
        f(flat, &idx);
        for j in (0..shape.len()).rev() {
            idx[j] += 1;
            if idx[j] < shape[j] {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// `Σ_{i: i_t = l} x_i ∏_{j≠t} v_j[i_j]` for every `l`.
fn contract_except(x: &[f64], shape: &[usize], vecs: &[Vec<f64>], mode: usize) -> Vec<f64> {
    let mut out = vec![0.0; shape[mode]];
    for_each_index(shape, |flat, idx| {
        let mut w = x[flat];
        if w == 0.0 {
            return;
        }
        for (j, v) in vecs.iter().enumerate() {
            if j != mode {
                w *= v[idx[j]];
            }
        }
        out[idx[mode]] += w;
    });
    out
}

/// Adds `alpha * ⊗ vecs` to `x`.
fn add_outer(x: &mut [f64], shape: &[usize], vecs: &[Vec<f64>], alpha: f64) {
    for_each_index(shape, |flat, idx| {
        let mut w = alpha;
        for (j, v) in vecs.iter().enumerate() {
            w *= v[idx[j]];
        }
        x[flat] += w;
    });
}

fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn residual_of(t: &Tensor, terms: &Terms) -> Vec<f64> {
    let mut r = t.data().to_vec();
    for term in terms {
        add_outer(&mut r, t.shape(), term, -1.0);
    }
    r
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

fn unit_ones(p: usize) -> Vec<f64> {
    vec![1.0 / (p as f64).sqrt(); p]
}

/// Best rank-one ND fit of `x` by a few single-term HALS sweeps from the
/// all-ones start.
fn rank1_refit(x: &[f64], shape: &[usize], posets: &[Poset], sweeps: usize) -> Vec<Vec<f64>> {
    let mut vecs: Vec<Vec<f64>> = shape.iter().map(|&p| unit_ones(p)).collect();
    for _ in 0..sweeps {
        for t in 0..shape.len() {
            let denom: f64 = (0..shape.len())
                .filter(|&j| j != t)
                .map(|j| sum_sq(&vecs[j]))
                .product();
            if denom == 0.0 {
                return vecs;
            }
            let raw: Vec<f64> = contract_except(x, shape, &vecs, t)
                .into_iter()
                .map(|v| v / denom)
                .collect();
            vecs[t] = project(&raw, &posets[t]);
        }
    }
    vecs
}

/// Moves each term's scale evenly across its vectors.
fn rebalance(terms: &mut Terms) {
    for term in terms.iter_mut() {
        let norms: Vec<f64> = term.iter().map(|v| norm(v)).collect();
        if norms.iter().any(|&n| n == 0.0) {
            continue;
        }
        let k = norms.len() as f64;
        let target = norms.iter().map(|n| n.ln()).sum::<f64>() / k;
        let target = target.exp();
        for (v, n) in term.iter_mut().zip(&norms) {
            let c = target / n;
            v.iter_mut().for_each(|x| *x *= c);
        }
    }
}

struct RunResult {
    terms: Terms,
    trace: Vec<f64>,
    block_trace: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

fn run_hals(
    t: &Tensor,
    posets: &[Poset],
    cfg: &FitConfig,
    mut terms: Terms,
) -> RunResult {
    let shape = t.shape();
    let k = shape.len();
    let scale = t.frobenius();
    let mut r = residual_of(t, &terms);
    let mut trace = vec![sum_sq(&r)];
    let mut block_trace = Vec::new();
    let mut recon: Vec<f64> = t.data().iter().zip(&r).map(|(a, b)| a - b).collect();
    let mut sweeps = 0;
    let mut converged = false;
    if trace[0] == 0.0 {
        return RunResult {
            terms,
            trace,
            block_trace,
            sweeps,
            converged: true,
        };
    }
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        for s in 0..terms.len() {
            // Residual with term s added back.
            add_outer(&mut r, shape, &terms[s], 1.0);
            if terms[s].iter().any(|v| is_zero(v)) {
                let before = sum_sq(&r);
                let cand = rank1_refit(&r, shape, posets, REVIVE_SWEEPS);
                let mut trial = r.clone();
                add_outer(&mut trial, shape, &cand, -1.0);
                if sum_sq(&trial) < before {
                    terms[s] = cand;
                } else {
                    terms[s] = shape.iter().map(|&p| vec![0.0; p]).collect();
                }
            } else {
                for mode in 0..k {
                    let denom: f64 = (0..k)
                        .filter(|&j| j != mode)
                        .map(|j| sum_sq(&terms[s][j]))
                        .product();
                    if denom == 0.0 {
                        break;
                    }
                    let raw: Vec<f64> = contract_except(&r, shape, &terms[s], mode)
                        .into_iter()
                        .map(|v| v / denom)
                        .collect();
                    terms[s][mode] = project(&raw, &posets[mode]);
                    if cfg.record_blocks {
                        let mut trial = r.clone();
                        add_outer(&mut trial, shape, &terms[s], -1.0);
                        block_trace.push(sum_sq(&trial));
                    }
                }
                if terms[s].iter().any(|v| is_zero(v)) {
                    for v in terms[s].iter_mut() {
                        v.iter_mut().for_each(|x| *x = 0.0);
                    }
                }
            }
            add_outer(&mut r, shape, &terms[s], -1.0);
        }
        rebalance(&mut terms);
        r = residual_of(t, &terms);
        let rss = sum_sq(&r);
        trace.push(rss);
        let new_recon: Vec<f64> = t.data().iter().zip(&r).map(|(a, b)| a - b).collect();
        let change = new_recon
            .iter()
            .zip(&recon)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let base = norm(&recon).max(1e-300);
        recon = new_recon;
        if change / base < cfg.rel_tol || rss <= (1e-15 * scale).powi(2) {
            converged = true;
            break;
        }
    }
    RunResult {
        terms,
        trace,
        block_trace,
        sweeps,
        converged,
    }
}

/// Random point of `C(P)`: a conic combination of principal upset
/// indicators with exponential weights, scaled to unit norm.
fn random_cone_vector(poset: &Poset, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let p = poset.size();
    let mut v = vec![0.0; p];
    for x in 0..p {
        let c: f64 = rng.sample(Exp1);
        for y in poset.principal_upset(x) {
            v[y] += c;
        }
    }
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn random_cone_init(t: &Tensor, posets: &[Poset], rank: usize, seed: u64) -> Terms {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (t.frobenius() / rank as f64).powf(1.0 / posets.len() as f64);
    (0..rank)
        .map(|_| {
            posets
                .iter()
                .map(|p| {
                    random_cone_vector(p, &mut rng)
                        .into_iter()
                        .map(|x| x * scale)
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Unconstrained CP alternating least squares from a seeded Gaussian start.
fn cp_als(t: &Tensor, rank: usize, sweeps: usize, rng: &mut ChaCha8Rng) -> Vec<DMatrix<f64>> {
    let shape = t.shape();
    let k = shape.len();
    let mut a: Vec<DMatrix<f64>> = shape
        .iter()
        .map(|&p| DMatrix::from_fn(p, rank, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();
    for _ in 0..sweeps {
        for mode in 0..k {
            let mut gram = DMatrix::from_element(rank, rank, 1.0);
            for (j, aj) in a.iter().enumerate() {
                if j != mode {
                    gram.component_mul_assign(&(aj.transpose() * aj));
                }
            }
            let mut m = DMatrix::<f64>::zeros(shape[mode], rank);
            for_each_index(shape, |flat, idx| {
                let x = t.data()[flat];
                if x == 0.0 {
                    return;
                }
                for s in 0..rank {
                    let mut w = x;
                    for (j, aj) in a.iter().enumerate() {
                        if j != mode {
                            w *= aj[(idx[j], s)];
                        }
                    }
                    m[(idx[mode], s)] += w;
                }
            });
            let pinv = match gram.pseudo_inverse(1e-12) {
                Ok(p) => p,
                Err(_) => return a,
            };
            a[mode] = m * pinv;
        }
    }
    a
}

/// `‖⊗a − ⊗b‖²` from per-mode inner products.
fn outer_distance_sq(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let aa: f64 = a.iter().map(|v| dot(v, v)).product();
    let bb: f64 = b.iter().map(|v| dot(v, v)).product();
    let ab: f64 = a.iter().zip(b).map(|(x, y)| dot(x, y)).product();
    (aa - 2.0 * ab + bb).max(0.0)
}

/// Projects one unconstrained term onto the product of order cones, trying
/// every sign pattern that flips an even number of modes (these leave the
/// term unchanged) and keeping the closest projected term.
fn project_term_with_signs(term: &[Vec<f64>], posets: &[Poset]) -> Vec<Vec<f64>> {
    let k = term.len();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for mask in 0u32..(1 << k) {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let projected: Vec<Vec<f64>> = term
            .iter()
            .zip(posets)
            .enumerate()
            .map(|(j, (v, p))| {
                let flipped: Vec<f64> = if mask >> j & 1 == 1 {
                    v.iter().map(|x| -x).collect()
                } else {
                    v.clone()
                };
                project(&flipped, p)
            })
            .collect();
        let d = outer_distance_sq(term, &projected);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, projected));
        }
    }
    best.expect("at least the identity pattern").1
}

/// Rank-`r` initialization: unconstrained ALS ([`ALS_INIT_SWEEPS`] sweeps),
/// sign repair, projection of every vector onto its order cone, and
/// replacement of any all-zero projected vector by the unit all-ones vector.
///
/// Returns unscaled terms (`terms[i][j]`).
pub fn init_als_project(
    t: &Tensor,
    rank: usize,
    posets: &[Poset],
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_inputs(t, posets)?;
    if rank == 0 {
        return Err(NdError::InvalidArgument("rank must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = cp_als(t, rank, ALS_INIT_SWEEPS, &mut rng);
    if a.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
        return Ok(random_cone_init(t, posets, rank, seed));
    }
    Ok((0..rank)
        .map(|s| {
            let term: Vec<Vec<f64>> = a.iter().map(|m| m.column(s).iter().copied().collect()).collect();
            let mut projected = project_term_with_signs(&term, posets);
            for v in projected.iter_mut() {
                if is_zero(v) {
                    *v = unit_ones(v.len());
                }
            }
            projected
        })
        .collect())
}

fn check_inputs(t: &Tensor, posets: &[Poset]) -> Result<()> {
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

/// Thread cap for concurrent restarts: the explicit setting, else the
/// `NDRANK_THREADS` environment variable, else `None` (rayon default).
pub fn resolve_threads(explicit: Option<usize>) -> Option<usize> {
    explicit.or_else(|| {
        std::env::var("NDRANK_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Fits a rank-`r` ND factorization by HALS, keeping the best of
/// `cfg.restarts` runs (seeds `cfg.seed + i`, ties to the lowest seed).
pub fn hals(
    t: &Tensor,
    posets: &[Poset],
    cfg: &FitConfig,
) -> Result<(NDFactorization, FitReport)> {
    check_inputs(t, posets)?;
    cfg.validate()?;
    let run = |i: usize| -> Result<RunResult> {
        let seed = cfg.seed.wrapping_add(i as u64);
        let strategy = match cfg.init {
            InitStrategy::Mixed if i % 2 == 1 => InitStrategy::RandomCone,
            InitStrategy::Mixed => InitStrategy::AlsProject,
            s => s,
        };
        let terms = match strategy {
            InitStrategy::RandomCone => random_cone_init(t, posets, cfg.rank, seed),
            _ => init_als_project(t, cfg.rank, posets, seed)?,
        };
        Ok(run_hals(t, posets, cfg, terms))
    };
    let runs: Vec<RunResult> = match resolve_threads(cfg.threads) {
        Some(1) => (0..cfg.restarts).map(run).collect::<Result<_>>()?,
        threads => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                builder = builder.num_threads(n);
            }
            let pool = builder
                .build()
                .map_err(|e| NdError::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..cfg.restarts)
                    .into_par_iter()
                    .map(run)
                    .collect::<Result<Vec<_>>>()
            })?
        }
    };
    let restart_rss: Vec<f64> = runs.iter().map(|r| *r.trace.last().unwrap()).collect();
    let best = (0..runs.len())
        .min_by(|&a, &b| restart_rss[a].total_cmp(&restart_rss[b]).then(a.cmp(&b)))
        .expect("at least one restart");
    let mut fact = NDFactorization::from_terms(t.shape().to_vec(), runs[best].terms.clone())?;
    fact.sort_terms();
    let residual = fact.residual(t)?;
    let report = FitReport {
        traces: runs.iter().map(|r| r.trace.clone()).collect(),
        block_traces: runs.iter().map(|r| r.block_trace.clone()).collect(),
        rss: residual * residual,
        residual,
        sweeps: runs[best].sweeps,
        best_restart: best,
        converged: runs[best].converged,
        restart_rss,
    };
    Ok((fact, report))
}
