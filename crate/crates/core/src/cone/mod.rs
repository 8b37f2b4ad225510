//! Order cones `C(P)` and the cone of finite ND rank tensors.
//!
//! The finite ND rank cone over posets `P_1, ..., P_k` is generated by outer
//! products of connected-upset indicators, one per mode. When all but one of
//! the posets are collider-free its facets are known in closed form (signed
//! cover differences in the posets augmented by a bottom element); otherwise
//! the generators are converted with a small exact double-description routine.

mod dd;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NdError, Result};
use crate::poset::Poset;
use crate::tensor::{LinearMap, Tensor};

pub use dd::{double_description, MAX_DD_DIM, MAX_DD_GENERATORS};

/// Upper limit on the number of rank-one generators listed by
/// [`finite_rank_vrep`].
pub const MAX_FINITE_RANK_GENERATORS: usize = 1_000_000;

/// Largest grid side supported by [`sample_finite_rank_probability`].
pub const MAX_SAMPLER_SIDE: usize = 3;

/// Default slack used by membership checks: `1e-9 * (1 + ‖T‖_∞)`.
pub fn default_tol(t: &Tensor) -> f64 {
    1e-9 * (1.0 + t.max_abs())
}

/// Generators (extremal rays) of the order cone of a poset.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderConeVRep {
    poset: Poset,
    upsets: Vec<Vec<usize>>,
    generators: Vec<Vec<f64>>,
}

impl OrderConeVRep {
    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    /// Connected upsets, in the same order as the generators.
    pub fn upsets(&self) -> &[Vec<usize>] {
        &self.upsets
    }

    /// 0/1 indicator vectors of the connected upsets.
    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// The `p x q` matrix whose columns are the generators.
    pub fn matrix(&self) -> LinearMap {
        let p = self.poset.size();
        let q = self.generators.len();
        let mut entries = vec![0.0; p * q];
        for (c, g) in self.generators.iter().enumerate() {
            for (r, &v) in g.iter().enumerate() {
                entries[r * q + c] = v;
            }
        }
        LinearMap::new(p, q, entries).expect("generator matrix is non-empty")
    }
}

/// Halfspace description `{x : <a_i, x> >= 0}` with integer normals in
/// row-major tensor coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeHRep {
    pub shape: Vec<usize>,
    pub normals: Vec<Vec<i64>>,
}

impl ConeHRep {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// `<a_i, T>` for every normal.
    pub fn values(&self, t: &Tensor) -> Result<Vec<f64>> {
        if t.shape() != self.shape.as_slice() {
            return Err(NdError::ShapeMismatch(format!(
                "tensor {:?} against halfspaces over {:?}",
                t.shape(),
                self.shape
            )));
        }
        Ok(self
            .normals
            .iter()
            .map(|a| normal_value(a, t.data()))
            .collect())
    }
}

fn normal_value(a: &[i64], x: &[f64]) -> f64 {
    a.iter()
        .zip(x)
        .filter(|(&c, _)| c != 0)
        .map(|(&c, &v)| c as f64 * v)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Member,
    NonMember,
}

/// How a certificate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateMethod {
    /// Full mode differencing (all modes are chains in index order).
    TreeDifferencing,
    /// Explicit halfspace list.
    Halfspace,
    /// Facets computed from generators by double description.
    DoubleDescription,
}

/// Outcome of a membership test together with the violated inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub verdict: Verdict,
    /// `(normal, <normal, T>)` for every inequality with value below `-tol`.
    pub violated: Vec<(Vec<i64>, f64)>,
    pub method: CertificateMethod,
    /// Smallest value over all checked inequalities.
    pub min_value: f64,
    pub tol: f64,
}

impl MembershipCertificate {
    pub fn is_member(&self) -> bool {
        self.verdict == Verdict::Member
    }

    /// True if some violated inequality has exactly this normal.
    pub fn violates(&self, normal: &[i64]) -> bool {
        self.violated.iter().any(|(n, _)| n.as_slice() == normal)
    }

    fn from_values(
        normals: impl IntoIterator<Item = (Vec<i64>, f64)>,
        method: CertificateMethod,
        tol: f64,
    ) -> MembershipCertificate {
        let mut min_value = f64::INFINITY;
        let mut violated = Vec::new();
        for (n, v) in normals {
            min_value = min_value.min(v);
            if v < -tol {
                violated.push((n, v));
            }
        }
        MembershipCertificate {
            verdict: if violated.is_empty() {
                Verdict::Member
            } else {
                Verdict::NonMember
            },
            violated,
            method,
            min_value,
            tol,
        }
    }
}

fn indicator(p: usize, set: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; p];
    for &x in set {
        v[x] = 1.0;
    }
    v
}

/// Extremal rays of `C(P)`: indicators of the connected upsets.
pub fn order_cone_vrep(poset: &Poset) -> Result<OrderConeVRep> {
    let upsets = poset.connected_upsets()?;
    let generators = upsets.iter().map(|u| indicator(poset.size(), u)).collect();
    Ok(OrderConeVRep {
        poset: poset.clone(),
        upsets,
        generators,
    })
}

/// Rank-one generators of the finite ND rank cone, one per tuple of
/// connected upsets (first mode varying slowest).
pub fn finite_rank_vrep(posets: &[Poset]) -> Result<Vec<Tensor>> {
    if posets.is_empty() {
        return Err(NdError::InvalidArgument("at least one poset is required".into()));
    }
    let reps = posets
        .iter()
        .map(order_cone_vrep)
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = reps.iter().map(OrderConeVRep::len).collect();
    let total = counts
        .iter()
        .try_fold(1usize, |acc, &q| acc.checked_mul(q))
        .filter(|&n| n <= MAX_FINITE_RANK_GENERATORS)
        .ok_or(NdError::TooLarge {
            what: "finite rank generator count",
            size: counts.iter().fold(1usize, |a, &q| a.saturating_mul(q)),
            limit: MAX_FINITE_RANK_GENERATORS,
        })?;
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; posets.len()];
    for _ in 0..total {
        let vectors: Vec<Vec<f64>> = idx
            .iter()
            .zip(&reps)
            .map(|(&i, r)| r.generators[i].clone())
            .collect();
        out.push(Tensor::outer(&vectors)?);
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(out)
}

/// Converts integral generator tensors to integer vectors for
/// [`double_description`].
pub fn integer_vectors(tensors: &[Tensor]) -> Result<Vec<Vec<i64>>> {
    tensors
        .iter()
        .map(|t| {
            t.data()
                .iter()
                .map(|&v| {
                    if v.fract() == 0.0 && v.abs() < 1e15 {
                        Ok(v as i64)
                    } else {
                        Err(NdError::InvalidArgument(format!(
                            "generator entry {v} is not an integer"
                        )))
                    }
                })
                .collect()
        })
        .collect()
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

fn unit(p: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; p];
    v[i] = 1;
    v
}

/// Membership certificate for the order cone `C(P)` of a (typically product)
/// poset whose elements index the tensor entries in row-major order: checks
/// nonnegativity of every entry and monotonicity along every cover.
pub fn is_monotone(t: &Tensor, poset: &Poset, tol: Option<f64>) -> Result<MembershipCertificate> {
    let n = t.len();
    if poset.size() != n {
        return Err(NdError::ShapeMismatch(format!(
            "tensor with {n} entries against a poset of {} elements",
            poset.size()
        )));
    }
    let tol = tol.unwrap_or_else(|| default_tol(t));
    let x = t.data();
    let nonneg = (0..n).map(|i| (unit(n, i), x[i]));
    let covers = poset.covers().iter().map(|&(a, b)| {
        let mut v = vec![0; n];
        v[b] = 1;
        v[a] = -1;
        (v, x[b] - x[a])
    });
    Ok(MembershipCertificate::from_values(
        nonneg.chain(covers),
        CertificateMethod::Halfspace,
        tol,
    ))
}

/// Covers of `P' = {0} ∪ P`, listed as `(lower, upper)` with `None` for the
/// added bottom, grouped by upper element.
fn augmented_covers(poset: &Poset) -> Vec<(Option<usize>, usize)> {
    let mut out = Vec::new();
    for y in 0..poset.size() {
        let lower = poset.lower_covers(y);
        if lower.is_empty() {
            out.push((None, y));
        } else {
            out.extend(lower.iter().map(|&x| (Some(x), y)));
        }
    }
    out
}

fn cover_row(p: usize, cover: (Option<usize>, usize)) -> Vec<i64> {
    let mut v = unit(p, cover.1);
    if let Some(x) = cover.0 {
        v[x] = -1;
    }
    v
}

fn kron_int(vectors: &[Vec<i64>]) -> Vec<i64> {
    let mut out = vec![1i64];
    for v in vectors {
        out = out
            .iter()
            .flat_map(|&a| v.iter().map(move |&b| a * b))
            .collect();
    }
    out
}

/// Facet normals of the finite ND rank cone when at most one poset has a
/// collider: one signed cover difference per tuple of covers in the augmented
/// posets, with terms at the added bottom dropped.
pub fn finite_rank_hrep(posets: &[Poset]) -> Result<ConeHRep> {
    if posets.is_empty() {
        return Err(NdError::InvalidArgument("at least one poset is required".into()));
    }
    let colliders = posets.iter().filter(|p| p.has_collider()).count();
    if colliders >= 2 {
        return Err(NdError::HypothesisViolated(format!(
            "{colliders} posets contain colliders; closed-form facets need all but one collider-free"
        )));
    }
    let per_mode: Vec<Vec<Vec<i64>>> = posets
        .iter()
        .map(|p| {
            augmented_covers(p)
                .into_iter()
                .map(|c| cover_row(p.size(), c))
                .collect()
        })
        .collect();
    let mut normals = Vec::new();
    let mut idx = vec![0usize; posets.len()];
    'outer: loop {
        let rows: Vec<Vec<i64>> = idx
            .iter()
            .zip(&per_mode)
            .map(|(&i, rows)| rows[i].clone())
            .collect();
        normals.push(kron_int(&rows));
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < per_mode[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(ConeHRep {
        shape: posets.iter().map(Poset::size).collect(),
        normals,
    })
}

/// Facets of the finite ND rank cone computed by double description.
pub fn finite_rank_hrep_dd(posets: &[Poset]) -> Result<ConeHRep> {
    let gens = integer_vectors(&finite_rank_vrep(posets)?)?;
    Ok(ConeHRep {
        shape: posets.iter().map(Poset::size).collect(),
        normals: double_description(&gens)?,
    })
}

/// Decides whether `T` has finite ND rank over `posets`.
///
/// All modes chains in index order: nonnegativity of the fully differenced
/// tensor. All but one mode collider-free: the closed-form facets. Otherwise
/// facets from double description (small shapes only).
pub fn membership_finite_rank(
    t: &Tensor,
    posets: &[Poset],
    tol: Option<f64>,
) -> Result<MembershipCertificate> {
    check_shape(t, posets)?;
    let tol = tol.unwrap_or_else(|| default_tol(t));
    if posets.iter().all(Poset::is_index_chain) {
        let mut d = t.clone();
        for mode in 0..t.order() {
            d = d.mode_difference(mode)?;
        }
        let mut min_value = f64::INFINITY;
        let mut violated = Vec::new();
        for (flat, &v) in d.data().iter().enumerate() {
            min_value = min_value.min(v);
            if v < -tol {
                let idx = d.unravel(flat);
                let rows: Vec<Vec<i64>> = idx
                    .iter()
                    .zip(posets)
                    .map(|(&i, p)| cover_row(p.size(), (i.checked_sub(1), i)))
                    .collect();
                violated.push((kron_int(&rows), v));
            }
        }
        return Ok(MembershipCertificate {
            verdict: if violated.is_empty() {
                Verdict::Member
            } else {
                Verdict::NonMember
            },
            violated,
            method: CertificateMethod::TreeDifferencing,
            min_value,
            tol,
        });
    }
    let (hrep, method) = match finite_rank_hrep(posets) {
        Ok(h) => (h, CertificateMethod::Halfspace),
        Err(NdError::HypothesisViolated(_)) => {
            (finite_rank_hrep_dd(posets)?, CertificateMethod::DoubleDescription)
        }
        Err(e) => return Err(e),
    };
    let values = hrep.values(t)?;
    Ok(MembershipCertificate::from_values(
        hrep.normals.into_iter().zip(values),
        method,
        tol,
    ))
}

/// Renders `<a, T> >= 0` in 1-based tensor index notation, e.g.
/// `t11 - t12 - t31 + t32 >= 0`.
pub fn format_normal(normal: &[i64], shape: &[usize]) -> String {
    let compact = shape.iter().all(|&p| p <= 9);
    let strides = crate::poset::row_major_strides(shape);
    let name = |flat: usize| {
        let idx: Vec<String> = strides
            .iter()
            .zip(shape)
            .map(|(&s, &p)| ((flat / s) % p + 1).to_string())
            .collect();
        if compact {
            format!("t{}", idx.concat())
        } else {
            format!("t[{}]", idx.join(","))
        }
    };
    let mut out = String::new();
    for (flat, &c) in normal.iter().enumerate().filter(|(_, &c)| c != 0) {
        let mag = c.unsigned_abs();
        let term = if mag == 1 {
            name(flat)
        } else {
            format!("{mag}*{}", name(flat))
        };
        if out.is_empty() {
            if c < 0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0 { " - " } else { " + " });
        }
        out.push_str(&term);
    }
    if out.is_empty() {
        out.push('0');
    }
    out.push_str(" >= 0");
    out
}

/// Monte Carlo estimate of the fraction of the order polytope of the
/// `m x m` grid that has finite ND rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub m: usize,
    pub samples: usize,
    pub members: usize,
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub stderr: f64,
}

/// Samples uniform points of the order polytope of `[m] x [m]` and reports
/// the fraction that lie in the finite ND rank cone.
///
/// A uniform point is drawn by picking a uniformly random linear extension
/// (from the full enumeration) and assigning sorted uniforms along it.
pub fn sample_finite_rank_probability(m: usize, n: usize, seed: u64) -> Result<SampleEstimate> {
    if m == 0 || n == 0 {
        return Err(NdError::InvalidArgument(
            "grid side and sample count must be positive".into(),
        ));
    }
    if m > MAX_SAMPLER_SIDE {
        return Err(NdError::TooLarge {
            what: "exact order polytope sampler grid side",
            size: m,
            limit: MAX_SAMPLER_SIDE,
        });
    }
    let posets = vec![Poset::chain(m), Poset::chain(m)];
    let grid = Poset::product(&posets)?;
    let extensions = grid.linear_extensions()?;
    let cells = m * m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; cells];
    let mut data = vec![0.0; cells];
    let mut members = 0;
    for _ in 0..n {
        let ext = &extensions[rng.random_range(0..extensions.len())];
        for v in values.iter_mut() {
            *v = rng.random::<f64>();
        }
        values.sort_by(f64::total_cmp);
        for (&cell, &v) in ext.iter().zip(&values) {
            data[cell] = v;
        }
        let t = Tensor::new(vec![m, m], data.clone())?;
        if membership_finite_rank(&t, &posets, None)?.is_member() {
            members += 1;
        }
    }
    let estimate = members as f64 / n as f64;
    Ok(SampleEstimate {
        m,
        samples: n,
        members,
        estimate,
        stderr: (estimate * (1.0 - estimate) / n as f64).sqrt(),
    })
}
