//! Exact double-description conversion from generators to facet normals.
//!
//! Facets of `cone(G)` are the extreme rays of the dual cone
//! `{a : <g, a> >= 0 for all g in G}`, which we build incrementally one
//! constraint at a time. All arithmetic is on `i128` with gcd reduction after
//! every combination, so results are exact for the small integer inputs this
//! is meant for.

use num_integer::Integer;

use crate::error::{NdError, Result};

/// Ambient dimension guard.
pub const MAX_DD_DIM: usize = 12;
/// Generator count guard.
pub const MAX_DD_GENERATORS: usize = 64;

fn dot(a: &[i128], b: &[i128]) -> i128 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn reduce(v: &mut [i128]) {
    let g = v.iter().fold(0i128, |g, &x| g.gcd(&x));
    if g > 1 {
        for x in v.iter_mut() {
            *x /= g;
        }
    }
}

/// Fraction-free row reduction. Returns the indices of a
/// maximal set of linearly independent rows, chosen greedily in input order.
fn independent_rows(rows: &[Vec<i128>], dim: usize) -> Vec<usize> {
    let mut basis: Vec<Vec<i128>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut chosen = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (b, &pc) in basis.iter().zip(&pivots) {
            if r[pc] != 0 {
                let (f, g) = (b[pc], r[pc]);
                for c in 0..dim {
                    r[c] = f * r[c] - g * b[c];
                }
                reduce(&mut r);
            }
        }
        if let Some(pc) = r.iter().position(|&x| x != 0) {
            basis.push(r);
            pivots.push(pc);
            chosen.push(i);
        }
    }
    chosen
}

/// Determinant of a square integer matrix by Bareiss elimination.
fn determinant(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Integer generator of the one-dimensional null space of a `(d-1) x d`
/// full-rank matrix, via signed maximal minors.
fn null_vector(rows: &[Vec<i128>], dim: usize) -> Vec<i128> {
    let mut v: Vec<i128> = (0..dim)
        .map(|skip| {
            let minor: Vec<Vec<i128>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != skip)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let d = determinant(minor);
            if skip % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect();
    reduce(&mut v);
    v
}

struct Ray {
    v: Vec<i128>,
    /// Bitset over processed constraints that are tight at this ray.
    zeros: Vec<u64>,
}

fn bit_and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn is_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn popcount(a: &[u64]) -> usize {
    a.iter().map(|x| x.count_ones() as usize).sum()
}

/// Facet normals of the full-dimensional cone generated by `gens`.
///
/// Normals are divided by the gcd of their entries (a positive scaling that
/// preserves the halfspace orientation) and returned in lexicographic order.
pub fn double_description(gens: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let dim = gens.first().map(Vec::len).unwrap_or(0);
    if gens.is_empty() || dim == 0 {
        return Err(NdError::InvalidArgument("no generators given".into()));
    }
    if gens.iter().any(|g| g.len() != dim) {
        return Err(NdError::ShapeMismatch("generators differ in length".into()));
    }
    if dim > MAX_DD_DIM {
        return Err(NdError::TooLarge {
            what: "double description ambient dimension",
            size: dim,
            limit: MAX_DD_DIM,
        });
    }
    if gens.len() > MAX_DD_GENERATORS {
        return Err(NdError::TooLarge {
            what: "double description generator count",
            size: gens.len(),
            limit: MAX_DD_GENERATORS,
        });
    }
    let cons: Vec<Vec<i128>> = gens
        .iter()
        .map(|g| g.iter().map(|&x| x as i128).collect())
        .collect();
    let basis = independent_rows(&cons, dim);
    if basis.len() < dim {
        return Err(NdError::DegenerateCone {
            rank: basis.len(),
            dim,
            lineality: dim - basis.len(),
        });
    }

    let words = cons.len().div_ceil(64);
    let set_bit = |z: &mut Vec<u64>, i: usize| z[i / 64] |= 1 << (i % 64);

    // Initial simplicial cone {a : B a >= 0}: one ray per basis row, tight on
    // all the other basis rows.
    let mut rays: Vec<Ray> = Vec::with_capacity(dim);
    for (j, &bj) in basis.iter().enumerate() {
        let others: Vec<Vec<i128>> = basis
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &r)| cons[r].clone())
            .collect();
        let mut v = null_vector(&others, dim);
        if dot(&v, &cons[bj]) < 0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let mut zeros = vec![0u64; words];
        for (i, &bi) in basis.iter().enumerate() {
            if i != j {
                set_bit(&mut zeros, bi);
            }
        }
        rays.push(Ray { v, zeros });
    }

    for (ci, c) in cons.iter().enumerate() {
        if basis.contains(&ci) {
            continue;
        }
        let vals: Vec<i128> = rays.iter().map(|r| dot(&r.v, c)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < 0).collect();
        let mut next: Vec<Ray> = Vec::new();
        for &i in &pos {
            for &j in &neg {
                let common = bit_and(&rays[i].zeros, &rays[j].zeros);
                if popcount(&common) + 2 < dim {
                    continue;
                }
                let adjacent = (0..rays.len())
                    .filter(|&k| k != i && k != j)
                    .all(|k| !is_subset(&common, &rays[k].zeros));
                if !adjacent {
                    continue;
                }
                let (a, b) = (vals[i], -vals[j]);
                let mut v: Vec<i128> = rays[i]
                    .v
                    .iter()
                    .zip(&rays[j].v)
                    .map(|(&x, &y)| b * x + a * y)
                    .collect();
                reduce(&mut v);
                let mut zeros = common;
                set_bit(&mut zeros, ci);
                next.push(Ray { v, zeros });
            }
        }
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i] >= 0 {
                if vals[i] == 0 {
                    set_bit(&mut r.zeros, ci);
                }
                next.push(r);
            }
        }
        rays = next;
    }

    let mut normals: Vec<Vec<i64>> = rays
        .into_iter()
        .map(|r| {
            r.v.iter()
                .map(|&x| {
                    i64::try_from(x).map_err(|_| {
                        NdError::InvalidArgument("facet normal coefficient overflows i64".into())
                    })
                })
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<_>>()?;
    normals.sort();
    normals.dedup();
    Ok(normals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant() {
        let n = double_description(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(n, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn simplicial_three() {
        let gens = vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 1]];
        let normals = double_description(&gens).unwrap();
        assert_eq!(normals.len(), 3);
        for n in &normals {
            let vals: Vec<i64> = gens
                .iter()
                .map(|g| g.iter().zip(n).map(|(a, b)| a * b).sum())
                .collect();
            assert_eq!(vals.iter().filter(|&&v| v == 0).count(), 2);
            assert!(vals.iter().all(|&v| v >= 0));
        }
    }

    #[test]
    fn redundant_generators_are_ignored() {
        let gens = vec![vec![1, 0], vec![1, 1], vec![0, 1], vec![2, 1]];
        assert_eq!(
            double_description(&gens).unwrap(),
            vec![vec![0, 1], vec![1, 0]]
        );
    }

    #[test]
    fn square_pyramid() {
        // Non-simplicial cone over a square: four facets.
        let gens = vec![
            vec![1, 0, 1],
            vec![0, 1, 1],
            vec![-1, 0, 1],
            vec![0, -1, 1],
        ];
        let normals = double_description(&gens).unwrap();
        assert_eq!(normals.len(), 4);
        for n in &normals {
            let zeros = gens
                .iter()
                .filter(|g| g.iter().zip(n).map(|(a, b)| a * b).sum::<i64>() == 0)
                .count();
            assert_eq!(zeros, 2);
        }
    }

    #[test]
    fn degenerate_and_guards() {
        assert!(matches!(
            double_description(&[vec![1, 0, 0], vec![0, 1, 0]]),
            Err(NdError::DegenerateCone { rank: 2, dim: 3, lineality: 1 })
        ));
        assert!(matches!(
            double_description(&[vec![1; 13]]),
            Err(NdError::TooLarge { .. })
        ));
    }

    #[test]
    fn determinant_small() {
        assert_eq!(determinant(vec![vec![2, 1], vec![1, 3]]), 5);
        assert_eq!(
            determinant(vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]),
            -1
        );
    }
}
