//! Dense tensors and the linear maps acting on them.
//!
//! Storage is row-major with the last index fastest. All indices in this API
//! are zero-based.

use serde::{Deserialize, Serialize};

use crate::error::{NdError, Result};
use crate::poset::{row_major_strides, Poset};

/// A dense order-`k` real array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(NdError::ShapeMismatch(format!(
                "shape {shape:?} must be non-empty with positive extents"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NdError::ShapeMismatch(format!(
                "shape {shape:?} holds {n} entries but {} were given",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(NdError::InvalidArgument(format!(
                "entry {i} is not finite ({})",
                data[i]
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    /// Builds a matrix from its rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Tensor> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NdError::ShapeMismatch("ragged matrix rows".into()));
        }
        Tensor::new(vec![rows.len(), cols], rows.concat())
    }

    /// `⊗_j v^{(j)}`: entry `(i_1,...,i_k)` is `∏_j v^{(j)}[i_j]`.
    pub fn outer(vectors: &[Vec<f64>]) -> Result<Tensor> {
        if vectors.is_empty() || vectors.iter().any(Vec::is_empty) {
            return Err(NdError::ShapeMismatch("outer product needs non-empty vectors".into()));
        }
        let mut data = vec![1.0];
        for v in vectors {
            let mut next = Vec::with_capacity(data.len() * v.len());
            for &a in &data {
                next.extend(v.iter().map(|&b| a * b));
            }
            data = next;
        }
        Tensor::new(vectors.iter().map(Vec::len).collect(), data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() {
            return Err(NdError::ShapeMismatch(format!(
                "index of length {} for an order-{} tensor",
                index.len(),
                self.order()
            )));
        }
        let mut flat = 0;
        for (mode, (&i, &len)) in index.iter().zip(&self.shape).enumerate() {
            if i >= len {
                return Err(NdError::IndexOutOfRange { mode, index: i, len });
            }
            flat = flat * len + i;
        }
        Ok(flat)
    }

    /// Multi-index of a flat position.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order()];
        for j in (0..self.order()).rev() {
            idx[j] = flat % self.shape[j];
            flat /= self.shape[j];
        }
        idx
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.flat_index(index)?])
    }

    /// The mode-`mode` fibre through `fixed`, which lists the indices of every
    /// other mode in order.
    pub fn fibre(&self, mode: usize, fixed: &[usize]) -> Result<Vec<f64>> {
        let k = self.order();
        if mode >= k || fixed.len() + 1 != k {
            return Err(NdError::ShapeMismatch(format!(
                "fibre along mode {mode} of an order-{k} tensor needs {} fixed indices",
                k.saturating_sub(1)
            )));
        }
        let mut idx = Vec::with_capacity(k);
        idx.extend_from_slice(&fixed[..mode]);
        idx.push(0);
        idx.extend_from_slice(&fixed[mode..]);
        let base = self.flat_index(&idx)?;
        let stride = self.strides()[mode];
        Ok((0..self.shape[mode])
            .map(|i| self.data[base + i * stride])
            .collect())
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(NdError::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// `⟨S, T⟩ = Σ S_i T_i`.
    pub fn inner(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, alpha: f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `‖self - other‖_F`.
    pub fn distance(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// `Δ^{(mode)}`: backward difference along one mode, with the entry before
    /// index 0 read as zero.
    pub fn mode_difference(&self, mode: usize) -> Result<Tensor> {
        if mode >= self.order() {
            return Err(NdError::ShapeMismatch(format!(
                "mode {mode} out of range for order {}",
                self.order()
            )));
        }
        let stride = self.strides()[mode];
        let len = self.shape[mode];
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(flat, &v)| {
                if (flat / stride) % len == 0 {
                    v
                } else {
                    v - self.data[flat - stride]
                }
            })
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Applies `map` along one mode: the mode-`mode` product.
    pub fn mode_product(&self, mode: usize, map: &LinearMap) -> Result<Tensor> {
        if mode >= self.order() || map.cols != self.shape[mode] {
            return Err(NdError::ShapeMismatch(format!(
                "map with {} columns applied to mode {mode} of shape {:?}",
                map.cols, self.shape
            )));
        }
        let mut shape = self.shape.clone();
        shape[mode] = map.rows;
        let outer: usize = self.shape[..mode].iter().product();
        let inner: usize = self.shape[mode + 1..].iter().product();
        let len = self.shape[mode];
        let mut data = vec![0.0; outer * map.rows * inner];
        for o in 0..outer {
            for r in 0..map.rows {
                let dst = (o * map.rows + r) * inner;
                for c in 0..len {
                    let a = map.entries[r * map.cols + c];
                    if a == 0.0 {
                        continue;
                    }
                    let src = (o * len + c) * inner;
                    for i in 0..inner {
                        data[dst + i] += a * self.data[src + i];
                    }
                }
            }
        }
        Ok(Tensor { shape, data })
    }

    /// `(A^{(1)} ⊗ ... ⊗ A^{(k)})(T)`.
    pub fn apply_kronecker(&self, maps: &[LinearMap]) -> Result<Tensor> {
        if maps.len() != self.order() {
            return Err(NdError::ShapeMismatch(format!(
                "{} maps for an order-{} tensor",
                maps.len(),
                self.order()
            )));
        }
        let mut out = self.clone();
        for (mode, map) in maps.iter().enumerate() {
            out = out.mode_product(mode, map)?;
        }
        Ok(out)
    }

    /// Sums all fibres along `mode`, giving the mode marginal.
    pub fn mode_marginal(&self, mode: usize) -> Vec<f64> {
        let stride = self.strides()[mode];
        let len = self.shape[mode];
        let mut out = vec![0.0; len];
        for (flat, &v) in self.data.iter().enumerate() {
            out[(flat / stride) % len] += v;
        }
        out
    }
}

/// A dense real matrix used as a linear map between coordinate spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl LinearMap {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<LinearMap> {
        if rows * cols != entries.len() || rows == 0 || cols == 0 {
            return Err(NdError::ShapeMismatch(format!(
                "{rows}x{cols} map with {} entries",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(NdError::InvalidArgument("map entries must be finite".into()));
        }
        Ok(LinearMap { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<LinearMap> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NdError::ShapeMismatch("ragged matrix rows".into()));
        }
        LinearMap::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> LinearMap {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        LinearMap { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> LinearMap {
        let mut entries = vec![0.0; self.entries.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                entries[c * self.rows + r] = self.get(r, c);
            }
        }
        LinearMap {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(NdError::ShapeMismatch(format!(
                "vector of length {} for a map with {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.entries[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn matmul(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.cols != other.rows {
            return Err(NdError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut entries = vec![0.0; self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    entries[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Ok(LinearMap {
            rows: self.rows,
            cols: other.cols,
            entries,
        })
    }

    /// Kronecker product, with `self` indexing the slow coordinate.
    pub fn kron(&self, other: &LinearMap) -> LinearMap {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut entries = vec![0.0; rows * cols];
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        entries[(r1 * other.rows + r2) * cols + c1 * other.cols + c2] =
                            a * other.get(r2, c2);
                    }
                }
            }
        }
        LinearMap { rows, cols, entries }
    }

    pub fn max_abs_diff(&self, other: &LinearMap) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NdError::ShapeMismatch("maps differ in shape".into()));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Möbius transform `M_P`: column `x` is the indicator of the principal upset `[x, ∞)`.
pub fn mobius_matrix(poset: &Poset) -> LinearMap {
    let p = poset.size();
    let mut entries = vec![0.0; p * p];
    for x in 0..p {
        for y in 0..p {
            if poset.leq(x, y) {
                entries[y * p + x] = 1.0;
            }
        }
    }
    LinearMap {
        rows: p,
        cols: p,
        entries,
    }
}

/// `M_P^{-1}` for a collider-free poset: `1` on the diagonal and `-1` at
/// `(x, y)` whenever `y ⋖ x`.
pub fn mobius_inverse_matrix(poset: &Poset) -> Result<LinearMap> {
    if poset.has_collider() {
        return Err(NdError::NotSimplicial);
    }
    let p = poset.size();
    let mut entries = vec![0.0; p * p];
    for x in 0..p {
        entries[x * p + x] = 1.0;
    }
    for &(y, x) in poset.covers() {
        entries[x * p + y] = -1.0;
    }
    Ok(LinearMap {
        rows: p,
        cols: p,
        entries,
    })
}
