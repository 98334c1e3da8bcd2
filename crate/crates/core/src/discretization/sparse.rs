//! Compressed-sparse-row storage for scalar P1 matrices and for the real-pair
//! (2N × 2N) operators acting on complex fields.

use std::sync::Arc;

/// Sparsity pattern shared by every scalar N × N matrix on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    transpose_slot: Vec<usize>,
}

impl ScalarPattern {
    /// Builds the pattern from per-row column lists (any order, duplicates allowed).
    pub(crate) fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for cols in rows.iter_mut() {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let mut pattern = Self {
            n,
            row_ptr,
            col_idx,
            transpose_slot: Vec::new(),
        };
        let mut transpose_slot = vec![usize::MAX; pattern.col_idx.len()];
        for i in 0..n {
            for s in pattern.row_ptr[i]..pattern.row_ptr[i + 1] {
                let j = pattern.col_idx[s];
                transpose_slot[s] = pattern
                    .slot(j, i)
                    .expect("P1 sparsity pattern is structurally symmetric");
            }
        }
        pattern.transpose_slot = transpose_slot;
        pattern
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Storage slot of entry `(i, j)`.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Slot of the transposed entry.
    pub fn transpose_slot(&self, s: usize) -> usize {
        self.transpose_slot[s]
    }

    /// Positions of scalar slot `s` inside a real-pair operator built with
    /// all four blocks present, in block order `(0,0), (0,1), (1,0), (1,1)`.
    pub(crate) fn full_block_positions(&self) -> Vec<[usize; 4]> {
        let nnz = self.nnz();
        let mut out = Vec::with_capacity(nnz);
        for i in 0..self.n {
            let start = self.row_ptr[i];
            let len = self.row_ptr[i + 1] - start;
            for o in 0..len {
                let re = 2 * start + o;
                let im = 2 * nnz + 2 * start + o;
                out.push([re, re + len, im, im + len]);
            }
        }
        out
    }
}

/// Scalar N × N matrix on a [`ScalarPattern`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMatrix {
    pattern: Arc<ScalarPattern>,
    values: Vec<f64>,
}

impl ScalarMatrix {
    pub fn zeros(pattern: Arc<ScalarPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub(crate) fn from_values(pattern: Arc<ScalarPattern>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), pattern.nnz());
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<ScalarPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let mut acc = 0.0;
            for s in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[s] * x[p.col_idx[s]];
            }
            *yi = acc;
        }
    }

    /// Entrywise `self + alpha * other` on the shared pattern.
    pub fn add_scaled(&self, other: &ScalarMatrix, alpha: f64) -> ScalarMatrix {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Self::from_values(self.pattern.clone(), values)
    }

    /// `(A - Aᵀ) / 2`, exactly antisymmetric in floating point.
    pub fn antisymmetric_part(&self) -> ScalarMatrix {
        let values = (0..self.values.len())
            .map(|s| (self.values[s] - self.values[self.pattern.transpose_slot(s)]) / 2.0)
            .collect();
        Self::from_values(self.pattern.clone(), values)
    }

    /// `(A + Aᵀ) / 2`, exactly symmetric in floating point.
    pub fn symmetric_part(&self) -> ScalarMatrix {
        let values = (0..self.values.len())
            .map(|s| (self.values[s] + self.values[self.pattern.transpose_slot(s)]) / 2.0)
            .collect();
        Self::from_values(self.pattern.clone(), values)
    }
}

/// Real 2N × 2N operator in CSR form acting on `[re; im]` stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

/// Block layout of a real-pair operator: `[[re←re, re←im], [im←re, im←im]]`.
pub type Blocks<'a> = [[Option<&'a ScalarMatrix>; 2]; 2];

impl SparseOperator {
    /// Stacks scalar blocks into a real-pair operator. All blocks must share one pattern.
    pub fn from_blocks(blocks: Blocks<'_>, symmetric: bool) -> Self {
        let pattern = blocks
            .iter()
            .flatten()
            .flatten()
            .next()
            .expect("at least one block")
            .pattern()
            .clone();
        let n = pattern.dim();
        let mut row_ptr = Vec::with_capacity(2 * n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (rb, row_blocks) in blocks.iter().enumerate() {
            let _ = rb;
            for i in 0..n {
                for (cb, block) in row_blocks.iter().enumerate() {
                    if let Some(m) = block {
                        debug_assert!(**m.pattern() == *pattern);
                        for s in pattern.row_ptr[i]..pattern.row_ptr[i + 1] {
                            col_idx.push(cb * n + pattern.col_idx[s]);
                            values.push(m.values[s]);
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        Self {
            dim: 2 * n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1, k));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            assert!(i < dim && j < dim, "triplet out of range");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .binary_search(&j)
            .map_or(0.0, |k| self.values[lo + k])
    }

    /// `y = A x`, accumulating each row left to right.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[s] * x[self.col_idx[s]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let mut acc = 0.0;
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[s] * y[self.col_idx[s]];
            }
            total += xi * acc;
        }
        total
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.dim {
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                triplets.push((self.col_idx[s], i, self.values[s]));
            }
        }
        Self::from_triplets(self.dim, &triplets, self.symmetric)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - Aᵀ|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[s];
                worst = worst.max((self.values[s] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Symmetry contract of flagged operators: `max|A - Aᵀ| ≤ 1e-14 · max|A|`.
    pub fn check_symmetry(&self) -> bool {
        self.max_asymmetry() <= 1e-14 * self.max_abs()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// `self + alpha * other` by merging rows.
    pub fn add_scaled(&self, other: &SparseOperator, alpha: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for i in 0..self.dim {
            let (mut a, a_end) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut b, b_end) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while a < a_end || b < b_end {
                let ca = if a < a_end { self.col_idx[a] } else { usize::MAX };
                let cb = if b < b_end { other.col_idx[b] } else { usize::MAX };
                if ca == cb {
                    col_idx.push(ca);
                    values.push(self.values[a] + alpha * other.values[b]);
                    a += 1;
                    b += 1;
                } else if ca < cb {
                    col_idx.push(ca);
                    values.push(self.values[a]);
                    a += 1;
                } else {
                    col_idx.push(cb);
                    values.push(alpha * other.values[b]);
                    b += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim: self.dim,
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric && other.symmetric,
        }
    }

    /// Dense row-major copy, for small oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[i * self.dim + self.col_idx[s]] += self.values[s];
            }
        }
        out
    }
}
