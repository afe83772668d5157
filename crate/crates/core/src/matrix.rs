//! Real matrices with dense column-major or sparse coordinate storage.
//!
//! The solver keeps the global system matrix in whichever storage it came in
//! with (Matrix Market files usually yield coordinate triplets) and densifies
//! only small per-block slices right before factorization. Both storages
//! expose the same matvec, permutation and slicing operations so the rest of
//! the crate never branches on the representation.

use crate::error::{Result, SolveError};

/// Backing storage for a [`Matrix`].
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// Column-major values, length `rows * cols`.
    Dense(Vec<f64>),
    /// Coordinate triplets `(row, col, value)`, sorted by `(col, row)`,
    /// deduplicated, with exact zeros dropped.
    Sparse(Vec<(usize, usize, f64)>),
}

/// A real `rows x cols` matrix, `rows >= 1`, `cols >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

impl Matrix {
    /// Dense matrix from column-major values.
    pub fn from_dense(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if values.len() != rows * cols {
            return Err(SolveError::DimensionMismatch {
                context: "Matrix::from_dense",
                expected: rows * cols,
                got: values.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            storage: Storage::Dense(values),
        })
    }

    /// Dense matrix from row slices (test-friendly constructor).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        check_dims(m, n)?;
        let mut values = vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(SolveError::DimensionMismatch {
                    context: "Matrix::from_rows",
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                values[j * m + i] = v;
            }
        }
        Self::from_dense(m, n, values)
    }

    /// Sparse matrix assembled from coordinate triplets. Duplicate `(row, col)`
    /// entries are summed; exact zeros are dropped after assembly.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= rows || c >= cols {
                return Err(SolveError::DimensionMismatch {
                    context: "Matrix::from_triplets index",
                    expected: rows * cols,
                    got: c.saturating_mul(rows).saturating_add(r),
                });
            }
        }
        entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);
        Ok(Self {
            rows,
            cols,
            storage: Storage::Sparse(merged),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0))).expect("identity dims")
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_triplets(rows, cols, std::iter::empty())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Number of structurally stored entries (dense: `rows * cols`).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse(t) => t.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index out of range");
        match &self.storage {
            Storage::Dense(v) => v[j * self.rows + i],
            Storage::Sparse(t) => t
                .binary_search_by_key(&(j, i), |&(r, c, _)| (c, r))
                .map_or(0.0, |k| t[k].2),
        }
    }

    /// Column-major dense copy of the full matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::Sparse(t) => {
                let mut out = vec![0.0; self.rows * self.cols];
                for &(r, c, v) in t {
                    out[c * self.rows + r] = v;
                }
                out
            }
        }
    }

    /// Same matrix with dense storage.
    pub fn densified(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            storage: Storage::Dense(self.to_dense()),
        }
    }

    /// Same matrix with sparse storage (exact zeros dropped).
    pub fn sparsified(&self) -> Self {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense(v) => {
                let mut t = Vec::new();
                for c in 0..self.cols {
                    for r in 0..self.rows {
                        let x = v[c * self.rows + r];
                        if x != 0.0 {
                            t.push((r, c, x));
                        }
                    }
                }
                t.sort_by_key(|&(r, c, _)| (c, r));
                Self {
                    rows: self.rows,
                    cols: self.cols,
                    storage: Storage::Sparse(t),
                }
            }
        }
    }

    /// `M v` (or `M^T v` with `transpose`). Accumulation order is fixed by the
    /// storage ordering, so repeated calls give bitwise identical results.
    pub fn matvec(&self, v: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let (in_len, out_len) = if transpose {
            (self.rows, self.cols)
        } else {
            (self.cols, self.rows)
        };
        if v.len() != in_len {
            return Err(SolveError::DimensionMismatch {
                context: "matvec input",
                expected: in_len,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; out_len];
        match &self.storage {
            Storage::Dense(a) => {
                if transpose {
                    for c in 0..self.cols {
                        let col = &a[c * self.rows..(c + 1) * self.rows];
                        let mut acc = 0.0;
                        for (x, &vi) in col.iter().zip(v) {
                            acc += x * vi;
                        }
                        out[c] = acc;
                    }
                } else {
                    for c in 0..self.cols {
                        let col = &a[c * self.rows..(c + 1) * self.rows];
                        let vc = v[c];
                        for (o, &x) in out.iter_mut().zip(col) {
                            *o += x * vc;
                        }
                    }
                }
            }
            Storage::Sparse(t) => {
                for &(r, c, x) in t {
                    if transpose {
                        out[c] += x * v[r];
                    } else {
                        out[r] += x * v[c];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn transposed(&self) -> Self {
        match &self.storage {
            Storage::Dense(a) => {
                let mut out = vec![0.0; self.rows * self.cols];
                for c in 0..self.cols {
                    for r in 0..self.rows {
                        out[r * self.cols + c] = a[c * self.rows + r];
                    }
                }
                Self {
                    rows: self.cols,
                    cols: self.rows,
                    storage: Storage::Dense(out),
                }
            }
            Storage::Sparse(t) => {
                let mut swapped: Vec<(usize, usize, f64)> =
                    t.iter().map(|&(r, c, v)| (c, r, v)).collect();
                swapped.sort_by_key(|&(r, c, _)| (c, r));
                Self {
                    rows: self.cols,
                    cols: self.rows,
                    storage: Storage::Sparse(swapped),
                }
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Storage::Sparse(t) => t.iter().map(|&(_, _, v)| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Max `|i - j|` over structural nonzeros; 0 when empty.
    pub fn bandwidth(&self) -> usize {
        let mut band = 0usize;
        match &self.storage {
            Storage::Dense(a) => {
                for c in 0..self.cols {
                    for r in 0..self.rows {
                        if a[c * self.rows + r] != 0.0 {
                            band = band.max(r.abs_diff(c));
                        }
                    }
                }
            }
            Storage::Sparse(t) => {
                for &(r, c, v) in t {
                    if v != 0.0 {
                        band = band.max(r.abs_diff(c));
                    }
                }
            }
        }
        band
    }

    /// Dense column-major copy of the sub-block `rows0..rows1 x cols0..cols1`.
    pub fn dense_block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        assert!(rows.end <= self.rows && cols.end <= self.cols);
        let (m, n) = (rows.len(), cols.len());
        let mut out = vec![0.0; m * n];
        match &self.storage {
            Storage::Dense(a) => {
                for (jj, c) in cols.clone().enumerate() {
                    for (ii, r) in rows.clone().enumerate() {
                        out[jj * m + ii] = a[c * self.rows + r];
                    }
                }
            }
            Storage::Sparse(t) => {
                for &(r, c, v) in t {
                    if rows.contains(&r) && cols.contains(&c) {
                        out[(c - cols.start) * m + (r - rows.start)] = v;
                    }
                }
            }
        }
        Self {
            rows: m,
            cols: n,
            storage: Storage::Dense(out),
        }
    }

    /// `[self other]` side by side. Sparse storage is kept sparse.
    pub fn hstack(&self, other: &Matrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(SolveError::DimensionMismatch {
                context: "hstack row count",
                expected: self.rows,
                got: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        if self.is_sparse() || other.is_sparse() {
            let mut t = self.sparsified_triplets();
            t.extend(
                other
                    .sparsified_triplets()
                    .into_iter()
                    .map(|(r, c, v)| (r, c + self.cols, v)),
            );
            Self::from_triplets(self.rows, cols, t)
        } else {
            let mut v = self.to_dense();
            v.extend(other.to_dense());
            Self::from_dense(self.rows, cols, v)
        }
    }

    /// `[self; other]` stacked vertically.
    pub fn vstack(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(SolveError::DimensionMismatch {
                context: "vstack column count",
                expected: self.cols,
                got: other.cols,
            });
        }
        let rows = self.rows + other.rows;
        if self.is_sparse() || other.is_sparse() {
            let mut t = self.sparsified_triplets();
            t.extend(
                other
                    .sparsified_triplets()
                    .into_iter()
                    .map(|(r, c, v)| (r + self.rows, c, v)),
            );
            Self::from_triplets(rows, self.cols, t)
        } else {
            let (m1, m2, n) = (self.rows, other.rows, self.cols);
            let (a, b) = (self.to_dense(), other.to_dense());
            let mut v = vec![0.0; rows * n];
            for c in 0..n {
                v[c * rows..c * rows + m1].copy_from_slice(&a[c * m1..(c + 1) * m1]);
                v[c * rows + m1..(c + 1) * rows].copy_from_slice(&b[c * m2..(c + 1) * m2]);
            }
            Self::from_dense(rows, n, v)
        }
    }

    /// `A'(i, j) = A(row_perm[i], col_perm[j])`.
    pub fn permuted(
        &self,
        row_perm: &crate::partition::Perm,
        col_perm: &crate::partition::Perm,
    ) -> Result<Self> {
        if row_perm.len() != self.rows {
            return Err(SolveError::DimensionMismatch {
                context: "row permutation length",
                expected: self.rows,
                got: row_perm.len(),
            });
        }
        if col_perm.len() != self.cols {
            return Err(SolveError::DimensionMismatch {
                context: "column permutation length",
                expected: self.cols,
                got: col_perm.len(),
            });
        }
        let rp_inv = row_perm.inverse();
        let cp_inv = col_perm.inverse();
        match &self.storage {
            Storage::Dense(a) => {
                let mut out = vec![0.0; self.rows * self.cols];
                for j in 0..self.cols {
                    let src_c = col_perm.index(j);
                    for i in 0..self.rows {
                        out[j * self.rows + i] = a[src_c * self.rows + row_perm.index(i)];
                    }
                }
                Self::from_dense(self.rows, self.cols, out)
            }
            Storage::Sparse(t) => {
                let moved = t
                    .iter()
                    .map(|&(r, c, v)| (rp_inv.index(r), cp_inv.index(c), v));
                Self::from_triplets(self.rows, self.cols, moved)
            }
        }
    }

    /// Dense `A * B`, `A * B^T`, `A^T * B` or `A^T * B^T`.
    pub fn dense_matmul(&self, other: &Matrix, ta: bool, tb: bool) -> Result<Self> {
        let (m, k1) = if ta {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        };
        let (k2, n) = if tb {
            (other.cols, other.rows)
        } else {
            (other.rows, other.cols)
        };
        if k1 != k2 {
            return Err(SolveError::DimensionMismatch {
                context: "matmul inner dimension",
                expected: k1,
                got: k2,
            });
        }
        let a = self.to_dense();
        let b = other.to_dense();
        let (ar, _) = (self.rows, self.cols);
        let (br, _) = (other.rows, other.cols);
        let idx_a = |i: usize, l: usize| if ta { a[i * ar + l] } else { a[l * ar + i] };
        let idx_b = |l: usize, j: usize| if tb { b[l * br + j] } else { b[j * br + l] };
        let mut out = vec![0.0; m * n];
        for j in 0..n {
            for i in 0..m {
                let mut acc = 0.0;
                for l in 0..k1 {
                    acc += idx_a(i, l) * idx_b(l, j);
                }
                out[j * m + i] = acc;
            }
        }
        Self::from_dense(m, n, out)
    }

    /// Entrywise maximum absolute difference against another matrix.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let a = self.to_dense();
        let b = other.to_dense();
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn sparsified_triplets(&self) -> Vec<(usize, usize, f64)> {
        match self.sparsified().storage {
            Storage::Sparse(t) => t,
            Storage::Dense(_) => unreachable!(),
        }
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(SolveError::DimensionMismatch {
            context: "matrix dimensions must be >= 1",
            expected: 1,
            got: 0,
        });
    }
    Ok(())
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
