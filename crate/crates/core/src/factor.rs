//! Householder QR and Cholesky kernels plus the per-block operators built on
//! them.
//!
//! A [`BlockFactorization`] gives pseudoinverse and orthogonal-projector
//! actions for one full-rank block without ever forming normal equations:
//! for a row block `M` (full row rank) we factor `M^T = QR`, so that
//! `M^+ = Q R^{-T}` and the projector onto the row space is `Q Q^T`; for a
//! column block we factor `M = QR`, so that `M^+ = R^{-1} Q^T` and the
//! projector onto the column space is again `Q Q^T`.

use crate::error::{Result, SolveError};
use crate::matrix::Matrix;

/// Whether a block is a slice of rows or a slice of columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Full row rank block, `rows <= cols`.
    RowBlock,
    /// Full column rank block, `rows >= cols`.
    ColumnBlock,
}

/// Dense Householder QR of a tall matrix (`rows >= cols`).
///
/// Q is kept in factored form (normalized Householder vectors below the
/// diagonal, scalars in `betas`); R sits on and above the diagonal.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    rows: usize,
    cols: usize,
    qr: Vec<f64>,
    betas: Vec<f64>,
}

impl HouseholderQr {
    pub fn factor(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows < cols {
            return Err(SolveError::DimensionMismatch {
                context: "HouseholderQr requires rows >= cols",
                expected: cols,
                got: rows,
            });
        }
        if values.len() != rows * cols {
            return Err(SolveError::DimensionMismatch {
                context: "HouseholderQr values length",
                expected: rows * cols,
                got: values.len(),
            });
        }
        let mut a = values;
        let mut betas = vec![0.0; cols];
        for k in 0..cols {
            let (v0, beta) = {
                let col = &a[k * rows + k..(k + 1) * rows];
                house(col)
            };
            betas[k] = beta;
            if beta != 0.0 {
                // The reflection maps the column head to +mu e1.
                let alpha = {
                    let col = &a[k * rows + k..(k + 1) * rows];
                    col.iter().map(|x| x * x).sum::<f64>().sqrt()
                };
                // Normalize the stored vector so its leading entry is 1.
                for i in (k + 1)..rows {
                    a[k * rows + i] /= v0;
                }
                // Apply the reflection to the trailing columns.
                for j in (k + 1)..cols {
                    let mut w = a[j * rows + k];
                    for i in (k + 1)..rows {
                        w += a[k * rows + i] * a[j * rows + i];
                    }
                    w *= beta;
                    a[j * rows + k] -= w;
                    for i in (k + 1)..rows {
                        a[j * rows + i] -= w * a[k * rows + i];
                    }
                }
                a[k * rows + k] = alpha;
            }
        }
        Ok(Self {
            rows,
            cols,
            qr: a,
            betas,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Diagonal of R.
    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.cols).map(|k| self.qr[k * self.rows + k]).collect()
    }

    /// `Q^T u` restricted to the first `cols` coordinates (thin Q).
    pub fn apply_qt_thin(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.rows);
        let mut v = u.to_vec();
        for k in 0..self.cols {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut w = v[k];
            for i in (k + 1)..self.rows {
                w += self.qr[k * self.rows + i] * v[i];
            }
            w *= beta;
            v[k] -= w;
            for i in (k + 1)..self.rows {
                v[i] -= w * self.qr[k * self.rows + i];
            }
        }
        v.truncate(self.cols);
        v
    }

    /// `Q w` for thin `w` of length `cols`, returning a vector of length `rows`.
    pub fn apply_q_thin(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.cols);
        let mut v = vec![0.0; self.rows];
        v[..self.cols].copy_from_slice(w);
        for k in (0..self.cols).rev() {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut s = v[k];
            for i in (k + 1)..self.rows {
                s += self.qr[k * self.rows + i] * v[i];
            }
            s *= beta;
            v[k] -= s;
            for i in (k + 1)..self.rows {
                v[i] -= s * self.qr[k * self.rows + i];
            }
        }
        v
    }

    /// Back substitution `R x = b`.
    pub fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.cols);
        let mut x = b.to_vec();
        for i in (0..self.cols).rev() {
            for j in (i + 1)..self.cols {
                x[i] -= self.qr[j * self.rows + i] * x[j];
            }
            x[i] /= self.qr[i * self.rows + i];
        }
        x
    }

    /// Forward substitution `R^T x = b`.
    pub fn solve_rt(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.cols);
        let mut x = b.to_vec();
        for i in 0..self.cols {
            for j in 0..i {
                x[i] -= self.qr[i * self.rows + j] * x[j];
            }
            x[i] /= self.qr[i * self.rows + i];
        }
        x
    }
}

/// Householder vector for `x`: returns `(v0, beta)` where the unnormalized
/// vector is `x - alpha e1` with leading entry `v0`, and the reflection is
/// `I - beta v v^T` for `v` normalized to `v[0] = 1`.
fn house(x: &[f64]) -> (f64, f64) {
    let x0 = x[0];
    let sigma: f64 = x[1..].iter().map(|v| v * v).sum();
    if sigma == 0.0 {
        // Already aligned with e1; flip to keep a negative-free convention
        // only when x0 < 0 (reflection through e1).
        if x0 < 0.0 {
            return (1.0, 2.0);
        }
        return (1.0, 0.0);
    }
    let mu = (x0 * x0 + sigma).sqrt();
    let v0 = if x0 <= 0.0 {
        x0 - mu
    } else {
        -sigma / (x0 + mu)
    };
    let beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
    (v0, beta)
}

/// Dense Cholesky factorization `A = L L^T` of a symmetric positive definite
/// matrix, failing on any pivot at or below `pivot_tol * max|diag(A)|`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(n: usize, a: &[f64], pivot_tol: f64) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
        let threshold = pivot_tol * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[k * n + j] * l[k * n + j];
            }
            if !(d.is_finite() && d > threshold) {
                return Err(SolveError::NotPositiveDefinite { index: j, value: d });
            }
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a[j * n + i];
                for k in 0..j {
                    s -= l[k * n + i] * l[k * n + j];
                }
                l[j * n + i] = s / ljj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` via the two triangular solves.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.l[k * n + i] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.l[i * n + k] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        x
    }
}

/// QR-backed pseudoinverse and projector actions for one full-rank block.
#[derive(Debug, Clone)]
pub struct BlockFactorization {
    orientation: Orientation,
    block: Matrix,
    qr: HouseholderQr,
}

/// Factor a block for later `apply_pinv` / `apply_projector` calls.
///
/// Fails with [`SolveError::RankDeficient`] (block index 0; callers relabel)
/// when any diagonal entry of R falls below `rank_tol` times the largest one.
pub fn factorize_block(
    block: &Matrix,
    orientation: Orientation,
    rank_tol: f64,
) -> Result<BlockFactorization> {
    let dense = block.densified();
    let qr = match orientation {
        Orientation::RowBlock => {
            if block.rows() > block.cols() {
                return Err(SolveError::DimensionMismatch {
                    context: "row block must have rows <= cols",
                    expected: block.cols(),
                    got: block.rows(),
                });
            }
            let t = dense.transposed();
            HouseholderQr::factor(t.rows(), t.cols(), t.to_dense())?
        }
        Orientation::ColumnBlock => {
            if block.rows() < block.cols() {
                return Err(SolveError::DimensionMismatch {
                    context: "column block must have rows >= cols",
                    expected: block.rows(),
                    got: block.cols(),
                });
            }
            HouseholderQr::factor(dense.rows(), dense.cols(), dense.to_dense())?
        }
    };
    let diag = qr.r_diag();
    let max = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if max == 0.0 {
        return Err(SolveError::RankDeficient {
            block: 0,
            pivot: 0.0,
        });
    }
    if let Some(&bad) = diag.iter().find(|d| d.abs() < rank_tol * max) {
        return Err(SolveError::RankDeficient {
            block: 0,
            pivot: bad,
        });
    }
    Ok(BlockFactorization {
        orientation,
        block: dense,
        qr,
    })
}

impl BlockFactorization {
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The block itself (dense copy).
    pub fn block(&self) -> &Matrix {
        &self.block
    }

    pub fn rows(&self) -> usize {
        self.block.rows()
    }

    pub fn cols(&self) -> usize {
        self.block.cols()
    }

    /// `M v` or `M^T v` using the stored dense block.
    pub fn matvec(&self, v: &[f64], transpose: bool) -> Result<Vec<f64>> {
        self.block.matvec(v, transpose)
    }

    /// `M^+ v`.
    ///
    /// Row blocks map a length-`rows` vector into the row space embedded in
    /// `R^cols`; column blocks map a length-`rows` vector to the length-`cols`
    /// least-squares coefficient vector.
    pub fn apply_pinv(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self.orientation {
            Orientation::RowBlock => {
                if v.len() != self.block.rows() {
                    return Err(SolveError::DimensionMismatch {
                        context: "apply_pinv input (row block)",
                        expected: self.block.rows(),
                        got: v.len(),
                    });
                }
                let w = self.qr.solve_rt(v);
                Ok(self.qr.apply_q_thin(&w))
            }
            Orientation::ColumnBlock => {
                if v.len() != self.block.rows() {
                    return Err(SolveError::DimensionMismatch {
                        context: "apply_pinv input (column block)",
                        expected: self.block.rows(),
                        got: v.len(),
                    });
                }
                let w = self.qr.apply_qt_thin(v);
                Ok(self.qr.solve_r(&w))
            }
        }
    }

    /// Orthogonal projector action `Q Q^T v`: onto the row space for row
    /// blocks (input length `cols`), onto the column space for column blocks
    /// (input length `rows`).
    pub fn apply_projector(&self, v: &[f64]) -> Result<Vec<f64>> {
        let expected = match self.orientation {
            Orientation::RowBlock => self.block.cols(),
            Orientation::ColumnBlock => self.block.rows(),
        };
        if v.len() != expected {
            return Err(SolveError::DimensionMismatch {
                context: "apply_projector input",
                expected,
                got: v.len(),
            });
        }
        let w = self.qr.apply_qt_thin(v);
        Ok(self.qr.apply_q_thin(&w))
    }

    /// `(M^T M)^{-1} w` for column blocks, `(M M^T)^{-1} w` for row blocks
    /// (both are `(R^T R)^{-1} w` in the stored factorization).
    pub fn gram_solve(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.qr.cols() {
            return Err(SolveError::DimensionMismatch {
                context: "gram_solve input",
                expected: self.qr.cols(),
                got: w.len(),
            });
        }
        let y = self.qr.solve_rt(w);
        Ok(self.qr.solve_r(&y))
    }
}
