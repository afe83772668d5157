//! Dense reference solver used to cross-check the fast block pipeline.
//!
//! Everything here goes through a one-sided Jacobi singular value
//! decomposition and is intentionally independent of the Householder QR and
//! Cholesky kernels in [`crate::factor`]: the two paths must be able to catch
//! each other's bugs. Desk scale only; no sparsity is exploited.

use crate::matrix::{norm2, Matrix};

/// Thin SVD `M = U diag(sigma) V^T` with `sigma` sorted non-increasing.
#[derive(Debug, Clone)]
pub struct DenseDecomposition {
    rows: usize,
    cols: usize,
    /// rows x k, column-major.
    u: Vec<f64>,
    /// k singular values, non-increasing, non-negative.
    sigma: Vec<f64>,
    /// cols x k, column-major.
    v: Vec<f64>,
    rank_tol: f64,
}

const JACOBI_EPS: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD of a dense matrix.
pub fn svd(m: &Matrix, rank_tol: f64) -> DenseDecomposition {
    let (rows, cols) = (m.rows(), m.cols());
    if rows >= cols {
        let (u, sigma, v) = jacobi_tall(rows, cols, m.to_dense());
        DenseDecomposition {
            rows,
            cols,
            u,
            sigma,
            v,
            rank_tol,
        }
    } else {
        // Decompose the transpose and swap the factor roles.
        let t = m.transposed();
        let (u_t, sigma, v_t) = jacobi_tall(cols, rows, t.to_dense());
        DenseDecomposition {
            rows,
            cols,
            u: v_t,
            sigma,
            v: u_t,
            rank_tol,
        }
    }
}

/// Jacobi iteration for `rows >= cols`. Returns `(U, sigma, V)` with `U`
/// rows x cols and `V` cols x cols, both column-major.
fn jacobi_tall(rows: usize, cols: usize, mut b: Vec<f64>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; cols * cols];
    for j in 0..cols {
        v[j * cols + j] = 1.0;
    }
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let x = b[p * rows + i];
                    let y = b[q * rows + i];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= JACOBI_EPS * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let x = b[p * rows + i];
                    let y = b[q * rows + i];
                    b[p * rows + i] = cs * x - sn * y;
                    b[q * rows + i] = sn * x + cs * y;
                }
                for i in 0..cols {
                    let x = v[p * cols + i];
                    let y = v[q * cols + i];
                    v[p * cols + i] = cs * x - sn * y;
                    v[q * cols + i] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols)
        .map(|j| norm2(&b[j * rows..(j + 1) * rows]))
        .collect();
    order.sort_by(|&a, &c| norms[c].partial_cmp(&norms[a]).unwrap());
    let mut u = vec![0.0; rows * cols];
    let mut sigma = vec![0.0; cols];
    let mut v_sorted = vec![0.0; cols * cols];
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        if norms[src] > 0.0 {
            for i in 0..rows {
                u[dst * rows + i] = b[src * rows + i] / norms[src];
            }
        }
        v_sorted[dst * cols..(dst + 1) * cols].copy_from_slice(&v[src * cols..(src + 1) * cols]);
    }
    (u, sigma, v_sorted)
}

impl DenseDecomposition {
    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// Numerical rank with the stored tolerance.
    pub fn rank(&self) -> usize {
        let cut = self.rank_tol * self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > cut).count()
    }

    /// `sigma_max / sigma_min` (infinite when the smallest value vanishes).
    pub fn condition_number(&self) -> f64 {
        let k = self.sigma.len();
        if k == 0 || self.sigma[k - 1] == 0.0 {
            f64::INFINITY
        } else {
            self.sigma[0] / self.sigma[k - 1]
        }
    }

    /// Relative Frobenius reconstruction error `|U S V^T - M| / |M|`.
    pub fn reconstruction_error(&self, m: &Matrix) -> f64 {
        let k = self.sigma.len();
        let dense = m.to_dense();
        let mut err = 0.0f64;
        for j in 0..self.cols {
            for i in 0..self.rows {
                let mut acc = 0.0;
                for l in 0..k {
                    acc += self.u[l * self.rows + i] * self.sigma[l] * self.v[l * self.cols + j];
                }
                let d = acc - dense[j * self.rows + i];
                err += d * d;
            }
        }
        let norm = m.frobenius_norm();
        if norm == 0.0 {
            err.sqrt()
        } else {
            err.sqrt() / norm
        }
    }

    /// `M^+ b` with singular values below `rank_tol * sigma_max` truncated.
    pub fn apply_pinv(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.rows, "oracle pinv rhs length");
        let cut = self.rank_tol * self.sigma.first().copied().unwrap_or(0.0);
        let k = self.sigma.len();
        let mut coeff = vec![0.0; k];
        for l in 0..k {
            if self.sigma[l] > cut && self.sigma[l] > 0.0 {
                let mut acc = 0.0;
                for i in 0..self.rows {
                    acc += self.u[l * self.rows + i] * b[i];
                }
                coeff[l] = acc / self.sigma[l];
            }
        }
        let mut x = vec![0.0; self.cols];
        for l in 0..k {
            if coeff[l] != 0.0 {
                for j in 0..self.cols {
                    x[j] += self.v[l * self.cols + j] * coeff[l];
                }
            }
        }
        x
    }

    /// Column `j` of V (right singular vectors). For tall inputs
    /// (`rows >= cols`) V is a complete orthonormal basis, so columns past
    /// `rank()` span the null space; for wide inputs the thin factor carries
    /// zero columns at zero singular values instead.
    pub fn v_column(&self, j: usize) -> Vec<f64> {
        self.v[j * self.cols..(j + 1) * self.cols].to_vec()
    }
}

/// Minimal-norm (least-squares) solution `M^+ b` via the Jacobi SVD.
pub fn minnorm_ls_solve(m: &Matrix, b: &[f64], rank_tol: f64) -> Vec<f64> {
    svd(m, rank_tol).apply_pinv(b)
}

/// Dense Moore-Penrose pseudoinverse.
pub fn dense_pinv(m: &Matrix, rank_tol: f64) -> Matrix {
    let dec = svd(m, rank_tol);
    let mut cols = Vec::with_capacity(m.rows());
    let mut out = vec![0.0; m.cols() * m.rows()];
    for i in 0..m.rows() {
        let mut e = vec![0.0; m.rows()];
        e[i] = 1.0;
        cols.push(dec.apply_pinv(&e));
    }
    for (j, col) in cols.iter().enumerate() {
        out[j * m.cols()..(j + 1) * m.cols()].copy_from_slice(col);
    }
    Matrix::from_dense(m.cols(), m.rows(), out).expect("pinv dims")
}

/// Squared minimal least-squares residual `min_x |Mx - b|^2`.
pub fn min_residual_sq(m: &Matrix, b: &[f64], rank_tol: f64) -> f64 {
    let x = minnorm_ls_solve(m, b, rank_tol);
    let r = m.matvec(&x, false).expect("oracle residual matvec");
    let mut s = 0.0;
    for (ri, bi) in r.iter().zip(b) {
        let d = ri - bi;
        s += d * d;
    }
    s
}
