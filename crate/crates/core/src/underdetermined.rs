//! Direct solve of full row rank underdetermined systems `A x = b` through
//! the block-orthogonal augmented system.
//!
//! With mutually orthogonal augmented row blocks, the pseudoinverse of the
//! augmented matrix is just the concatenation of the per-block
//! pseudoinverses, so `u = sum_i Abar_i^+ b^i` is embarrassingly parallel.
//! The extra equations that pin the augmentation variables to zero are
//! handled by the q x q coupling matrix `S = Y (I - P) Y^T`: the minimal-norm
//! solution of the augmented system is
//!
//! ```text
//! [x; y] = u - (I - P) Y^T S^{-1} Y u,      P = sum_i Abar_i^+ Abar_i
//! ```
//!
//! whose `y` part vanishes identically and whose `x` part solves the original
//! (reordered) system. Positive definiteness of S certifies full row rank of
//! the input; a Cholesky failure is reported as such rather than producing a
//! silently wrong answer.

use rayon::prelude::*;

use crate::augment::{AugmentStrategy, AugmentedSystem};
use crate::error::{Result, SolveError};
use crate::factor::{factorize_block, BlockFactorization, Cholesky, Orientation};
use crate::matrix::{norm2, Matrix};
use crate::Threading;

/// Tolerance for the Cholesky pivot test on S.
const S_PIVOT_TOL: f64 = 1e-12;

/// The q x q coupling matrix with its Cholesky factorization.
#[derive(Debug, Clone)]
pub struct SchurS {
    matrix: Matrix,
    chol: Cholesky,
}

impl SchurS {
    /// Factor a dense symmetric q x q matrix, symmetrizing rounding noise.
    pub(crate) fn factor_dense(q: usize, dense: Vec<f64>) -> Result<Self> {
        let mut sym = dense;
        let scale = sym.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut asym = 0.0f64;
        for j in 0..q {
            for i in (j + 1)..q {
                asym = asym.max((sym[j * q + i] - sym[i * q + j]).abs());
                let avg = 0.5 * (sym[j * q + i] + sym[i * q + j]);
                sym[j * q + i] = avg;
                sym[i * q + j] = avg;
            }
        }
        debug_assert!(
            asym <= 1e-12 * scale.max(1.0),
            "assembled S is not symmetric: defect {asym:e}"
        );
        let chol = Cholesky::factor(q, &sym, S_PIVOT_TOL)?;
        Ok(Self {
            matrix: Matrix::from_dense(q, q, sym)?,
            chol,
        })
    }

    pub fn q(&self) -> usize {
        self.chol.n()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Solve `S t = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.chol.solve(rhs)
    }
}

/// Solution of the underdetermined solve, expressed in the reordered frame.
#[derive(Debug, Clone)]
pub struct UnderSolution {
    /// Solution of the (reordered) system, length n.
    pub x: Vec<f64>,
    /// Augmentation variables; vanish for a full-rank solve.
    pub y: Vec<f64>,
    /// `|A x - b|` against the permuted right-hand side.
    pub residual_norm: f64,
    /// `|y|`.
    pub y_norm: f64,
}

/// The four n x n blocks of the augmented projector for sign-alternating
/// systems, plus the worst deviation from their closed forms
/// `P11 = P22 = (1/2) sum_i P_i` and `P12 = P21 = (1/2) sum_i (-1)^{i+1} P_i`.
#[derive(Debug, Clone)]
pub struct ProjectorBlocks {
    pub p11: Matrix,
    pub p12: Matrix,
    pub p21: Matrix,
    pub p22: Matrix,
    pub max_defect: f64,
}

/// Solver state for one augmented row-oriented system.
#[derive(Debug)]
pub struct UnderSolver {
    system: AugmentedSystem,
    schur: Option<SchurS>,
    threading: Threading,
}

impl UnderSolver {
    /// Assemble and factor S (column by column through the projector sum).
    ///
    /// Returns [`SolveError::NotPositiveDefinite`] when S fails its Cholesky:
    /// by the invertibility guarantee for full row rank inputs this signals a
    /// rank-deficient original matrix.
    pub fn new(system: AugmentedSystem, threading: Threading) -> Result<Self> {
        if system.orientation() != Orientation::RowBlock {
            return Err(SolveError::StrategyMismatch(
                "UnderSolver needs a row-oriented augmented system".into(),
            ));
        }
        let mut solver = Self {
            system,
            schur: None,
            threading,
        };
        let q = solver.system.q();
        if q > 0 {
            let n = solver.system.original().cols();
            let nbar = solver.system.augmented_cols();
            let columns = solver.map_indices(q, |k| {
                let mut e = vec![0.0; nbar];
                e[n + k] = 1.0;
                let pe = solver.projector_sum_apply_unchecked(&e);
                (0..q).map(|i| e[n + i] - pe[n + i]).collect::<Vec<f64>>()
            });
            let mut dense = vec![0.0; q * q];
            for (k, col) in columns.iter().enumerate() {
                dense[k * q..(k + 1) * q].copy_from_slice(col);
            }
            let schur = SchurS::factor_dense(q, dense)?;
            #[cfg(debug_assertions)]
            solver.check_sign_alternating_identity(&schur)?;
            solver.schur = Some(schur);
        }
        Ok(solver)
    }

    pub fn system(&self) -> &AugmentedSystem {
        &self.system
    }

    pub fn schur(&self) -> Option<&SchurS> {
        self.schur.as_ref()
    }

    pub fn threading(&self) -> Threading {
        self.threading
    }

    fn map_indices<F>(&self, count: usize, f: F) -> Vec<Vec<f64>>
    where
        F: Fn(usize) -> Vec<f64> + Sync + Send,
    {
        match self.threading {
            Threading::Sequential => (0..count).map(f).collect(),
            Threading::Parallel => (0..count).into_par_iter().map(f).collect(),
        }
    }

    /// `P v = sum_i Abar_i^+ (Abar_i v)`, the orthogonal projector onto the
    /// row space of the augmented matrix.
    pub fn projector_sum_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let nbar = self.system.augmented_cols();
        if v.len() != nbar {
            return Err(SolveError::DimensionMismatch {
                context: "projector_sum_apply input",
                expected: nbar,
                got: v.len(),
            });
        }
        Ok(self.projector_sum_apply_unchecked(v))
    }

    fn projector_sum_apply_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let nbar = self.system.augmented_cols();
        let terms = self.map_indices(self.system.block_count(), |i| {
            self.system
                .block(i)
                .apply_projector(v)
                .expect("block projector dims")
        });
        let mut out = vec![0.0; nbar];
        for term in terms {
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
        }
        out
    }

    /// `u = sum_i Abar_i^+ b^i` for an already permuted right-hand side.
    fn pinv_sum(&self, b_permuted: &[f64]) -> Vec<f64> {
        let part = self.system.partition();
        let terms = self.map_indices(self.system.block_count(), |i| {
            let range = part.block_range(i);
            self.system
                .block(i)
                .apply_pinv(&b_permuted[range])
                .expect("block pinv dims")
        });
        let mut out = vec![0.0; self.system.augmented_cols()];
        for term in terms {
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
        }
        out
    }

    /// The right-hand side `f = -Y Abar^+ b` that embeds solutions of the
    /// original system into the augmented one.
    pub fn rhs_f(&self, b: &[f64]) -> Result<Vec<f64>> {
        let m = self.system.original().rows();
        if b.len() != m {
            return Err(SolveError::DimensionMismatch {
                context: "rhs_f input",
                expected: m,
                got: b.len(),
            });
        }
        let bp = self.system.partition().permute_rhs(b);
        let u = self.pinv_sum(&bp);
        let n = self.system.original().cols();
        Ok(u[n..].iter().map(|v| -v).collect())
    }

    /// Solve `A x = b`. The right-hand side is given in the original row
    /// ordering; the returned solution lives in the reordered column frame
    /// (use the partition to map it back).
    pub fn solve(&self, b: &[f64]) -> Result<UnderSolution> {
        let m = self.system.original().rows();
        let n = self.system.original().cols();
        if b.len() != m {
            return Err(SolveError::DimensionMismatch {
                context: "solve rhs length",
                expected: m,
                got: b.len(),
            });
        }
        let bp = self.system.partition().permute_rhs(b);
        let u = self.pinv_sum(&bp);
        let (x, y) = match &self.schur {
            None => (u[..n].to_vec(), Vec::new()),
            Some(schur) => {
                let q = self.system.q();
                let yu: Vec<f64> = u[n..].to_vec();
                let t = schur.solve(&yu);
                let mut w = vec![0.0; n + q];
                w[n..].copy_from_slice(&t);
                let pw = self.projector_sum_apply_unchecked(&w);
                // Correction (I - P) Y^T t, applied last.
                let z: Vec<f64> = u
                    .iter()
                    .zip(w.iter().zip(&pw))
                    .map(|(ui, (wi, pwi))| ui - (wi - pwi))
                    .collect();
                (z[..n].to_vec(), z[n..].to_vec())
            }
        };
        let ax = self.system.original().matvec(&x, false)?;
        let residual_norm = norm2(&ax.iter().zip(&bp).map(|(a, b)| a - b).collect::<Vec<f64>>());
        let solution = UnderSolution {
            y_norm: norm2(&y),
            x,
            y,
            residual_norm,
        };
        #[cfg(debug_assertions)]
        self.check_against_oracle(&bp, &solution);
        Ok(solution)
    }

    /// Dense `W = Y (I - P)`, the bottom block row of the augmented system
    /// (diagnostic; used to validate the `W W^T = B B^T + S^2 = S` identity).
    /// `None` when there is no augmentation.
    pub fn assemble_w_dense(&self) -> Option<Matrix> {
        let n = self.system.original().cols();
        let q = self.system.q();
        if q == 0 {
            return None;
        }
        let nbar = n + q;
        let mut values = vec![0.0; q * nbar];
        for k in 0..q {
            let mut e = vec![0.0; nbar];
            e[n + k] = 1.0;
            let pe = self.projector_sum_apply_unchecked(&e);
            // Row k of W is (e_{n+k} - P e_{n+k})^T since I - P is symmetric.
            for j in 0..nbar {
                values[j * q + k] = e[j] - pe[j];
            }
        }
        Some(Matrix::from_dense(q, nbar, values).expect("W dims"))
    }

    /// The 2x2 block decomposition of the augmented projector (only defined
    /// for the sign-alternating construction, where `q = n`). Dense assembly;
    /// guarded to desk scale.
    pub fn pbar_blocks(&self) -> Result<ProjectorBlocks> {
        if self.system.strategy() != AugmentStrategy::SignAlternating || self.system.q() == 0 {
            return Err(SolveError::StrategyMismatch(
                "projector block decomposition needs a sign-alternating augmentation".into(),
            ));
        }
        let n = self.system.original().cols();
        if n > 200 {
            return Err(SolveError::Unsupported(format!(
                "dense projector assembly capped at n = 200 (got {n})"
            )));
        }
        let nbar = 2 * n;
        // Assemble Pbar densely, column by column.
        let mut pbar = vec![0.0; nbar * nbar];
        for k in 0..nbar {
            let mut e = vec![0.0; nbar];
            e[k] = 1.0;
            let col = self.projector_sum_apply_unchecked(&e);
            pbar[k * nbar..(k + 1) * nbar].copy_from_slice(&col);
        }
        let take = |r0: usize, c0: usize| -> Matrix {
            let mut v = vec![0.0; n * n];
            for j in 0..n {
                for i in 0..n {
                    v[j * n + i] = pbar[(c0 + j) * nbar + (r0 + i)];
                }
            }
            Matrix::from_dense(n, n, v).expect("projector block dims")
        };
        let (p11, p12, p21, p22) = (take(0, 0), take(0, n), take(n, 0), take(n, n));

        // Closed forms from the projectors of the *original* blocks.
        let originals = self.original_block_factorizations()?;
        let mut half_sum = vec![0.0; n * n];
        let mut half_alt = vec![0.0; n * n];
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            for (i, f) in originals.iter().enumerate() {
                let pe = f.apply_projector(&e)?;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                for r in 0..n {
                    half_sum[k * n + r] += 0.5 * pe[r];
                    half_alt[k * n + r] += 0.5 * sign * pe[r];
                }
            }
        }
        let half_sum = Matrix::from_dense(n, n, half_sum)?;
        let half_alt = Matrix::from_dense(n, n, half_alt)?;
        let max_defect = [
            p11.max_abs_diff(&half_sum),
            p22.max_abs_diff(&half_sum),
            p12.max_abs_diff(&half_alt),
            p21.max_abs_diff(&half_alt),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        Ok(ProjectorBlocks {
            p11,
            p12,
            p21,
            p22,
            max_defect,
        })
    }

    /// Factorizations of the non-augmented blocks `A_i`.
    fn original_block_factorizations(&self) -> Result<Vec<BlockFactorization>> {
        let a = self.system.original();
        let part = self.system.partition();
        (0..part.block_count())
            .map(|i| {
                factorize_block(
                    &a.dense_block(part.block_range(i), 0..a.cols()),
                    Orientation::RowBlock,
                    1e-10,
                )
                .map_err(|e| match e {
                    SolveError::RankDeficient { pivot, .. } => {
                        SolveError::RankDeficient { block: i, pivot }
                    }
                    other => other,
                })
            })
            .collect()
    }

    /// Sign-alternating fast path: S must equal `I_n - (1/2) sum_i P_i`.
    #[cfg(debug_assertions)]
    fn check_sign_alternating_identity(&self, schur: &SchurS) -> Result<()> {
        if self.system.strategy() != AugmentStrategy::SignAlternating {
            return Ok(());
        }
        let n = self.system.original().cols();
        let originals = self.original_block_factorizations()?;
        let mut worst = 0.0f64;
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let mut col = e.clone();
            for f in &originals {
                let pe = f.apply_projector(&e)?;
                for (c, p) in col.iter_mut().zip(&pe) {
                    *c -= 0.5 * p;
                }
            }
            for i in 0..n {
                worst = worst.max((schur.matrix().get(i, k) - col[i]).abs());
            }
        }
        debug_assert!(
            worst <= 1e-12,
            "sign-alternating S identity defect {worst:e}"
        );
        Ok(())
    }

    /// Dev-build cross-check of the whole solve against the dense reference.
    #[cfg(debug_assertions)]
    fn check_against_oracle(&self, bp: &[f64], sol: &UnderSolution) {
        let abar = self.system.augmented_matrix().densified();
        let stacked = match self.assemble_w_dense() {
            None => abar,
            Some(w) => abar.vstack(&w).expect("stack dims"),
        };
        let n = self.system.original().cols();
        let mut rhs = bp.to_vec();
        let u = self.pinv_sum(bp);
        rhs.extend(u[n..].iter().map(|v| -v));
        let reference = crate::oracle::minnorm_ls_solve(&stacked, &rhs, 1e-10);
        let mut ours = sol.x.clone();
        ours.extend_from_slice(&sol.y);
        let diff = norm2(
            &ours
                .iter()
                .zip(&reference)
                .map(|(a, b)| a - b)
                .collect::<Vec<f64>>(),
        );
        debug_assert!(
            diff <= 1e-8 * norm2(&reference).max(1e-30) || diff == 0.0,
            "augmented minimal-norm solve disagrees with the dense reference: {diff:e}"
        );
    }
}
