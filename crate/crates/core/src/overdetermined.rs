//! Least-squares solve of full column rank overdetermined problems
//! `min |A x - b|` through the block-orthogonal augmented problem.
//!
//! After augmenting with rows Γ so that the column blocks of `Abar = [A; Γ]`
//! are mutually orthogonal, the Gram matrix `Abar^T Abar` is block diagonal
//! and the augmented normal equations decouple per block:
//!
//! ```text
//! y^i = (Abar^i^T Abar^i)^{-1} (A^i)^T b      (independent blocks)
//! z   = -S^{-1} Γ y,          S = Y^T (I - Pbar) Y,   Pbar = Abar Abar^+
//! x   = y + G Γ^T S^{-1} Γ y = y - G Γ^T z,   G = (A^T A + Γ^T Γ)^{-1}
//! ```
//!
//! `G` only ever exists as the per-block Gram factorizations; the recovery
//! matrix is never formed densely. The solution is mapped back to the
//! original column ordering before it is returned.

use rayon::prelude::*;

use crate::augment::AugmentedSystem;
use crate::error::{Result, SolveError};
use crate::factor::Orientation;
use crate::matrix::{norm2, Matrix};
use crate::underdetermined::SchurS;
use crate::Threading;

/// Solution of the overdetermined solve.
#[derive(Debug, Clone)]
pub struct OverSolution {
    /// Least-squares solution in the *original* column ordering.
    pub x_ls: Vec<f64>,
    /// Blockwise normal-equation solution (reordered frame), length n.
    pub y: Vec<f64>,
    /// Augmentation variables, length q.
    pub z: Vec<f64>,
    /// `|A x - b|` of the reordered problem (norms are permutation
    /// invariant, so this equals the original residual norm).
    pub residual_norm: f64,
}

/// Report of the augmented-objective identity and its oracle lower bound.
#[derive(Debug, Clone)]
pub struct ResidualIdentityReport {
    /// Augmented objective `phi(y, z) = |Ax - b|^2 + |Γy + Sz|^2`.
    pub phi: f64,
    /// `|A x_ls - b|^2`.
    pub residual_sq: f64,
    /// `|phi - residual_sq| / max(1, |b|^2)`.
    pub identity_gap: f64,
    /// Reference minimum `min_x |Ax - b|^2` from the dense oracle.
    pub oracle_min_residual_sq: f64,
    /// Whether `phi >= oracle_min - 1e-10 |b|^2`.
    pub lower_bound_ok: bool,
}

/// Solver state for one augmented column-oriented system.
#[derive(Debug)]
pub struct OverSolver {
    system: AugmentedSystem,
    schur: Option<SchurS>,
    threading: Threading,
}

impl OverSolver {
    pub fn new(system: AugmentedSystem, threading: Threading) -> Result<Self> {
        if system.orientation() != Orientation::ColumnBlock {
            return Err(SolveError::StrategyMismatch(
                "OverSolver needs a column-oriented augmented system".into(),
            ));
        }
        let mut solver = Self {
            system,
            schur: None,
            threading,
        };
        let q = solver.system.q();
        if q > 0 {
            let m = solver.system.original().rows();
            let mbar = solver.system.augmented_rows();
            let columns = solver.map_indices(q, |k| {
                let mut e = vec![0.0; mbar];
                e[m + k] = 1.0;
                let pe = solver.projector_apply_unchecked(&e);
                (0..q).map(|i| e[m + i] - pe[m + i]).collect::<Vec<f64>>()
            });
            let mut dense = vec![0.0; q * q];
            for (k, col) in columns.iter().enumerate() {
                dense[k * q..(k + 1) * q].copy_from_slice(col);
            }
            let schur = SchurS::factor_dense(q, dense)?;
            #[cfg(debug_assertions)]
            solver.check_explicit_w_route(&schur)?;
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

    /// `Pbar v = sum_i Abar^i (Abar^i^T Abar^i)^{-1} Abar^i^T v`, the
    /// projector onto the column space of the augmented matrix.
    pub fn projector_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mbar = self.system.augmented_rows();
        if v.len() != mbar {
            return Err(SolveError::DimensionMismatch {
                context: "projector_apply input",
                expected: mbar,
                got: v.len(),
            });
        }
        Ok(self.projector_apply_unchecked(v))
    }

    fn projector_apply_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let mbar = self.system.augmented_rows();
        let terms = self.map_indices(self.system.block_count(), |i| {
            self.system
                .block(i)
                .apply_projector(v)
                .expect("block projector dims")
        });
        let mut out = vec![0.0; mbar];
        for term in terms {
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
        }
        out
    }

    /// Blockwise `G w` with `G = (A^T A + Γ^T Γ)^{-1}` block diagonal.
    fn gram_solve_blockwise(&self, w: &[f64]) -> Vec<f64> {
        let part = self.system.partition();
        let pieces = self.map_indices(self.system.block_count(), |i| {
            self.system
                .block(i)
                .gram_solve(&w[part.block_range(i)])
                .expect("gram solve dims")
        });
        let mut out = vec![0.0; self.system.original().cols()];
        for (i, piece) in pieces.iter().enumerate() {
            out[part.block_range(i)].copy_from_slice(piece);
        }
        out
    }

    /// The decoupled normal-equation solve
    /// `y^i = (Abar^i^T Abar^i)^{-1} (A^i)^T b`, blocks independent.
    pub fn blockwise_normal_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let m = self.system.original().rows();
        if b.len() != m {
            return Err(SolveError::DimensionMismatch {
                context: "blockwise_normal_solve rhs length",
                expected: m,
                got: b.len(),
            });
        }
        let bp = self.system.partition().permute_rhs(b);
        Ok(self.normal_solve_permuted(&bp))
    }

    fn normal_solve_permuted(&self, bp: &[f64]) -> Vec<f64> {
        // (A^i)^T b = (Abar^i)^T [b; 0].
        let mut padded = bp.to_vec();
        padded.resize(self.system.augmented_rows(), 0.0);
        let part = self.system.partition();
        let pieces = self.map_indices(self.system.block_count(), |i| {
            let block = self.system.block(i);
            let rhs = block.matvec(&padded, true).expect("block matvec dims");
            block.gram_solve(&rhs).expect("gram solve dims")
        });
        let mut y = vec![0.0; self.system.original().cols()];
        for (i, piece) in pieces.iter().enumerate() {
            y[part.block_range(i)].copy_from_slice(piece);
        }
        y
    }

    /// Solve `min |A x - b|`. The right-hand side is in the original row
    /// ordering; `x_ls` comes back in the original column ordering.
    pub fn solve(&self, b: &[f64]) -> Result<OverSolution> {
        let m = self.system.original().rows();
        if b.len() != m {
            return Err(SolveError::DimensionMismatch {
                context: "solve rhs length",
                expected: m,
                got: b.len(),
            });
        }
        let bp = self.system.partition().permute_rhs(b);
        let y = self.normal_solve_permuted(&bp);
        let (x, z) = match &self.schur {
            None => (y.clone(), Vec::new()),
            Some(schur) => {
                let gamma = self.system.gamma().expect("gamma exists when q > 0");
                let gy = gamma.matvec(&y, false)?;
                let z: Vec<f64> = schur.solve(&gy).iter().map(|v| -v).collect();
                let gtz = gamma.matvec(&z, true)?;
                let w = self.gram_solve_blockwise(&gtz);
                let x: Vec<f64> = y.iter().zip(&w).map(|(yi, wi)| yi - wi).collect();
                (x, z)
            }
        };
        let ax = self.system.original().matvec(&x, false)?;
        let residual_norm = norm2(&ax.iter().zip(&bp).map(|(a, b)| a - b).collect::<Vec<f64>>());
        let solution = OverSolution {
            x_ls: self.system.partition().unpermute_solution(&x),
            y,
            z,
            residual_norm,
        };
        #[cfg(debug_assertions)]
        self.check_certificates(&bp, &x, &solution);
        Ok(solution)
    }

    /// Minimal-norm solution of the augmented least-squares problem for an
    /// arbitrary augmentation right-hand side `f`:
    /// `y = G (A^T b + Γ^T f)`, `z = S^{-1} (B^T b + S f)` with `B = -A G Γ^T`.
    /// For `f = 0` this reproduces the internals of [`OverSolver::solve`].
    pub fn solve_with_f(&self, b: &[f64], f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.system.original().rows();
        let q = self.system.q();
        if b.len() != m {
            return Err(SolveError::DimensionMismatch {
                context: "solve_with_f rhs length",
                expected: m,
                got: b.len(),
            });
        }
        if f.len() != q {
            return Err(SolveError::DimensionMismatch {
                context: "solve_with_f f length",
                expected: q,
                got: f.len(),
            });
        }
        let bp = self.system.partition().permute_rhs(b);
        let y0 = self.normal_solve_permuted(&bp);
        if q == 0 {
            return Ok((y0, Vec::new()));
        }
        let schur = self.schur.as_ref().expect("q > 0 has S");
        let gamma = self.system.gamma().expect("q > 0 has gamma");
        // y = y0 + G Γ^T f
        let gtf = gamma.matvec(f, true)?;
        let yf = self.gram_solve_blockwise(&gtf);
        let y: Vec<f64> = y0.iter().zip(&yf).map(|(a, b)| a + b).collect();
        // z = -S^{-1} Γ y0 + f  (since B^T b = -Γ G A^T b = -Γ y0)
        let gy0 = gamma.matvec(&y0, false)?;
        let z: Vec<f64> = schur
            .solve(&gy0)
            .iter()
            .zip(f)
            .map(|(s, fi)| -s + fi)
            .collect();
        Ok((y, z))
    }

    /// `Γ y + S z` (the vector that vanishes exactly when `f = 0`).
    pub fn gamma_y_plus_sz(&self, y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        match (&self.schur, self.system.gamma()) {
            (Some(schur), Some(gamma)) => {
                let gy = gamma.matvec(y, false)?;
                let sz = schur.matrix().matvec(z, false)?;
                Ok(gy.iter().zip(&sz).map(|(a, b)| a + b).collect())
            }
            _ => Ok(Vec::new()),
        }
    }

    /// Evaluate the augmented objective identity for a computed solution and
    /// bound it below by the oracle's true minimum.
    pub fn residual_identity_check(
        &self,
        sol: &OverSolution,
        b: &[f64],
    ) -> Result<ResidualIdentityReport> {
        let bp = self.system.partition().permute_rhs(b);
        let phi = self.augmented_objective(&sol.y, &sol.z, &bp)?;
        let residual_sq = sol.residual_norm * sol.residual_norm;
        let b_sq = norm2(&bp) * norm2(&bp);
        let identity_gap = (phi - residual_sq).abs() / b_sq.max(1.0);
        let oracle_min = crate::oracle::min_residual_sq(self.system.original(), &bp, 1e-10);
        Ok(ResidualIdentityReport {
            phi,
            residual_sq,
            identity_gap,
            oracle_min_residual_sq: oracle_min,
            lower_bound_ok: phi >= oracle_min - 1e-10 * b_sq,
        })
    }

    /// `phi(y, z) = |A(y - GΓ^T z) - b|^2 + |Γ y + S z|^2`.
    fn augmented_objective(&self, y: &[f64], z: &[f64], bp: &[f64]) -> Result<f64> {
        let x = match self.system.gamma() {
            None => y.to_vec(),
            Some(gamma) => {
                let gtz = gamma.matvec(z, true)?;
                let w = self.gram_solve_blockwise(&gtz);
                y.iter().zip(&w).map(|(yi, wi)| yi - wi).collect()
            }
        };
        let ax = self.system.original().matvec(&x, false)?;
        let top: f64 = ax.iter().zip(bp).map(|(a, b)| (a - b) * (a - b)).sum();
        let bottom = norm2(&self.gamma_y_plus_sz(y, z)?);
        Ok(top + bottom * bottom)
    }

    /// Dense `W = (I - Pbar) Y`, the right block column of the augmented
    /// problem (`None` without augmentation). Diagnostic only.
    pub fn assemble_w_dense(&self) -> Option<Matrix> {
        let m = self.system.original().rows();
        let q = self.system.q();
        if q == 0 {
            return None;
        }
        let mbar = m + q;
        let mut values = vec![0.0; mbar * q];
        for k in 0..q {
            let mut e = vec![0.0; mbar];
            e[m + k] = 1.0;
            let pe = self.projector_apply_unchecked(&e);
            for i in 0..mbar {
                values[k * mbar + i] = e[i] - pe[i];
            }
        }
        Some(Matrix::from_dense(mbar, q, values).expect("W dims"))
    }

    /// Dev-build cross-check: S from the projector route must match the
    /// explicit form `S = I - Γ G Γ^T` entry by entry.
    #[cfg(debug_assertions)]
    fn check_explicit_w_route(&self, schur: &SchurS) -> Result<()> {
        let q = self.system.q();
        let gamma = self.system.gamma().expect("q > 0 has gamma");
        let mut worst = 0.0f64;
        for k in 0..q {
            let mut e = vec![0.0; q];
            e[k] = 1.0;
            let gt = gamma.matvec(&e, true)?;
            let w = self.gram_solve_blockwise(&gt);
            let gw = gamma.matvec(&w, false)?;
            for i in 0..q {
                let explicit = e[i] - gw[i];
                worst = worst.max((schur.matrix().get(i, k) - explicit).abs());
            }
        }
        debug_assert!(
            worst <= 1e-10,
            "projector-route S disagrees with I - Γ G Γ^T: {worst:e}"
        );
        Ok(())
    }

    #[cfg(debug_assertions)]
    fn check_certificates(&self, bp: &[f64], x_reordered: &[f64], sol: &OverSolution) {
        let defect = norm2(&self.gamma_y_plus_sz(&sol.y, &sol.z).expect("defect dims"));
        debug_assert!(
            defect <= 1e-10 * norm2(&sol.y).max(1.0),
            "Γy + Sz defect {defect:e}"
        );
        let a = self.system.original();
        let ax = a.matvec(x_reordered, false).expect("matvec dims");
        let r: Vec<f64> = ax.iter().zip(bp).map(|(p, q)| p - q).collect();
        let atr = a.matvec(&r, true).expect("matvec dims");
        let atb = a.matvec(bp, true).expect("matvec dims");
        debug_assert!(
            norm2(&atr) <= 1e-8 * norm2(&atb).max(1.0),
            "normal-equation residual {:e}",
            norm2(&atr)
        );
        let phi = self
            .augmented_objective(&sol.y, &sol.z, bp)
            .expect("objective dims");
        let res_sq = sol.residual_norm * sol.residual_norm;
        let scale = norm2(bp) * norm2(bp);
        debug_assert!(
            (phi - res_sq).abs() <= 1e-10 * scale.max(1.0),
            "objective identity gap {:e}",
            (phi - res_sq).abs()
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{augment_cols, AugmentStrategy};
    use crate::partition::{make_partition, Axis, PartitionSpec};

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn identity_system() -> OverSolver {
        let a = Matrix::identity(2);
        let part = make_partition(Axis::Cols, 2, PartitionSpec::Equal(2)).unwrap();
        let sys = augment_cols(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
        OverSolver::new(sys, Threading::Sequential).unwrap()
    }

    #[test]
    fn worked_identity_schur_is_half_identity() {
        let solver = identity_system();
        let s = solver.schur().unwrap();
        assert!((s.matrix().get(0, 0) - 0.5).abs() <= 1e-15);
        assert!((s.matrix().get(1, 1) - 0.5).abs() <= 1e-15);
        assert!(s.matrix().get(1, 0).abs() <= 1e-15);
    }

    #[test]
    fn worked_identity_normal_solve() {
        let solver = identity_system();
        let y = solver.blockwise_normal_solve(&[3.0, 5.0]).unwrap();
        assert_vec_close(&y, &[1.5, 2.5], 1e-14);
        assert_vec_close(
            &solver.blockwise_normal_solve(&[0.0, 0.0]).unwrap(),
            &[0.0, 0.0],
            0.0,
        );
    }

    #[test]
    fn worked_identity_solve() {
        let solver = identity_system();
        let sol = solver.solve(&[3.0, 5.0]).unwrap();
        assert_vec_close(&sol.y, &[1.5, 2.5], 1e-14);
        assert_vec_close(&sol.z, &[-3.0, 5.0], 1e-14);
        assert_vec_close(&sol.x_ls, &[3.0, 5.0], 1e-14);
        assert!(sol.residual_norm <= 1e-14);
        let report = solver.residual_identity_check(&sol, &[3.0, 5.0]).unwrap();
        assert!(report.phi <= 1e-26);
        assert!(report.identity_gap <= 1e-12);
        assert!(report.lower_bound_ok);
    }

    #[test]
    fn single_block_mean() {
        let a = Matrix::from_rows(&[&[1.0], &[1.0]]).unwrap();
        let part = make_partition(Axis::Cols, 1, PartitionSpec::Equal(1)).unwrap();
        let sys = augment_cols(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
        let solver = OverSolver::new(sys, Threading::Sequential).unwrap();
        let sol = solver.solve(&[1.0, 3.0]).unwrap();
        assert_vec_close(&sol.x_ls, &[2.0], 1e-14);
        assert!(sol.z.is_empty());
        assert!((sol.residual_norm * sol.residual_norm - 2.0).abs() <= 1e-13);
        let report = solver.residual_identity_check(&sol, &[1.0, 3.0]).unwrap();
        assert!((report.phi - 2.0).abs() <= 1e-13);
        assert!(report.lower_bound_ok);
    }

    #[test]
    fn general_f_matches_solve_internals_at_zero() {
        let solver = identity_system();
        let (y, z) = solver.solve_with_f(&[3.0, 5.0], &[0.0, 0.0]).unwrap();
        assert_vec_close(&y, &[1.5, 2.5], 1e-14);
        assert_vec_close(&z, &[-3.0, 5.0], 1e-14);
    }

    #[test]
    fn general_f_zero_inputs() {
        let solver = identity_system();
        let (y, z) = solver.solve_with_f(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_vec_close(&y, &[0.0, 0.0], 0.0);
        assert_vec_close(&z, &[0.0, 0.0], 0.0);
    }

    #[test]
    fn nonzero_f_breaks_the_defect_identity() {
        let solver = identity_system();
        let (y, z) = solver.solve_with_f(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let defect = solver.gamma_y_plus_sz(&y, &z).unwrap();
        // (Γ G Γ^T + S) e1 = e1 for this system.
        assert_vec_close(&defect, &[1.0, 0.0], 1e-14);
    }
}
