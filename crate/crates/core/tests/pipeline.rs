//! Cross-module pipeline checks against the dense oracle: coupling-matrix
//! assembly, both solve paths, the algebraic identities of the augmented
//! systems, and permutation consistency.

use blockaug::{
    augment_cols, augment_rows, fixtures, make_partition, oracle, AugmentStrategy, Axis, Matrix,
    PartitionSpec, Perm, Threading, UnderSolver,
};
use blockaug::{norm2, OverSolver};

fn vec_rel_err(ours: &[f64], reference: &[f64]) -> f64 {
    let diff: Vec<f64> = ours.iter().zip(reference).map(|(a, b)| a - b).collect();
    norm2(&diff) / norm2(reference).max(1e-300)
}

fn frob_diff(a: &Matrix, b: &Matrix) -> f64 {
    let (av, bv) = (a.to_dense(), b.to_dense());
    av.iter()
        .zip(&bv)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense `Y (I - Abar^+ Abar) Y^T` straight from the oracle pseudoinverse.
fn oracle_schur_under(abar: &Matrix, n: usize, q: usize) -> Matrix {
    let pinv = oracle::dense_pinv(abar, 1e-12);
    let p = pinv.dense_matmul(abar, false, false).unwrap();
    let mut s = vec![0.0; q * q];
    for k in 0..q {
        for i in 0..q {
            let delta = if i == k { 1.0 } else { 0.0 };
            s[k * q + i] = delta - p.get(n + i, n + k);
        }
    }
    Matrix::from_dense(q, q, s).unwrap()
}

#[test]
fn under_schur_matches_oracle_on_banded_instance() {
    let a = fixtures::banded_full_row_rank(6, 10, 2, 11);
    let part = make_partition(Axis::Rows, 6, PartitionSpec::Equal(3)).unwrap();
    let sys = augment_rows(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = UnderSolver::new(sys, Threading::Sequential).unwrap();
    let q = solver.system().q();
    let abar = solver.system().augmented_matrix().densified();
    let reference = oracle_schur_under(&abar, a.cols(), q);
    let defect = frob_diff(solver.schur().unwrap().matrix(), &reference);
    assert!(
        defect <= 1e-12 * reference.frobenius_norm().max(1.0),
        "S defect {defect:e}"
    );
}

#[test]
fn under_solve_matches_augmented_minimal_norm() {
    let a = fixtures::banded_full_row_rank(12, 20, 3, 5);
    let part = make_partition(Axis::Rows, 12, PartitionSpec::Equal(3)).unwrap();
    let sys = augment_rows(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = UnderSolver::new(sys, Threading::Sequential).unwrap();
    let b = fixtures::vector(12, 99);

    let sol = solver.solve(&b).unwrap();
    assert!(sol.residual_norm <= 1e-10 * norm2(&b));
    assert!(sol.y_norm <= 1e-10 * norm2(&sol.x).max(1.0));

    // Full-vector agreement with the dense minimal-norm solve of the
    // assembled augmented system.
    let abar = solver.system().augmented_matrix().densified();
    let w = solver.assemble_w_dense().unwrap();
    let stacked = abar.vstack(&w).unwrap();
    let mut rhs = b.clone();
    rhs.extend(solver.rhs_f(&b).unwrap());
    let reference = oracle::minnorm_ls_solve(&stacked, &rhs, 1e-12);
    let mut ours = sol.x.clone();
    ours.extend_from_slice(&sol.y);
    assert!(vec_rel_err(&ours, &reference) <= 1e-8);
}

#[test]
fn under_solution_embedding() {
    // For any x0 with A x0 = b, the vector (x0, 0) satisfies the augmented
    // system with rhs (b, f).
    let a = fixtures::banded_full_row_rank(10, 16, 3, 17);
    let part = make_partition(Axis::Rows, 10, PartitionSpec::Equal(2)).unwrap();
    let sys = augment_rows(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = UnderSolver::new(sys, Threading::Sequential).unwrap();
    let x0 = fixtures::vector(16, 3);
    let b = a.matvec(&x0, false).unwrap();
    let f = solver.rhs_f(&b).unwrap();
    let q = solver.system().q();
    let mut ext = x0.clone();
    ext.resize(16 + q, 0.0);
    let top = solver
        .system()
        .augmented_matrix()
        .matvec(&ext, false)
        .unwrap();
    let w = solver.assemble_w_dense().unwrap();
    let bottom = w.matvec(&ext, false).unwrap();
    let mut residual: Vec<f64> = top.iter().zip(&b).map(|(p, q)| p - q).collect();
    residual.extend(bottom.iter().zip(&f).map(|(p, q)| p - q));
    let mut rhs_norm = norm2(&b);
    rhs_norm = (rhs_norm * rhs_norm + norm2(&f) * norm2(&f)).sqrt();
    assert!(norm2(&residual) <= 1e-12 * rhs_norm.max(1.0));
}

#[test]
fn under_w_identity_bbt_plus_s_squared() {
    let a = fixtures::banded_full_row_rank(9, 15, 2, 23);
    let part = make_partition(Axis::Rows, 9, PartitionSpec::Equal(3)).unwrap();
    let sys = augment_rows(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = UnderSolver::new(sys, Threading::Sequential).unwrap();
    let n = a.cols();
    let q = solver.system().q();
    let w = solver.assemble_w_dense().unwrap();
    let b_blk = w.dense_block(0..q, 0..n);
    let s_blk = w.dense_block(0..q, n..n + q);
    let s = solver.schur().unwrap().matrix().clone();
    // W W^T = B B^T + S_blk^2 = S, with S_blk equal to S itself.
    let wwt = w.dense_matmul(&w, false, true).unwrap();
    let bbt = b_blk.dense_matmul(&b_blk, false, true).unwrap();
    let ss = s_blk.dense_matmul(&s_blk, false, false).unwrap();
    let mut sum = vec![0.0; q * q];
    let (bv, sv) = (bbt.to_dense(), ss.to_dense());
    for i in 0..q * q {
        sum[i] = bv[i] + sv[i];
    }
    let sum = Matrix::from_dense(q, q, sum).unwrap();
    let tol = 1e-12 * s.frobenius_norm().max(1.0);
    assert!(frob_diff(&s_blk, &s) <= tol);
    assert!(frob_diff(&wwt, &s) <= tol);
    assert!(frob_diff(&sum, &s) <= tol);
}

#[test]
fn under_sign_alternating_schur_shortcut() {
    // S = I_n - (1/2) sum_i P_i for the sign-alternating construction.
    let a = fixtures::banded_full_row_rank(8, 12, 2, 31);
    let part = make_partition(Axis::Rows, 8, PartitionSpec::Equal(2)).unwrap();
    let sys = augment_rows(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = UnderSolver::new(sys, Threading::Sequential).unwrap();
    let n = a.cols();
    let mut shortcut = vec![0.0; n * n];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let mut col = e.clone();
        for i in 0..part.block_count() {
            let block = a.dense_block(part.block_range(i), 0..n);
            let f =
                blockaug::factorize_block(&block, blockaug::Orientation::RowBlock, 1e-10).unwrap();
            let pe = f.apply_projector(&e).unwrap();
            for (c, p) in col.iter_mut().zip(&pe) {
                *c -= 0.5 * p;
            }
        }
        shortcut[k * n..(k + 1) * n].copy_from_slice(&col);
    }
    let shortcut = Matrix::from_dense(n, n, shortcut).unwrap();
    let defect = frob_diff(solver.schur().unwrap().matrix(), &shortcut);
    assert!(defect <= 1e-12 * shortcut.frobenius_norm());
}

#[test]
fn under_permutation_consistency() {
    // The reordered pipeline with perms attached must reproduce the
    // hand-permuted pipeline bit-for-bit and solve the original system.
    let a_orig = fixtures::banded_full_row_rank(10, 14, 3, 47);
    let rp = Perm::new(vec![3, 1, 4, 0, 2, 9, 8, 5, 7, 6]).unwrap();
    let cp = Perm::new(vec![13, 0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11]).unwrap();
    let a = a_orig.permuted(&rp, &cp).unwrap();
    let mut part = make_partition(Axis::Rows, 10, PartitionSpec::Equal(2)).unwrap();
    part.set_perms(rp.clone(), cp.clone());
    let sys = augment_rows(&a, &part, AugmentStrategy::Pairwise, 1e-10).unwrap();
    let solver = UnderSolver::new(sys, Threading::Sequential).unwrap();
    let b_orig = fixtures::vector(10, 8);
    let sol = solver.solve(&b_orig).unwrap();

    // Same numbers as feeding the permuted system with identity orderings.
    let part_id = make_partition(Axis::Rows, 10, PartitionSpec::Equal(2)).unwrap();
    let sys_id = augment_rows(&a, &part_id, AugmentStrategy::Pairwise, 1e-10).unwrap();
    let solver_id = UnderSolver::new(sys_id, Threading::Sequential).unwrap();
    let bp = rp.gather(&b_orig);
    let sol_id = solver_id.solve(&bp).unwrap();
    assert_eq!(sol.x, sol_id.x);

    // Back-permuted solution solves the original system.
    let x_orig = solver.system().partition().unpermute_solution(&sol.x);
    let ax = a_orig.matvec(&x_orig, false).unwrap();
    let res: Vec<f64> = ax.iter().zip(&b_orig).map(|(p, q)| p - q).collect();
    assert!(norm2(&res) <= 1e-10 * norm2(&b_orig));
}

#[test]
fn augment_defect_small_on_random_banded() {
    for (seed, strategy) in [
        (1u64, AugmentStrategy::SignAlternating),
        (2, AugmentStrategy::Pairwise),
        (3, AugmentStrategy::SignAlternating),
        (4, AugmentStrategy::Pairwise),
    ] {
        let m = 30 + (seed as usize % 3) * 10;
        let a = fixtures::banded_full_row_rank(m, m + 20, 4, seed);
        let part = make_partition(Axis::Rows, m, PartitionSpec::Equal(3)).unwrap();
        let sys = augment_rows(&a, &part, strategy, 1e-10).unwrap();
        let report = sys.verify_orthogonality(1e-13);
        assert!(
            report.pass,
            "seed {seed}: defect {}",
            report.max_normalized_product
        );
        // Width bookkeeping.
        match strategy {
            AugmentStrategy::SignAlternating => assert_eq!(sys.q(), a.cols()),
            AugmentStrategy::Pairwise => {
                let expected: usize = blockaug::overlap_pairs(&a, &part)
                    .iter()
                    .map(|&(_, j)| part.block_len(j))
                    .sum();
                assert_eq!(sys.q(), expected);
            }
        }
    }
}

#[test]
fn column_augmentation_width_formulas() {
    let a = fixtures::banded_full_col_rank(16, 9, 2, 91);
    let part = make_partition(Axis::Cols, 9, PartitionSpec::Equal(3)).unwrap();
    let sys = augment_cols(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    assert_eq!(sys.q(), a.rows());
    let sys = augment_cols(&a, &part, AugmentStrategy::Pairwise, 1e-10).unwrap();
    let expected: usize = blockaug::overlap_pairs(&a, &part)
        .iter()
        .map(|&(_, j)| part.block_len(j))
        .sum();
    assert_eq!(sys.q(), expected);
    assert!(sys.verify_orthogonality(1e-13).pass);
}

#[test]
fn over_schur_matches_oracle() {
    let a = fixtures::banded_full_col_rank(10, 6, 2, 13);
    let part = make_partition(Axis::Cols, 6, PartitionSpec::Equal(2)).unwrap();
    let sys = augment_cols(&a, &part, AugmentStrategy::Pairwise, 1e-10).unwrap();
    let solver = OverSolver::new(sys, Threading::Sequential).unwrap();
    let q = solver.system().q();
    assert!(q > 0);
    let abar = solver.system().augmented_matrix().densified();
    // Pbar = Abar Abar^+; S = Y^T (I - Pbar) Y.
    let pinv = oracle::dense_pinv(&abar, 1e-12);
    let pbar = abar.dense_matmul(&pinv, false, false).unwrap();
    let m = a.rows();
    let mut s = vec![0.0; q * q];
    for k in 0..q {
        for i in 0..q {
            let delta = if i == k { 1.0 } else { 0.0 };
            s[k * q + i] = delta - pbar.get(m + i, m + k);
        }
    }
    let reference = Matrix::from_dense(q, q, s).unwrap();
    let defect = frob_diff(solver.schur().unwrap().matrix(), &reference);
    assert!(
        defect <= 1e-12 * reference.frobenius_norm().max(1.0),
        "S defect {defect:e}"
    );
}

#[test]
fn over_solve_matches_dense_least_squares() {
    let a = fixtures::banded_full_col_rank(12, 6, 2, 21);
    let part = make_partition(Axis::Cols, 6, PartitionSpec::Equal(2)).unwrap();
    let sys = augment_cols(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = OverSolver::new(sys, Threading::Sequential).unwrap();
    // Inconsistent right-hand side.
    let b = fixtures::vector(12, 77);
    let sol = solver.solve(&b).unwrap();
    let reference = oracle::minnorm_ls_solve(&a, &b, 1e-12);
    assert!(vec_rel_err(&sol.x_ls, &reference) <= 1e-8);
    let report = solver.residual_identity_check(&sol, &b).unwrap();
    assert!(report.identity_gap <= 1e-10);
    assert!(report.lower_bound_ok);
}

#[test]
fn over_gram_block_diagonality_and_w_orthogonality() {
    let a = fixtures::banded_full_col_rank(14, 8, 2, 37);
    let part = make_partition(Axis::Cols, 8, PartitionSpec::Equal(3)).unwrap();
    let sys = augment_cols(&a, &part, AugmentStrategy::Pairwise, 1e-10).unwrap();
    let solver = OverSolver::new(sys, Threading::Sequential).unwrap();
    let abar = solver.system().augmented_matrix().densified();
    let gram = abar.dense_matmul(&abar, true, false).unwrap();
    let gram_norm = gram.frobenius_norm();
    // Off-diagonal blocks of Abar^T Abar vanish.
    for i in 0..part.block_count() {
        for j in 0..part.block_count() {
            if i == j {
                continue;
            }
            let block = gram.dense_block(part.block_range(i), part.block_range(j));
            assert!(block.frobenius_norm() <= 1e-12 * gram_norm);
        }
    }
    // Abar^T W = 0 and the S identities.
    let w = solver.assemble_w_dense().unwrap();
    let atw = abar.dense_matmul(&w, true, false).unwrap();
    assert!(atw.frobenius_norm() <= 1e-12 * abar.frobenius_norm() * w.frobenius_norm());
    let s = solver.schur().unwrap().matrix().clone();
    let wtw = w.dense_matmul(&w, true, false).unwrap();
    assert!(frob_diff(&wtw, &s) <= 1e-12 * s.frobenius_norm().max(1.0));
    let m = a.rows();
    let q = solver.system().q();
    let b_blk = w.dense_block(0..m, 0..q);
    let btb = b_blk.dense_matmul(&b_blk, true, false).unwrap();
    let ss = s.dense_matmul(&s, false, false).unwrap();
    let mut s_minus_ss = vec![0.0; q * q];
    let (sv, ssv) = (s.to_dense(), ss.to_dense());
    for i in 0..q * q {
        s_minus_ss[i] = sv[i] - ssv[i];
    }
    let s_minus_ss = Matrix::from_dense(q, q, s_minus_ss).unwrap();
    assert!(frob_diff(&btb, &s_minus_ss) <= 1e-12 * s.frobenius_norm().max(1.0));
}

#[test]
fn over_explicit_b_block() {
    // B read from W equals -A G Γ^T, with G applied through the block
    // factorizations.
    let a = fixtures::banded_full_col_rank(10, 6, 2, 53);
    let part = make_partition(Axis::Cols, 6, PartitionSpec::Equal(2)).unwrap();
    let sys = augment_cols(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = OverSolver::new(sys, Threading::Sequential).unwrap();
    let q = solver.system().q();
    let m = a.rows();
    let gamma = solver.system().gamma().unwrap();
    let w = solver.assemble_w_dense().unwrap();
    let b_blk = w.dense_block(0..m, 0..q);
    for k in 0..q {
        let mut e = vec![0.0; q];
        e[k] = 1.0;
        let gt = gamma.matvec(&e, true).unwrap();
        // G applied blockwise.
        let mut gw = vec![0.0; a.cols()];
        for i in 0..part.block_count() {
            let range = part.block_range(i);
            let piece = solver
                .system()
                .block(i)
                .gram_solve(&gt[range.clone()])
                .unwrap();
            gw[range].copy_from_slice(&piece);
        }
        let agw = a.matvec(&gw, false).unwrap();
        for (r, val) in agw.iter().enumerate() {
            assert!((b_blk.get(r, k) + val).abs() <= 1e-12);
        }
    }
}

#[test]
fn over_f_characterization() {
    let a = fixtures::banded_full_col_rank(12, 8, 2, 61);
    let part = make_partition(Axis::Cols, 8, PartitionSpec::Equal(2)).unwrap();
    let sys = augment_cols(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
    let solver = OverSolver::new(sys, Threading::Sequential).unwrap();
    let q = solver.system().q();
    let b = fixtures::vector(12, 19);
    // f = 0: the defect vanishes.
    let sol = solver.solve(&b).unwrap();
    let defect = norm2(&solver.gamma_y_plus_sz(&sol.y, &sol.z).unwrap());
    assert!(defect <= 1e-10 * norm2(&sol.y).max(1.0));
    // f != 0: the defect is bounded below (Γ G Γ^T + S is positive definite).
    for seed in 0..5u64 {
        let f = fixtures::vector(q, 100 + seed);
        let (y, z) = solver.solve_with_f(&b, &f).unwrap();
        let defect = norm2(&solver.gamma_y_plus_sz(&y, &z).unwrap());
        assert!(
            defect >= 1e-6 * norm2(&f),
            "defect {defect:e} for |f| {}",
            norm2(&f)
        );
    }
}

#[test]
fn over_permutation_consistency() {
    // Reordered pipeline, back-permuted, equals the oracle solve of the
    // original problem (the least-squares solution is unique).
    let a_orig = fixtures::banded_full_col_rank(12, 7, 2, 71);
    let rp = Perm::new(vec![5, 0, 7, 2, 9, 4, 11, 6, 1, 8, 3, 10]).unwrap();
    let cp = Perm::new(vec![2, 0, 4, 1, 6, 3, 5]).unwrap();
    let a = a_orig.permuted(&rp, &cp).unwrap();
    let mut part = make_partition(Axis::Cols, 7, PartitionSpec::Equal(2)).unwrap();
    part.set_perms(rp, cp);
    let sys = augment_cols(&a, &part, AugmentStrategy::Pairwise, 1e-10).unwrap();
    let solver = OverSolver::new(sys, Threading::Sequential).unwrap();
    let b = fixtures::vector(12, 23);
    let sol = solver.solve(&b).unwrap();
    let reference = oracle::minnorm_ls_solve(&a_orig, &b, 1e-12);
    assert!(vec_rel_err(&sol.x_ls, &reference) <= 1e-8);
}

#[test]
fn threading_modes_agree() {
    let a = fixtures::banded_full_row_rank(24, 36, 4, 83);
    let part = make_partition(Axis::Rows, 24, PartitionSpec::Equal(3)).unwrap();
    let b = fixtures::vector(24, 29);
    let mut solutions = Vec::new();
    for threading in [Threading::Sequential, Threading::Parallel] {
        let sys = augment_rows(&a, &part, AugmentStrategy::SignAlternating, 1e-10).unwrap();
        let solver = UnderSolver::new(sys, threading).unwrap();
        solutions.push(solver.solve(&b).unwrap());
    }
    assert!(vec_rel_err(&solutions[1].x, &solutions[0].x) <= 1e-10);
}
