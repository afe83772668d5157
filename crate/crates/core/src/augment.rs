//! Construction of the augmentation block Γ that makes row (or column) blocks
//! mutually orthogonal.
//!
//! Two constructions are provided:
//!
//! * **sign-alternating**: append `Γ = D A` with `D` made of alternating
//!   `±I` blocks, so the augmented row blocks are `[A_i  (-1)^{i+1} A_i]`.
//!   The cross product of blocks `i` and `j` becomes
//!   `(1 + (-1)^{i+j}) A_i A_j^T`, which cancels exactly for consecutive
//!   blocks; it therefore requires that only consecutive blocks overlap
//!   (block tridiagonal `A A^T`). Width `q = n`.
//! * **pairwise**: for every overlapping pair `(i, j)` append `m_j` columns
//!   in which block `i` carries `A_i A_j^T` and block `j` carries `-I`, so
//!   the pair's cross product cancels algebraically. Width
//!   `q = sum of m_j over overlapping pairs`. Works for any overlap
//!   structure.
//!
//! Column-block augmentation appends rows instead and is the exact transpose
//! analog.

use crate::error::{Result, SolveError};
use crate::factor::{factorize_block, BlockFactorization, Orientation};
use crate::matrix::Matrix;
use crate::partition::{overlap_pairs, Axis, BlockPartition};

/// Which Γ construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentStrategy {
    SignAlternating,
    Pairwise,
}

/// A matrix together with its augmentation and per-block factorizations.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    orientation: Orientation,
    original: Matrix,
    gamma: Option<Matrix>,
    q: usize,
    strategy: AugmentStrategy,
    partition: BlockPartition,
    blocks: Vec<BlockFactorization>,
}

/// Orthogonality diagnostics: the worst normalized off-diagonal block product.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport {
    /// `max over i != j` of `|B_i B_j^T|_F / (|B_i|_F |B_j|_F)` (row axis)
    /// or the column analog.
    pub max_normalized_product: f64,
    /// Pair attaining the maximum (0-based block indices), if any pair exists.
    pub worst_pair: Option<(usize, usize)>,
    pub tol: f64,
    pub pass: bool,
}

/// Augment row blocks: returns a system whose augmented blocks
/// `[A_i  Γ_i]` are mutually orthogonal.
pub fn augment_rows(
    a: &Matrix,
    part: &BlockPartition,
    strategy: AugmentStrategy,
    rank_tol: f64,
) -> Result<AugmentedSystem> {
    if part.axis() != Axis::Rows {
        return Err(SolveError::StrategyMismatch(
            "augment_rows needs a row partition".into(),
        ));
    }
    if part.extent() != a.rows() {
        return Err(SolveError::DimensionMismatch {
            context: "partition extent vs matrix rows",
            expected: a.rows(),
            got: part.extent(),
        });
    }
    let p = part.block_count();
    let n = a.cols();
    let gamma = if p == 1 {
        None
    } else {
        match strategy {
            AugmentStrategy::SignAlternating => {
                let pairs = overlap_pairs(a, part);
                if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| j - i >= 2) {
                    return Err(SolveError::StructureViolation(format!(
                        "blocks {i} and {j} overlap but are not consecutive; \
                         the alternating signs cannot cancel their cross product"
                    )));
                }
                // Γ = D A with D = diag(I, -I, I, ...) along the row blocks.
                let sparse = a.sparsified();
                let block_of = row_block_lookup(part);
                let triplets: Vec<(usize, usize, f64)> = match sparse.storage() {
                    crate::matrix::Storage::Sparse(t) => t
                        .iter()
                        .map(|&(r, c, v)| (r, c, block_sign(block_of[r]) * v))
                        .collect(),
                    crate::matrix::Storage::Dense(_) => unreachable!(),
                };
                Some(Matrix::from_triplets(a.rows(), n, triplets)?)
            }
            AugmentStrategy::Pairwise => {
                let pairs = overlap_pairs(a, part);
                if pairs.is_empty() {
                    None
                } else {
                    let q: usize = pairs.iter().map(|&(_, j)| part.block_len(j)).sum();
                    let mut triplets = Vec::new();
                    let mut col0 = 0;
                    for &(i, j) in &pairs {
                        let bi = a.dense_block(part.block_range(i), 0..n);
                        let bj = a.dense_block(part.block_range(j), 0..n);
                        let cross = bi.dense_matmul(&bj, false, true)?;
                        let ri = part.block_range(i).start;
                        let rj = part.block_range(j).start;
                        for s in 0..part.block_len(j) {
                            for r in 0..part.block_len(i) {
                                let v = cross.get(r, s);
                                if v != 0.0 {
                                    triplets.push((ri + r, col0 + s, v));
                                }
                            }
                            triplets.push((rj + s, col0 + s, -1.0));
                        }
                        col0 += part.block_len(j);
                    }
                    Some(Matrix::from_triplets(a.rows(), q, triplets)?)
                }
            }
        }
    };
    let q = gamma.as_ref().map_or(0, Matrix::cols);
    let mut blocks = Vec::with_capacity(p);
    for i in 0..p {
        let range = part.block_range(i);
        let mut block = a.dense_block(range.clone(), 0..n);
        if let Some(g) = &gamma {
            block = block.hstack(&g.dense_block(range, 0..q))?;
        }
        let fact =
            factorize_block(&block, Orientation::RowBlock, rank_tol).map_err(|e| match e {
                SolveError::RankDeficient { pivot, .. } => {
                    SolveError::RankDeficient { block: i, pivot }
                }
                other => other,
            })?;
        blocks.push(fact);
    }
    Ok(AugmentedSystem {
        orientation: Orientation::RowBlock,
        original: a.clone(),
        gamma,
        q,
        strategy,
        partition: part.clone(),
        blocks,
    })
}

/// Augment column blocks: the transpose analog of [`augment_rows`], appending
/// `q` rows so that the augmented column blocks are mutually orthogonal.
pub fn augment_cols(
    a: &Matrix,
    part: &BlockPartition,
    strategy: AugmentStrategy,
    rank_tol: f64,
) -> Result<AugmentedSystem> {
    if part.axis() != Axis::Cols {
        return Err(SolveError::StrategyMismatch(
            "augment_cols needs a column partition".into(),
        ));
    }
    if part.extent() != a.cols() {
        return Err(SolveError::DimensionMismatch {
            context: "partition extent vs matrix cols",
            expected: a.cols(),
            got: part.extent(),
        });
    }
    let p = part.block_count();
    let (m, n) = (a.rows(), a.cols());
    let gamma = if p == 1 {
        None
    } else {
        match strategy {
            AugmentStrategy::SignAlternating => {
                let pairs = overlap_pairs(a, part);
                if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| j - i >= 2) {
                    return Err(SolveError::StructureViolation(format!(
                        "column blocks {i} and {j} overlap but are not consecutive"
                    )));
                }
                // Γ^i = (-1)^{i+1} A^i, appended as q = m extra rows.
                let sparse = a.sparsified();
                let block_of = col_block_lookup(part);
                let triplets: Vec<(usize, usize, f64)> = match sparse.storage() {
                    crate::matrix::Storage::Sparse(t) => t
                        .iter()
                        .map(|&(r, c, v)| (r, c, block_sign(block_of[c]) * v))
                        .collect(),
                    crate::matrix::Storage::Dense(_) => unreachable!(),
                };
                Some(Matrix::from_triplets(m, n, triplets)?)
            }
            AugmentStrategy::Pairwise => {
                let pairs = overlap_pairs(a, part);
                if pairs.is_empty() {
                    None
                } else {
                    let q: usize = pairs.iter().map(|&(_, j)| part.block_len(j)).sum();
                    let mut triplets = Vec::new();
                    let mut row0 = 0;
                    for &(i, j) in &pairs {
                        let bi = a.dense_block(0..m, part.block_range(i));
                        let bj = a.dense_block(0..m, part.block_range(j));
                        // (A^j)^T A^i sits in block i's columns of the new rows.
                        let cross = bj.dense_matmul(&bi, true, false)?;
                        let ci = part.block_range(i).start;
                        let cj = part.block_range(j).start;
                        for s in 0..part.block_len(j) {
                            for c in 0..part.block_len(i) {
                                let v = cross.get(s, c);
                                if v != 0.0 {
                                    triplets.push((row0 + s, ci + c, v));
                                }
                            }
                            triplets.push((row0 + s, cj + s, -1.0));
                        }
                        row0 += part.block_len(j);
                    }
                    Some(Matrix::from_triplets(q, n, triplets)?)
                }
            }
        }
    };
    let q = gamma.as_ref().map_or(0, Matrix::rows);
    let mut blocks = Vec::with_capacity(p);
    for i in 0..p {
        let range = part.block_range(i);
        let mut block = a.dense_block(0..m, range.clone());
        if let Some(g) = &gamma {
            block = block.vstack(&g.dense_block(0..q, range))?;
        }
        let fact =
            factorize_block(&block, Orientation::ColumnBlock, rank_tol).map_err(|e| match e {
                SolveError::RankDeficient { pivot, .. } => {
                    SolveError::RankDeficient { block: i, pivot }
                }
                other => other,
            })?;
        blocks.push(fact);
    }
    Ok(AugmentedSystem {
        orientation: Orientation::ColumnBlock,
        original: a.clone(),
        gamma,
        q,
        strategy,
        partition: part.clone(),
        blocks,
    })
}

impl AugmentedSystem {
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The (reordered) original matrix A.
    pub fn original(&self) -> &Matrix {
        &self.original
    }

    /// The augmentation block Γ (`None` when `q == 0`).
    pub fn gamma(&self) -> Option<&Matrix> {
        self.gamma.as_ref()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn strategy(&self) -> AugmentStrategy {
        self.strategy
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &BlockFactorization {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[BlockFactorization] {
        &self.blocks
    }

    /// Width of the augmented frame: `n + q` for row orientation.
    pub fn augmented_cols(&self) -> usize {
        match self.orientation {
            Orientation::RowBlock => self.original.cols() + self.q,
            Orientation::ColumnBlock => self.original.cols(),
        }
    }

    /// Height of the augmented frame: `m + q` for column orientation.
    pub fn augmented_rows(&self) -> usize {
        match self.orientation {
            Orientation::RowBlock => self.original.rows(),
            Orientation::ColumnBlock => self.original.rows() + self.q,
        }
    }

    /// Assemble the full augmented matrix (`[A Γ]` or `[A; Γ]`).
    pub fn augmented_matrix(&self) -> Matrix {
        match (&self.gamma, self.orientation) {
            (None, _) => self.original.clone(),
            (Some(g), Orientation::RowBlock) => self.original.hstack(g).expect("augmented hstack"),
            (Some(g), Orientation::ColumnBlock) => {
                self.original.vstack(g).expect("augmented vstack")
            }
        }
    }

    /// Measure mutual orthogonality of the augmented blocks.
    pub fn verify_orthogonality(&self, tol: f64) -> OrthogonalityReport {
        let blocks: Vec<&Matrix> = self.blocks.iter().map(|b| b.block()).collect();
        orthogonality_of_blocks(&blocks, self.orientation, tol)
    }
}

/// Measure mutual orthogonality of the (possibly un-augmented) blocks of any
/// partitioned matrix. Useful to quantify the defect before augmentation.
pub fn block_orthogonality(m: &Matrix, part: &BlockPartition, tol: f64) -> OrthogonalityReport {
    let (orientation, blocks): (Orientation, Vec<Matrix>) = match part.axis() {
        Axis::Rows => (
            Orientation::RowBlock,
            (0..part.block_count())
                .map(|i| m.dense_block(part.block_range(i), 0..m.cols()))
                .collect(),
        ),
        Axis::Cols => (
            Orientation::ColumnBlock,
            (0..part.block_count())
                .map(|i| m.dense_block(0..m.rows(), part.block_range(i)))
                .collect(),
        ),
    };
    let refs: Vec<&Matrix> = blocks.iter().collect();
    orthogonality_of_blocks(&refs, orientation, tol)
}

fn orthogonality_of_blocks(
    blocks: &[&Matrix],
    orientation: Orientation,
    tol: f64,
) -> OrthogonalityReport {
    let mut max = 0.0f64;
    let mut worst = None;
    for i in 0..blocks.len() {
        for j in (i + 1)..blocks.len() {
            let (bi, bj) = (blocks[i], blocks[j]);
            let cross = match orientation {
                Orientation::RowBlock => bi.dense_matmul(bj, false, true),
                Orientation::ColumnBlock => bi.dense_matmul(bj, true, false),
            }
            .expect("cross product dims");
            let denom = bi.frobenius_norm() * bj.frobenius_norm();
            let value = if denom == 0.0 {
                0.0
            } else {
                cross.frobenius_norm() / denom
            };
            if worst.is_none() || value > max {
                max = value;
                worst = Some((i, j));
            }
        }
    }
    OrthogonalityReport {
        max_normalized_product: max,
        worst_pair: worst,
        tol,
        pass: max <= tol,
    }
}

fn block_sign(block: usize) -> f64 {
    if block.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn row_block_lookup(part: &BlockPartition) -> Vec<usize> {
    let mut lookup = vec![0; part.extent()];
    for i in 0..part.block_count() {
        for r in part.block_range(i) {
            lookup[r] = i;
        }
    }
    lookup
}

fn col_block_lookup(part: &BlockPartition) -> Vec<usize> {
    row_block_lookup(part)
}
