//! Contiguous block partitions, permutations, and the reverse Cuthill-McKee
//! reordering that makes banded systems block tridiagonal.

use crate::error::{Result, SolveError};
use crate::matrix::Matrix;

/// A permutation of `0..len`, stored as `perm[new_index] = old_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let n = indices.len();
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n || seen[i] {
                return Err(SolveError::InvalidBoundaries(format!(
                    "permutation is not a bijection of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self(indices))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn index(&self, new_index: usize) -> usize {
        self.0[new_index]
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (new, &old) in self.0.iter().enumerate() {
            inv[old] = new;
        }
        Self(inv)
    }

    /// `out[i] = v[perm[i]]` (reorder into the permuted frame).
    pub fn gather(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.0.len());
        self.0.iter().map(|&old| v[old]).collect()
    }

    /// `out[perm[i]] = v[i]` (undo the reordering).
    pub fn scatter(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.0.len());
        let mut out = vec![0.0; v.len()];
        for (i, &old) in self.0.iter().enumerate() {
            out[old] = v[i];
        }
        out
    }
}

/// Which axis a partition slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

/// How to cut the extent into blocks.
#[derive(Debug, Clone)]
pub enum PartitionSpec {
    /// `p` blocks of near-equal size, larger blocks first.
    Equal(usize),
    /// Explicit strictly increasing cut ends, last one equal to the extent.
    Boundaries(Vec<usize>),
}

/// Contiguous disjoint blocks covering `0..extent` on one axis, together with
/// the row/column permutations relating the original and reordered systems.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    axis: Axis,
    extent: usize,
    /// Exclusive end of each block; strictly increasing, last == extent.
    boundaries: Vec<usize>,
    row_perm: Option<Perm>,
    col_perm: Option<Perm>,
}

/// Build a partition. The equal strategy distributes the remainder to the
/// leading blocks so sizes differ by at most one.
pub fn make_partition(axis: Axis, extent: usize, spec: PartitionSpec) -> Result<BlockPartition> {
    let boundaries = match spec {
        PartitionSpec::Equal(p) => {
            if p == 0 || p > extent {
                return Err(SolveError::InvalidBoundaries(format!(
                    "cannot cut extent {extent} into {p} blocks"
                )));
            }
            let base = extent / p;
            let rem = extent % p;
            let mut ends = Vec::with_capacity(p);
            let mut acc = 0;
            for i in 0..p {
                acc += base + usize::from(i < rem);
                ends.push(acc);
            }
            ends
        }
        PartitionSpec::Boundaries(ends) => {
            if ends.is_empty() || *ends.last().unwrap() != extent {
                return Err(SolveError::InvalidBoundaries(format!(
                    "boundaries must end at the extent {extent}"
                )));
            }
            let mut prev = 0;
            for &e in &ends {
                if e <= prev || e > extent {
                    return Err(SolveError::InvalidBoundaries(
                        "boundaries must be strictly increasing and in range".into(),
                    ));
                }
                prev = e;
            }
            ends
        }
    };
    Ok(BlockPartition {
        axis,
        extent,
        boundaries,
        row_perm: None,
        col_perm: None,
    })
}

impl BlockPartition {
    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn block_count(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Half-open index range of block `i`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = if i == 0 { 0 } else { self.boundaries[i - 1] };
        start..self.boundaries[i]
    }

    pub fn block_len(&self, i: usize) -> usize {
        self.block_range(i).len()
    }

    /// Attach the permutations relating the original and reordered system.
    pub fn set_perms(&mut self, row_perm: Perm, col_perm: Perm) {
        self.row_perm = Some(row_perm);
        self.col_perm = Some(col_perm);
    }

    pub fn row_perm(&self) -> Option<&Perm> {
        self.row_perm.as_ref()
    }

    pub fn col_perm(&self) -> Option<&Perm> {
        self.col_perm.as_ref()
    }

    /// Reorder a right-hand side into the permuted row frame.
    pub fn permute_rhs(&self, b: &[f64]) -> Vec<f64> {
        match &self.row_perm {
            Some(p) => p.gather(b),
            None => b.to_vec(),
        }
    }

    /// Map a solution from the permuted column frame back to the original.
    pub fn unpermute_solution(&self, x: &[f64]) -> Vec<f64> {
        match &self.col_perm {
            Some(p) => p.scatter(x),
            None => x.to_vec(),
        }
    }
}

/// All block pairs `(i, j)`, `i < j`, whose cross product does not vanish:
/// `|A_i A_j^T|_F > 0` for row partitions, `|(A^i)^T A^j|_F > 0` for column
/// partitions. Products accumulate in the same order as a dense evaluation.
pub fn overlap_pairs(m: &Matrix, part: &BlockPartition) -> Vec<(usize, usize)> {
    let p = part.block_count();
    let mut pairs = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if cross_product_norm(m, part, i, j) > 0.0 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Frobenius norm of `A_i A_j^T` (rows) or `(A^i)^T A^j` (cols).
pub fn cross_product_norm(m: &Matrix, part: &BlockPartition, i: usize, j: usize) -> f64 {
    let (bi, bj) = match part.axis {
        Axis::Rows => (
            m.dense_block(part.block_range(i), 0..m.cols()),
            m.dense_block(part.block_range(j), 0..m.cols()),
        ),
        Axis::Cols => (
            m.dense_block(0..m.rows(), part.block_range(i)).transposed(),
            m.dense_block(0..m.rows(), part.block_range(j)).transposed(),
        ),
    };
    bi.dense_matmul(&bj, false, true)
        .expect("cross product dims")
        .frobenius_norm()
}

/// Reverse Cuthill-McKee row and column orderings of a (possibly rectangular)
/// pattern, computed on the bipartite adjacency graph whose vertices are the
/// rows and columns and whose edges are the structural nonzeros.
///
/// Each connected component is ordered breadth-first from its minimum-degree
/// vertex (ties broken by ascending original index, rows before columns) and
/// reversed in place; components are emitted in ascending order of their
/// smallest vertex. Fully dense patterns return identity permutations.
pub fn rcm_permutation(m: &Matrix) -> (Perm, Perm) {
    let (rows, cols) = (m.rows(), m.cols());
    let dense = m.to_dense();
    let nnz = dense.iter().filter(|&&v| v != 0.0).count();
    if nnz == rows * cols {
        return (Perm::identity(rows), Perm::identity(cols));
    }

    // Vertices 0..rows are rows, rows..rows+cols are columns.
    let n = rows + cols;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..cols {
        for r in 0..rows {
            if dense[c * rows + r] != 0.0 {
                adj[r].push(rows + c);
                adj[rows + c].push(r);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for start_scan in 0..n {
        if visited[start_scan] {
            continue;
        }
        // Min-degree start vertex within this component, ties by index.
        let component = collect_component(&adj, start_scan);
        let &start = component
            .iter()
            .min_by_key(|&&v| (adj[v].len(), v))
            .unwrap();
        let mut comp_order = Vec::with_capacity(component.len());
        let mut queue = std::collections::VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            comp_order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
        comp_order.reverse();
        order.extend(comp_order);
    }

    let mut row_order = Vec::with_capacity(rows);
    let mut col_order = Vec::with_capacity(cols);
    for v in order {
        if v < rows {
            row_order.push(v);
        } else {
            col_order.push(v - rows);
        }
    }
    (
        Perm::new(row_order).expect("rcm row order"),
        Perm::new(col_order).expect("rcm col order"),
    )
}

fn collect_component(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    let mut out = Vec::new();
    seen[start] = true;
    while let Some(v) = stack.pop() {
        out.push(v);
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_split_even() {
        let p = make_partition(Axis::Rows, 4, PartitionSpec::Equal(2)).unwrap();
        assert_eq!(p.boundaries(), &[2, 4]);
    }

    #[test]
    fn equal_split_remainder_to_first() {
        let p = make_partition(Axis::Rows, 5, PartitionSpec::Equal(2)).unwrap();
        assert_eq!(p.boundaries(), &[3, 5]);
        assert_eq!(p.block_len(0), 3);
        assert_eq!(p.block_len(1), 2);
    }

    #[test]
    fn too_many_blocks_rejected() {
        assert!(matches!(
            make_partition(Axis::Rows, 3, PartitionSpec::Equal(4)),
            Err(SolveError::InvalidBoundaries(_))
        ));
    }

    #[test]
    fn explicit_boundaries_validated() {
        assert!(make_partition(Axis::Rows, 6, PartitionSpec::Boundaries(vec![2, 2, 6])).is_err());
        assert!(make_partition(Axis::Rows, 6, PartitionSpec::Boundaries(vec![2, 5])).is_err());
        let p = make_partition(Axis::Rows, 6, PartitionSpec::Boundaries(vec![1, 4, 6])).unwrap();
        assert_eq!(p.block_range(1), 1..4);
    }

    #[test]
    fn perm_round_trip() {
        let p = Perm::new(vec![2, 0, 1]).unwrap();
        let v = [10.0, 20.0, 30.0];
        let g = p.gather(&v);
        assert_eq!(g, vec![30.0, 10.0, 20.0]);
        assert_eq!(p.scatter(&g), v.to_vec());
        assert!(Perm::new(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn overlap_identity_is_empty() {
        let m = Matrix::identity(2);
        let part = make_partition(Axis::Rows, 2, PartitionSpec::Equal(2)).unwrap();
        assert!(overlap_pairs(&m, &part).is_empty());
    }

    #[test]
    fn overlap_tridiagonal_consecutive_only() {
        // 6x6 tridiagonal, three row blocks of two: brute-force structural
        // products give exactly the consecutive pairs.
        let mut t = Vec::new();
        for i in 0..6usize {
            t.push((i, i, 2.0));
            if i + 1 < 6 {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let m = Matrix::from_triplets(6, 6, t).unwrap();
        let part = make_partition(Axis::Rows, 6, PartitionSpec::Equal(3)).unwrap();
        assert_eq!(overlap_pairs(&m, &part), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn overlap_dense_blocks() {
        let m = Matrix::from_dense(4, 4, vec![1.0; 16]).unwrap();
        let part = make_partition(Axis::Rows, 4, PartitionSpec::Equal(2)).unwrap();
        assert_eq!(overlap_pairs(&m, &part), vec![(0, 1)]);
    }

    #[test]
    fn rcm_diagonal_is_identity() {
        let m = Matrix::identity(4);
        let (rp, cp) = rcm_permutation(&m);
        assert!(rp.is_identity());
        assert!(cp.is_identity());
    }

    #[test]
    fn rcm_antidiagonal_reaches_zero_bandwidth() {
        let m = Matrix::from_triplets(4, 4, (0..4).map(|i| (i, 3 - i, 1.0))).unwrap();
        // Exhaustive oracle: some row/col permutation pair achieves bandwidth 0.
        let perms: Vec<Vec<usize>> = permutations(4);
        let mut best = usize::MAX;
        for rp in &perms {
            let permuted = m
                .permuted(&Perm::new(rp.clone()).unwrap(), &Perm::identity(4))
                .unwrap();
            best = best.min(permuted.bandwidth());
        }
        assert_eq!(best, 0);
        let (rp, cp) = rcm_permutation(&m);
        assert_eq!(m.permuted(&rp, &cp).unwrap().bandwidth(), 0);
    }

    #[test]
    fn rcm_tridiagonal_keeps_bandwidth_one() {
        let mut t = Vec::new();
        for i in 0..5usize {
            t.push((i, i, 2.0));
            if i + 1 < 5 {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let m = Matrix::from_triplets(5, 5, t).unwrap();
        assert_eq!(m.bandwidth(), 1);
        let (rp, cp) = rcm_permutation(&m);
        assert_eq!(m.permuted(&rp, &cp).unwrap().bandwidth(), 1);
    }

    #[test]
    fn rcm_dense_pattern_is_identity() {
        let m = Matrix::from_dense(3, 2, vec![1.0; 6]).unwrap();
        let (rp, cp) = rcm_permutation(&m);
        assert!(rp.is_identity());
        assert!(cp.is_identity());
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![0]];
        }
        let mut out = Vec::new();
        for rest in permutations(n - 1) {
            for pos in 0..n {
                let mut p: Vec<usize> = rest.iter().map(|&x| x + usize::from(x >= pos)).collect();
                p.insert(0, pos);
                out.push(p);
            }
        }
        out
    }
}
