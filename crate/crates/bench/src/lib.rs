//! Shared instance builders for the criterion benches.

use blockaug::{
    augment_cols, augment_rows, fixtures, make_partition, AugmentStrategy, AugmentedSystem, Axis,
    Matrix, PartitionSpec,
};

pub fn under_matrix(rows: usize, cols: usize, band: usize, seed: u64) -> Matrix {
    fixtures::banded_full_row_rank(rows, cols, band, seed)
}

pub fn over_matrix(rows: usize, cols: usize, band: usize, seed: u64) -> Matrix {
    fixtures::banded_full_col_rank(rows, cols, band, seed)
}

pub fn under_system(
    rows: usize,
    cols: usize,
    band: usize,
    p: usize,
    strategy: AugmentStrategy,
    seed: u64,
) -> AugmentedSystem {
    let a = under_matrix(rows, cols, band, seed);
    let part = make_partition(Axis::Rows, rows, PartitionSpec::Equal(p)).expect("partition");
    augment_rows(&a, &part, strategy, 1e-10).expect("augment")
}

pub fn over_system(
    rows: usize,
    cols: usize,
    band: usize,
    p: usize,
    strategy: AugmentStrategy,
    seed: u64,
) -> AugmentedSystem {
    let a = over_matrix(rows, cols, band, seed);
    let part = make_partition(Axis::Cols, cols, PartitionSpec::Equal(p)).expect("partition");
    augment_cols(&a, &part, strategy, 1e-10).expect("augment")
}
