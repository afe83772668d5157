//! Deterministic random fixtures shared by tests and benchmarks.
//!
//! The generator is a tiny splitmix64 so fixtures reproduce bit-exactly on
//! every platform without external dependencies.

use crate::matrix::Matrix;

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }
}

/// Random banded full row rank matrix (`rows <= cols`): each row `i` carries
/// `band + 1` entries starting at a column offset that slides across the
/// width, with a boosted leading entry so the rows stay well conditioned.
/// Rows further apart than the band share no columns, so with blocks larger
/// than the band only consecutive blocks overlap.
pub fn banded_full_row_rank(rows: usize, cols: usize, band: usize, seed: u64) -> Matrix {
    assert!(rows <= cols, "full row rank fixture needs rows <= cols");
    assert!(band < cols);
    let mut rng = Rng::new(seed);
    let mut triplets = Vec::with_capacity(rows * (band + 1));
    let span = (cols - band - 1) as f64;
    for i in 0..rows {
        let offset = if rows == 1 {
            0
        } else {
            ((i as f64) * span / ((rows - 1) as f64)).round() as usize
        };
        for d in 0..=band {
            let value = if d == 0 {
                2.0 + rng.uniform()
            } else {
                rng.symmetric()
            };
            triplets.push((i, offset + d, value));
        }
    }
    Matrix::from_triplets(rows, cols, triplets).expect("banded fixture dims")
}

/// Random banded full column rank matrix (`rows >= cols`); the transpose of
/// [`banded_full_row_rank`].
pub fn banded_full_col_rank(rows: usize, cols: usize, band: usize, seed: u64) -> Matrix {
    assert!(rows >= cols, "full column rank fixture needs rows >= cols");
    banded_full_row_rank(cols, rows, band, seed).transposed()
}

/// Random vector with entries in `[-1, 1)`.
pub fn vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    (0..len).map(|_| rng.symmetric()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_structure_limits_overlap() {
        let m = banded_full_row_rank(40, 60, 5, 7);
        assert_eq!(m.rows(), 40);
        assert_eq!(m.cols(), 60);
        // Rows ten apart never share a column.
        let dense = m.to_dense();
        for i in 0..30 {
            for c in 0..60 {
                let a = dense[c * 40 + i];
                let b = dense[c * 40 + i + 10];
                assert!(a == 0.0 || b == 0.0);
            }
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let a = banded_full_row_rank(6, 10, 2, 42);
        let b = banded_full_row_rank(6, 10, 2, 42);
        assert_eq!(a.to_dense(), b.to_dense());
        assert_eq!(vector(5, 1), vector(5, 1));
    }
}
