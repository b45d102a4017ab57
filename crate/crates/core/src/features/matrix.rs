use ndarray::Array2;

use crate::scalar::Scalar;

/// Row-major 0/1 matrix with each row packed into `u64` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryFeatureMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
    fingerprint: String,
}

pub(crate) fn words_for(cols: usize) -> usize {
    cols.div_ceil(64).max(1)
}

impl BinaryFeatureMatrix {
    pub fn zeros(rows: usize, cols: usize, fingerprint: impl Into<String>) -> Self {
        let words = words_for(cols);
        BinaryFeatureMatrix {
            rows,
            cols,
            words,
            bits: vec![0; rows * words],
            fingerprint: fingerprint.into(),
        }
    }

    /// Builds a matrix from explicit 0/1 rows; any nonzero entry counts as 1.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R], cols: usize) -> Self {
        let mut m = BinaryFeatureMatrix::zeros(rows.len(), cols, "");
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "row {i} has {} entries, expected {cols}", r.len());
            for (j, &v) in r.iter().enumerate() {
                if v != 0 {
                    m.set(i, j);
                }
            }
        }
        m
    }

    pub(crate) fn from_packed(
        rows: usize,
        cols: usize,
        bits: Vec<u64>,
        fingerprint: String,
    ) -> Self {
        let words = words_for(cols);
        debug_assert_eq!(bits.len(), rows * words);
        BinaryFeatureMatrix {
            rows,
            cols,
            words,
            bits,
            fingerprint,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    /// Fingerprint of the schema that produced this matrix (empty if built by hand).
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize) {
        assert!(j < self.cols);
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn row_bits(&self, i: usize) -> Vec<u8> {
        (0..self.cols).map(|j| self.get(i, j) as u8).collect()
    }

    /// Number of set bits in each column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for i in 0..self.rows {
            for (j, c) in counts.iter_mut().enumerate() {
                *c += self.get(i, j) as usize;
            }
        }
        counts
    }

    /// Squared Euclidean distance between two rows (Hamming distance for 0/1 data).
    pub fn sq_dist(&self, a: usize, b: usize) -> u32 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x ^ y).count_ones())
            .sum()
    }

    pub fn to_dense<T: Scalar>(&self) -> Array2<T> {
        Array2::from_shape_fn((self.rows, self.cols), |(i, j)| {
            if self.get(i, j) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Rows at `indices`, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut bits = Vec::with_capacity(indices.len() * self.words);
        for &i in indices {
            bits.extend_from_slice(self.row(i));
        }
        BinaryFeatureMatrix::from_packed(indices.len(), self.cols, bits, self.fingerprint.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_across_word_boundaries() {
        let mut m = BinaryFeatureMatrix::zeros(2, 130, "x");
        m.set(0, 0);
        m.set(0, 64);
        m.set(1, 129);
        assert_eq!(m.words_per_row(), 3);
        assert!(m.get(0, 64) && !m.get(0, 63));
        assert!(m.get(1, 129));
        assert_eq!(m.sq_dist(0, 1), 3);
        assert_eq!(m.column_counts().iter().sum::<usize>(), 3);
    }

    #[test]
    fn dense_view_matches_bits() {
        let m = BinaryFeatureMatrix::from_rows(&[[1u8, 0, 1], [0, 1, 0]], 3);
        let d = m.to_dense::<f64>();
        assert_eq!(d[[0, 2]], 1.0);
        assert_eq!(d[[1, 0]], 0.0);
        assert_eq!(m.row_bits(1), vec![0, 1, 0]);
    }
}
