use crate::correlated::TrialMatrix;
use crate::error::Result;

/// Binary success matrix stored as packed 64-bit words, one padded run per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl SuccessMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        SuccessMatrix {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    /// Bytes needed for a `rows × cols` matrix.
    pub fn storage_bytes(rows: usize, cols: usize) -> u128 {
        rows as u128 * cols.div_ceil(64) as u128 * 8
    }

    pub(crate) fn from_row_words(rows: usize, cols: usize, words: Vec<u64>) -> Self {
        let words_per_row = cols.div_ceil(64);
        assert_eq!(words.len(), rows * words_per_row);
        SuccessMatrix {
            rows,
            cols,
            words_per_row,
            words,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols);
        self.words[row * self.words_per_row + col / 64] >> (col % 64) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize, success: bool) {
        assert!(row < self.rows && col < self.cols);
        let w = &mut self.words[row * self.words_per_row + col / 64];
        let bit = 1u64 << (col % 64);
        if success {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// Successes in the first `k` columns of `row`.
    pub fn count_prefix(&self, row: usize, k: usize) -> u32 {
        let k = k.min(self.cols);
        let words = self.row_words(row);
        let full = k / 64;
        let mut c: u32 = words[..full].iter().map(|w| w.count_ones()).sum();
        if k % 64 != 0 {
            c += (words[full] & ((1u64 << (k % 64)) - 1)).count_ones();
        }
        c
    }

    pub fn row_successes(&self, row: usize) -> u32 {
        self.count_prefix(row, self.cols)
    }

    /// 0-based column of the first success in `row`.
    pub fn first_success(&self, row: usize) -> Option<usize> {
        self.row_words(row)
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// 1.0 for success, 0.0 for failure.
    pub fn to_success_values(&self) -> Result<TrialMatrix> {
        self.to_trial_matrix(1.0, 0.0)
    }

    /// 1.0 for failure, 0.0 for success: the per-trial error.
    pub fn to_error_values(&self) -> Result<TrialMatrix> {
        self.to_trial_matrix(0.0, 1.0)
    }

    fn to_trial_matrix(&self, on: f64, off: f64) -> Result<TrialMatrix> {
        let mut values = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                values.push(if self.get(r, c) { on } else { off });
            }
        }
        TrialMatrix::new(self.rows, self.cols, values)
    }
}
