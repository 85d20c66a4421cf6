//! Small dense linear algebra: a row-major matrix, Householder QR and a
//! least-squares solve. Sizes here are at most a few thousand, so nothing is
//! blocked or vectorized beyond what the compiler does.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable views of rows `i` and `i + 1`.
    pub fn adjacent_rows_mut(&mut self, i: usize) -> (&mut [f64], &mut [f64]) {
        let c = self.cols;
        let (a, b) = self.data.split_at_mut((i + 1) * c);
        (&mut a[i * c..], &mut b[..c])
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, a) in self.row(i).iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest |a_ij − a_ji| relative to the largest |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder QR of an `m × n` matrix (`m >= n`), stored compactly:
/// reflectors below the diagonal of `qr`, `R` on and above it.
#[derive(Debug, Clone)]
pub struct Qr {
    qr: Matrix,
    r_diag: Vec<f64>,
}

impl Qr {
    pub fn new(a: &Matrix) -> Qr {
        let (m, n) = (a.rows(), a.cols());
        assert!(m >= n, "QR needs rows >= cols");
        let mut qr = a.clone();
        let mut r_diag = vec![0.0; n];
        for k in 0..n {
            let mut nrm = 0.0f64;
            for i in k..m {
                nrm = nrm.hypot(qr[(i, k)]);
            }
            if nrm != 0.0 {
                if qr[(k, k)] < 0.0 {
                    nrm = -nrm;
                }
                for i in k..m {
                    qr[(i, k)] /= nrm;
                }
                qr[(k, k)] += 1.0;
                for j in (k + 1)..n {
                    let mut s = 0.0;
                    for i in k..m {
                        s += qr[(i, k)] * qr[(i, j)];
                    }
                    s = -s / qr[(k, k)];
                    for i in k..m {
                        let v = qr[(i, k)];
                        qr[(i, j)] += s * v;
                    }
                }
            }
            r_diag[k] = -nrm;
        }
        Qr { qr, r_diag }
    }

    /// Diagonal of `R`.
    pub fn r_diagonal(&self) -> &[f64] {
        &self.r_diag
    }

    /// The thin orthogonal factor `Q` (`m × n`).
    pub fn q(&self) -> Matrix {
        let (m, n) = (self.qr.rows(), self.qr.cols());
        let mut q = Matrix::zeros(m, n);
        for k in (0..n).rev() {
            q[(k, k)] = 1.0;
            for j in k..n {
                if self.qr[(k, k)] != 0.0 {
                    let mut s = 0.0;
                    for i in k..m {
                        s += self.qr[(i, k)] * q[(i, j)];
                    }
                    s = -s / self.qr[(k, k)];
                    for i in k..m {
                        q[(i, j)] += s * self.qr[(i, k)];
                    }
                }
            }
        }
        q
    }

    /// Minimizes ‖A x − b‖₂. Columns whose `R` pivot is negligible relative to
    /// the largest pivot get a zero coefficient.
    pub fn solve_least_squares(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = (self.qr.rows(), self.qr.cols());
        assert_eq!(b.len(), m, "rhs length mismatch");
        let mut y = b.to_vec();
        for k in 0..n {
            if self.qr[(k, k)] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in k..m {
                s += self.qr[(i, k)] * y[i];
            }
            s = -s / self.qr[(k, k)];
            for i in k..m {
                y[i] += s * self.qr[(i, k)];
            }
        }
        let pivot_floor = self.r_diag.iter().fold(0.0f64, |a, v| a.max(v.abs())) * 1e-13;
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            if self.r_diag[k].abs() <= pivot_floor {
                x[k] = 0.0;
                continue;
            }
            let mut s = y[k];
            for j in (k + 1)..n {
                s -= self.qr[(k, j)] * x[j];
            }
            x[k] = s / self.r_diag[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_reconstructs_and_q_is_orthonormal() {
        let a = Matrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.5 * j as f64 - 1.0);
        let qr = Qr::new(&a);
        let q = qr.q();
        let qtq = q.transpose().matmul(&q);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[(i, j)] - want).abs() < 1e-13);
            }
        }
        // R = Qᵀ A must be upper triangular with the recorded diagonal.
        let r = q.transpose().matmul(&a);
        for i in 0..3 {
            assert!((r[(i, i)] - qr.r_diagonal()[i]).abs() < 1e-12);
            for j in 0..i {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        // Fit y = 2 + 3x exactly.
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let a = Matrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let b: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x).collect();
        let x = Qr::new(&a).solve_least_squares(&b);
        assert!((x[0] - 2.0).abs() < 1e-13 && (x[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn asymmetry_and_trace() {
        let mut m = Matrix::identity(3);
        assert_eq!(m.asymmetry(), 0.0);
        m[(0, 2)] = 0.5;
        assert!((m.asymmetry() - 0.5).abs() < 1e-15);
        assert_eq!(m.trace(), 3.0);
    }
}
