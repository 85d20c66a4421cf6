//! Symmetric eigensolvers: cyclic Jacobi for small matrices, Householder
//! tridiagonalization followed by implicit QL for larger ones.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Matrices up to this order use Jacobi; larger ones use tridiagonal QL.
pub const JACOBI_MAX_ORDER: usize = 512;

/// Relative asymmetry accepted on input.
pub const SYMMETRY_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const QL_MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Auto,
    Jacobi,
    TridiagonalQl,
}

/// Eigenvalues sorted in descending order; column `i` of `vectors` belongs to
/// `values[i]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    /// Q Λ Qᵀ.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        let scaled = Matrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        scaled.matmul(&self.vectors.transpose())
    }
}

pub fn symmetric_eigen(m: &Matrix) -> Result<EigenDecomposition> {
    symmetric_eigen_with(m, EigenMethod::Auto)
}

pub fn symmetric_eigen_with(m: &Matrix, method: EigenMethod) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::domain(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::domain(format!(
            "matrix is not symmetric (relative asymmetry {asym:.3e})"
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: Matrix::zeros(0, 0),
        });
    }
    let use_jacobi = match method {
        EigenMethod::Auto => n <= JACOBI_MAX_ORDER,
        EigenMethod::Jacobi => true,
        EigenMethod::TridiagonalQl => false,
    };
    let (values, vectors) = if use_jacobi {
        jacobi(m)?
    } else {
        tridiagonal_ql(m)?
    };
    Ok(sort_descending(values, vectors))
}

fn sort_descending(values: Vec<f64>, vectors: Matrix) -> EigenDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    EigenDecomposition {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: Matrix::from_fn(n, n, |r, c| vectors[(r, order[c])]),
    }
}

fn jacobi(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = m.rows();
    let mut a = m.clone();
    // Symmetrize so rounding-level asymmetry cannot stall convergence.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let total: f64 = a.as_slice().iter().map(|x| x * x).sum();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * total * 1e-2 || off == 0.0 {
            let values = (0..n).map(|i| a[(i, i)]).collect();
            return Ok((values, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Estimation(format!(
        "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
    )))
}

// Householder reduction to tridiagonal form (EISPACK tred2 ordering). Returns
// the diagonal, the subdiagonal in e[1..], and the transpose of the
// accumulated transform.
fn tridiagonalize(m: &Matrix) -> (Vec<f64>, Vec<f64>, Matrix) {
    let n = m.rows();
    // `w` holds the transform transposed, so column sweeps read contiguous rows.
    let mut w = m.clone();
    let mut d: Vec<f64> = w.row(n - 1).to_vec();
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[(j, i - 1)];
                w[(j, i)] = 0.0;
                w[(i, j)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                w[(i, j)] = f;
                let row = w.row(j);
                let mut g = e[j] + row[j] * f;
                for ((wk, dk), ek) in row[j + 1..i].iter().zip(&d[j + 1..i]).zip(&mut e[j + 1..i]) {
                    g += wk * dk;
                    *ek += wk * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let row = &mut w.row_mut(j)[j..i];
                for ((wk, ek), dk) in row.iter_mut().zip(&e[j..i]).zip(&d[j..i]) {
                    *wk -= f * ek + g * dk;
                }
                d[j] = w[(j, i - 1)];
                w[(j, i)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        w[(i, n - 1)] = w[(i, i)];
        w[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            let u = w.row(i + 1)[..=i].to_vec();
            for (dk, uk) in d.iter_mut().zip(&u) {
                *dk = uk / h;
            }
            for j in 0..=i {
                let row = &mut w.row_mut(j)[..=i];
                let g: f64 = u.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
                for (wk, dk) in row.iter_mut().zip(&d[..=i]) {
                    *wk -= g * dk;
                }
            }
        }
        for k in 0..=i {
            w[(i + 1, k)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = w[(j, n - 1)];
        w[(j, n - 1)] = 0.0;
    }
    w[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
    (d, e, w)
}

fn tridiagonal_ql(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = m.rows();
    // Rows of `vt` are eigenvectors, so each rotation touches two contiguous rows.
    let (mut d, mut e, mut vt) = tridiagonalize(m);

    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m_idx = l;
        while m_idx < n {
            if e[m_idx].abs() <= eps * tst1 {
                break;
            }
            m_idx += 1;
        }
        if m_idx > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::Estimation(
                        "implicit QL did not converge".into(),
                    ));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m_idx];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m_idx).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (head, tail) = vt.adjacent_rows_mut(i);
                    for (vi, vi1) in head.iter_mut().zip(tail.iter_mut()) {
                        let hh = *vi1;
                        *vi1 = s * *vi + c * hh;
                        *vi = c * *vi - s * hh;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok((d, vt.transpose()))
}
