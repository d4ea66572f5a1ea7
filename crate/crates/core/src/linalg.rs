//! Dense least-squares helpers on top of `faer`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::SolveLstsq;
use faer::{Mat, MatRef};

use crate::{Error, Result};

/// Relative singular value cutoff for minimum-norm solves and rank decisions.
pub const SINGULAR_CUTOFF: f64 = 1e-10;

/// Pivoted QR diagonal ratio below which a solve falls back to the SVD.
const PIVOT_RATIO: f64 = 1e-8;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(a.col(j).iter()) {
            *o += v * xj;
        }
    }
    out
}

/// `a^T x`.
pub fn matvec_t(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    (0..a.ncols()).map(|j| a.col(j).iter().zip(x).map(|(u, v)| u * v).sum()).collect()
}

/// Copies the listed columns of `a`.
pub fn select_columns(a: MatRef<'_, f64>, cols: &[usize]) -> Mat<f64> {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

fn svd_error(e: impl core::fmt::Debug) -> Error {
    Error::Linalg(format!("SVD did not converge: {e:?}"))
}

/// Minimum-norm least-squares solution from a thin SVD, discarding singular
/// values below `SINGULAR_CUTOFF * sigma_max`.
pub fn lstsq_svd(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.ncols();
    let mut x = vec![0.0; n];
    if n == 0 || a.nrows() == 0 {
        return Ok(x);
    }
    let svd = a.thin_svd().map_err(svd_error)?;
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(x);
    }
    let u = svd.U();
    let v = svd.V();
    for i in 0..s.nrows() {
        if s[i] <= SINGULAR_CUTOFF * smax {
            continue;
        }
        let c = u.col(i).iter().zip(b).map(|(p, q)| p * q).sum::<f64>() / s[i];
        for (xj, vj) in x.iter_mut().zip(v.col(i).iter()) {
            *xj += c * vj;
        }
    }
    Ok(x)
}

/// Least-squares solution of `a x = b`.
///
/// Uses column-pivoted QR when the matrix is clearly full column rank and the
/// SVD minimum-norm solution otherwise.
pub fn lstsq(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.len() != m {
        return Err(Error::InvalidArgument(format!("right-hand side has {} rows, matrix has {m}", b.len())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if m >= n {
        let qr = a.col_piv_qr();
        let r = qr.R();
        let r00 = r[(0, 0)].abs();
        let full_rank = r00 > 0.0 && (0..n).all(|j| r[(j, j)].abs() >= PIVOT_RATIO * r00);
        if full_rank {
            let mut rhs = Mat::from_fn(m, 1, |i, _| b[i]);
            qr.solve_lstsq_in_place(&mut rhs);
            let x: Vec<f64> = (0..n).map(|j| rhs[(j, 0)]).collect();
            if x.iter().all(|v| v.is_finite()) {
                return Ok(x);
            }
        }
    }
    lstsq_svd(a, b)
}

/// `b - a a^+ b`.
pub fn residual(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    let x = lstsq(a, b)?;
    let fit = matvec(a, &x);
    Ok(b.iter().zip(&fit).map(|(p, q)| p - q).collect())
}

/// Orthonormal basis of the column space of `a` (numerical rank from the SVD).
pub fn orthonormal_basis(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(Mat::zeros(a.nrows(), 0));
    }
    let svd = a.thin_svd().map_err(svd_error)?;
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s.nrows()).filter(|&i| smax > 0.0 && s[i] > SINGULAR_CUTOFF * smax).collect();
    Ok(select_columns(svd.U(), &keep))
}

/// Accumulates the triangular factor `R` of a tall matrix fed in row blocks,
/// so `R^T R = A^T A` without holding a copy of `A`.
#[derive(Debug, Clone)]
pub struct RowCompressor {
    ncols: usize,
    r: Mat<f64>,
}

impl RowCompressor {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, r: Mat::zeros(0, ncols) }
    }

    pub fn push(&mut self, block: MatRef<'_, f64>) -> Result<()> {
        if block.ncols() != self.ncols {
            return Err(Error::InvalidArgument(format!(
                "block has {} columns, expected {}",
                block.ncols(),
                self.ncols
            )));
        }
        if block.nrows() == 0 {
            return Ok(());
        }
        let top = self.r.nrows();
        let stacked = Mat::from_fn(top + block.nrows(), self.ncols, |i, j| {
            if i < top {
                self.r[(i, j)]
            } else {
                block[(i - top, j)]
            }
        });
        let qr = stacked.qr();
        self.r = qr.thin_R().to_owned();
        Ok(())
    }

    /// Square `ncols x ncols` upper triangular factor (zero padded if fewer
    /// rows were pushed).
    pub fn finish(self) -> Mat<f64> {
        let n = self.ncols;
        let r = self.r;
        Mat::from_fn(n, n, |i, j| if i < r.nrows() && j >= i { r[(i, j)] } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(m: usize, n: usize, seed: u64) -> Mat<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Mat::from_fn(m, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn lstsq_recovers_consistent_solution() {
        let a = pseudo_random(30, 4, 1);
        let x = [1.0, -2.0, 0.5, 3.0];
        let b = matvec(a.as_ref(), &x);
        let sol = lstsq(a.as_ref(), &b).unwrap();
        for (p, q) in sol.iter().zip(x) {
            assert!((p - q).abs() < 1e-12);
        }
        assert!(norm(&residual(a.as_ref(), &b).unwrap()) < 1e-12);
    }

    #[test]
    fn rank_deficient_uses_minimum_norm() {
        let base = pseudo_random(20, 2, 2);
        let a = Mat::from_fn(20, 3, |i, j| if j < 2 { base[(i, j)] } else { base[(i, 0)] });
        let b: Vec<f64> = (0..20).map(|i| base[(i, 0)] * 2.0).collect();
        let x = lstsq(a.as_ref(), &b).unwrap();
        // Minimum-norm split of the duplicated column.
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[2] - 1.0).abs() < 1e-10 && x[1].abs() < 1e-10);
    }

    #[test]
    fn compressor_preserves_gram() {
        let a = pseudo_random(101, 6, 3);
        let mut c = RowCompressor::new(6);
        for start in (0..101).step_by(17) {
            let end = (start + 17).min(101);
            c.push(a.as_ref().subrows(start, end - start)).unwrap();
        }
        let r = c.finish();
        let g1 = a.transpose() * &a;
        let g2 = r.transpose() * &r;
        for i in 0..6 {
            for j in 0..6 {
                assert!((g1[(i, j)] - g2[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormal_basis_drops_dependent_columns() {
        let base = pseudo_random(10, 2, 4);
        let a = Mat::from_fn(10, 3, |i, j| if j < 2 { base[(i, j)] } else { base[(i, 0)] - base[(i, 1)] });
        let q = orthonormal_basis(a.as_ref()).unwrap();
        assert_eq!(q.ncols(), 2);
    }
}
