//! Successively denoised differentiation.
//!
//! A derivative `d_x^n d_t^m u` is estimated as
//! `(S_x D_x)^n (S_t D_t)^m S_x S_t U`, where `S` is a Savitzky-Golay smoother
//! and `D` the 5-point central difference. The time smoothing after the last
//! time difference is skipped, which gives more accurate time derivatives.
//!
//! Space is periodic. In time, smoothing reflects the samples about the end
//! points (without repeating them) and differencing falls back to 3-point
//! stencils near the ends; each such step widens the unreliable margin that
//! [`DerivativeField::time_margin`] records.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;

use crate::trajdata::{Grid, Trajectory};
use crate::{Error, Result};

/// Symmetric Savitzky-Golay smoothing filter.
#[derive(Debug, Clone, PartialEq)]
pub struct SavGolFilter {
    pub window: usize,
    pub degree: usize,
    /// Weights for offsets `-(w-1)/2 ..= (w-1)/2`.
    pub weights: Vec<f64>,
}

impl SavGolFilter {
    pub const DEFAULT_DEGREE: usize = 2;

    pub fn new(window: usize, degree: usize) -> Result<Self> {
        if window < 3 || window % 2 == 0 {
            return Err(Error::InvalidArgument(format!("window must be odd and at least 3, got {window}")));
        }
        if degree >= window {
            return Err(Error::InvalidArgument(format!("degree {degree} must be below window {window}")));
        }
        let half = (window / 2) as f64;
        // Least-squares fit on scaled offsets; the center value of the fit is
        // e_0^T (V^T V)^{-1} V^T data, i.e. the first row of the pseudo-inverse.
        let v = Mat::from_fn(window, degree + 1, |r, c| {
            let s = (r as f64 - half) / half;
            s.powi(c as i32)
        });
        let qr = v.qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R();
        // Solve R^T a = e_0, then weights = Q a.
        let k = degree + 1;
        let mut a = vec![0.0; k];
        for i in 0..k {
            let mut s = if i == 0 { 1.0 } else { 0.0 };
            for j in 0..i {
                s -= r[(j, i)] * a[j];
            }
            a[i] = s / r[(i, i)];
        }
        let mut weights: Vec<f64> = (0..window).map(|row| (0..k).map(|j| q[(row, j)] * a[j]).sum()).collect();
        // Exact symmetry.
        for i in 0..window / 2 {
            let avg = 0.5 * (weights[i] + weights[window - 1 - i]);
            weights[i] = avg;
            weights[window - 1 - i] = avg;
        }
        Ok(Self { window, degree, weights })
    }

    /// Filter with the default polynomial degree.
    pub fn with_window(window: usize) -> Result<Self> {
        Self::new(window, Self::DEFAULT_DEGREE.min(window - 1))
    }

    pub fn half_width(&self) -> usize {
        self.window / 2
    }
}

pub fn savgol_weights(window: usize, degree: usize) -> Result<SavGolFilter> {
    SavGolFilter::new(window, degree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along a column (periodic).
    Space,
    /// Along a row (bounded).
    Time,
}

fn axis_len(field: &Mat<f64>, axis: Axis) -> usize {
    match axis {
        Axis::Space => field.nrows(),
        Axis::Time => field.ncols(),
    }
}

fn reflect(j: isize, len: usize) -> usize {
    let last = len as isize - 1;
    let r = if j < 0 {
        -j
    } else if j > last {
        2 * last - j
    } else {
        j
    };
    r as usize
}

/// Convolves `field` with the filter along `axis`.
pub fn smooth(field: &Mat<f64>, axis: Axis, filter: &SavGolFilter) -> Result<Mat<f64>> {
    let len = axis_len(field, axis);
    if filter.window > len {
        return Err(Error::WindowTooLarge { window: filter.window, len });
    }
    let h = filter.half_width() as isize;
    let w = &filter.weights;
    let out = match axis {
        Axis::Space => {
            let n = len as isize;
            Mat::from_fn(field.nrows(), field.ncols(), |i, c| {
                let mut s = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    let j = (i as isize + k as isize - h).rem_euclid(n) as usize;
                    s += wk * field[(j, c)];
                }
                s
            })
        }
        Axis::Time => Mat::from_fn(field.nrows(), field.ncols(), |r, n| {
            let mut s = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let j = reflect(n as isize + k as isize - h, len);
                s += wk * field[(r, j)];
            }
            s
        }),
    };
    Ok(out)
}

/// 5-point central difference along `axis` with spacing `step`.
///
/// The time axis uses the 3-point central stencil at the second and
/// second-to-last samples and second order one-sided stencils at the ends.
pub fn central_diff_5pt(field: &Mat<f64>, axis: Axis, step: f64) -> Result<Mat<f64>> {
    let len = axis_len(field, axis);
    if len < 5 {
        return Err(Error::WindowTooLarge { window: 5, len });
    }
    let c = 1.0 / (12.0 * step);
    let out = match axis {
        Axis::Space => {
            let n = len;
            Mat::from_fn(field.nrows(), field.ncols(), |i, col| {
                let at = |o: isize| field[((i as isize + o).rem_euclid(n as isize) as usize, col)];
                c * (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2))
            })
        }
        Axis::Time => {
            let last = len - 1;
            Mat::from_fn(field.nrows(), field.ncols(), |r, n| {
                let u = |j: usize| field[(r, j)];
                if n == 0 {
                    (-3.0 * u(0) + 4.0 * u(1) - u(2)) / (2.0 * step)
                } else if n == last {
                    (3.0 * u(last) - 4.0 * u(last - 1) + u(last - 2)) / (2.0 * step)
                } else if n == 1 || n == last - 1 {
                    (u(n + 1) - u(n - 1)) / (2.0 * step)
                } else {
                    c * (-u(n + 2) + 8.0 * u(n + 1) - 8.0 * u(n - 1) + u(n - 2))
                }
            })
        }
    };
    Ok(out)
}

/// Estimated derivative field on the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeField {
    pub grid: Grid,
    pub values: Mat<f64>,
    pub space_order: usize,
    pub time_order: usize,
    /// Samples at each time end affected by boundary handling.
    pub time_margin: usize,
}

/// SDD estimate of `d_x^n d_t^m u`. With `filter = None` only finite
/// differences are applied.
pub fn sdd_derivative(
    traj: &Trajectory,
    space_order: usize,
    time_order: usize,
    filter: Option<&SavGolFilter>,
) -> Result<DerivativeField> {
    let grid = traj.grid;
    let mut v = traj.values.clone();
    let mut margin = 0;
    let smooth_t = |v: &Mat<f64>, margin: &mut usize| -> Result<Mat<f64>> {
        match filter {
            Some(f) => {
                *margin += f.half_width();
                smooth(v, Axis::Time, f)
            }
            None => Ok(v.clone()),
        }
    };
    let smooth_x = |v: &Mat<f64>| -> Result<Mat<f64>> {
        match filter {
            Some(f) => smooth(v, Axis::Space, f),
            None => Ok(v.clone()),
        }
    };
    v = smooth_t(&v, &mut margin)?;
    v = smooth_x(&v)?;
    for k in 0..time_order {
        v = central_diff_5pt(&v, Axis::Time, grid.dt())?;
        margin += 2;
        if k + 1 < time_order {
            v = smooth_t(&v, &mut margin)?;
        }
    }
    for _ in 0..space_order {
        v = central_diff_5pt(&v, Axis::Space, grid.dx())?;
        v = smooth_x(&v)?;
    }
    Ok(DerivativeField { grid, values: v, space_order, time_order, time_margin: margin })
}
