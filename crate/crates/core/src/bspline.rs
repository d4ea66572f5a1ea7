//! Uniform B-spline bases with periodic or Neumann boundary supplements and
//! their space-time tensor products.
//!
//! Splines are evaluated with the Cox-de Boor recursion on a uniform knot
//! sequence `z_n = start + n dz`, extended to all integers `n`. The base case
//! `b^0_n` is the indicator of `[z_n, z_{n+1})`.
//!
//! Function ordering:
//!
//! * periodic: `b_0 .. b_{l-p-1}` followed by the wrapped splines
//!   `b~_{-p} .. b~_{-1}` (so index `j` is the spline starting at knot `j`,
//!   modulo `l`);
//! * Neumann: `b_L`, `b_0 .. b_{l-p-1}`, `b_R`;
//! * constant: the single function `1`.

use alloc::format;
use alloc::vec::Vec;

use faer::Mat;

use crate::trajdata::Grid;
use crate::{Error, Result};

/// Relative tolerance used when clamping points just outside a closed domain.
const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnotSequence {
    pub start: f64,
    pub end: f64,
    /// Number of knot intervals inside the domain.
    pub l: usize,
}

impl KnotSequence {
    pub fn new(start: f64, end: f64, l: usize) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() || l == 0 {
            return Err(Error::InvalidArgument(format!("bad knot sequence on [{start}, {end}] with l = {l}")));
        }
        Ok(Self { start, end, l })
    }

    pub fn dz(&self) -> f64 {
        (self.end - self.start) / self.l as f64
    }

    /// Knot `z_n` of the infinitely extended sequence.
    pub fn knot(&self, n: i64) -> f64 {
        self.start + n as f64 * self.dz()
    }

    fn local(&self, z: f64) -> f64 {
        (z - self.start) / self.dz()
    }
}

/// Cardinal spline `b^p_n` on integer knots, by Cox-de Boor recursion.
fn cardinal(n: i64, p: usize, u: f64) -> f64 {
    let n_f = n as f64;
    if p == 0 {
        return if n_f <= u && u < n_f + 1.0 { 1.0 } else { 0.0 };
    }
    if u < n_f || u >= n_f + p as f64 + 1.0 {
        return 0.0;
    }
    let pf = p as f64;
    (u - n_f) / pf * cardinal(n, p - 1, u) + (n_f + pf + 1.0 - u) / pf * cardinal(n + 1, p - 1, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Neumann,
    /// Single constant function; used when a coefficient does not vary along
    /// an axis.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis1D {
    pub knots: KnotSequence,
    pub order: usize,
    pub boundary: Boundary,
}

impl BSplineBasis1D {
    pub fn periodic(start: f64, end: f64, l: usize, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("spline order must be at least 1".into()));
        }
        if l < 2 {
            return Err(Error::InvalidArgument(format!("periodic basis needs at least 2 knot intervals, got {l}")));
        }
        Ok(Self { knots: KnotSequence::new(start, end, l)?, order, boundary: Boundary::Periodic })
    }

    pub fn neumann(start: f64, end: f64, l: usize, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("spline order must be at least 1".into()));
        }
        if l < order {
            return Err(Error::InvalidArgument(format!(
                "Neumann basis of order {order} needs at least {order} knot intervals, got {l}"
            )));
        }
        Ok(Self { knots: KnotSequence::new(start, end, l)?, order, boundary: Boundary::Neumann })
    }

    pub fn constant(start: f64, end: f64) -> Result<Self> {
        Ok(Self { knots: KnotSequence::new(start, end, 1)?, order: 0, boundary: Boundary::Constant })
    }

    /// Periodic basis with `count` functions (`count = 1` gives the constant).
    pub fn periodic_with_count(start: f64, end: f64, count: usize, order: usize) -> Result<Self> {
        match count {
            0 => Err(Error::InvalidArgument("basis count must be positive".into())),
            1 => Self::constant(start, end),
            _ => Self::periodic(start, end, count, order),
        }
    }

    /// Neumann basis with `count` functions (`count = 1` gives the constant).
    pub fn neumann_with_count(start: f64, end: f64, count: usize, order: usize) -> Result<Self> {
        match count {
            0 => Err(Error::InvalidArgument("basis count must be positive".into())),
            1 => Self::constant(start, end),
            _ => {
                let l = (count + order).checked_sub(2).unwrap_or(0);
                Self::neumann(start, end, l, order)
            }
        }
    }

    pub fn count(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.knots.l,
            Boundary::Neumann => self.knots.l - self.order + 2,
            Boundary::Constant => 1,
        }
    }

    /// Local knot coordinate of `z` after wrapping or domain checking.
    fn locate(&self, z: f64) -> Result<f64> {
        let k = &self.knots;
        if !z.is_finite() {
            return Err(Error::OutOfDomain { value: z, start: k.start, end: k.end });
        }
        match self.boundary {
            Boundary::Periodic => {
                let l = k.l as f64;
                let mut u = k.local(z);
                u -= (u / l).floor() * l;
                if u >= l || u < 0.0 {
                    u = 0.0;
                }
                Ok(u)
            }
            Boundary::Neumann | Boundary::Constant => {
                let tol = DOMAIN_TOL * (k.end - k.start).max(k.start.abs().max(k.end.abs()));
                if z < k.start - tol || z > k.end + tol {
                    return Err(Error::OutOfDomain { value: z, start: k.start, end: k.end });
                }
                Ok(k.local(z).clamp(0.0, k.l as f64))
            }
        }
    }

    fn eval_local(&self, j: usize, u: f64) -> f64 {
        let p = self.order;
        let l = self.knots.l as i64;
        match self.boundary {
            Boundary::Constant => 1.0,
            Boundary::Periodic => {
                // Shifts n = j - s l whose support [n, n + p + 1) can reach u in [0, l).
                let mut sum = 0.0;
                let mut n = j as i64;
                while n + p as i64 + 1 > 0 {
                    sum += cardinal(n, p, u);
                    n -= l;
                }
                sum
            }
            Boundary::Neumann => {
                let interior = self.knots.l - p;
                if j == 0 {
                    if u < p as f64 {
                        (-(p as i64)..0).map(|n| cardinal(n, p, u)).sum()
                    } else {
                        0.0
                    }
                } else if j <= interior {
                    cardinal(j as i64 - 1, p, u)
                } else if u >= (l - p as i64) as f64 {
                    // Include b_l so that the closed right end z = z_l is covered.
                    (l - p as i64..=l).map(|n| cardinal(n, p, u)).sum()
                } else {
                    0.0
                }
            }
        }
    }

    /// Value of basis function `j` at `z`.
    pub fn eval(&self, j: usize, z: f64) -> Result<f64> {
        if j >= self.count() {
            return Err(Error::IndexOutOfRange { index: j, len: self.count() });
        }
        let u = self.locate(z)?;
        Ok(self.eval_local(j, u))
    }

    /// Values of all basis functions at `z`.
    pub fn eval_all(&self, z: f64) -> Result<Vec<f64>> {
        let u = self.locate(z)?;
        Ok((0..self.count()).map(|j| self.eval_local(j, u)).collect())
    }

    /// `points.len() x count` matrix of basis values.
    pub fn sample(&self, points: &[f64]) -> Result<Mat<f64>> {
        let mut out = Mat::zeros(points.len(), self.count());
        for (r, &z) in points.iter().enumerate() {
            let u = self.locate(z)?;
            for j in 0..self.count() {
                out[(r, j)] = self.eval_local(j, u);
            }
        }
        Ok(out)
    }
}

pub fn eval_bspline(basis: &BSplineBasis1D, n: usize, z: f64) -> Result<f64> {
    basis.eval(n, z)
}

pub fn make_periodic_basis(start: f64, end: f64, l: usize, order: usize) -> Result<BSplineBasis1D> {
    BSplineBasis1D::periodic(start, end, l, order)
}

pub fn make_neumann_basis(start: f64, end: f64, l: usize, order: usize) -> Result<BSplineBasis1D> {
    BSplineBasis1D::neumann(start, end, l, order)
}

/// Tensor product basis `B_m(x, t) = b_{m1}(x) b_{m2}(t)` with
/// `m = m2 * M1 + m1` (all indices zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub space: BSplineBasis1D,
    pub time: BSplineBasis1D,
}

impl BasisSet {
    pub fn new(space: BSplineBasis1D, time: BSplineBasis1D) -> Result<Self> {
        if space.boundary == Boundary::Neumann || time.boundary == Boundary::Periodic {
            return Err(Error::InvalidArgument("space basis must be periodic and time basis Neumann".into()));
        }
        Ok(Self { space, time })
    }

    /// Basis with `m1` periodic functions in space and `m2` Neumann functions
    /// in time on the grid's domain.
    pub fn for_grid(grid: &Grid, m1: usize, m2: usize, order: usize) -> Result<Self> {
        let space = BSplineBasis1D::periodic_with_count(grid.x_min, grid.x_max, m1, order)?;
        let time = BSplineBasis1D::neumann_with_count(grid.t_min, grid.t_max, m2, order)?;
        Self::new(space, time)
    }

    pub fn m1(&self) -> usize {
        self.space.count()
    }

    pub fn m2(&self) -> usize {
        self.time.count()
    }

    /// Total number of tensor functions `M = M1 * M2`.
    pub fn len(&self) -> usize {
        self.m1() * self.m2()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, m1: usize, m2: usize) -> usize {
        m2 * self.m1() + m1
    }

    pub fn split(&self, m: usize) -> (usize, usize) {
        (m % self.m1(), m / self.m1())
    }

    pub fn eval(&self, m: usize, x: f64, t: f64) -> Result<f64> {
        if m >= self.len() {
            return Err(Error::IndexOutOfRange { index: m, len: self.len() });
        }
        let (m1, m2) = self.split(m);
        Ok(self.space.eval(m1, x)? * self.time.eval(m2, t)?)
    }
}

pub fn eval_tensor(basis: &BasisSet, m: usize, x: f64, t: f64) -> Result<f64> {
    basis.eval(m, x, t)
}
