//! Sampling grids, observed trajectories, noise injection and coefficient
//! fields.
//!
//! A trajectory stores `U(x_i, t_n)` as an `I x N` matrix whose column `n` is
//! the spatial slice at time `t_n`. The spatial axis is periodic on
//! `[x_min, x_max)`; the time axis is sampled inclusively on `[t_min, t_max]`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use faer::Mat;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

pub const MIN_SAMPLES: usize = 8;

/// Uniform space-time sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Number of spatial samples `I`.
    pub nx: usize,
    /// Number of time samples `N`.
    pub nt: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, t_min: f64, t_max: f64, nx: usize, nt: usize) -> Result<Self> {
        let grid = Self { x_min, x_max, t_min, t_max, nx, nt };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_SAMPLES || self.nt < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_SAMPLES} samples per axis, got {} x {}",
                self.nx, self.nt
            )));
        }
        let finite = [self.x_min, self.x_max, self.t_min, self.t_max].iter().all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.t_max <= self.t_min {
            return Err(Error::InvalidGrid(format!(
                "degenerate domain [{}, {}) x [{}, {}]",
                self.x_min, self.x_max, self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.period() / self.nx as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.nt - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn t(&self, n: usize) -> f64 {
        if n + 1 == self.nt {
            self.t_max
        } else {
            self.t_min + n as f64 * self.dt()
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sampled scalar field `U(x_i, t_n)` on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    /// `I x N`; column `n` holds the slice at `t_n`.
    pub values: Mat<f64>,
    pub is_noisy: bool,
    pub noise_percent: f64,
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn new(grid: Grid, values: Mat<f64>) -> Result<Self> {
        grid.validate()?;
        if values.nrows() != grid.nx || values.ncols() != grid.nt {
            return Err(Error::InvalidArgument(format!(
                "values are {} x {}, grid is {} x {}",
                values.nrows(),
                values.ncols(),
                grid.nx,
                grid.nt
            )));
        }
        for n in 0..grid.nt {
            for i in 0..grid.nx {
                if !values[(i, n)].is_finite() {
                    return Err(Error::InvalidArgument(format!("non-finite sample at ({i}, {n})")));
                }
            }
        }
        Ok(Self { grid, values, is_noisy: false, noise_percent: 0.0, seed: None })
    }

    /// Builds a trajectory from `I * N` values stored row by row, row `i`
    /// holding `U(x_i, t_0), ..., U(x_i, t_{N-1})`.
    pub fn from_row_major(grid: Grid, data: &[f64]) -> Result<Self> {
        grid.validate()?;
        if data.len() != grid.nx * grid.nt {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {} x {} grid",
                data.len(),
                grid.nx,
                grid.nt
            )));
        }
        Self::new(grid, Mat::from_fn(grid.nx, grid.nt, |i, n| data[i * grid.nt + n]))
    }

    /// Inverse of [`Trajectory::from_row_major`].
    pub fn to_row_major(&self) -> Vec<f64> {
        let (nx, nt) = (self.grid.nx, self.grid.nt);
        (0..nx * nt).map(|p| self.values[(p / nt, p % nt)]).collect()
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        grid.validate()?;
        let values = Mat::from_fn(grid.nx, grid.nt, |i, n| f(grid.x(i), grid.t(n)));
        Self::new(grid, values)
    }

    pub fn value(&self, i: usize, n: usize) -> f64 {
        self.values[(i, n)]
    }

    /// Population standard deviation over all `I * N` samples.
    pub fn std_dev(&self) -> f64 {
        population_std(self.samples())
    }

    /// Samples in storage order (time slice by time slice).
    pub fn samples(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        (0..self.grid.nt).flat_map(move |n| (0..self.grid.nx).map(move |i| self.values[(i, n)]))
    }
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    if count == 0 {
        return 0.0;
    }
    let mean = sum / count as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    var.sqrt()
}

/// Adds i.i.d. Gaussian noise with `sigma = (percent / 100) * std(u)`.
///
/// `std` is the population standard deviation of all samples. The generator
/// is ChaCha20 seeded from `seed`, so output is reproducible across platforms.
pub fn add_noise(traj: &Trajectory, percent: f64, seed: u64) -> Result<Trajectory> {
    if !(percent >= 0.0) || !percent.is_finite() {
        return Err(Error::InvalidArgument(format!("noise percent must be >= 0, got {percent}")));
    }
    if traj.is_noisy {
        return Err(Error::InvalidArgument("noise can only be added to a clean trajectory".to_string()));
    }
    let sigma = percent / 100.0 * traj.std_dev();
    let mut values = traj.values.clone();
    if sigma > 0.0 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for n in 0..traj.grid.nt {
            for i in 0..traj.grid.nx {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[(i, n)] += sigma * z;
            }
        }
    }
    Ok(Trajectory {
        grid: traj.grid,
        values,
        is_noisy: percent > 0.0,
        noise_percent: percent,
        seed: Some(seed),
    })
}

/// Direction of a smooth transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Smooth switch `1/2 + 1/2 tanh(+-rate (t - breakpoint) / t_max)`.
pub fn tau(t: f64, sign: Sign, rate: f64, breakpoint: f64, t_max: f64) -> f64 {
    0.5 + 0.5 * (sign.value() * rate * (t - breakpoint) / t_max).tanh()
}

type Evaluator = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A labelled coefficient function `C(x, t)`.
#[derive(Clone)]
pub struct CoefficientField {
    evaluator: Arc<Evaluator>,
    pub label: String,
}

impl CoefficientField {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { evaluator: Arc::new(f), label: label.into() }
    }

    pub fn constant(label: impl Into<String>, value: f64) -> Self {
        Self::new(label, move |_, _| value)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (self.evaluator)(x, t)
    }

    /// Samples the field on every grid point (`I x N`).
    pub fn sample(&self, grid: &Grid) -> Mat<f64> {
        Mat::from_fn(grid.nx, grid.nt, |i, n| self.eval(grid.x(i), grid.t(n)))
    }
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField").field("label", &self.label).finish_non_exhaustive()
    }
}
