//! Reference trajectories from a pseudo-spectral method of lines.
//!
//! A problem is `u_t = sum_g C_g(x, t) f_g(u)` on a periodic interval, where
//! each `f_g` is a product of spatial derivatives ([`FeatureSpec`]). Spatial
//! derivatives are computed with the FFT, the initial condition and the
//! assembled right-hand side are dealiased with the 2/3 rule, and time
//! integration uses classical RK4 with a fixed number of substeps per output
//! interval.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use faer::Mat;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dictionary::FeatureSpec;
use crate::trajdata::{tau, CoefficientField, Grid, Sign, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeKind {
    AdvectionDiffusion,
    Burgers,
    Fisher,
    Kdv,
    Custom,
}

impl PdeKind {
    pub const PRESETS: [&'static str; 4] = ["advection_diffusion", "burgers", "fisher", "kdv"];

    pub fn name(self) -> &'static str {
        match self {
            PdeKind::AdvectionDiffusion => "advection_diffusion",
            PdeKind::Burgers => "burgers",
            PdeKind::Fisher => "fisher",
            PdeKind::Kdv => "kdv",
            PdeKind::Custom => "custom",
        }
    }
}

/// One right-hand-side term `C(x, t) f(u)`.
#[derive(Debug, Clone)]
pub struct RhsTerm {
    pub feature: FeatureSpec,
    pub coeff: CoefficientField,
}

type InitialFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct InitialCondition {
    f: Arc<InitialFn>,
    pub label: String,
}

impl InitialCondition {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), label: label.into() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialCondition").field("label", &self.label).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub kind: PdeKind,
    pub grid: Grid,
    pub initial: InitialCondition,
    pub terms: Vec<RhsTerm>,
    /// Named coefficient functions as they appear in the unexpanded equation.
    pub coeffs: Vec<CoefficientField>,
}

impl PdeProblem {
    pub fn new(kind: PdeKind, grid: Grid, initial: InitialCondition, terms: Vec<RhsTerm>) -> Result<Self> {
        grid.validate()?;
        Ok(Self { kind, grid, initial, terms, coeffs: Vec::new() })
    }

    pub fn true_support(&self) -> Vec<FeatureSpec> {
        let mut s: Vec<FeatureSpec> = self.terms.iter().map(|t| t.feature.clone()).collect();
        s.sort();
        s
    }

    pub fn true_coefficient(&self, feature: &FeatureSpec) -> Option<&CoefficientField> {
        self.terms.iter().find(|t| &t.feature == feature).map(|t| &t.coeff)
    }

    pub fn with_grid(mut self, grid: Grid) -> Result<Self> {
        grid.validate()?;
        self.grid = grid;
        Ok(self)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "advection_diffusion" => make_advection_diffusion(),
            "burgers" => make_burgers(),
            "fisher" => make_fisher(),
            "kdv" => make_kdv(),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset `{other}`; available presets: {}",
                PdeKind::PRESETS.join(", ")
            ))),
        }
    }
}

fn term(label: &str, coeff: CoefficientField) -> Result<RhsTerm> {
    Ok(RhsTerm { feature: FeatureSpec::parse(label)?, coeff })
}

/// `u_t = (a(x) u)_x + 0.1 u_xx` with `a(x) = -1.5 + cos(2 pi x / 5)`.
pub fn make_advection_diffusion() -> Result<PdeProblem> {
    let grid = Grid::new(-5.0, 5.0, 0.0, 5.0, 256, 256)?;
    let w = 2.0 * PI / 5.0;
    let a = CoefficientField::new("a", move |x, _| -1.5 + (w * x).cos());
    let da = CoefficientField::new("a'", move |x, _| -w * (w * x).sin());
    let terms = vec![
        term("u", da)?,
        term("u_x", a.clone())?,
        term("u_xx", CoefficientField::constant("b", 0.1))?,
    ];
    let initial = InitialCondition::new("cos(2 pi x / 5)", move |x| (w * x).cos());
    let mut p = PdeProblem::new(PdeKind::AdvectionDiffusion, grid, initial, terms)?;
    p.coeffs = vec![a];
    Ok(p)
}

pub fn burgers_initial(x: f64) -> f64 {
    (PI * (2.0 * x - 0.1)).sin()
        + (PI * (5.0 * x - 0.2)).cos()
        + (PI * (3.0 * x - 0.3)).cos() * (PI * (x + 0.1)).cos()
        + (PI * (4.0 * x + 0.5)).sin()
        + 5.0
}

/// `u_t = a(x, t) u u_x + b(t) u_xx`.
pub fn make_burgers() -> Result<PdeProblem> {
    let grid = Grid::new(-2.0, 2.0, 0.0, 0.02, 256, 256)?;
    let t_max = grid.t_max;
    let a = CoefficientField::new("a", move |x, t| {
        4.0 * (1.0 + tau(t, Sign::Plus, 10.0, t_max / 3.0, t_max)) * (2.0 + (PI * x).sin())
    });
    let b = CoefficientField::new("b", move |_, t| 0.8 * (1.0 + tau(t, Sign::Minus, 10.0, t_max / 2.0, t_max)));
    let terms = vec![term("u*u_x", a.clone())?, term("u_xx", b.clone())?];
    let initial = InitialCondition::new("burgers", burgers_initial);
    let mut p = PdeProblem::new(PdeKind::Burgers, grid, initial, terms)?;
    p.coeffs = vec![a, b];
    Ok(p)
}

pub fn fisher_initial(x: f64) -> f64 {
    5.0 * (-x * x).exp()
        + 3.0 * (-(2.0 * x + 4.0).powi(2)).exp()
        + 2.0 * (-(3.0 * x - 3.0).powi(2)).exp()
        + 4.0 * (-(2.0 * x + 8.0).powi(2)).exp()
        + (4.0 * (x + 1.0) * PI / 10.0).cos()
}

/// `u_t = 0.5 u_xx + a(t) u (1 - u)`, expanded into `u`, `u*u`, `u_xx`.
pub fn make_fisher() -> Result<PdeProblem> {
    let grid = Grid::new(-5.0, 5.0, 0.0, 0.8, 256, 512)?;
    let t_max = grid.t_max;
    let rate = move |t: f64| {
        1.0 + tau(t, Sign::Minus, 10.0, t_max / 3.0, t_max) + tau(t, Sign::Plus, 10.0, 2.0 * t_max / 3.0, t_max)
    };
    let a = CoefficientField::new("a", move |_, t| rate(t));
    let neg_a = CoefficientField::new("-a", move |_, t| -rate(t));
    let terms = vec![
        term("u", a.clone())?,
        term("u_xx", CoefficientField::constant("b", 0.5))?,
        term("u*u", neg_a)?,
    ];
    let initial = InitialCondition::new("fisher", fisher_initial);
    let mut p = PdeProblem::new(PdeKind::Fisher, grid, initial, terms)?;
    p.coeffs = vec![a];
    Ok(p)
}

/// Fourier modes `(wavenumber index, cos amplitude, sin amplitude)` of the
/// default KdV initial profile on a period of 4.
pub const KDV_DEFAULT_MODES: [(u32, f64, f64); 5] =
    [(1, 1.0, 0.0), (2, 0.0, 0.5), (3, 0.25, 0.0), (5, 0.0, 0.2), (7, 0.1, 0.0)];

/// `u_t = a(x, t) u u_x + b(x, t) u_xxx` with the default initial profile.
pub fn make_kdv() -> Result<PdeProblem> {
    make_kdv_with_modes(&KDV_DEFAULT_MODES)
}

/// KdV problem whose initial condition is
/// `sum_j c_j cos(2 pi k_j x / L) + s_j sin(2 pi k_j x / L)`.
pub fn make_kdv_with_modes(modes: &[(u32, f64, f64)]) -> Result<PdeProblem> {
    let grid = Grid::new(-2.0, 2.0, 0.0, 0.1, 256, 512)?;
    let t_max = grid.t_max;
    let a = CoefficientField::new("a", move |x, t| {
        0.5 * (2.0 + 0.3 * (PI * x / 2.0).cos()) * (1.0 + tau(t, Sign::Plus, 10.0, 0.05, t_max))
    });
    let b = CoefficientField::new("b", move |x, t| {
        0.01 * (0.5 + 0.1 * (PI * x / 2.0).sin()) * (1.0 + tau(t, Sign::Minus, 10.0, 0.05, t_max))
    });
    let terms = vec![term("u*u_x", a.clone())?, term("u_xxx", b.clone())?];
    let period = grid.period();
    let modes: Vec<(u32, f64, f64)> = modes.to_vec();
    let label = format!("fourier modes {modes:?}");
    let initial = InitialCondition::new(label, move |x| {
        modes
            .iter()
            .map(|&(k, c, s)| {
                let arg = 2.0 * PI * k as f64 * x / period;
                c * arg.cos() + s * arg.sin()
            })
            .sum()
    });
    let mut p = PdeProblem::new(PdeKind::Kdv, grid, initial, terms)?;
    p.coeffs = vec![a, b];
    Ok(p)
}

/// FFT-based differentiation on a periodic grid.
pub struct SpectralOps {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumbers in FFT order.
    k: Vec<f64>,
    /// 2/3-rule mask.
    keep: Vec<bool>,
    scratch: Vec<Complex64>,
}

impl SpectralOps {
    pub fn new(n: usize, period: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / period
            })
            .collect();
        let cutoff = n / 3;
        let keep = (0..n).map(|j| j.min(n - j) <= cutoff).collect();
        let scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Self { n, forward, inverse, k, keep, scratch }
    }

    pub fn fft(&mut self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process_with_scratch(&mut buf, &mut self.scratch);
        buf
    }

    pub fn ifft(&mut self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process_with_scratch(&mut buf, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    /// `d^order u / dx^order` from the spectrum of `u`.
    pub fn derivative_from_spectrum(&mut self, spectrum: &[Complex64], order: usize) -> Vec<f64> {
        if order == 0 {
            return self.ifft(spectrum.to_vec());
        }
        let n = self.n;
        let buf = spectrum
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                if n % 2 == 0 && j == n / 2 && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                let ik = Complex64::new(0.0, self.k[j]);
                c * ik.powu(order as u32)
            })
            .collect();
        self.ifft(buf)
    }

    pub fn derivative(&mut self, u: &[f64], order: usize) -> Vec<f64> {
        let s = self.fft(u);
        self.derivative_from_spectrum(&s, order)
    }

    /// Zeroes the upper third of the spectrum.
    pub fn dealias(&mut self, v: &[f64]) -> Vec<f64> {
        let mut s = self.fft(v);
        for (c, &keep) in s.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.ifft(s)
    }

    pub fn max_wavenumber(&self) -> f64 {
        let cutoff = self.n / 3;
        self.k[cutoff.min(self.n - 1)].abs()
    }
}

struct Rhs<'a> {
    problem: &'a PdeProblem,
    ops: SpectralOps,
    xs: Vec<f64>,
    max_order: usize,
}

impl Rhs<'_> {
    fn eval(&mut self, u: &[f64], t: f64) -> Vec<f64> {
        let spectrum = self.ops.fft(u);
        let mut derivs: Vec<Option<Vec<f64>>> = vec![None; self.max_order + 1];
        let mut out = vec![0.0; u.len()];
        for term in &self.problem.terms {
            for &o in &term.feature.factors {
                if derivs[o].is_none() {
                    derivs[o] = Some(if o == 0 { u.to_vec() } else { self.ops.derivative_from_spectrum(&spectrum, o) });
                }
            }
            for (i, (o, x)) in out.iter_mut().zip(&self.xs).enumerate() {
                let mut v = term.coeff.eval(*x, t);
                for &f in &term.feature.factors {
                    v *= derivs[f].as_ref().expect("computed above")[i];
                }
                *o += v;
            }
        }
        self.ops.dealias(&out)
    }
}

/// Substep count from a spectral-radius estimate of the right-hand side.
///
/// Each term contributes `max|C| * max|u|^(factors - 1) * k^order` with `k`
/// the largest retained wavenumber; the RK4 step is kept below half the
/// inverse of the sum. Stability alone would allow twice that step, but the
/// time-stepping error would then reach 1e-6 on the Fisher preset.
pub fn default_substeps(problem: &PdeProblem) -> usize {
    let grid = problem.grid;
    let ops = SpectralOps::new(grid.nx, grid.period());
    let k = ops.max_wavenumber();
    let amp = (0..grid.nx).map(|i| problem.initial.eval(grid.x(i)).abs()).fold(0.0, f64::max).max(1.0);
    let samples_t = 16;
    let mut rho = 0.0;
    for term in &problem.terms {
        let mut cmax: f64 = 0.0;
        for s in 0..=samples_t {
            let t = grid.t_min + (grid.t_max - grid.t_min) * s as f64 / samples_t as f64;
            for i in 0..grid.nx {
                cmax = cmax.max(term.coeff.eval(grid.x(i), t).abs());
            }
        }
        let factors = term.feature.factors.len();
        let order: usize = term.feature.factors.iter().sum();
        rho += cmax * amp.powi(factors.saturating_sub(1) as i32) * k.powi(order.max(1) as i32);
    }
    ((2.0 * grid.dt() * rho).ceil() as usize).max(1)
}

/// Integrates the problem and samples it on the output grid.
pub fn solve(problem: &PdeProblem, substeps: Option<usize>) -> Result<Trajectory> {
    let grid = problem.grid;
    let steps = substeps.unwrap_or_else(|| default_substeps(problem));
    if steps == 0 {
        return Err(Error::InvalidArgument("substeps must be positive".into()));
    }
    let xs: Vec<f64> = (0..grid.nx).map(|i| grid.x(i)).collect();
    let max_order = problem.terms.iter().filter_map(|t| t.feature.max_order()).max().unwrap_or(0);
    let mut rhs = Rhs { problem, ops: SpectralOps::new(grid.nx, grid.period()), xs: xs.clone(), max_order };
    // Modes above the 2/3 cutoff never evolve, so they are removed up front.
    let u0: Vec<f64> = xs.iter().map(|&x| problem.initial.eval(x)).collect();
    let mut u = rhs.ops.dealias(&u0);
    let mut values = Mat::<f64>::zeros(grid.nx, grid.nt);
    for (i, v) in u.iter().enumerate() {
        values[(i, 0)] = *v;
    }
    let h = grid.dt() / steps as f64;
    let axpy = |u: &[f64], k: &[f64], s: f64| -> Vec<f64> { u.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for n in 1..grid.nt {
        let t0 = grid.t(n - 1);
        for s in 0..steps {
            let t = t0 + s as f64 * h;
            let k1 = rhs.eval(&u, t);
            let k2 = rhs.eval(&axpy(&u, &k1, 0.5 * h), t + 0.5 * h);
            let k3 = rhs.eval(&axpy(&u, &k2, 0.5 * h), t + 0.5 * h);
            let k4 = rhs.eval(&axpy(&u, &k3, h), t + h);
            for i in 0..u.len() {
                u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: grid.t(n) });
        }
        for (i, v) in u.iter().enumerate() {
            values[(i, n)] = *v;
        }
    }
    Trajectory::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_mode() {
        let n = 64;
        let l = 4.0;
        let mut ops = SpectralOps::new(n, l);
        let k = 2.0 * PI * 3.0 / l;
        let xs: Vec<f64> = (0..n).map(|i| -2.0 + l * i as f64 / n as f64).collect();
        let u: Vec<f64> = xs.iter().map(|&x| (k * x).sin()).collect();
        let d3 = ops.derivative(&u, 3);
        for (x, d) in xs.iter().zip(d3) {
            assert!((d + k * k * k * (k * x).cos()).abs() < 1e-12 * k * k * k);
        }
    }

    #[test]
    fn preset_values() {
        let ad = make_advection_diffusion().unwrap();
        assert_eq!(ad.coeffs[0].eval(0.0, 0.0), -0.5);
        assert_eq!(ad.true_coefficient(&FeatureSpec::parse("u").unwrap()).unwrap().eval(0.0, 1.0), 0.0);
        let b = make_burgers().unwrap();
        let b0 = b.coeffs[1].eval(0.0, 0.0);
        assert!((b0 - 0.8 * (1.0 + 0.5 + 0.5 * 5.0f64.tanh())).abs() < 1e-15);
        assert!((b0 - 1.599_963_7).abs() < 1e-7);
        let kdv = make_kdv().unwrap();
        assert!((kdv.coeffs[1].eval(0.0, 0.05) - 0.0075).abs() < 1e-15);
        assert!(PdeProblem::preset("ks").is_err());
    }

    #[test]
    fn burgers_initial_at_zero() {
        let expected = (-0.1 * PI).sin() + (-0.2 * PI).cos() + (-0.3 * PI).cos() * (0.1 * PI).cos() + (0.5 * PI).sin() + 5.0;
        assert!((burgers_initial(0.0) - expected).abs() < 1e-15);
    }
}
