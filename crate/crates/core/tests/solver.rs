mod common;

use std::f64::consts::PI;

use common::{heat_relative_error, max_diff, self_convergence};
use gpident_core::simulate::{self, PdeKind, PdeProblem};
use gpident_core::trajdata::{Grid, Trajectory};

#[test]
fn heat_equation_matches_analytic_solution() {
    let e = heat_relative_error();
    assert!(e < 1e-6, "relative error {e}");
}

#[test]
fn presets_converge_under_substep_doubling() {
    for name in PdeKind::PRESETS {
        let d = self_convergence(name);
        assert!(d < 1e-7, "{name}: max difference {d}");
    }
}

/// Method of lines with 4th order central differences and classic RK4.
fn finite_difference_advection_diffusion(grid: Grid, substeps: usize) -> Trajectory {
    let w = 2.0 * PI / 5.0;
    let n = grid.nx;
    let dx = grid.dx();
    let xs: Vec<f64> = (0..n).map(|i| grid.x(i)).collect();
    let a: Vec<f64> = xs.iter().map(|&x| -1.5 + (w * x).cos()).collect();
    let rhs = |u: &[f64]| -> Vec<f64> {
        let au: Vec<f64> = u.iter().zip(&a).map(|(u, a)| u * a).collect();
        let at = |v: &[f64], i: isize| v[i.rem_euclid(n as isize) as usize];
        (0..n as isize)
            .map(|i| {
                let d1 = (-at(&au, i + 2) + 8.0 * at(&au, i + 1) - 8.0 * at(&au, i - 1) + at(&au, i - 2)) / (12.0 * dx);
                let d2 = (-at(u, i + 2) + 16.0 * at(u, i + 1) - 30.0 * at(u, i) + 16.0 * at(u, i - 1) - at(u, i - 2))
                    / (12.0 * dx * dx);
                d1 + 0.1 * d2
            })
            .collect()
    };
    let mut u: Vec<f64> = xs.iter().map(|&x| (w * x).cos()).collect();
    let mut out = vec![u.clone()];
    let h = grid.dt() / substeps as f64;
    let axpy = |u: &[f64], k: &[f64], s: f64| -> Vec<f64> { u.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 1..grid.nt {
        for _ in 0..substeps {
            let k1 = rhs(&u);
            let k2 = rhs(&axpy(&u, &k1, 0.5 * h));
            let k3 = rhs(&axpy(&u, &k2, 0.5 * h));
            let k4 = rhs(&axpy(&u, &k3, h));
            for i in 0..n {
                u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(u.clone());
    }
    Trajectory::from_fn(grid, |x, t| {
        let i = ((x - grid.x_min) / dx).round() as usize;
        let j = ((t - grid.t_min) / grid.dt()).round() as usize;
        out[j][i]
    })
    .unwrap()
}

#[test]
fn advection_diffusion_agrees_with_finite_differences() {
    let p = PdeProblem::preset("advection_diffusion").unwrap();
    let spectral = simulate::solve(&p, None).unwrap();
    let fd = finite_difference_advection_diffusion(p.grid, 8);
    let d = max_diff(&spectral, &fd);
    assert!(d < 1e-4, "max difference {d}");
}
