//! Reference implementations shared by the property tests and the acceptance
//! suite.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use faer::Mat;
use gpident_core::bspline::BSplineBasis1D;
use gpident_core::dictionary::FeatureSpec;
use gpident_core::gpsp::GroupSystem;
use gpident_core::pipeline::{build_system, IdentifyConfig};
use gpident_core::simulate::{self, default_substeps, InitialCondition, PdeKind, PdeProblem, RhsTerm};
use gpident_core::trajdata::{CoefficientField, Grid, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest deviation of the basis sum from one on `points + 1` uniform samples of [0, 1].
pub fn unity_error(basis: &BSplineBasis1D, points: usize) -> f64 {
    (0..=points)
        .map(|s| {
            let z = s as f64 / points as f64;
            let sum: f64 = basis.eval_all(z).unwrap().iter().sum();
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Worst partition-of-unity error over `(l, p)` in {4..12} x {1..4}, both boundary modes.
pub fn worst_unity_error() -> f64 {
    let mut worst: f64 = 0.0;
    for l in 4..=12 {
        for p in 1..=4 {
            worst = worst.max(unity_error(&BSplineBasis1D::periodic(0.0, 1.0, l, p).unwrap(), 997));
            worst = worst.max(unity_error(&BSplineBasis1D::neumann(0.0, 1.0, l, p).unwrap(), 997));
        }
    }
    worst
}

/// Smoothing weights of a least-squares polynomial fit evaluated at the
/// window centre: first row of the pseudo-inverse of the Vandermonde matrix.
pub fn savgol_oracle(window: usize, degree: usize) -> Vec<f64> {
    let h = (window / 2) as i64;
    let v = DMatrix::from_fn(window, degree + 1, |r, c| ((r as i64 - h) as f64).powi(c as i32));
    let pinv = (v.transpose() * &v).try_inverse().unwrap() * v.transpose();
    pinv.row(0).iter().copied().collect()
}

/// Every multiset of at most `s` factors drawn from `0..=d`, as sorted factor lists.
pub fn brute_force_dictionary(d: usize, s: usize) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    let base = d + 1;
    for len in 0..=s {
        for code in 0..base.pow(len as u32) {
            let mut f: Vec<usize> = (0..len).map(|i| code / base.pow(i as u32) % base).collect();
            f.sort();
            out.insert(f);
        }
    }
    out
}

/// Random group system with `k` planted groups and uniform noise of size `noise`.
pub fn random_system(seed: u64, rows: usize, groups: usize, width: usize, k: usize, noise: f64) -> (GroupSystem, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Mat::from_fn(rows, groups * width, |_, _| rng.random_range(-1.0..1.0));
    let planted = pick(&mut rng, groups, k);
    let mut y = planted_signal(&mut rng, &a, &planted, width);
    for yr in &mut y {
        *yr += noise * rng.random_range(-1.0..1.0);
    }
    (GroupSystem::new(a, y, width).unwrap(), planted)
}

fn pick(rng: &mut ChaCha8Rng, groups: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..groups).collect();
    for i in 0..k {
        let j = rng.random_range(i..groups);
        all.swap(i, j);
    }
    all.truncate(k);
    all.sort();
    all
}

fn planted_signal(rng: &mut ChaCha8Rng, a: &Mat<f64>, planted: &[usize], width: usize) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for &g in planted {
        for m in 0..width {
            let c: f64 = rng.random_range(0.5..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            for (r, yr) in y.iter_mut().enumerate() {
                *yr += c * a[(r, g * width + m)];
            }
        }
    }
    y
}

/// Instance for the oracle comparison: `G` in 4..=8, `M` in 1..=3, planted
/// `k` in 1..=3, uniform noise scaled to an SNR in [20, 40] dB.
pub struct OracleInstance {
    pub system: GroupSystem,
    pub planted: Vec<usize>,
    pub snr_db: f64,
}

pub fn oracle_instance(seed: u64) -> OracleInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = rng.random_range(4..=8);
    let width = rng.random_range(1..=3);
    let k = rng.random_range(1..=3usize).min(groups - 1);
    let rows = 60;
    let a = Mat::from_fn(rows, groups * width, |_, _| rng.random_range(-1.0..1.0));
    let planted = pick(&mut rng, groups, k);
    let signal = planted_signal(&mut rng, &a, &planted, width);
    let snr_db = rng.random_range(20.0..40.0);
    let noise: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ns = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ss = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = ss / ns / 10f64.powf(snr_db / 20.0);
    let y = signal.iter().zip(&noise).map(|(s, n)| s + scale * n).collect();
    OracleInstance { system: GroupSystem::new(a, y, width).unwrap(), planted, snr_db }
}

/// Classic subspace pursuit on unit-norm columns.
pub fn subspace_pursuit(a: &DMatrix<f64>, y: &DVector<f64>, k: usize, iter_max: usize) -> Vec<usize> {
    let top = |scores: Vec<(usize, f64)>| -> Vec<usize> {
        let mut s = scores;
        s.sort_by(|p, q| q.1.partial_cmp(&p.1).unwrap().then(p.0.cmp(&q.0)));
        let mut t: Vec<usize> = s.into_iter().take(k).map(|(i, _)| i).collect();
        t.sort();
        t
    };
    let fit = |t: &[usize]| -> (DVector<f64>, DVector<f64>) {
        let sub = a.select_columns(t);
        let x = sub.clone().svd(true, true).solve(y, 1e-12).unwrap();
        let r = y - &sub * &x;
        (x, r)
    };
    let corr = |r: &DVector<f64>| (a.transpose() * r).iter().map(|v| v.abs()).enumerate().collect::<Vec<_>>();
    let mut support = top(corr(y));
    let (_, mut r) = fit(&support);
    for _ in 0..iter_max {
        let candidates: Vec<(usize, f64)> = corr(&r).into_iter().filter(|(i, _)| !support.contains(i)).collect();
        let mut union = support.clone();
        union.extend(top(candidates));
        union.sort();
        let (x, _) = fit(&union);
        let shrunk = top(union.iter().enumerate().map(|(j, &i)| (i, x[j].abs())).collect());
        let (_, r_new) = fit(&shrunk);
        if r_new.norm() > r.norm() {
            break;
        }
        let stable = shrunk == support;
        support = shrunk;
        r = r_new;
        if stable || r.norm() < 1e-12 * y.norm() {
            break;
        }
    }
    support
}

/// Width-1 system with unit-norm columns, as a `GroupSystem` and as nalgebra values.
pub fn unit_column_system(seed: u64, groups: usize, k: usize) -> (GroupSystem, DMatrix<f64>, DVector<f64>) {
    let (raw, _) = random_system(seed, 50, groups, 1, k, 0.2);
    let rows = raw.matrix().nrows();
    let mut a = DMatrix::from_fn(rows, groups, |r, c| raw.matrix()[(r, c)]);
    for mut col in a.column_iter_mut() {
        let n = col.norm();
        col /= n;
    }
    let y = DVector::from_column_slice(raw.response());
    let sys = GroupSystem::new(Mat::from_fn(rows, groups, |r, c| a[(r, c)]), y.iter().copied().collect(), 1).unwrap();
    (sys, a, y)
}

/// Relative L1 error of the spectral solver on `u_t = nu u_xx` against the
/// exact decay of two Fourier modes.
pub fn heat_relative_error() -> f64 {
    let nu = 0.3;
    let grid = Grid::new(0.0, 2.0, 0.0, 1.0, 64, 41).unwrap();
    let w = PI;
    let init = InitialCondition::new("sin + cos", move |x| (w * x).sin() + 0.5 * (3.0 * w * x).cos());
    let term = RhsTerm { feature: FeatureSpec::parse("u_xx").unwrap(), coeff: CoefficientField::constant("nu", nu) };
    let p = PdeProblem::new(PdeKind::Custom, grid, init, vec![term]).unwrap();
    let traj = simulate::solve(&p, None).unwrap();
    let exact = Trajectory::from_fn(grid, |x, t| {
        (-nu * w * w * t).exp() * (w * x).sin() + 0.5 * (-9.0 * nu * w * w * t).exp() * (3.0 * w * x).cos()
    })
    .unwrap();
    let num: f64 = traj.samples().zip(exact.samples()).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = exact.samples().map(f64::abs).sum();
    num / den
}

pub fn max_diff(a: &Trajectory, b: &Trajectory) -> f64 {
    a.samples().zip(b.samples()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Max-norm change of a preset trajectory when the default substep count doubles.
pub fn self_convergence(preset: &str) -> f64 {
    let p = PdeProblem::preset(preset).unwrap();
    let s = default_substeps(&p);
    let a = simulate::solve(&p, Some(s)).unwrap();
    let b = simulate::solve(&p, Some(2 * s)).unwrap();
    max_diff(&a, &b)
}

/// `u_t = a u_x` sampled from `u = f(x + a t)` with `f = offset + sin + cos`,
/// dictionary `{u_x, u*u_x}` and a 5 x 5 spline basis. For `|offset| >= 2`
/// the trajectory is nowhere zero, so `u_t = (a / u) u u_x` fits the data too.
pub fn transport_system(offset: f64, a: f64) -> GroupSystem {
    let grid = Grid::new(-2.0, 2.0, 0.0, 1.0, 128, 64).unwrap();
    let f = move |z: f64| offset + (PI * z / 2.0).sin() + 0.3 * (PI * z).cos();
    let traj = Trajectory::from_fn(grid, |x, t| f(x + a * t)).unwrap();
    let cfg = IdentifyConfig {
        dictionary: Some(vec![FeatureSpec::parse("u_x").unwrap(), FeatureSpec::parse("u*u_x").unwrap()]),
        space_bases: 5,
        time_bases: 5,
        ..Default::default()
    };
    let sys = build_system(&traj, &cfg).unwrap();
    assert_eq!(sys.labels(), ["u_x", "u*u_x"]);
    GroupSystem::from_feature_system(&sys).unwrap()
}
