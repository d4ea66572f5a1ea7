//! Group-sparse greedy solvers: group projected subspace pursuit (GPSP), the
//! block subspace pursuit (BSP) baseline and an exhaustive search oracle.
//!
//! Both pursuits alternate an expand step, which adds the `k` groups that
//! best explain the current residual, and a shrink step, which keeps the `k`
//! most important groups of a least-squares fit on the enlarged support.
//! GPSP scores groups by the angle between the residual and the group's
//! column space and ranks importance by the contribution `||F_g x_g||`; BSP
//! uses `||F_g^T r||` and `||x_g||` instead.
//!
//! A tall system is compressed once by a QR factorization of `[A | y]`.
//! Every quantity the solvers use (inner products, residual norms,
//! contributions) is preserved by the orthogonal factor, so all iterations
//! work on a square-sized matrix.

use alloc::vec;
use alloc::vec::Vec;

use faer::{Mat, MatRef};

use crate::dictionary::FeatureSystem;
use crate::linalg::{self, RowCompressor};
use crate::{Error, Result};

/// Relative residual norm treated as an exact fit.
pub const EXACT_FIT: f64 = 1e-12;
pub const DEFAULT_ITER_MAX: usize = 30;
/// Largest number of supports the exhaustive oracle will enumerate.
pub const ORACLE_BUDGET: u128 = 100_000;

const COMPRESS_BLOCK_ROWS: usize = 16384;

/// Regression problem with columns partitioned into equal-width groups.
#[derive(Debug, Clone)]
pub struct GroupSystem {
    a: Mat<f64>,
    y: Vec<f64>,
    width: usize,
    y_norm: f64,
    bases: Vec<Mat<f64>>,
}

impl GroupSystem {
    /// Uses `a` and `y` as given.
    pub fn new(a: Mat<f64>, y: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 || a.ncols() == 0 || a.ncols() % width != 0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} columns cannot be split into groups of width {width}",
                a.ncols()
            )));
        }
        if y.len() != a.nrows() {
            return Err(Error::InvalidArgument(alloc::format!(
                "response has {} rows, matrix has {}",
                y.len(),
                a.nrows()
            )));
        }
        let y_norm = linalg::norm(&y);
        if !(y_norm > 0.0) {
            return Err(Error::ZeroResponse);
        }
        let groups = a.ncols() / width;
        let bases = (0..groups)
            .map(|g| linalg::orthonormal_basis(a.as_ref().subcols(g * width, width)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { a, y, width, y_norm, bases })
    }

    /// Builds the equivalent compressed system from a (normalized) feature
    /// system.
    pub fn from_feature_system(sys: &FeatureSystem) -> Result<Self> {
        Self::compressed(sys.a.as_ref(), &sys.y, sys.width)
    }

    /// Replaces a tall `(a, y)` by `(R, [z; rho])` where
    /// `[a | y] = Q [[R, z], [0, rho]]`.
    pub fn compressed(a: MatRef<'_, f64>, y: &[f64], width: usize) -> Result<Self> {
        let (rows, n) = (a.nrows(), a.ncols());
        if y.len() != rows {
            return Err(Error::InvalidArgument(alloc::format!("response has {} rows, matrix has {rows}", y.len())));
        }
        if rows <= n + 1 {
            return Self::new(a.to_owned(), y.to_vec(), width);
        }
        let mut comp = RowCompressor::new(n + 1);
        let mut start = 0;
        while start < rows {
            let len = COMPRESS_BLOCK_ROWS.min(rows - start);
            let block = Mat::from_fn(len, n + 1, |i, j| if j < n { a[(start + i, j)] } else { y[start + i] });
            comp.push(block.as_ref())?;
            start += len;
        }
        let r = comp.finish();
        let a_c = r.as_ref().subcols(0, n).to_owned();
        let y_c: Vec<f64> = (0..=n).map(|i| r[(i, n)]).collect();
        Self::new(a_c, y_c, width)
    }

    pub fn groups(&self) -> usize {
        self.a.ncols() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn response_norm(&self) -> f64 {
        self.y_norm
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }

    pub fn block(&self, g: usize) -> MatRef<'_, f64> {
        self.a.as_ref().subcols(g * self.width, self.width)
    }

    fn columns(&self, support: &[usize]) -> Vec<usize> {
        support.iter().flat_map(|&g| g * self.width..(g + 1) * self.width).collect()
    }

    /// Least-squares fit of `y` on the groups in `support`; returns the
    /// coefficients (in support order) and the residual.
    pub fn fit(&self, support: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        if support.is_empty() {
            return Ok((Vec::new(), self.y.clone()));
        }
        let sub = linalg::select_columns(self.a.as_ref(), &self.columns(support));
        let x = linalg::lstsq(sub.as_ref(), &self.y)?;
        let fit = linalg::matvec(sub.as_ref(), &x);
        let r = self.y.iter().zip(&fit).map(|(p, q)| p - q).collect();
        Ok((x, r))
    }

    /// `|proj^T r| / (||proj|| ||r||)` with `proj` the projection of `r` onto
    /// the column space of group `g`; zero if the projection vanishes.
    pub fn projection_score(&self, r: &[f64], g: usize) -> Result<f64> {
        let rn = linalg::norm(r);
        if !(rn > 0.0) {
            return Err(Error::InvalidArgument("projection score of a zero vector".into()));
        }
        let coords = linalg::matvec_t(self.bases[g].as_ref(), r);
        let pn = linalg::norm(&coords);
        if pn == 0.0 {
            return Ok(0.0);
        }
        // proj^T r = ||proj||^2 for an orthogonal projection.
        Ok((pn * pn) / (pn * rn))
    }

    /// `||F_g^T r||`.
    pub fn correlation_norm(&self, r: &[f64], g: usize) -> f64 {
        linalg::norm(&linalg::matvec_t(self.block(g), r))
    }
}

/// `y - A_T A_T^+ y` computed with a rank-revealing solve.
pub fn residual(y: &[f64], a_t: MatRef<'_, f64>) -> Result<Vec<f64>> {
    linalg::residual(a_t, y)
}

/// Projection score of `r` against the column space of `block`.
pub fn projection_score(r: &[f64], block: MatRef<'_, f64>) -> Result<f64> {
    let rn = linalg::norm(r);
    if !(rn > 0.0) {
        return Err(Error::InvalidArgument("projection score of a zero vector".into()));
    }
    let q = linalg::orthonormal_basis(block)?;
    let pn = linalg::norm(&linalg::matvec_t(q.as_ref(), r));
    if pn == 0.0 {
        return Ok(0.0);
    }
    Ok(pn * pn / (pn * rn))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Gpsp,
    Bsp,
}

/// What the expand step scores groups against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpandTarget {
    /// The residual of the previous iterate.
    Residual,
    /// The response `y` itself, in every iteration.
    Response,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub iter_max: usize,
    pub expand: ExpandTarget,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { kind: SolverKind::Gpsp, iter_max: DEFAULT_ITER_MAX, expand: ExpandTarget::Residual }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The residual grew; the previous support was kept.
    ResidualIncrease,
    MaxIter,
    ExactFit,
    /// The support reached a fixed point, so further iterations would repeat.
    SupportStable,
    /// Exhaustive search.
    Enumerated,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ResidualIncrease => "residual_increase",
            Termination::MaxIter => "max_iter",
            Termination::ExactFit => "exact_fit",
            Termination::SupportStable => "support_stable",
            Termination::Enumerated => "enumerated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub support: Vec<usize>,
    pub residual_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSparseSolution {
    /// Selected groups in increasing order.
    pub support: Vec<usize>,
    /// `k * M` coefficients, block `j` belonging to `support[j]`.
    pub coeffs: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<IterationRecord>,
}

impl GroupSparseSolution {
    /// Coefficients scattered into a vector over all `groups * width` columns.
    pub fn full_coeffs(&self, groups: usize, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; groups * width];
        for (j, &g) in self.support.iter().enumerate() {
            out[g * width..(g + 1) * width].copy_from_slice(&self.coeffs[j * width..(j + 1) * width]);
        }
        out
    }

    pub fn group_coeffs(&self, g: usize, width: usize) -> Option<&[f64]> {
        let j = self.support.iter().position(|&s| s == g)?;
        Some(&self.coeffs[j * width..(j + 1) * width])
    }
}

/// Indices of the `k` largest scores; ties go to the smaller index.
fn top_k(mut scored: Vec<(usize, f64)>, k: usize) -> Vec<usize> {
    for s in &mut scored {
        if !s.1.is_finite() {
            s.1 = 0.0;
        }
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    let mut out: Vec<usize> = scored.into_iter().take(k).map(|(g, _)| g).collect();
    out.sort_unstable();
    out
}

fn check_k(sys: &GroupSystem, k: usize) -> Result<()> {
    if k == 0 || k > sys.groups() {
        return Err(Error::SparsityTooLarge { k, groups: sys.groups() });
    }
    Ok(())
}

fn expand_scores(sys: &GroupSystem, kind: SolverKind, target: &[f64], skip: &[usize]) -> Result<Vec<(usize, f64)>> {
    (0..sys.groups())
        .filter(|g| !skip.contains(g))
        .map(|g| {
            let s = match kind {
                SolverKind::Gpsp => sys.projection_score(target, g)?,
                SolverKind::Bsp => sys.correlation_norm(target, g),
            };
            Ok((g, s))
        })
        .collect()
}

fn shrink_scores(sys: &GroupSystem, kind: SolverKind, support: &[usize], x: &[f64]) -> Vec<(usize, f64)> {
    let m = sys.width();
    support
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            let xg = &x[j * m..(j + 1) * m];
            let s = match kind {
                SolverKind::Gpsp => linalg::norm(&linalg::matvec(sys.block(g), xg)),
                SolverKind::Bsp => linalg::norm(xg),
            };
            (g, s)
        })
        .collect()
}

/// Runs GPSP or BSP for sparsity level `k`.
pub fn solve(sys: &GroupSystem, k: usize, opts: &SolverOptions) -> Result<GroupSparseSolution> {
    check_k(sys, k)?;
    let y = sys.response();
    let tol = EXACT_FIT * sys.response_norm();

    let mut support = top_k(expand_scores(sys, opts.kind, y, &[])?, k);
    let (mut x, r) = sys.fit(&support)?;
    let mut r_norm = linalg::norm(&r);
    let mut r_prev = r;
    let mut trace = vec![IterationRecord { iteration: 0, support: support.clone(), residual_norm: r_norm, accepted: true }];

    let mut iterations = 0;
    let termination = loop {
        if r_norm <= tol {
            break Termination::ExactFit;
        }
        if iterations >= opts.iter_max {
            break Termination::MaxIter;
        }
        iterations += 1;

        let (target, skip): (&[f64], &[usize]) = match opts.expand {
            ExpandTarget::Residual => (&r_prev, &support),
            ExpandTarget::Response => (y, &[]),
        };
        let added = top_k(expand_scores(sys, opts.kind, target, skip)?, k);
        let mut enlarged = support.clone();
        for g in added {
            if !enlarged.contains(&g) {
                enlarged.push(g);
            }
        }
        enlarged.sort_unstable();
        let (xp, _) = sys.fit(&enlarged)?;
        let candidate = top_k(shrink_scores(sys, opts.kind, &enlarged, &xp), k);
        let (xc, rc) = sys.fit(&candidate)?;
        let rc_norm = linalg::norm(&rc);

        if rc_norm > r_norm {
            trace.push(IterationRecord { iteration: iterations, support: candidate, residual_norm: rc_norm, accepted: false });
            break Termination::ResidualIncrease;
        }
        trace.push(IterationRecord { iteration: iterations, support: candidate.clone(), residual_norm: rc_norm, accepted: true });
        let stable = candidate == support;
        support = candidate;
        x = xc;
        r_norm = rc_norm;
        r_prev = rc;
        if stable && r_norm > tol {
            break Termination::SupportStable;
        }
    };

    Ok(GroupSparseSolution { support, coeffs: x, residual_norm: r_norm, iterations, termination, trace })
}

pub fn gpsp_solve(sys: &GroupSystem, k: usize, iter_max: usize) -> Result<GroupSparseSolution> {
    solve(sys, k, &SolverOptions { kind: SolverKind::Gpsp, iter_max, ..SolverOptions::default() })
}

pub fn bsp_solve(sys: &GroupSystem, k: usize, iter_max: usize) -> Result<GroupSparseSolution> {
    solve(sys, k, &SolverOptions { kind: SolverKind::Bsp, iter_max, ..SolverOptions::default() })
}

/// `C(n, k)` without overflow for the sizes used here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Support of size `k` with the globally smallest residual, by enumeration.
/// Earlier supports (lexicographically) win ties.
pub fn exhaustive_oracle(sys: &GroupSystem, k: usize) -> Result<GroupSparseSolution> {
    check_k(sys, k)?;
    let g = sys.groups();
    let count = binomial(g, k);
    if count > ORACLE_BUDGET {
        return Err(Error::CombinatorialBudget { count, budget: ORACLE_BUDGET });
    }
    let mut subset: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    let mut visited = 0usize;
    loop {
        visited += 1;
        let (x, r) = sys.fit(&subset)?;
        let rn = linalg::norm(&r);
        if best.as_ref().map_or(true, |b| rn < b.2) {
            best = Some((subset.clone(), x, rn));
        }
        // Next k-subset in lexicographic order.
        let mut i = k;
        while i > 0 && subset[i - 1] == g - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    let (support, coeffs, residual_norm) = best.expect("at least one subset");
    Ok(GroupSparseSolution {
        support,
        coeffs,
        residual_norm,
        iterations: visited,
        termination: Termination::Enumerated,
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(56, 3), 27720);
        assert_eq!(binomial(56, 5), 3_819_816);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn top_k_ties_prefer_low_index() {
        assert_eq!(top_k(vec![(0, 1.0), (1, 2.0), (2, 2.0), (3, 2.0)], 2), vec![1, 2]);
        assert_eq!(top_k(vec![(4, f64::NAN), (2, 0.5)], 1), vec![2]);
    }

    #[test]
    fn planted_orthogonal_group() {
        // Five orthogonal groups of width 2 in R^10.
        let a = Mat::from_fn(10, 10, |i, j| if i == j { 1.0 } else { 0.0 });
        let y = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.6, 0.8, 0.0, 0.0];
        let sys = GroupSystem::new(a, y, 2).unwrap();
        let sol = gpsp_solve(&sys, 1, 30).unwrap();
        assert_eq!(sol.support, vec![3]);
        assert!(sol.residual_norm < 1e-14);
        assert_eq!(sol.termination, Termination::ExactFit);
    }

    #[test]
    fn oracle_enumerates_all_pairs() {
        let a = Mat::from_fn(12, 10, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 3.0 } else { 0.0 });
        let y: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let sys = GroupSystem::new(a, y, 2).unwrap();
        let sol = exhaustive_oracle(&sys, 2).unwrap();
        assert_eq!(sol.iterations, 10);
        let all = exhaustive_oracle(&sys, 5).unwrap();
        assert_eq!(all.support, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rejects_bad_k() {
        let a = Mat::from_fn(6, 4, |i, j| (i + j) as f64);
        let sys = GroupSystem::new(a, vec![1.0; 6], 2).unwrap();
        assert!(gpsp_solve(&sys, 3, 30).is_err());
        assert!(gpsp_solve(&sys, 0, 30).is_err());
        assert!(GroupSystem::new(Mat::zeros(6, 4), vec![0.0; 6], 2).is_err());
    }
}
