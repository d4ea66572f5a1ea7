//! Sparsity-level selection by reduction in residual, and reconstruction of
//! the coefficient fields of the selected model.
//!
//! For `k = 1..K_max` a group-sparse solution is computed independently.
//! With `R_k` the squared residual on the normalized system, the score
//! `s_k = (R_k - R_{k+L}) / (L R_1)` measures how much adding `L` more groups
//! still helps; the selected level is the first `k` with `s_k < rho`. Levels
//! above `K_max - L` have no score and are never selected.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;

use crate::bspline::BasisSet;
use crate::dictionary::{FeatureSpec, FeatureSystem};
use crate::gpsp::{self, GroupSparseSolution, GroupSystem, SolverOptions};
use crate::linalg;
use crate::trajdata::CoefficientField;
use crate::{Error, Result};

pub const DEFAULT_K_MAX: usize = 15;
pub const DEFAULT_RHO: f64 = 0.015;
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePath {
    /// Solution for sparsity level `k` at index `k - 1`.
    pub solutions: Vec<GroupSparseSolution>,
    /// `R_k = ||A c(k) - y||^2` on the normalized system.
    pub residuals: Vec<f64>,
    /// `s_k` for `k = 1..K_max - L`, once computed.
    pub scores: Option<Vec<f64>>,
    pub window: Option<usize>,
    pub rho: Option<f64>,
    pub k_star: Option<usize>,
}

impl CandidatePath {
    pub fn k_max(&self) -> usize {
        self.solutions.len()
    }

    pub fn solution(&self, k: usize) -> Option<&GroupSparseSolution> {
        k.checked_sub(1).and_then(|i| self.solutions.get(i))
    }

    pub fn selected(&self) -> Option<&GroupSparseSolution> {
        self.k_star.and_then(|k| self.solution(k))
    }
}

/// Solves every sparsity level `1..=k_max` independently.
pub fn candidate_path(sys: &GroupSystem, k_max: usize, opts: &SolverOptions) -> Result<CandidatePath> {
    if k_max == 0 || k_max > sys.groups() {
        return Err(Error::SparsityTooLarge { k: k_max, groups: sys.groups() });
    }
    let solutions = (1..=k_max).map(|k| gpsp::solve(sys, k, opts)).collect::<Result<Vec<_>>>()?;
    Ok(path_from_solutions(solutions))
}

pub fn path_from_solutions(solutions: Vec<GroupSparseSolution>) -> CandidatePath {
    let residuals = solutions.iter().map(|s| s.residual_norm * s.residual_norm).collect();
    CandidatePath { solutions, residuals, scores: None, window: None, rho: None, k_star: None }
}

/// `s_k = (R_k - R_{k+L}) / (L R_1)` for `k = 1..K_max - L`.
pub fn rr_score_values(residuals: &[f64], window: usize) -> Result<Vec<f64>> {
    let k_max = residuals.len();
    if window == 0 || window >= k_max {
        return Err(Error::SelectionWindow { window, k_max });
    }
    let r1 = residuals[0];
    if !(r1 > 0.0) {
        return Err(Error::DegenerateResidual);
    }
    let denom = window as f64 * r1;
    Ok((0..k_max - window).map(|i| (residuals[i] - residuals[i + window]) / denom).collect())
}

pub fn rr_scores(path: &mut CandidatePath, window: usize) -> Result<()> {
    path.scores = Some(rr_score_values(&path.residuals, window)?);
    path.window = Some(window);
    Ok(())
}

/// First `k` (one-based) with `s_k < rho`.
pub fn first_below(scores: &[f64], rho: f64) -> Option<usize> {
    scores.iter().position(|&s| s < rho).map(|i| i + 1)
}

/// Sets and returns `k*`; `None` when no score falls below `rho` or scores
/// have not been computed.
pub fn select_k(path: &mut CandidatePath, rho: f64) -> Option<usize> {
    path.rho = Some(rho);
    path.k_star = path.scores.as_deref().and_then(|s| first_below(s, rho));
    path.k_star
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconstructionMode {
    /// Refit on the raw (un-normalized) columns of the selected groups.
    #[default]
    LeastSquares,
    /// Divide each normalized coefficient by its column norm and multiply by
    /// `||y||`.
    Rescale,
}

/// Selected PDE: terms and their coefficient fields `sum_m c_{g,m} B_m`.
#[derive(Debug, Clone)]
pub struct IdentifiedModel {
    pub support: Vec<usize>,
    pub specs: Vec<FeatureSpec>,
    /// Raw-scale coefficients over all `G * M` columns.
    pub coeffs: Vec<f64>,
    pub width: usize,
    pub basis: BasisSet,
    pub mode: ReconstructionMode,
    /// `||A_raw c - y_raw|| / ||y_raw||`.
    pub relative_residual: f64,
    /// The restricted system was numerically rank deficient.
    pub rank_deficient: bool,
}

impl IdentifiedModel {
    pub fn labels(&self) -> Vec<String> {
        self.support.iter().map(|&g| self.specs[g].label()).collect()
    }

    pub fn group_coeffs(&self, g: usize) -> &[f64] {
        &self.coeffs[g * self.width..(g + 1) * self.width]
    }

    /// Coefficient of group `g` at `(x, t)`; `t` is clamped to the basis
    /// domain.
    pub fn eval(&self, g: usize, x: f64, t: f64) -> f64 {
        eval_expansion(&self.basis, self.group_coeffs(g), x, t)
    }

    pub fn coefficient_field(&self, g: usize) -> CoefficientField {
        let basis = self.basis.clone();
        let c: Arc<[f64]> = Arc::from(self.group_coeffs(g));
        CoefficientField::new(self.specs[g].label(), move |x, t| eval_expansion(&basis, &c, x, t))
    }

    /// `(feature, coefficient)` for every selected group.
    pub fn terms(&self) -> Vec<(FeatureSpec, CoefficientField)> {
        self.support.iter().map(|&g| (self.specs[g].clone(), self.coefficient_field(g))).collect()
    }
}

fn eval_expansion(basis: &BasisSet, c: &[f64], x: f64, t: f64) -> f64 {
    let k = &basis.time.knots;
    let t = t.clamp(k.start, k.end);
    let bx = basis.space.eval_all(x).unwrap_or_default();
    let bt = basis.time.eval_all(t).unwrap_or_default();
    let mut s = 0.0;
    for (m2, vt) in bt.iter().enumerate() {
        if *vt == 0.0 {
            continue;
        }
        for (m1, vx) in bx.iter().enumerate() {
            s += c[basis.index(m1, m2)] * vx * vt;
        }
    }
    s
}

/// Turns the selected solution into raw-scale coefficient fields.
pub fn reconstruct(sys: &FeatureSystem, solution: &GroupSparseSolution, mode: ReconstructionMode) -> Result<IdentifiedModel> {
    let width = sys.width;
    let groups = sys.groups();
    let cols: Vec<usize> = solution.support.iter().flat_map(|&g| sys.group_columns(g)).collect();
    let raw_cols = Mat::from_fn(sys.a.nrows(), cols.len(), |i, j| {
        let c = cols[j];
        let scale = if sys.normalized { sys.col_norms[c] } else { 1.0 };
        sys.a[(i, c)] * scale
    });
    let raw_y = sys.raw_y();
    let (x, rank_deficient) = match mode {
        ReconstructionMode::LeastSquares => {
            let deficient = linalg::orthonormal_basis(raw_cols.as_ref())?.ncols() < cols.len();
            (linalg::lstsq(raw_cols.as_ref(), &raw_y)?, deficient)
        }
        ReconstructionMode::Rescale => {
            let y_norm = if sys.normalized { sys.y_norm } else { 1.0 };
            let x = solution
                .coeffs
                .iter()
                .zip(&cols)
                .map(|(c, &j)| {
                    let n = if sys.normalized { sys.col_norms[j] } else { 1.0 };
                    c / n * y_norm
                })
                .collect();
            (x, false)
        }
    };
    let fit = linalg::matvec(raw_cols.as_ref(), &x);
    let res: Vec<f64> = raw_y.iter().zip(&fit).map(|(p, q)| p - q).collect();
    let relative_residual = linalg::norm(&res) / linalg::norm(&raw_y);
    let mut coeffs = vec![0.0; groups * width];
    for (v, &c) in x.iter().zip(&cols) {
        coeffs[c] = *v;
    }
    Ok(IdentifiedModel {
        support: solution.support.clone(),
        specs: sys.specs.clone(),
        coeffs,
        width,
        basis: sys.basis.clone(),
        mode,
        relative_residual,
        rank_deficient,
    })
}
