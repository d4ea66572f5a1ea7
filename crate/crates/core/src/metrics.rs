//! Coefficient errors, support accuracy and forward-simulation error.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::dictionary::FeatureSpec;
use crate::selection::IdentifiedModel;
use crate::simulate::{self, PdeKind, PdeProblem, RhsTerm};
use crate::trajdata::{CoefficientField, Grid, Trajectory};
use crate::{Error, Result};

/// `|A & B| / |A | B|`; two empty sets count as identical.
pub fn jaccard<T: Ord>(estimated: &[T], truth: &[T]) -> f64 {
    let a: BTreeSet<&T> = estimated.iter().collect();
    let b: BTreeSet<&T> = truth.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Relative L1 error in percent over the time samples `times` of `grid`.
pub fn rel_l1_error_on(
    estimated: &CoefficientField,
    truth: &CoefficientField,
    grid: &Grid,
    times: Range<usize>,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for n in times {
        let t = grid.t(n);
        for i in 0..grid.nx {
            let x = grid.x(i);
            let c = truth.eval(x, t);
            num += (estimated.eval(x, t) - c).abs();
            den += c.abs();
        }
    }
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(100.0 * num / den)
}

/// Relative L1 error in percent over the whole grid.
pub fn rel_l1_error(estimated: &CoefficientField, truth: &CoefficientField, grid: &Grid) -> Result<f64> {
    rel_l1_error_on(estimated, truth, grid, 0..grid.nt)
}

/// Relative L1 difference of two trajectories on the same grid, in percent.
pub fn trajectory_error(simulated: &Trajectory, reference: &Trajectory) -> Result<f64> {
    if simulated.grid != reference.grid {
        return Err(Error::InvalidArgument("trajectories live on different grids".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, r) in simulated.samples().zip(reference.samples()) {
        num += (s - r).abs();
        den += r.abs();
    }
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(100.0 * num / den)
}

/// Forward-solves the identified model from the problem's initial condition
/// on the problem's grid.
pub fn simulate_identified(model: &IdentifiedModel, problem: &PdeProblem, substeps: Option<usize>) -> Result<Trajectory> {
    let terms = model.terms().into_iter().map(|(feature, coeff)| RhsTerm { feature, coeff }).collect();
    let custom = PdeProblem::new(PdeKind::Custom, problem.grid, problem.initial.clone(), terms)?;
    simulate::solve(&custom, substeps)
}

/// Coefficient error of one true term.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureError {
    pub label: String,
    /// Over the time samples used for identification.
    pub interior: f64,
    pub full: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub per_feature_errors: Vec<FeatureError>,
    pub jaccard: f64,
    pub trajectory_error: Option<f64>,
    pub runtime_seconds: f64,
    pub config_fingerprint: String,
}

/// Coefficient errors of every true term (a missed term scores 100%) and
/// the support Jaccard index.
pub fn evaluate_coefficients(
    model: &IdentifiedModel,
    problem: &PdeProblem,
    interior: Range<usize>,
) -> Result<(Vec<FeatureError>, f64)> {
    let found: Vec<FeatureSpec> = model.support.iter().map(|&g| model.specs[g].clone()).collect();
    let truth = problem.true_support();
    let j = jaccard(&found, &truth);
    let grid = problem.grid;
    let mut errors = Vec::new();
    for t in &problem.terms {
        let est = match model.specs.iter().position(|s| *s == t.feature) {
            Some(g) if model.support.contains(&g) => model.coefficient_field(g),
            _ => CoefficientField::constant(t.feature.label(), 0.0),
        };
        errors.push(FeatureError {
            label: t.feature.label(),
            interior: rel_l1_error_on(&est, &t.coeff, &grid, interior.clone())?,
            full: rel_l1_error(&est, &t.coeff, &grid)?,
        });
    }
    Ok((errors, j))
}
