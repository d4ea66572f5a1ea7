//! End-to-end identification: feature system, candidate path, selection and
//! reconstruction.

use alloc::vec::Vec;

use crate::bspline::BasisSet;
use crate::dictionary::{self, FeatureSpec, FeatureSystem};
use crate::gpsp::{GroupSystem, SolverOptions};
use crate::sdd::SavGolFilter;
use crate::selection::{self, CandidatePath, IdentifiedModel, ReconstructionMode};
use crate::trajdata::Trajectory;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyConfig {
    /// Savitzky-Golay window; `0` disables smoothing.
    pub sdd_window: usize,
    pub sdd_degree: usize,
    pub max_deriv: usize,
    pub max_product: usize,
    /// Overrides the enumerated dictionary when set.
    pub dictionary: Option<Vec<FeatureSpec>>,
    pub space_bases: usize,
    pub time_bases: usize,
    pub spline_order: usize,
    /// Time samples dropped at each end; derived from the filter by default.
    pub trim: Option<usize>,
    pub k_max: usize,
    pub window: usize,
    pub rho: f64,
    pub solver: SolverOptions,
    pub reconstruction: ReconstructionMode,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            sdd_window: 0,
            sdd_degree: SavGolFilter::DEFAULT_DEGREE,
            max_deriv: 4,
            max_product: 3,
            dictionary: None,
            space_bases: 1,
            time_bases: 1,
            spline_order: 3,
            trim: None,
            k_max: selection::DEFAULT_K_MAX,
            window: selection::DEFAULT_WINDOW,
            rho: selection::DEFAULT_RHO,
            solver: SolverOptions::default(),
            reconstruction: ReconstructionMode::LeastSquares,
        }
    }
}

impl IdentifyConfig {
    pub fn filter(&self) -> Result<Option<SavGolFilter>> {
        if self.sdd_window == 0 {
            Ok(None)
        } else {
            SavGolFilter::new(self.sdd_window, self.sdd_degree).map(Some)
        }
    }

    pub fn features(&self) -> Result<Vec<FeatureSpec>> {
        match &self.dictionary {
            Some(d) => Ok(d.clone()),
            None => dictionary::enumerate_dictionary(self.max_deriv, self.max_product),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Identification {
    pub path: CandidatePath,
    /// `None` when no RR score falls below `rho`.
    pub model: Option<IdentifiedModel>,
    pub specs: Vec<FeatureSpec>,
    pub rows: usize,
    pub width: usize,
    pub trim: usize,
}

/// Builds the normalized feature system for `traj`.
pub fn build_system(traj: &Trajectory, cfg: &IdentifyConfig) -> Result<FeatureSystem> {
    let filter = cfg.filter()?;
    let specs = cfg.features()?;
    let data = dictionary::eval_features(traj, &specs, filter.as_ref(), cfg.trim)?;
    let basis = BasisSet::for_grid(&traj.grid, cfg.space_bases, cfg.time_bases, cfg.spline_order)?;
    dictionary::assemble(&data, &basis)
}

/// Candidate path, selection and reconstruction on a prepared system.
pub fn identify_system(sys: &FeatureSystem, cfg: &IdentifyConfig) -> Result<Identification> {
    let gs = GroupSystem::from_feature_system(sys)?;
    let mut path = selection::candidate_path(&gs, cfg.k_max, &cfg.solver)?;
    selection::rr_scores(&mut path, cfg.window)?;
    let model = match selection::select_k(&mut path, cfg.rho) {
        Some(_) => {
            let sol = path.selected().expect("selected level exists");
            Some(selection::reconstruct(sys, sol, cfg.reconstruction)?)
        }
        None => None,
    };
    Ok(Identification { path, model, specs: sys.specs.clone(), rows: sys.a.nrows(), width: sys.width, trim: sys.trim })
}

pub fn identify(traj: &Trajectory, cfg: &IdentifyConfig) -> Result<Identification> {
    let sys = build_system(traj, cfg)?;
    identify_system(&sys, cfg)
}
