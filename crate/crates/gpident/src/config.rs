//! Run configuration.
//!
//! A run is described by one TOML file. Every key has a default, so an empty
//! file is valid (and identifies nothing until `data.preset` or `data.file`
//! is set). Sections and keys:
//!
//! ```toml
//! [data]
//! preset = "advection_diffusion"  # or: file = "traj.csv"
//! noise_percent = [0.0, 1.0]      # one run per level and seed
//! first_seed = 1
//! repetitions = 20                # seeds first_seed .. first_seed + repetitions
//! # seeds = [3, 7]                # explicit list, overrides the two above
//! # substeps = 40                 # RK4 substeps per output interval
//! # kdv_modes = [[1, 1.0, 0.0]]   # (wavenumber, cos, sin) for the kdv preset
//!
//! [sdd]
//! window = 15                     # 0 disables smoothing
//! degree = 2
//! smooth_clean = true             # false: skip smoothing when noise_percent = 0
//!
//! [dictionary]
//! max_deriv = 4
//! max_product = 3
//! # features = ["u", "u_x", "u*u_x"]
//!
//! [basis]
//! space = 7
//! time = 1
//! order = 3
//!
//! [selection]
//! k_max = 15
//! window = 5                      # L
//! rho = 0.015
//!
//! [solver]
//! kind = "gpsp"                   # or "bsp"
//! iter_max = 30
//! expand = "residual"             # or "response"
//!
//! [reconstruction]
//! mode = "least_squares"          # or "rescale"
//!
//! [evaluation]
//! region = "interior"             # headline coefficient error: "interior" or "full"
//! simulate = true                 # forward-simulate identified models
//!
//! [output]
//! dir = "out"
//! workers = 1
//! ```
//!
//! Keys can be overridden from the command line as `section.key=value`, where
//! `value` is a TOML literal (bare words are taken as strings).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gpident_core::dictionary::FeatureSpec;
use gpident_core::gpsp::{ExpandTarget, SolverKind, SolverOptions};
use gpident_core::simulate::{self, PdeProblem};
use gpident_core::{IdentifyConfig, ReconstructionMode, Trajectory};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub sdd: SddConfig,
    pub dictionary: DictionaryConfig,
    pub basis: BasisConfig,
    pub selection: SelectionConfig,
    pub solver: SolverConfig,
    pub reconstruction: ReconstructionConfig,
    pub evaluation: EvaluationConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    pub noise_percent: Vec<f64>,
    pub first_seed: u64,
    pub repetitions: usize,
    pub seeds: Option<Vec<u64>>,
    pub substeps: Option<usize>,
    pub kdv_modes: Option<Vec<(u32, f64, f64)>>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            preset: None,
            file: None,
            noise_percent: vec![0.0],
            first_seed: 1,
            repetitions: 1,
            seeds: None,
            substeps: None,
            kdv_modes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SddConfig {
    pub window: usize,
    pub degree: usize,
    /// When false, trajectories recorded as noise-free are not smoothed.
    pub smooth_clean: bool,
}

impl Default for SddConfig {
    fn default() -> Self {
        Self { window: 0, degree: 2, smooth_clean: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionaryConfig {
    pub max_deriv: usize,
    pub max_product: usize,
    pub features: Option<Vec<String>>,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self { max_deriv: 4, max_product: 3, features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub space: usize,
    pub time: usize,
    pub order: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { space: 1, time: 1, order: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub k_max: usize,
    pub window: usize,
    pub rho: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        use gpident_core::selection::{DEFAULT_K_MAX, DEFAULT_RHO, DEFAULT_WINDOW};
        Self { k_max: DEFAULT_K_MAX, window: DEFAULT_WINDOW, rho: DEFAULT_RHO }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Gpsp,
    Bsp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expand {
    #[default]
    Residual,
    Response,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: Solver,
    pub iter_max: usize,
    pub expand: Expand,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self { kind: Solver::Gpsp, iter_max: d.iter_max, expand: Expand::Residual }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    #[default]
    LeastSquares,
    Rescale,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    pub mode: Reconstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    #[default]
    Interior,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub region: Region,
    pub simulate: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { region: Region::Interior, simulate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), workers: 1 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Parses `text` after applying `section.key=value` overrides.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).context("invalid TOML")?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml_with(&text, overrides).with_context(|| format!("in {}", path.display()))?;
        // Relative trajectory paths are resolved against the config file.
        if let (Some(file), Some(dir)) = (&cfg.data.file, path.parent()) {
            if file.is_relative() {
                cfg.data.file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.data.preset {
            PdeProblem::preset(p)?;
        }
        if self.data.noise_percent.is_empty() {
            bail!("data.noise_percent must list at least one level");
        }
        if let Some(n) = self.data.noise_percent.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            bail!("noise level {n} is not a non-negative number");
        }
        if self.seeds().is_empty() {
            bail!("no seeds: set data.repetitions >= 1 or data.seeds");
        }
        if self.output.workers == 0 {
            bail!("output.workers must be at least 1");
        }
        let sel = &self.selection;
        if sel.window == 0 || sel.window >= sel.k_max {
            bail!("selection.window must be in 1..k_max (k_max = {}), got {}", sel.k_max, sel.window);
        }
        if !(sel.rho > 0.0) {
            bail!("selection.rho must be positive, got {}", sel.rho);
        }
        if self.basis.space == 0 || self.basis.time == 0 || self.basis.order == 0 {
            bail!("basis.space, basis.time and basis.order must be positive");
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.data.seeds {
            Some(s) => s.clone(),
            None => (0..self.data.repetitions as u64).map(|i| self.data.first_seed + i).collect(),
        }
    }

    /// SHA-256 of the settings that determine results (everything except
    /// `[output]`), first 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn identify_config(&self) -> Result<IdentifyConfig> {
        let dictionary = match &self.dictionary.features {
            Some(labels) => Some(labels.iter().map(|l| FeatureSpec::parse(l)).collect::<gpident_core::Result<Vec<_>>>()?),
            None => None,
        };
        Ok(IdentifyConfig {
            sdd_window: self.sdd.window,
            sdd_degree: self.sdd.degree,
            max_deriv: self.dictionary.max_deriv,
            max_product: self.dictionary.max_product,
            dictionary,
            space_bases: self.basis.space,
            time_bases: self.basis.time,
            spline_order: self.basis.order,
            trim: None,
            k_max: self.selection.k_max,
            window: self.selection.window,
            rho: self.selection.rho,
            solver: SolverOptions {
                kind: match self.solver.kind {
                    Solver::Gpsp => SolverKind::Gpsp,
                    Solver::Bsp => SolverKind::Bsp,
                },
                iter_max: self.solver.iter_max,
                expand: match self.solver.expand {
                    Expand::Residual => ExpandTarget::Residual,
                    Expand::Response => ExpandTarget::Response,
                },
            },
            reconstruction: match self.reconstruction.mode {
                Reconstruction::LeastSquares => ReconstructionMode::LeastSquares,
                Reconstruction::Rescale => ReconstructionMode::Rescale,
            },
        })
    }

    /// [`Self::identify_config`] with `sdd.smooth_clean` applied to `traj`.
    pub fn identify_config_for(&self, traj: &Trajectory) -> Result<IdentifyConfig> {
        let mut icfg = self.identify_config()?;
        if traj.noise_percent == 0.0 && !self.sdd.smooth_clean {
            icfg.sdd_window = 0;
        }
        Ok(icfg)
    }

    /// The reference problem, when the data come from a preset.
    pub fn problem(&self) -> Result<Option<PdeProblem>> {
        let Some(name) = &self.data.preset else { return Ok(None) };
        let p = match (&self.data.kdv_modes, name.as_str()) {
            (Some(modes), "kdv") => simulate::make_kdv_with_modes(modes)?,
            (Some(_), other) => bail!("data.kdv_modes only applies to the kdv preset, not `{other}`"),
            (None, other) => PdeProblem::preset(other)?,
        };
        Ok(Some(p))
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `path.to.key = value` in `table`, creating sections as needed.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| anyhow!("override `{assignment}` is not key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("bad key in override `{assignment}`");
    }
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for s in sections {
        let entry = cur.entry(s.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| anyhow!("`{s}` in override `{assignment}` is not a section"))?;
    }
    cur.insert(last.to_string(), parse_value(raw));
    Ok(())
}
