//! Candidate features and the group-structured feature system `(A, y)`.
//!
//! A feature is a product of spatial derivatives of `u`, e.g. `u*u_x`. The
//! feature system has one column per (feature, basis function) pair:
//! column `g * M + m` holds `f_g(x_i, t_n) B_m(x_i, t_n)` over the interior
//! grid points, and `y` holds the time derivative `u_t`. Rows are flattened
//! time-major: row `n' * I + i` is spatial sample `i` of interior time slice
//! `n'`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::Range;

use faer::Mat;

use crate::bspline::BasisSet;
use crate::linalg;
use crate::sdd::{sdd_derivative, SavGolFilter};
use crate::trajdata::{Grid, Trajectory};
use crate::{Error, Result};

/// Product of spatial derivatives, stored as a sorted multiset of orders.
/// The empty product is the constant feature `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSpec {
    pub factors: Vec<usize>,
}

impl FeatureSpec {
    pub fn new(mut factors: Vec<usize>) -> Self {
        factors.sort_unstable();
        Self { factors }
    }

    pub fn constant() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn max_order(&self) -> Option<usize> {
        self.factors.last().copied()
    }

    pub fn label(&self) -> String {
        if self.factors.is_empty() {
            return String::from("1");
        }
        let parts: Vec<String> = self.factors.iter().map(|&o| factor_label(o)).collect();
        parts.join("*")
    }

    /// Parses labels such as `1`, `u`, `u_xx`, `u*u_x`.
    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        if label == "1" {
            return Ok(Self::constant());
        }
        let mut factors = Vec::new();
        for part in label.split('*') {
            let part = part.trim();
            let order = if part == "u" {
                0
            } else if let Some(xs) = part.strip_prefix("u_") {
                if xs.is_empty() || !xs.chars().all(|c| c == 'x') {
                    return Err(Error::InvalidArgument(format!("unrecognized factor `{part}`")));
                }
                xs.len()
            } else {
                return Err(Error::InvalidArgument(format!("unrecognized factor `{part}`")));
            };
            factors.push(order);
        }
        Ok(Self::new(factors))
    }
}

fn factor_label(order: usize) -> String {
    if order == 0 {
        String::from("u")
    } else {
        let mut s = String::from("u_");
        for _ in 0..order {
            s.push('x');
        }
        s
    }
}

impl Ord for FeatureSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.factors.len().cmp(&other.factors.len()).then_with(|| self.factors.cmp(&other.factors))
    }
}

impl PartialOrd for FeatureSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The constant feature plus every product of `1..=max_product` factors drawn
/// from `u, u_x, ..., d_x^max_deriv u`, ordered by product size and then
/// lexicographically by derivative orders.
pub fn enumerate_dictionary(max_deriv: usize, max_product: usize) -> Result<Vec<FeatureSpec>> {
    if max_deriv == 0 || max_product == 0 {
        return Err(Error::InvalidArgument("dictionary needs max_deriv >= 1 and max_product >= 1".into()));
    }
    let mut out = vec![FeatureSpec::constant()];
    for size in 1..=max_product {
        let mut current = vec![0usize; size];
        loop {
            out.push(FeatureSpec { factors: current.clone() });
            // Next non-decreasing sequence.
            let mut pos = size;
            while pos > 0 && current[pos - 1] == max_deriv {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            current[pos - 1] += 1;
            let v = current[pos - 1];
            for c in current.iter_mut().skip(pos) {
                *c = v;
            }
        }
    }
    Ok(out)
}

/// Feature values and the time derivative on the interior time slices.
#[derive(Debug, Clone)]
pub struct FeatureData {
    pub grid: Grid,
    /// Time samples dropped at each end.
    pub trim: usize,
    pub specs: Vec<FeatureSpec>,
    /// One `I x N'` matrix per spec.
    pub values: Vec<Mat<f64>>,
    /// `u_t` on the same region.
    pub ut: Mat<f64>,
}

impl FeatureData {
    pub fn interior_times(&self) -> Range<usize> {
        self.trim..self.grid.nt - self.trim
    }

    pub fn interior_len(&self) -> usize {
        self.grid.nt - 2 * self.trim
    }

    pub fn feature(&self, spec: &FeatureSpec) -> Option<&Mat<f64>> {
        self.specs.iter().position(|s| s == spec).map(|g| &self.values[g])
    }
}

/// Default number of time samples dropped at each end.
pub fn default_trim(filter: Option<&SavGolFilter>, margin: usize) -> usize {
    let w = filter.map_or(0, |f| f.window);
    w.max(2).max(margin)
}

/// Evaluates the features and `u_t` with SDD and trims the time boundary.
///
/// Each derivative order is computed once and shared between products.
pub fn eval_features(
    traj: &Trajectory,
    specs: &[FeatureSpec],
    filter: Option<&SavGolFilter>,
    trim: Option<usize>,
) -> Result<FeatureData> {
    let grid = traj.grid;
    let mut derivs: BTreeMap<usize, Mat<f64>> = BTreeMap::new();
    let mut margin = 0;
    for spec in specs {
        for &o in &spec.factors {
            if let alloc::collections::btree_map::Entry::Vacant(e) = derivs.entry(o) {
                let d = sdd_derivative(traj, o, 0, filter)?;
                margin = margin.max(d.time_margin);
                e.insert(d.values);
            }
        }
    }
    let ut = sdd_derivative(traj, 0, 1, filter)?;
    margin = margin.max(ut.time_margin);
    let trim = trim.unwrap_or_else(|| default_trim(filter, margin));
    if 2 * trim >= grid.nt {
        return Err(Error::InvalidArgument(format!(
            "trimming {trim} samples at each end leaves no interior in {} time samples",
            grid.nt
        )));
    }
    let nt_in = grid.nt - 2 * trim;
    let values = specs
        .iter()
        .map(|spec| {
            Mat::from_fn(grid.nx, nt_in, |i, j| {
                spec.factors.iter().map(|o| derivs[o][(i, j + trim)]).product::<f64>()
            })
        })
        .collect();
    let ut = Mat::from_fn(grid.nx, nt_in, |i, j| ut.values[(i, j + trim)]);
    Ok(FeatureData { grid, trim, specs: specs.to_vec(), values, ut })
}

/// Group-structured regression pair with unit-norm columns.
#[derive(Debug, Clone)]
pub struct FeatureSystem {
    /// `(I * N') x (G * M)`.
    pub a: Mat<f64>,
    pub y: Vec<f64>,
    pub specs: Vec<FeatureSpec>,
    /// Block width `M`.
    pub width: usize,
    /// Column norms before normalization.
    pub col_norms: Vec<f64>,
    pub y_norm: f64,
    pub normalized: bool,
    pub basis: BasisSet,
    pub grid: Grid,
    pub trim: usize,
}

impl FeatureSystem {
    pub fn groups(&self) -> usize {
        self.specs.len()
    }

    pub fn group_columns(&self, g: usize) -> Range<usize> {
        g * self.width..(g + 1) * self.width
    }

    pub fn labels(&self) -> Vec<String> {
        self.specs.iter().map(FeatureSpec::label).collect()
    }

    pub fn group_of(&self, label: &str) -> Option<usize> {
        let spec = FeatureSpec::parse(label).ok()?;
        self.specs.iter().position(|s| *s == spec)
    }

    /// Scales columns and `y` to unit norm, recording the norms.
    pub fn normalize(&mut self) -> Result<()> {
        if self.normalized {
            return Ok(());
        }
        for j in 0..self.a.ncols() {
            let n = self.a.col(j).norm_l2();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::DegenerateColumn { feature: self.specs[j / self.width].label(), basis: j % self.width });
            }
            self.col_norms[j] = n;
            let inv = 1.0 / n;
            for v in self.a.col_mut(j).iter_mut() {
                *v *= inv;
            }
        }
        let yn = linalg::norm(&self.y);
        if !(yn > 0.0) || !yn.is_finite() {
            return Err(Error::ZeroResponse);
        }
        self.y_norm = yn;
        for v in &mut self.y {
            *v /= yn;
        }
        self.normalized = true;
        Ok(())
    }

    /// The un-normalized matrix `A`.
    pub fn raw_a(&self) -> Mat<f64> {
        if !self.normalized {
            return self.a.clone();
        }
        Mat::from_fn(self.a.nrows(), self.a.ncols(), |i, j| self.a[(i, j)] * self.col_norms[j])
    }

    /// The un-normalized response `y`.
    pub fn raw_y(&self) -> Vec<f64> {
        if !self.normalized {
            return self.y.clone();
        }
        self.y.iter().map(|v| v * self.y_norm).collect()
    }

    /// Spatial and temporal coordinates of row `p`.
    pub fn row_point(&self, p: usize) -> (usize, usize) {
        (p % self.grid.nx, p / self.grid.nx + self.trim)
    }
}

/// Builds the raw system from feature data and a basis set and normalizes it.
pub fn assemble(data: &FeatureData, basis: &BasisSet) -> Result<FeatureSystem> {
    let grid = data.grid;
    let nx = grid.nx;
    let nt_in = data.interior_len();
    let xs: Vec<f64> = (0..nx).map(|i| grid.x(i)).collect();
    let ts: Vec<f64> = data.interior_times().map(|n| grid.t(n)).collect();
    let bx = basis.space.sample(&xs)?;
    let bt = basis.time.sample(&ts)?;
    let width = basis.len();
    let g_count = data.specs.len();
    let rows = nx * nt_in;
    let mut a = Mat::<f64>::zeros(rows, g_count * width);
    for (g, f) in data.values.iter().enumerate() {
        for m in 0..width {
            let (m1, m2) = basis.split(m);
            let col = a.col_mut(g * width + m).try_as_col_major_mut().expect("owned matrix columns are contiguous");
            let col = col.as_slice_mut();
            for j in 0..nt_in {
                let tb = bt[(j, m2)];
                let base = j * nx;
                if tb == 0.0 {
                    continue;
                }
                for i in 0..nx {
                    col[base + i] = f[(i, j)] * bx[(i, m1)] * tb;
                }
            }
        }
    }
    let mut y = vec![0.0; rows];
    for j in 0..nt_in {
        for i in 0..nx {
            y[j * nx + i] = data.ut[(i, j)];
        }
    }
    let mut sys = FeatureSystem {
        a,
        y,
        specs: data.specs.clone(),
        width,
        col_norms: vec![1.0; g_count * width],
        y_norm: 1.0,
        normalized: false,
        basis: basis.clone(),
        grid,
        trim: data.trim,
    };
    sys.normalize()?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_sizes() {
        assert_eq!(enumerate_dictionary(3, 3).unwrap().len(), 35);
        assert_eq!(enumerate_dictionary(4, 3).unwrap().len(), 56);
        assert_eq!(enumerate_dictionary(6, 4).unwrap().len(), 330);
        assert!(enumerate_dictionary(0, 3).is_err());
    }

    #[test]
    fn canonical_order_and_labels() {
        let d = enumerate_dictionary(2, 2).unwrap();
        let labels: Vec<String> = d.iter().map(FeatureSpec::label).collect();
        assert_eq!(
            labels,
            ["1", "u", "u_x", "u_xx", "u*u", "u*u_x", "u*u_xx", "u_x*u_x", "u_x*u_xx", "u_xx*u_xx"]
        );
        let mut sorted = d.clone();
        sorted.sort();
        assert_eq!(sorted, d);
    }

    #[test]
    fn parse_round_trip() {
        for spec in enumerate_dictionary(4, 3).unwrap() {
            assert_eq!(FeatureSpec::parse(&spec.label()).unwrap(), spec);
        }
        assert_eq!(FeatureSpec::parse("u_x*u").unwrap(), FeatureSpec::new(vec![0, 1]));
        assert!(FeatureSpec::parse("v").is_err());
        assert!(FeatureSpec::parse("u_t").is_err());
    }

    #[test]
    fn constant_feature_and_basis() {
        let grid = Grid::new(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap();
        let traj = Trajectory::from_fn(grid, |x, t| (6.0 * x).sin() * (1.0 + t)).unwrap();
        let data = eval_features(&traj, &[FeatureSpec::constant()], None, None).unwrap();
        assert!(data.values[0].col_iter().all(|c| c.iter().all(|&v| v == 1.0)));
        let basis = BasisSet::for_grid(&grid, 1, 1, 3).unwrap();
        let sys = assemble(&data, &basis).unwrap();
        let first = sys.a[(0, 0)];
        assert!(sys.a.col(0).iter().all(|&v| v == first));
        assert!((sys.a.col(0).norm_l2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_column_is_reported() {
        let grid = Grid::new(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap();
        let traj = Trajectory::from_fn(grid, |_, _| 0.0).unwrap();
        let data = eval_features(&traj, &[FeatureSpec::new(vec![0, 1])], None, None).unwrap();
        let basis = BasisSet::for_grid(&grid, 1, 1, 3).unwrap();
        match assemble(&data, &basis) {
            Err(Error::DegenerateColumn { feature, basis }) => {
                assert_eq!(feature, "u*u_x");
                assert_eq!(basis, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
