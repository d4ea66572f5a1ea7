//! Binary dump of a feature system for offline inspection.
//!
//! Little-endian layout:
//!
//! | field | type |
//! |---|---|
//! | magic `GPFS` | 4 bytes |
//! | version (1) | u32 |
//! | rows, groups, width | 3 x u64 |
//! | normalized | u8 |
//! | y_norm | f64 |
//! | per group: label length, label | u32, UTF-8 bytes |
//! | column norms | `groups * width` x f64 |
//! | `y` | `rows` x f64 |
//! | `A`, column by column | `rows * groups * width` x f64 |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use gpident_core::FeatureSystem;

const MAGIC: &[u8; 4] = b"GPFS";
const VERSION: u32 = 1;

/// Contents of a dump file; `a` is stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDump {
    pub rows: usize,
    pub width: usize,
    pub normalized: bool,
    pub y_norm: f64,
    pub labels: Vec<String>,
    pub col_norms: Vec<f64>,
    pub y: Vec<f64>,
    pub a: Vec<f64>,
}

impl FeatureDump {
    pub fn from_system(sys: &FeatureSystem) -> Self {
        let rows = sys.a.nrows();
        let cols = sys.a.ncols();
        let mut a = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            a.extend((0..rows).map(|i| sys.a[(i, j)]));
        }
        Self {
            rows,
            width: sys.width,
            normalized: sys.normalized,
            y_norm: sys.y_norm,
            labels: sys.labels(),
            col_norms: sys.col_norms.clone(),
            y: sys.y.clone(),
            a,
        }
    }

    pub fn groups(&self) -> usize {
        self.labels.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.a[col * self.rows + row]
    }
}

pub fn write(path: &Path, dump: &FeatureDump) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in [dump.rows, dump.groups(), dump.width] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&[u8::from(dump.normalized)])?;
    w.write_all(&dump.y_norm.to_le_bytes())?;
    for label in &dump.labels {
        w.write_all(&(label.len() as u32).to_le_bytes())?;
        w.write_all(label.as_bytes())?;
    }
    for v in dump.col_norms.iter().chain(&dump.y).chain(&dump.a) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).context("truncated feature dump")?;
    Ok(buf)
}

fn reals(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| Ok(f64::from_le_bytes(take(r)?))).collect()
}

pub fn read(path: &Path) -> Result<FeatureDump> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    if &take::<4>(&mut r)? != MAGIC {
        bail!("{} is not a feature dump", path.display());
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        bail!("unsupported feature dump version {version}");
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = usize::try_from(u64::from_le_bytes(take(&mut r)?))?;
    }
    let [rows, groups, width] = dims;
    let normalized = take::<1>(&mut r)?[0] != 0;
    let y_norm = f64::from_le_bytes(take(&mut r)?);
    let mut labels = Vec::with_capacity(groups);
    for _ in 0..groups {
        let len = u32::from_le_bytes(take(&mut r)?) as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes).context("truncated label")?;
        labels.push(String::from_utf8(bytes)?);
    }
    let cols = groups * width;
    let col_norms = reals(&mut r, cols)?;
    let y = reals(&mut r, rows)?;
    let a = reals(&mut r, rows * cols)?;
    Ok(FeatureDump { rows, width, normalized, y_norm, labels, col_norms, y, a })
}
