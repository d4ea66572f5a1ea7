//! Plain-text trajectory files.
//!
//! ```text
//! # gpident trajectory
//! # x_min = -5
//! # x_max = 5
//! # t_min = 0
//! # t_max = 5
//! # I = 256
//! # N = 256
//! # noise_percent = 1
//! # seed = 7
//! 0.9999,0.9871,...
//! ```
//!
//! After the header come `I` comma-separated lines of `N` values: line `i`
//! holds `U(x_i, t_0), ..., U(x_i, t_{N-1})`. `seed` is `none` for clean data.
//! Further `# key = value` lines (such as `config_fingerprint`) are allowed and
//! ignored by the reader.
//! Values are written with the shortest representation that round-trips, so
//! reading a written file reproduces the trajectory bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gpident_core::{Grid, Trajectory};

const MAGIC: &str = "# gpident trajectory";

pub fn to_string(traj: &Trajectory) -> String {
    to_string_with(traj, &[])
}

/// Like [`to_string`] with extra header entries after the standard ones.
pub fn to_string_with(traj: &Trajectory, extra: &[(&str, String)]) -> String {
    let g = &traj.grid;
    let mut out = String::new();
    let seed = traj.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    let _ = writeln!(out, "{MAGIC}");
    for (k, v) in [
        ("x_min", g.x_min.to_string()),
        ("x_max", g.x_max.to_string()),
        ("t_min", g.t_min.to_string()),
        ("t_max", g.t_max.to_string()),
        ("I", g.nx.to_string()),
        ("N", g.nt.to_string()),
        ("noise_percent", traj.noise_percent.to_string()),
        ("seed", seed),
    ] {
        let _ = writeln!(out, "# {k} = {v}");
    }
    for (k, v) in extra {
        let _ = writeln!(out, "# {k} = {v}");
    }
    let data = traj.to_row_major();
    for row in data.chunks(g.nt) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => bail!("missing `{MAGIC}` header line"),
    }
    let mut header = BTreeMap::new();
    let mut rows = Vec::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.split_once('=').ok_or_else(|| anyhow!("line {}: malformed header `{line}`", no + 1))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
            continue;
        }
        for field in line.split(',') {
            let v: f64 = field.trim().parse().with_context(|| format!("line {}: bad value `{field}`", no + 1))?;
            rows.push(v);
        }
    }
    let get = |k: &str| header.get(k).ok_or_else(|| anyhow!("header field `{k}` missing"));
    let real = |k: &str| -> Result<f64> { get(k)?.parse().with_context(|| format!("header field `{k}`")) };
    let count = |k: &str| -> Result<usize> { get(k)?.parse().with_context(|| format!("header field `{k}`")) };
    let grid = Grid::new(real("x_min")?, real("x_max")?, real("t_min")?, real("t_max")?, count("I")?, count("N")?)?;
    let mut traj = Trajectory::from_row_major(grid, &rows)?;
    traj.noise_percent = real("noise_percent")?;
    traj.seed = match get("seed")?.as_str() {
        "none" => None,
        s => Some(s.parse().context("header field `seed`")?),
    };
    traj.is_noisy = traj.noise_percent > 0.0;
    Ok(traj)
}

pub fn write(path: &Path, traj: &Trajectory) -> Result<()> {
    fs::write(path, to_string(traj)).with_context(|| format!("writing {}", path.display()))
}

pub fn write_with(path: &Path, traj: &Trajectory, extra: &[(&str, String)]) -> Result<()> {
    fs::write(path, to_string_with(traj, extra)).with_context(|| format!("writing {}", path.display()))
}

pub fn read(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}
