//! Generate, identify, sweep and report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use gpident_core::metrics::{self, FeatureError};
use gpident_core::simulate::{self, PdeProblem};
use gpident_core::{pipeline, trajdata, Identification, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Region, RunConfig};
use crate::trajfile;

/// One row of the score table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub k: usize,
    pub residual: f64,
    pub score: Option<f64>,
    pub selected: bool,
    pub support: Vec<String>,
    pub iterations: usize,
    pub termination: String,
}

/// One solver iteration, for convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub iteration: usize,
    pub residual_norm: f64,
    pub accepted: bool,
    pub support: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientError {
    pub label: String,
    pub interior: f64,
    pub full: f64,
}

impl From<FeatureError> for CoefficientError {
    fn from(e: FeatureError) -> Self {
        Self { label: e.label, interior: e.interior, full: e.full }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// No score fell below rho.
    NoSelection,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NoSelection => "no_selection",
            Status::Error => "error",
        }
    }
}

/// Everything recorded about one identification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config_fingerprint: String,
    pub source: String,
    pub noise_percent: f64,
    pub seed: Option<u64>,
    pub status: Status,
    pub message: Option<String>,
    pub k_star: Option<usize>,
    pub support: Vec<String>,
    pub true_support: Option<Vec<String>>,
    pub jaccard: Option<f64>,
    pub coefficient_errors: Vec<CoefficientError>,
    pub trajectory_error: Option<f64>,
    pub relative_residual: Option<f64>,
    pub rank_deficient: Option<bool>,
    pub rows: usize,
    pub width: usize,
    pub trim: usize,
    pub scores: Vec<ScoreRow>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    pub runtime_seconds: f64,
}

impl RunRecord {
    fn failed(cfg: &RunConfig, source: &str, traj: &Trajectory, status: Status, message: String) -> Self {
        Self {
            config_fingerprint: cfg.fingerprint(),
            source: source.to_string(),
            noise_percent: traj.noise_percent,
            seed: traj.seed,
            status,
            message: Some(message),
            k_star: None,
            support: Vec::new(),
            true_support: None,
            jaccard: None,
            coefficient_errors: Vec::new(),
            trajectory_error: None,
            relative_residual: None,
            rank_deficient: None,
            rows: 0,
            width: 0,
            trim: 0,
            scores: Vec::new(),
            trace: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    /// Headline coefficient error of `label` for the configured region.
    pub fn error_for(&self, label: &str, region: Region) -> Option<f64> {
        self.coefficient_errors.iter().find(|e| e.label == label).map(|e| match region {
            Region::Interior => e.interior,
            Region::Full => e.full,
        })
    }
}

/// Identification result together with its record.
pub struct IdentifyOutput {
    pub record: RunRecord,
    pub identification: Option<Identification>,
    pub trajectory: Trajectory,
}

fn source_name(cfg: &RunConfig) -> String {
    match (&cfg.data.preset, &cfg.data.file) {
        (_, Some(f)) => f.display().to_string(),
        (Some(p), None) => p.clone(),
        (None, None) => "unknown".to_string(),
    }
}

/// Clean reference trajectory of the configured preset.
pub fn reference(cfg: &RunConfig) -> Result<(PdeProblem, Trajectory)> {
    let Some(problem) = cfg.problem()? else { bail!("no preset configured (set data.preset)") };
    let traj = simulate::solve(&problem, cfg.data.substeps)?;
    Ok((problem, traj))
}

/// Noisy copies of `clean` for every configured level and seed. A zero level
/// yields the clean trajectory once.
pub fn noisy_copies(cfg: &RunConfig, clean: &Trajectory) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for &p in &cfg.data.noise_percent {
        if p == 0.0 {
            out.push(clean.clone());
            continue;
        }
        for s in cfg.seeds() {
            out.push(trajdata::add_noise(clean, p, s)?);
        }
    }
    Ok(out)
}

pub fn trajectory_file_name(preset: &str, traj: &Trajectory) -> String {
    match traj.seed {
        Some(s) => format!("{preset}_noise{}_seed{s}.csv", traj.noise_percent),
        None => format!("{preset}_noise{}.csv", traj.noise_percent),
    }
}

/// Simulates the preset, adds noise and writes one file per trajectory.
pub fn generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (problem, clean) = reference(cfg)?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut paths = Vec::new();
    for traj in noisy_copies(cfg, &clean)? {
        let path = dir.join(trajectory_file_name(problem.kind.name(), &traj));
        trajfile::write_with(&path, &traj, &[("config_fingerprint", cfg.fingerprint())])?;
        paths.push(path);
    }
    Ok(paths)
}

/// Runs the pipeline on `traj`; scores against `truth` (with `clean` as the
/// reference for forward simulation) when given. Pipeline failures are
/// recorded, not returned.
pub fn identify_trajectory(
    cfg: &RunConfig,
    traj: &Trajectory,
    truth: Option<(&PdeProblem, &Trajectory)>,
) -> Result<IdentifyOutput> {
    let icfg = cfg.identify_config_for(traj)?;
    let source = source_name(cfg);
    let start = Instant::now();
    let id = match pipeline::identify(traj, &icfg) {
        Ok(id) => id,
        Err(e) => {
            let mut record = RunRecord::failed(cfg, &source, traj, Status::Error, e.to_string());
            record.runtime_seconds = start.elapsed().as_secs_f64();
            return Ok(IdentifyOutput { record, identification: None, trajectory: traj.clone() });
        }
    };
    let runtime_seconds = start.elapsed().as_secs_f64();
    let labels = |support: &[usize]| -> Vec<String> { support.iter().map(|&g| id.specs[g].label()).collect() };

    let scores = id
        .path
        .solutions
        .iter()
        .enumerate()
        .map(|(i, sol)| ScoreRow {
            k: i + 1,
            residual: id.path.residuals[i],
            score: id.path.scores.as_ref().and_then(|s| s.get(i).copied()),
            selected: id.path.k_star == Some(i + 1),
            support: labels(&sol.support),
            iterations: sol.iterations,
            termination: sol.termination.as_str().to_string(),
        })
        .collect();
    let trace = id
        .path
        .solutions
        .iter()
        .enumerate()
        .flat_map(|(i, sol)| {
            sol.trace.iter().map(move |t| (i + 1, t)).collect::<Vec<_>>()
        })
        .map(|(k, t)| TraceRow {
            k,
            iteration: t.iteration,
            residual_norm: t.residual_norm,
            accepted: t.accepted,
            support: labels(&t.support),
        })
        .collect();

    let mut record = RunRecord {
        config_fingerprint: cfg.fingerprint(),
        source,
        noise_percent: traj.noise_percent,
        seed: traj.seed,
        status: Status::Ok,
        message: None,
        k_star: id.path.k_star,
        support: Vec::new(),
        true_support: truth.map(|(p, _)| p.true_support().iter().map(|f| f.label()).collect()),
        jaccard: None,
        coefficient_errors: Vec::new(),
        trajectory_error: None,
        relative_residual: None,
        rank_deficient: None,
        rows: id.rows,
        width: id.width,
        trim: id.trim,
        scores,
        trace,
        runtime_seconds,
    };

    match &id.model {
        None => {
            record.status = Status::NoSelection;
            record.message = Some(format!("no RR score below rho = {}", cfg.selection.rho));
            if let Some((problem, _)) = truth {
                record.jaccard = Some(0.0);
                record.coefficient_errors = problem
                    .terms
                    .iter()
                    .map(|t| CoefficientError { label: t.feature.label(), interior: 100.0, full: 100.0 })
                    .collect();
            }
        }
        Some(model) => {
            record.support = model.labels();
            record.relative_residual = Some(model.relative_residual);
            record.rank_deficient = Some(model.rank_deficient);
            if let Some((problem, clean)) = truth {
                let interior = id.trim..traj.grid.nt - id.trim;
                let (errors, j) = metrics::evaluate_coefficients(model, problem, interior)?;
                record.jaccard = Some(j);
                record.coefficient_errors = errors.into_iter().map(Into::into).collect();
                if cfg.evaluation.simulate {
                    match metrics::simulate_identified(model, problem, cfg.data.substeps)
                        .and_then(|sim| metrics::trajectory_error(&sim, clean))
                    {
                        Ok(e) => record.trajectory_error = Some(e),
                        Err(e) => record.message = Some(format!("forward simulation failed: {e}")),
                    }
                }
            }
        }
    }
    Ok(IdentifyOutput { record, identification: Some(id), trajectory: traj.clone() })
}

/// Identification of the configured data source: `data.file` when set,
/// otherwise the first configured noise level and seed of the preset.
pub fn identify(cfg: &RunConfig) -> Result<IdentifyOutput> {
    let problem = cfg.problem()?;
    match (&cfg.data.file, problem) {
        (Some(file), problem) => {
            let traj = trajfile::read(file)?;
            let clean = match &problem {
                Some(p) => Some(simulate::solve(&p.clone().with_grid(traj.grid)?, cfg.data.substeps)?),
                None => None,
            };
            let truth = problem.as_ref().zip(clean.as_ref());
            identify_trajectory(cfg, &traj, truth)
        }
        (None, Some(_)) => {
            let (problem, clean) = reference(cfg)?;
            let p = cfg.data.noise_percent[0];
            let traj = if p == 0.0 { clean.clone() } else { trajdata::add_noise(&clean, p, cfg.seeds()[0])? };
            identify_trajectory(cfg, &traj, Some((&problem, &clean)))
        }
        (None, None) => bail!("nothing to identify: set data.file or data.preset"),
    }
}

/// Identification over every noise level and seed of a preset.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<RunRecord>> {
    let (problem, clean) = reference(cfg)?;
    let trajs = noisy_copies(cfg, &clean)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.output.workers).build()?;
    let records: Vec<Result<RunRecord>> = pool.install(|| {
        trajs
            .par_iter()
            .map(|t| identify_trajectory(cfg, t, Some((&problem, &clean))).map(|o| o.record))
            .collect()
    });
    records
        .into_iter()
        .zip(&trajs)
        .map(|(r, t)| {
            Ok(r.unwrap_or_else(|e| RunRecord::failed(cfg, &source_name(cfg), t, Status::Error, format!("{e:#}"))))
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Labels of the true terms, in problem order, across `records`.
fn error_labels(records: &[RunRecord]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for r in records {
        for e in &r.coefficient_errors {
            if !labels.contains(&e.label) {
                labels.push(e.label.clone());
            }
        }
    }
    labels
}

/// Per-run CSV. Columns: `config_fingerprint, source, noise_percent, seed,
/// status, k_star, support, jaccard, trajectory_error, err_<label>...` with
/// `support` joined by `;` and errors in percent for `region`. Runtime is
/// left out so identical runs give identical files.
pub fn results_csv(records: &[RunRecord], region: Region) -> Result<String> {
    let labels = error_labels(records);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["config_fingerprint", "source", "noise_percent", "seed", "status", "k_star", "support", "jaccard", "trajectory_error"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend(labels.iter().map(|l| format!("err_{l}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.config_fingerprint.clone(),
            r.source.clone(),
            r.noise_percent.to_string(),
            r.seed.map_or_else(String::new, |s| s.to_string()),
            r.status.as_str().to_string(),
            r.k_star.map_or_else(String::new, |k| k.to_string()),
            r.support.join(";"),
            fmt_opt(r.jaccard),
            fmt_opt(r.trajectory_error),
        ];
        row.extend(labels.iter().map(|l| fmt_opt(r.error_for(l, region))));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Score table: `config_fingerprint, k, residual, score, selected,
/// iterations, termination, support`.
pub fn scores_csv(record: &RunRecord) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config_fingerprint", "k", "residual", "score", "selected", "iterations", "termination", "support"])?;
    for s in &record.scores {
        w.write_record([
            record.config_fingerprint.clone(),
            s.k.to_string(),
            s.residual.to_string(),
            fmt_opt(s.score),
            s.selected.to_string(),
            s.iterations.to_string(),
            s.termination.clone(),
            s.support.join(";"),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// A `# config_fingerprint = ...` line, then one line per solver iteration:
/// `k=3 iteration=1 residual=... accepted=true support=u;u_x`.
pub fn trace_text(record: &RunRecord) -> String {
    let head = format!("# config_fingerprint = {}\n", record.config_fingerprint);
    let body: String = record
        .trace
        .iter()
        .map(|t| {
            format!(
                "k={} iteration={} residual={} accepted={} support={}\n",
                t.k,
                t.iteration,
                t.residual_norm,
                t.accepted,
                t.support.join(";")
            )
        })
        .collect();
    head + &body
}

/// Identified coefficient fields on the grid: `config_fingerprint, x, t, <label>...`.
pub fn coefficients_csv(id: &Identification, traj: &Trajectory, fingerprint: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let Some(model) = &id.model else { return Ok(String::new()) };
    let mut header = vec!["config_fingerprint".to_string(), "x".to_string(), "t".to_string()];
    header.extend(model.labels());
    w.write_record(&header)?;
    let g = traj.grid;
    for n in 0..g.nt {
        let t = g.t(n);
        for i in 0..g.nx {
            let x = g.x(i);
            let mut row = vec![fingerprint.to_string(), x.to_string(), t.to_string()];
            row.extend(model.support.iter().map(|&s| model.eval(s, x, t).to_string()));
            w.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Aggregates per noise level (fingerprints of the runs joined by `;`): run count, errors, exact-support count, mean
/// and standard deviation of the Jaccard index, of each coefficient error and
/// of the trajectory error.
pub fn summary_csv(records: &[RunRecord], region: Region) -> Result<String> {
    let labels = error_labels(records);
    let mut levels: Vec<f64> = Vec::new();
    for r in records {
        if !levels.contains(&r.noise_percent) {
            levels.push(r.noise_percent);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["config_fingerprint", "noise_percent", "runs", "errors", "exact_support", "jaccard_mean", "jaccard_std"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for l in &labels {
        header.push(format!("err_{l}_mean"));
        header.push(format!("err_{l}_std"));
    }
    header.push("trajectory_error_mean".into());
    header.push("trajectory_error_std".into());
    w.write_record(&header)?;
    for level in levels {
        let rs: Vec<&RunRecord> = records.iter().filter(|r| r.noise_percent == level).collect();
        let jac: Vec<f64> = rs.iter().filter_map(|r| r.jaccard).collect();
        let (jm, js) = mean_std(&jac);
        let mut prints: Vec<&str> = Vec::new();
        for r in &rs {
            if !prints.contains(&r.config_fingerprint.as_str()) {
                prints.push(&r.config_fingerprint);
            }
        }
        let mut row = vec![
            prints.join(";"),
            level.to_string(),
            rs.len().to_string(),
            rs.iter().filter(|r| r.status == Status::Error).count().to_string(),
            jac.iter().filter(|&&j| j == 1.0).count().to_string(),
            fmt_opt(jm),
            fmt_opt(js),
        ];
        for l in &labels {
            let errs: Vec<f64> = rs.iter().filter_map(|r| r.error_for(l, region)).collect();
            let (m, s) = mean_std(&errs);
            row.push(fmt_opt(m));
            row.push(fmt_opt(s));
        }
        let te: Vec<f64> = rs.iter().filter_map(|r| r.trajectory_error).collect();
        let (m, s) = mean_std(&te);
        row.push(fmt_opt(m));
        row.push(fmt_opt(s));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes `run.json`, `scores.csv`, `trace.txt` and (when a model was
/// selected) `coefficients.csv` into `dir`.
pub fn write_identify_outputs(dir: &Path, out: &IdentifyOutput) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir.join("run.json"), &serde_json::to_string_pretty(&out.record)?)?;
    write_file(&dir.join("scores.csv"), &scores_csv(&out.record)?)?;
    write_file(&dir.join("trace.txt"), &trace_text(&out.record))?;
    if let Some(id) = out.identification.as_ref().filter(|id| id.model.is_some()) {
        write_file(&dir.join("coefficients.csv"), &coefficients_csv(id, &out.trajectory, &out.record.config_fingerprint)?)?;
    }
    Ok(())
}

/// Writes `results.csv`, `summary.csv` and `runs.json` into `dir`.
pub fn write_sweep_outputs(dir: &Path, records: &[RunRecord], region: Region) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir.join("results.csv"), &results_csv(records, region)?)?;
    write_file(&dir.join("summary.csv"), &summary_csv(records, region)?)?;
    write_file(&dir.join("runs.json"), &serde_json::to_string_pretty(records)?)?;
    Ok(())
}

/// Rebuilds a per-level summary from a `results.csv`.
pub fn report(results: &Path) -> Result<String> {
    let mut rdr = csv::Reader::from_path(results).with_context(|| format!("reading {}", results.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(print), Some(noise), Some(jac), Some(status)) =
        (col("config_fingerprint"), col("noise_percent"), col("jaccard"), col("status"))
    else {
        bail!("{} is not a results table", results.display());
    };
    let err_cols: Vec<(usize, String)> =
        header.iter().enumerate().filter_map(|(i, h)| h.strip_prefix("err_").map(|l| (i, l.to_string()))).collect();
    let traj_col = col("trajectory_error");
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let real = |i: usize| row.get(i).and_then(|v| v.parse::<f64>().ok());
        let status = match row.get(status) {
            Some("ok") => Status::Ok,
            Some("no_selection") => Status::NoSelection,
            _ => Status::Error,
        };
        records.push(RunRecord {
            config_fingerprint: row.get(print).unwrap_or_default().to_string(),
            source: String::new(),
            noise_percent: real(noise).unwrap_or(f64::NAN),
            seed: None,
            status,
            message: None,
            k_star: None,
            support: Vec::new(),
            true_support: None,
            jaccard: real(jac),
            coefficient_errors: err_cols
                .iter()
                .filter_map(|(i, l)| real(*i).map(|v| CoefficientError { label: l.clone(), interior: v, full: v }))
                .collect(),
            trajectory_error: traj_col.and_then(real),
            relative_residual: None,
            rank_deficient: None,
            rows: 0,
            width: 0,
            trim: 0,
            scores: Vec::new(),
            trace: Vec::new(),
            runtime_seconds: 0.0,
        });
    }
    summary_csv(&records, Region::Interior)
}
