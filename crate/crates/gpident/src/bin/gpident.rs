use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gpident::config::RunConfig;
use gpident::{fsdump, runner, trajfile};
use gpident_core::pipeline;

#[derive(Parser)]
#[command(name = "gpident", version, about = "Identify PDEs with space- and time-varying coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a preset and write noisy trajectory files.
    Generate(Common),
    /// Identify a model from one trajectory.
    Identify {
        #[command(flatten)]
        common: Common,
        /// Trajectory file to identify (overrides data.file).
        #[arg(long)]
        traj: Option<PathBuf>,
        /// Also write the normalized feature system to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Identify every noise level and seed of a preset.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (overrides output.workers).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Rebuild the per-level summary from a results.csv (or a directory holding one).
    Report {
        results: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Preset equation (advection_diffusion, burgers, fisher, kdv).
    #[arg(long)]
    preset: Option<String>,
    /// Noise level in percent; replaces data.noise_percent.
    #[arg(long)]
    noise: Option<f64>,
    /// Single noise seed; replaces data.seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set solver.kind="bsp"`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        if let Some(p) = &self.preset {
            o.push(format!("data.preset={p:?}"));
        }
        if let Some(n) = self.noise {
            o.push(format!("data.noise_percent=[{n:?}]"));
        }
        if let Some(s) = self.seed {
            o.push(format!("data.seeds=[{s}]"));
        }
        if let Some(d) = &self.out {
            o.push(format!("output.dir={:?}", d.display().to_string()));
        }
        o.extend(self.set.iter().cloned());
        o
    }

    fn load(&self, extra: &[String]) -> Result<RunConfig> {
        let mut overrides = self.overrides();
        overrides.extend(extra.iter().cloned());
        match &self.config {
            Some(path) => RunConfig::load(path, &overrides),
            None => RunConfig::from_toml_with("", &overrides),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = common.load(&[])?;
            for path in runner::generate(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Identify { common, traj, dump } => {
            let extra: Vec<String> =
                traj.iter().map(|t| format!("data.file={:?}", t.display().to_string())).collect();
            let cfg = common.load(&extra)?;
            if let Some(path) = &dump {
                let data = match &cfg.data.file {
                    Some(f) => trajfile::read(f)?,
                    None => runner::reference(&cfg)?.1,
                };
                let sys = pipeline::build_system(&data, &cfg.identify_config_for(&data)?)?;
                fsdump::write(path, &fsdump::FeatureDump::from_system(&sys))?;
            }
            let out = runner::identify(&cfg)?;
            runner::write_identify_outputs(&cfg.output.dir, &out)?;
            print_record(&out.record);
            println!("outputs in {}", cfg.output.dir.display());
        }
        Command::Sweep { common, workers } => {
            let extra: Vec<String> = workers.iter().map(|w| format!("output.workers={w}")).collect();
            let cfg = common.load(&extra)?;
            let records = runner::sweep(&cfg)?;
            runner::write_sweep_outputs(&cfg.output.dir, &records, cfg.evaluation.region)?;
            print!("{}", runner::summary_csv(&records, cfg.evaluation.region)?);
            println!("outputs in {}", cfg.output.dir.display());
        }
        Command::Report { results } => {
            let file = if results.is_dir() { results.join("results.csv") } else { results };
            print!("{}", runner::report(&file).with_context(|| format!("report from {}", file.display()))?);
        }
    }
    Ok(())
}

fn print_record(r: &runner::RunRecord) {
    println!("status: {}", r.status.as_str());
    if let Some(m) = &r.message {
        println!("note: {m}");
    }
    println!("{:>3}  {:>12}  {:>10}  support", "k", "R_k", "s_k");
    for s in &r.scores {
        let score = s.score.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
        let mark = if s.selected { "*" } else { " " };
        println!("{:>3}{mark} {:>12.5e}  {:>10}  {}", s.k, s.residual, score, s.support.join(", "));
    }
    if let Some(k) = r.k_star {
        println!("selected k* = {k}: {}", r.support.join(", "));
    }
    if let Some(j) = r.jaccard {
        println!("jaccard = {j}");
    }
    for e in &r.coefficient_errors {
        println!("error {}: interior {:.3}%  full {:.3}%", e.label, e.interior, e.full);
    }
    if let Some(e) = r.trajectory_error {
        println!("trajectory error = {e:.4}%");
    }
    println!("runtime = {:.2} s", r.runtime_seconds);
}
