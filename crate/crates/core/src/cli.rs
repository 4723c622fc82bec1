//! Command-line runner: argument parsing, subcommand dispatch and output
//! files.
//!
//! Every run writes `manifest.json` next to its outputs. Exit codes: 2 for
//! configuration errors, 3 for degenerate spectra or critical points, 4
//! for numeric contract violations, 1 for I/O failures.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, parse_config_str, to_canonical_toml, RunConfig};
use crate::ensemble::{
    run_ensemble, sweep_correlation_time, sweep_m, with_workers, write_series_csv, write_sweep_csv, EnsembleResult,
    SweepPoint,
};
use crate::error::{Error, Result};
use crate::noise::NoiseTrace;
use crate::observables::{csv_err, csv_with_comment, fmt_f64, PumpingFit};
use crate::topology::{analytic_chern, chern_fhs, h_trajectory_sample, min_gap};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "TOPOFREQ_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Work and fidelity time series for the configured experiment
    Trajectory,
    /// Pumping rate versus the gap parameter m
    SweepM,
    /// Decoupled pumping rate versus the noise correlation time
    SweepTau,
    /// Lattice Chern number of the configured band
    Chern,
    /// Minimum band gap over the Floquet zone
    Gap,
    /// Sampled field trajectory h(t)
    Htraj,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Trajectory => "trajectory",
            Family::SweepM => "sweep-m",
            Family::SweepTau => "sweep-tau",
            Family::Chern => "chern",
            Family::Gap => "gap",
            Family::Htraj => "htraj",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Work and fidelity time series for the configured experiment
    Trajectory,
    /// Pumping rate versus the gap parameter m
    SweepM,
    /// Decoupled pumping rate versus the noise correlation time
    SweepTau,
    /// Lattice Chern number of the configured band
    Chern,
    /// Minimum band gap over the Floquet zone
    Gap,
    /// Sampled field trajectory h(t)
    Htraj,
}

impl From<&Command> for Family {
    fn from(c: &Command) -> Self {
        match c {
            Command::Trajectory => Family::Trajectory,
            Command::SweepM => Family::SweepM,
            Command::SweepTau => Family::SweepTau,
            Command::Chern => Family::Chern,
            Command::Gap => Family::Gap,
            Command::Htraj => Family::Htraj,
        }
    }
}

/// Topological frequency conversion simulator.
#[derive(Debug, Parser)]
#[command(name = "topofreq", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment file (TOML); defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads for ensembles
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    /// Override the gap parameter m
    #[arg(long, global = true, allow_hyphen_values = true)]
    m: Option<f64>,
}

/// Provenance record written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Family,
    pub version: String,
    /// Canonical TOML of the effective configuration.
    pub config: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub workers: Option<usize>,
    pub outputs: Vec<PathBuf>,
    pub seeds: Vec<u64>,
}

impl RunManifest {
    /// Parses the embedded configuration echo.
    pub fn parsed_config(&self) -> Result<RunConfig> {
        parse_config_str(&self.config)
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    std::io::Write::write_all(&mut w, b"\n")?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(w) => with_workers(w, f),
        None => f(),
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    instances: usize,
    failed: usize,
    pumping_quantum_rad_s2: f64,
    mean_fit: &'a PumpingFit,
    chern_stderr: f64,
    fit_of_means: &'a PumpingFit,
    min_mean_fidelity: f64,
    instance_fits: &'a [PumpingFit],
}

impl<'a> FitSummary<'a> {
    fn new(r: &'a EnsembleResult, q: f64) -> Self {
        Self {
            instances: r.instances,
            failed: r.failed,
            pumping_quantum_rad_s2: q,
            mean_fit: &r.mean_fit,
            chern_stderr: r.chern_stderr,
            fit_of_means: &r.fit_of_means,
            min_mean_fidelity: r.min_mean_fidelity(),
            instance_fits: &r.fits,
        }
    }
}

#[derive(Serialize)]
struct SweepRow<'a> {
    value: f64,
    #[serde(flatten)]
    summary: FitSummary<'a>,
}

#[derive(Serialize)]
struct SweepJson<'a> {
    parameter: &'a str,
    config: String,
    points: Vec<SweepRow<'a>>,
}

fn sweep_outputs(
    points: &[SweepPoint],
    column: &str,
    stem: &str,
    cfg: &RunConfig,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let q = cfg.experiment.drive.pumping_quantum();
    let csv_path = out.join(format!("{stem}.csv"));
    write_sweep_csv(points, column, &cfg.experiment.drive, create(&csv_path)?)?;
    let series_path = out.join(format!("{stem}_series.csv"));
    write_series_csv(points, column, create(&series_path)?)?;
    let json_path = out.join(format!("{stem}.json"));
    let doc = SweepJson {
        parameter: column,
        config: to_canonical_toml(cfg),
        points: points.iter().map(|p| SweepRow { value: p.value, summary: FitSummary::new(&p.result, q) }).collect(),
    };
    write_json(&json_path, &doc)?;
    Ok(vec![csv_path, series_path, json_path])
}

/// Runs one experiment family, writing its outputs and `manifest.json`
/// into `out`.
pub fn run_subcommand(family: Family, cfg: &RunConfig, out: &Path, workers: Option<usize>) -> Result<RunManifest> {
    let started = now();
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let e = &cfg.experiment;
    let seeds: Vec<u64> = (0..e.effective_instances()).map(|i| e.instance_seed(i)).collect();
    let mut outputs = Vec::new();
    match family {
        Family::Trajectory => {
            let r = in_pool(workers, || run_ensemble(e))?;
            let path = out.join("trajectory.csv");
            r.mean_record().write_csv(create(&path)?)?;
            outputs.push(path);
            let path = out.join("fit.json");
            write_json(&path, &FitSummary::new(&r, e.drive.pumping_quantum()))?;
            outputs.push(path);
            println!(
                "chern_estimate = {:.4} +/- {:.4} ({} instances, {} failed)",
                r.mean_fit.chern_estimate, r.chern_stderr, r.instances, r.failed
            );
        }
        Family::SweepM => {
            let pts = in_pool(workers, || sweep_m(e, &cfg.sweep.m_values))?;
            outputs = sweep_outputs(&pts, "m", "sweep_m", cfg, out)?;
            for p in &pts {
                println!("m = {:+.3}  chern_estimate = {:.4}", p.value, p.result.mean_fit.chern_estimate);
            }
        }
        Family::SweepTau => {
            let pts = in_pool(workers, || sweep_correlation_time(e, &cfg.sweep.taus))?;
            outputs = sweep_outputs(&pts, "tau_s", "sweep_tau", cfg, out)?;
            for p in &pts {
                println!("tau = {:.3e} s  chern_estimate = {:.4}", p.value, p.result.mean_fit.chern_estimate);
            }
        }
        Family::Chern => {
            let c = chern_fhs(&e.drive, &cfg.grid, e.band)?;
            let analytic = analytic_chern(e.drive.m).ok();
            let path = out.join("chern.json");
            write_json(
                &path,
                &serde_json::json!({
                    "m": e.drive.m,
                    "band": e.band.as_str(),
                    "grid_size": cfg.grid.n,
                    "chern": c,
                    "analytic_lower_band": analytic,
                }),
            )?;
            outputs.push(path);
            println!("C = {c}");
        }
        Family::Gap => {
            let g = min_gap(e.drive.m, e.drive.eta);
            let path = out.join("gap.json");
            write_json(
                &path,
                &serde_json::json!({
                    "m": e.drive.m,
                    "eta_rad_per_s": e.drive.eta,
                    "min_gap_rad_per_s": g,
                    "omega2_rad_per_s": e.drive.omega2,
                    "gap_over_omega2": g / e.drive.omega2,
                }),
            )?;
            outputs.push(path);
            println!("gap = {} rad/s ({:.3} x omega2)", fmt_f64(g), g / e.drive.omega2);
        }
        Family::Htraj => {
            let ic = &e.integration;
            let steps = ic.steps()?;
            let trace = match &e.noise {
                Some(n) => Some(NoiseTrace::generate(&n.with_seed(e.base_seed), ic.dt, steps.max(1))?),
                None => None,
            };
            let samples = h_trajectory_sample(&e.drive, ic.dt, ic.t_final, ic.record_stride, trace.as_ref())?;
            let path = out.join("htraj.csv");
            let mut w = csv_with_comment(create(&path)?, "# t in microseconds; field components in rad/s")?;
            w.write_record(["t_us", "hx_rad_s", "hy_rad_s", "hz_rad_s"]).map_err(csv_err)?;
            for s in &samples {
                w.write_record([fmt_f64(s.t * 1e6), fmt_f64(s.h.hx), fmt_f64(s.h.hy), fmt_f64(s.h.hz)])
                    .map_err(csv_err)?;
            }
            w.flush()?;
            outputs.push(path);
            println!("{} samples", samples.len());
        }
    }
    let manifest = RunManifest {
        command: family,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: to_canonical_toml(cfg),
        started_unix_s: started,
        finished_unix_s: now(),
        workers,
        outputs,
        seeds: if matches!(family, Family::Chern | Family::Gap) { Vec::new() } else { seeds },
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Parses `args` and runs the requested subcommand. Returns the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<RunManifest> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.m {
        if !m.is_finite() {
            return Err(Error::Config(format!("--m must be finite, got {m}")));
        }
        cfg.experiment.drive.m = m;
    }
    if cli.workers == Some(0) {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    run_subcommand((&cli.command).into(), &cfg, &cli.out, cli.workers)
}
