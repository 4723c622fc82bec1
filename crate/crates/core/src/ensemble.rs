//! Monte Carlo averaging over noise realizations and parameter sweeps.
//!
//! Instance `i` draws its noise from seed `base_seed ^ i`. Instances run
//! on a rayon pool, results are collected in index order and reduced with
//! a fixed pairwise tree, so the output does not depend on the number of
//! workers.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{eig_pauli, Band, SpinState};
use crate::drive::{hamiltonian_rot, DriveParams};
use crate::error::{Error, Result};
use crate::noise::{NoiseParams, NoiseTrace};
use crate::observables::{csv_err, csv_with_comment, fmt_f64, pumping_rate, PumpingFit, WorkAccumulator, WorkRecord, MHZ};
use crate::propagation::{evolve_dd_observed, evolve_plain_observed, DDConfig, IntegrationConfig};

/// Fraction of failed instances above which an ensemble is aborted.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Dephasing strength and correlation time; the seed is assigned per
/// instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub variance: f64,
    pub tau: f64,
}

impl NoiseModel {
    pub fn from_t2star(t2star: f64, tau: f64) -> Result<Self> {
        Ok(Self { variance: crate::noise::variance_from_t2star(t2star)?, tau })
    }

    pub fn with_seed(&self, seed: u64) -> NoiseParams {
        NoiseParams { variance: self.variance, tau: self.tau, seed }
    }
}

/// Everything needed to reproduce one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub drive: DriveParams,
    pub noise: Option<NoiseModel>,
    pub integration: IntegrationConfig,
    pub dd: Option<DDConfig>,
    pub band: Band,
    pub instances: usize,
    pub base_seed: u64,
    /// Regression window (s); `None` fits the whole horizon.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            drive: DriveParams::default(),
            noise: None,
            integration: IntegrationConfig::default(),
            dd: None,
            band: Band::Lower,
            instances: 100,
            base_seed: 0,
            fit_window: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.drive.validate()?;
        self.integration.validate()?;
        if let Some(n) = &self.noise {
            n.with_seed(0).validate()?;
        }
        if let Some(dd) = &self.dd {
            dd.steps_per_segment(self.integration.dt)?;
        }
        if self.instances == 0 {
            return Err(Error::InvalidArgument("instances must be >= 1".into()));
        }
        if let Some((lo, hi)) = self.fit_window {
            if !(lo >= 0.0 && hi > lo) {
                return Err(Error::InvalidArgument(format!("bad fit window [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Instances actually run: a noiseless ensemble has one member.
    pub fn effective_instances(&self) -> usize {
        if self.noise.is_some() {
            self.instances
        } else {
            1
        }
    }

    pub fn window(&self) -> (f64, f64) {
        self.fit_window.unwrap_or((0.0, self.integration.steps().unwrap_or(0) as f64 * self.integration.dt))
    }

    pub fn instance_seed(&self, index: usize) -> u64 {
        self.base_seed ^ index as u64
    }

    /// Band eigenstate of the noise-free Hamiltonian at `t = 0`.
    pub fn initial_state(&self) -> Result<SpinState> {
        let e = eig_pauli(&hamiltonian_rot(0.0, &self.drive, 0.0))?;
        Ok(self.band.pick(&e))
    }
}

/// Work, fidelity and pumping fit of one noise realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub index: usize,
    pub seed: u64,
    pub record: WorkRecord,
    pub fit: PumpingFit,
}

/// Runs one realization end to end. `Ok(None)` marks an instance whose
/// fidelity reference became degenerate.
pub fn run_instance(cfg: &ExperimentConfig, index: usize) -> Result<Option<InstanceOutcome>> {
    let psi0 = cfg.initial_state()?;
    let ic = &cfg.integration;
    let steps = ic.steps()?;
    let seed = cfg.instance_seed(index);
    let trace = match &cfg.noise {
        Some(n) => Some(NoiseTrace::generate(&n.with_seed(seed), ic.dt, steps)?),
        None => None,
    };
    let mut acc = WorkAccumulator::new(cfg.drive, ic.dt, ic.record_stride, cfg.band);
    match &cfg.dd {
        Some(dd) => evolve_dd_observed(&cfg.drive, trace.as_ref(), &psi0, ic, dd, &mut acc)?,
        None => evolve_plain_observed(&cfg.drive, trace.as_ref(), &psi0, ic, &mut acc)?,
    };
    let record = acc.finish();
    if record.fidelity.iter().any(|f| f.is_nan()) {
        return Ok(None);
    }
    let fit = pumping_rate(&record, cfg.window(), &cfg.drive)?;
    Ok(Some(InstanceOutcome { index, seed, record, fit }))
}

/// Sum with a fixed binary-tree association.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean and standard error of the mean.
fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (xs.len() as f64 - 1.0);
    (m, (var / xs.len() as f64).sqrt())
}

/// Aggregated ensemble output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub instances: usize,
    pub failed: usize,
    pub times: Vec<f64>,
    pub mean_e1: Vec<f64>,
    pub mean_e2: Vec<f64>,
    pub mean_fidelity: Vec<f64>,
    /// Per-instance fits in index order.
    pub fits: Vec<PumpingFit>,
    /// Mean of the per-instance fits; the stderr fields are standard
    /// errors of the mean across instances (regression errors when there
    /// is a single instance).
    pub mean_fit: PumpingFit,
    pub chern_stderr: f64,
    /// Regression of the ensemble-mean work series.
    pub fit_of_means: PumpingFit,
}

impl EnsembleResult {
    pub fn mean_record(&self) -> WorkRecord {
        WorkRecord {
            times: self.times.clone(),
            e1: self.mean_e1.clone(),
            e2: self.mean_e2.clone(),
            fidelity: self.mean_fidelity.clone(),
        }
    }

    pub fn min_mean_fidelity(&self) -> f64 {
        self.mean_fidelity.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Runs the ensemble on the current rayon pool.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let n = cfg.effective_instances();
    let outcomes: Vec<Result<Option<InstanceOutcome>>> = (0..n).into_par_iter().map(|i| run_instance(cfg, i)).collect();
    let mut ok = Vec::with_capacity(n);
    let mut failed = 0;
    for o in outcomes {
        match o? {
            Some(x) => ok.push(x),
            None => failed += 1,
        }
    }
    if ok.is_empty() || failed as f64 > MAX_FAILURE_FRACTION * n as f64 {
        return Err(Error::EnsembleAborted { failed, total: n });
    }
    aggregate(cfg, &ok, failed)
}

/// Runs the ensemble on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<EnsembleResult> {
    with_workers(workers, || run_ensemble(cfg))
}

/// Runs `f` inside a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    pool.install(f)
}

fn aggregate(cfg: &ExperimentConfig, ok: &[InstanceOutcome], failed: usize) -> Result<EnsembleResult> {
    let times = ok[0].record.times.clone();
    let column = |k: usize, pick: fn(&WorkRecord) -> &Vec<f64>| -> Vec<f64> {
        ok.iter().map(|o| pick(&o.record)[k]).collect()
    };
    let len = times.len();
    let mean_e1: Vec<f64> = (0..len).map(|k| mean(&column(k, |r| &r.e1))).collect();
    let mean_e2: Vec<f64> = (0..len).map(|k| mean(&column(k, |r| &r.e2))).collect();
    let mean_fidelity: Vec<f64> = (0..len).map(|k| mean(&column(k, |r| &r.fidelity))).collect();

    let fits: Vec<PumpingFit> = ok.iter().map(|o| o.fit).collect();
    let p1s: Vec<f64> = fits.iter().map(|f| f.p1).collect();
    let p2s: Vec<f64> = fits.iter().map(|f| f.p2).collect();
    let cs: Vec<f64> = fits.iter().map(|f| f.chern_estimate).collect();
    let (p1, mut se1) = mean_sem(&p1s);
    let (p2, mut se2) = mean_sem(&p2s);
    let (_, mut chern_se) = mean_sem(&cs);
    if ok.len() == 1 {
        se1 = fits[0].stderr1;
        se2 = fits[0].stderr2;
        chern_se = std::f64::consts::PI * (se1 * se1 + se2 * se2).sqrt() / (cfg.drive.omega1 * cfg.drive.omega2);
    }
    let mean_fit = PumpingFit::from_rates(p1, p2, se1, se2, &cfg.drive);
    let mean_rec = WorkRecord { times: times.clone(), e1: mean_e1.clone(), e2: mean_e2.clone(), fidelity: mean_fidelity.clone() };
    let fit_of_means = pumping_rate(&mean_rec, cfg.window(), &cfg.drive)?;
    Ok(EnsembleResult {
        instances: ok.len(),
        failed,
        times,
        mean_e1,
        mean_e2,
        mean_fidelity,
        fits,
        mean_fit,
        chern_stderr: chern_se,
        fit_of_means,
    })
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub result: EnsembleResult,
}

/// One ensemble per gap parameter. Every `m` reuses the same base seed, so
/// the noise realizations are shared across the sweep.
pub fn sweep_m(cfg: &ExperimentConfig, m_values: &[f64]) -> Result<Vec<SweepPoint>> {
    if m_values.is_empty() {
        return Err(Error::InvalidArgument("m sweep needs at least one value".into()));
    }
    m_values
        .iter()
        .map(|&m| {
            let c = ExperimentConfig { drive: DriveParams { m, ..cfg.drive }, ..cfg.clone() };
            Ok(SweepPoint { value: m, result: run_ensemble(&c)? })
        })
        .collect()
}

/// One decoupled ensemble per noise correlation time at fixed variance.
pub fn sweep_correlation_time(cfg: &ExperimentConfig, taus: &[f64]) -> Result<Vec<SweepPoint>> {
    if taus.is_empty() {
        return Err(Error::InvalidArgument("correlation-time sweep needs at least one value".into()));
    }
    if cfg.dd.is_none() {
        return Err(Error::Config("correlation-time sweep requires decoupling to be enabled".into()));
    }
    let noise = cfg.noise.ok_or_else(|| Error::Config("correlation-time sweep requires a noise model".into()))?;
    taus.iter()
        .map(|&tau| {
            let c = ExperimentConfig { noise: Some(NoiseModel { tau, ..noise }), ..cfg.clone() };
            Ok(SweepPoint { value: tau, result: run_ensemble(&c)? })
        })
        .collect()
}

/// Sweep summary CSV, one row per swept value. Rates in rad/s² and in
/// units of the pumping quantum `ω₁ω₂/(2π)`.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], column: &str, drive: &DriveParams, w: W) -> Result<()> {
    let q = drive.pumping_quantum();
    let mut out = csv_with_comment(
        w,
        &format!(
            "# pumping rates p1,p2 and stderrs in rad/s^2; *_over_quantum in units of omega1*omega2/(2pi) = {} rad/s^2",
            fmt_f64(q)
        ),
    )?;
    out.write_record([
        column,
        "instances",
        "failed",
        "p1_rad_s2",
        "p2_rad_s2",
        "stderr1_rad_s2",
        "stderr2_rad_s2",
        "p1_over_quantum",
        "p2_over_quantum",
        "chern_estimate",
        "chern_stderr",
        "chern_fit_of_means",
        "min_mean_fidelity",
        "quantum_rad_s2",
    ])
    .map_err(csv_err)?;
    for pt in points {
        let r = &pt.result;
        let f = &r.mean_fit;
        out.write_record([
            fmt_f64(pt.value),
            r.instances.to_string(),
            r.failed.to_string(),
            fmt_f64(f.p1),
            fmt_f64(f.p2),
            fmt_f64(f.stderr1),
            fmt_f64(f.stderr2),
            fmt_f64(f.p1 / q),
            fmt_f64(f.p2 / q),
            fmt_f64(f.chern_estimate),
            fmt_f64(r.chern_stderr),
            fmt_f64(r.fit_of_means.chern_estimate),
            fmt_f64(r.min_mean_fidelity()),
            fmt_f64(q),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Long-format series CSV (`column`, t_us, mean E1, mean E2, mean fidelity)
/// for waterfall and line plots.
pub fn write_series_csv<W: Write>(points: &[SweepPoint], column: &str, w: W) -> Result<()> {
    let mut out = csv_with_comment(
        w,
        "# times in microseconds; ensemble-mean work in units of 2pi*MHz; mean fidelity dimensionless",
    )?;
    out.write_record([column, "t_us", "e1_2pi_mhz", "e2_2pi_mhz", "fidelity"]).map_err(csv_err)?;
    for pt in points {
        let r = &pt.result;
        for k in 0..r.times.len() {
            out.write_record([
                fmt_f64(pt.value),
                fmt_f64(r.times[k] * 1e6),
                fmt_f64(r.mean_e1[k] / MHZ),
                fmt_f64(r.mean_e2[k] / MHZ),
                fmt_f64(r.mean_fidelity[k]),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(m: f64) -> ExperimentConfig {
        ExperimentConfig {
            drive: DriveParams::with_m(m),
            integration: IntegrationConfig { dt: 5e-9, t_final: 20e-6, record_stride: 20 },
            instances: 8,
            base_seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn noiseless_ensemble_is_single_instance() {
        let r = run_ensemble(&short(0.9)).unwrap();
        assert_eq!(r.instances, 1);
        assert_eq!(r.fits.len(), 1);
        assert_eq!(r.mean_fit.p1, r.fits[0].p1);
    }

    #[test]
    fn zero_variance_noise_has_no_spread() {
        let mut c = short(0.9);
        c.noise = Some(NoiseModel { variance: 0.0, tau: 1e-3 });
        let r = run_ensemble(&c).unwrap();
        assert_eq!(r.instances, 8);
        assert!(r.fits.iter().all(|f| f.p1 == r.fits[0].p1 && f.p2 == r.fits[0].p2));
        assert_eq!(r.mean_fit.stderr1, 0.0);
    }

    #[test]
    fn seeds_are_xor_of_index() {
        let c = short(0.9);
        assert_eq!(c.instance_seed(0), 11);
        assert_eq!(c.instance_seed(3), 11 ^ 3);
    }

    #[test]
    fn tau_sweep_requires_dd_and_noise() {
        let mut c = short(0.9);
        assert!(sweep_correlation_time(&c, &[1e-6]).is_err());
        c.dd = Some(DDConfig::default());
        assert!(sweep_correlation_time(&c, &[1e-6]).is_err());
        assert!(sweep_m(&c, &[]).is_err());
    }

    #[test]
    fn degenerate_initial_state_is_an_error() {
        let mut c = short(2.0);
        c.drive.phi01 = 0.0;
        assert!(matches!(run_ensemble(&c), Err(Error::Degeneracy { .. })));
    }
}
