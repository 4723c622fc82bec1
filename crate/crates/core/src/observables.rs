//! Measured quantities: work done by each drive tone, pumping rates from
//! linear regression, Chern-number extraction and eigenstate fidelity.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algebra::{eig_pauli, Band, SpinState};
use crate::drive::{field_derivatives, hamiltonian_rot, DriveParams};
use crate::error::{Error, Result};
use crate::propagation::{StepObserver, Trajectory};

/// Minimum number of samples inside a regression window.
pub const MIN_FIT_SAMPLES: usize = 100;

/// Accumulated work of both tones (rad/s) and eigenstate fidelity, sampled
/// on a common time grid (s).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorkRecord {
    pub times: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub fidelity: Vec<f64>,
}

impl WorkRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with times in μs and energies in units of 2π·MHz.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_with_comment(
            w,
            "# times in microseconds; work E1, E2 in units of 2pi*MHz (rad/s / 2pi*1e6); fidelity dimensionless",
        )?;
        out.write_record(["t_us", "e1_2pi_mhz", "e2_2pi_mhz", "fidelity"]).map_err(csv_err)?;
        for i in 0..self.len() {
            out.write_record([
                fmt_f64(self.times[i] * 1e6),
                fmt_f64(self.e1[i] / MHZ),
                fmt_f64(self.e2[i] / MHZ),
                fmt_f64(self.fidelity[i]),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `2π · 1 MHz` in rad/s.
pub(crate) const MHZ: f64 = 2.0 * PI * 1e6;

pub(crate) fn fmt_f64(x: f64) -> String {
    // Shortest representation that parses back to the same bits.
    format!("{x:?}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub(crate) fn csv_with_comment<W: Write>(mut w: W, comment: &str) -> Result<csv::Writer<W>> {
    writeln!(w, "{comment}")?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(w))
}

/// Least-squares pumping rates (rad/s²) and the Chern estimate
/// `π (P₁ − P₂) / (ω₁ω₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpingFit {
    pub p1: f64,
    pub p2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub chern_estimate: f64,
}

impl PumpingFit {
    pub fn from_rates(p1: f64, p2: f64, stderr1: f64, stderr2: f64, p: &DriveParams) -> Self {
        Self { p1, p2, stderr1, stderr2, chern_estimate: chern_from_rates(p1, p2, p) }
    }

    /// `P₁` in units of the pumping quantum `ω₁ω₂/(2π)`.
    pub fn p1_normalized(&self, p: &DriveParams) -> f64 {
        self.p1 / p.pumping_quantum()
    }
}

pub fn chern_from_rates(p1: f64, p2: f64, p: &DriveParams) -> f64 {
    PI * (p1 - p2) / (p.omega1 * p.omega2)
}

/// Fidelity of `psi` with the chosen instantaneous eigenstate of the
/// noise-free rotating-frame Hamiltonian at `t`; NaN where the bands touch.
pub fn fidelity_at(t: f64, psi: &SpinState, p: &DriveParams, band: Band) -> f64 {
    match eig_pauli(&hamiltonian_rot(t, p, 0.0)) {
        Ok(e) => band.pick(&e).overlap(psi).min(1.0),
        Err(_) => f64::NAN,
    }
}

/// `(⟨∂t h₁·σ⟩, ⟨∂t h₂·σ⟩)` at time `t`.
#[inline]
pub fn work_integrand(t: f64, psi: &SpinState, p: &DriveParams) -> (f64, f64) {
    let (d1, d2) = field_derivatives(t, p);
    let [x, y, z] = psi.bloch();
    (d1.hx * x + d1.hz * z, d2.hy * y + d2.hz * z)
}

/// Streams work and fidelity during propagation, at full step resolution,
/// and keeps every `stride`-th sample.
#[derive(Debug, Clone)]
pub struct WorkAccumulator {
    params: DriveParams,
    dt: f64,
    stride: usize,
    band: Band,
    e1: f64,
    e2: f64,
    record: WorkRecord,
}

impl WorkAccumulator {
    pub fn new(params: DriveParams, dt: f64, stride: usize, band: Band) -> Self {
        Self { params, dt, stride: stride.max(1), band, e1: 0.0, e2: 0.0, record: WorkRecord::default() }
    }

    pub fn finish(self) -> WorkRecord {
        self.record
    }
}

impl StepObserver for WorkAccumulator {
    fn observe(&mut self, step: usize, t: f64, state: &SpinState, _toggled: bool) {
        if step.is_multiple_of(self.stride) {
            self.record.times.push(t);
            self.record.e1.push(self.e1);
            self.record.e2.push(self.e2);
            self.record.fidelity.push(fidelity_at(t, state, &self.params, self.band));
        }
        let (w1, w2) = work_integrand(t, state, &self.params);
        self.e1 += w1 * self.dt;
        self.e2 += w2 * self.dt;
    }
}

/// Work `Eₖ(tₙ) = Σ_{j<n} ⟨ψ(tⱼ)|∂t hₖ(tⱼ)·σ|ψ(tⱼ)⟩ dt` from a trajectory
/// recorded at every step, together with the fidelity to `band`.
pub fn accumulate_work(traj: &Trajectory, p: &DriveParams, dt: f64, band: Band) -> Result<WorkRecord> {
    if traj.is_empty() {
        return Err(Error::Contract("empty trajectory".into()));
    }
    if (traj.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::Contract(format!("trajectory dt {} does not match {dt}", traj.dt)));
    }
    let uniform = traj.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if !uniform {
        return Err(Error::Contract(
            "work accumulation needs every integration step (record_stride = 1)".into(),
        ));
    }
    let mut acc = WorkAccumulator::new(*p, dt, 1, band);
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        acc.observe(i, *t, s, traj.frame_flags.get(i).copied().unwrap_or(false));
    }
    Ok(acc.finish())
}

/// Fidelity series `|⟨ψ_band(t)|ψ(t)⟩|²` against the noise-free
/// instantaneous eigenstates. Degenerate samples are NaN.
pub fn fidelity(traj: &Trajectory, p: &DriveParams, band: Band) -> Vec<f64> {
    traj.times.iter().zip(&traj.states).map(|(t, s)| fidelity_at(*t, s, p, band)).collect()
}

/// Ordinary least squares `y = a + b t`; returns `(b, stderr(b))`.
pub fn ols_slope(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        sxx += (ti - tm) * (ti - tm);
        sxy += (ti - tm) * (yi - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let rss: f64 = t.iter().zip(y).map(|(ti, yi)| (yi - intercept - slope * ti).powi(2)).sum();
    let stderr = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, stderr)
}

/// Linear-regression pumping rates over `window = (t_start, t_end)`.
pub fn pumping_rate(rec: &WorkRecord, window: (f64, f64), p: &DriveParams) -> Result<PumpingFit> {
    let (lo, hi) = window;
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::Contract(format!("empty fit window [{lo}, {hi}]")));
    }
    // small slack so that window edges equal to sample times are included
    let eps = 1e-9 * hi.abs().max(1e-12);
    let idx: Vec<usize> = (0..rec.len()).filter(|&i| rec.times[i] >= lo - eps && rec.times[i] <= hi + eps).collect();
    if idx.len() < MIN_FIT_SAMPLES {
        return Err(Error::Contract(format!(
            "fit window holds {} samples, need at least {MIN_FIT_SAMPLES}",
            idx.len()
        )));
    }
    let t: Vec<f64> = idx.iter().map(|&i| rec.times[i]).collect();
    let y1: Vec<f64> = idx.iter().map(|&i| rec.e1[i]).collect();
    let y2: Vec<f64> = idx.iter().map(|&i| rec.e2[i]).collect();
    let (p1, s1) = ols_slope(&t, &y1);
    let (p2, s2) = ols_slope(&t, &y2);
    Ok(PumpingFit::from_rates(p1, p2, s1, s2, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{evolve_plain, IntegrationConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_regression() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.25 * x).collect();
        let (b, se) = ols_slope(&t, &y);
        assert_abs_diff_eq!(b, 3.25, epsilon = 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn short_window_is_rejected() {
        let rec = WorkRecord {
            times: (0..50).map(|i| i as f64).collect(),
            e1: vec![0.0; 50],
            e2: vec![0.0; 50],
            fidelity: vec![1.0; 50],
        };
        let p = DriveParams::default();
        assert!(matches!(pumping_rate(&rec, (0.0, 49.0), &p), Err(Error::Contract(_))));
        assert!(pumping_rate(&rec, (3.0, 3.0), &p).is_err());
    }

    #[test]
    fn chern_estimate_formula() {
        let p = DriveParams::default();
        let q = p.pumping_quantum();
        let f = PumpingFit::from_rates(q, -q, 0.0, 0.0, &p);
        assert_abs_diff_eq!(f.chern_estimate, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.p1_normalized(&p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn undriven_work_is_zero() {
        let p = DriveParams { eta: 0.0, ..DriveParams::default() };
        let cfg = IntegrationConfig { dt: 5e-9, t_final: 2e-6, record_stride: 1 };
        let tr = evolve_plain(&p, None, &SpinState::UP, &cfg).unwrap();
        let rec = accumulate_work(&tr, &p, cfg.dt, Band::Lower).unwrap();
        assert!(rec.e1.iter().chain(&rec.e2).all(|e| *e == 0.0));
        // η = 0 leaves no eigenbasis
        assert!(rec.fidelity.iter().all(|f| f.is_nan()));
    }

    #[test]
    fn strided_trajectory_is_rejected() {
        let p = DriveParams::with_m(0.9);
        let cfg = IntegrationConfig { dt: 5e-9, t_final: 1e-6, record_stride: 10 };
        let tr = evolve_plain(&p, None, &SpinState::UP, &cfg).unwrap();
        assert!(matches!(accumulate_work(&tr, &p, cfg.dt, Band::Lower), Err(Error::Contract(_))));
        assert!(accumulate_work(&tr, &p, 1e-9, Band::Lower).is_err());
    }

    #[test]
    fn fidelity_starts_at_one() {
        let p = DriveParams::with_m(1.4);
        let e = eig_pauli(&hamiltonian_rot(0.0, &p, 0.0)).unwrap();
        assert_abs_diff_eq!(fidelity_at(0.0, &e.vminus, &p, Band::Lower), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_at(0.0, &e.vminus, &p, Band::Upper), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn csv_layout() {
        let rec = WorkRecord { times: vec![0.0, 1e-6], e1: vec![0.0, MHZ], e2: vec![0.0, -MHZ], fidelity: vec![1.0, 0.5] };
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], "t_us,e1_2pi_mhz,e2_2pi_mhz,fidelity");
        assert_eq!(lines[3], "1.0,1.0,-1.0,0.5");
    }
}
