//! Time-stepped unitary evolution.
//!
//! A step of length `dt` ending at `tₙ = n·dt` applies
//! `exp(−i H(tₙ) dt)`, i.e. the Hamiltonian is sampled at the end of the
//! step. Decoupled runs interleave segments under the rotating-frame and
//! primed Hamiltonians with instantaneous σx pulses, and report states in
//! the toggling frame.

use serde::{Deserialize, Serialize};

use crate::algebra::{expm_unchecked, SpinState, Unitary2, C64};
use crate::drive::{hamiltonian_lab, hamiltonian_primed, hamiltonian_rot, theta, DriveParams, LabFrameParams};
use crate::error::{Error, Result};
use crate::noise::NoiseTrace;

/// Steps between renormalizations of the running state.
pub const RENORM_INTERVAL: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self { dt: 5e-9, t_final: 250e-6, record_stride: 100 }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_final ({}) must be at least dt ({})",
                self.t_final, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be positive".into()));
        }
        Ok(())
    }

    /// Number of integration steps; the horizon is rounded to a whole step.
    pub fn steps(&self) -> Result<usize> {
        self.validate()?;
        Ok((self.t_final / self.dt).round().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseAxis {
    X,
}

/// Equally spaced π pulses separated by `delta_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DDConfig {
    pub delta_t: f64,
    pub pulse_axis: PulseAxis,
}

impl Default for DDConfig {
    fn default() -> Self {
        Self { delta_t: 50e-9, pulse_axis: PulseAxis::X }
    }
}

impl DDConfig {
    pub fn new(delta_t: f64) -> Self {
        Self { delta_t, pulse_axis: PulseAxis::X }
    }

    /// Integration steps per inter-pulse segment.
    pub fn steps_per_segment(&self, dt: f64) -> Result<usize> {
        if !(self.delta_t.is_finite() && self.delta_t >= dt) {
            return Err(Error::Config(format!(
                "pulse spacing {} must be at least the step {dt}",
                self.delta_t
            )));
        }
        let ratio = self.delta_t / dt;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!(
                "pulse spacing {} is not an integer multiple of dt = {dt}",
                self.delta_t
            )));
        }
        Ok(k as usize)
    }
}

/// Receives the state after every integration step (and once at `t = 0`).
pub trait StepObserver {
    fn observe(&mut self, step: usize, t: f64, state: &SpinState, toggled: bool);
}

impl<A: StepObserver, B: StepObserver> StepObserver for (A, B) {
    fn observe(&mut self, step: usize, t: f64, state: &SpinState, toggled: bool) {
        self.0.observe(step, t, state, toggled);
        self.1.observe(step, t, state, toggled);
    }
}

impl<O: StepObserver + ?Sized> StepObserver for &mut O {
    fn observe(&mut self, step: usize, t: f64, state: &SpinState, toggled: bool) {
        (**self).observe(step, t, state, toggled);
    }
}

/// Sampled evolution. For decoupled runs `states` are toggling-frame states
/// and `frame_flags[i]` tells whether a pulse pair was open at `times[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<SpinState>,
    pub frame_flags: Vec<bool>,
    pub stats: RenormStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&SpinState> {
        self.states.last()
    }
}

/// Diagnostics of the periodic renormalization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RenormStats {
    pub events: usize,
    pub max_correction: f64,
}

/// Records every `stride`-th state into a [`Trajectory`].
#[derive(Debug, Clone)]
pub struct Recorder {
    stride: usize,
    traj: Trajectory,
}

impl Recorder {
    pub fn new(stride: usize, dt: f64) -> Self {
        Self { stride: stride.max(1), traj: Trajectory { dt, ..Default::default() } }
    }

    pub fn finish(self, stats: RenormStats) -> Trajectory {
        Trajectory { stats, ..self.traj }
    }
}

impl StepObserver for Recorder {
    fn observe(&mut self, step: usize, t: f64, state: &SpinState, toggled: bool) {
        if step.is_multiple_of(self.stride) {
            self.traj.times.push(t);
            self.traj.states.push(*state);
            self.traj.frame_flags.push(toggled);
        }
    }
}

fn check_inputs(psi0: &SpinState, noise: Option<&NoiseTrace>, steps: usize, dt: f64) -> Result<()> {
    if !psi0.is_finite() || (psi0.norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument("initial state must be normalized".into()));
    }
    if let Some(n) = noise {
        if n.len() < steps {
            return Err(Error::Contract(format!(
                "noise trace has {} samples but the run needs {steps}",
                n.len()
            )));
        }
        if (n.dt - dt).abs() > 1e-12 * dt {
            return Err(Error::Contract(format!("noise trace dt {} != integration dt {dt}", n.dt)));
        }
        if n.samples[..steps].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("noise trace contains non-finite samples".into()));
        }
    }
    Ok(())
}

fn renormalize(psi: &mut SpinState, stats: &mut RenormStats) {
    let c = psi.normalize();
    stats.events += 1;
    stats.max_correction = stats.max_correction.max(c);
}

/// Evolution under `hamiltonian_rot(t, p, δ(t))`, streaming every state to
/// `obs`. Returns the final state and renormalization diagnostics.
pub fn evolve_plain_observed<O: StepObserver>(
    p: &DriveParams,
    noise: Option<&NoiseTrace>,
    psi0: &SpinState,
    cfg: &IntegrationConfig,
    obs: &mut O,
) -> Result<(SpinState, RenormStats)> {
    let steps = cfg.steps()?;
    check_inputs(psi0, noise, steps, cfg.dt)?;
    let dt = cfg.dt;
    let mut stats = RenormStats::default();
    let mut psi = *psi0;
    obs.observe(0, 0.0, &psi, false);
    for n in 1..=steps {
        let t = n as f64 * dt;
        let delta = noise.map_or(0.0, |tr| tr.samples[n - 1]);
        let u = expm_unchecked(&hamiltonian_rot(t, p, delta), dt);
        psi = u.apply(&psi);
        if n % RENORM_INTERVAL == 0 {
            renormalize(&mut psi, &mut stats);
        }
        obs.observe(n, t, &psi, false);
    }
    Ok((psi, stats))
}

/// [`evolve_plain_observed`] recording every `cfg.record_stride` steps.
pub fn evolve_plain(
    p: &DriveParams,
    noise: Option<&NoiseTrace>,
    psi0: &SpinState,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(cfg.record_stride, cfg.dt);
    let (_, stats) = evolve_plain_observed(p, noise, psi0, cfg, &mut rec)?;
    Ok(rec.finish(stats))
}

/// Decoupled evolution: `Δt` under `hamiltonian_rot`, σx pulse, `Δt` under
/// `hamiltonian_primed`, σx pulse, repeated. The lab-frame state is
/// propagated and the observer sees `X(t)·ψ_lab`, where `X = σx` while a
/// pulse pair is open.
pub fn evolve_dd_observed<O: StepObserver>(
    p: &DriveParams,
    noise: Option<&NoiseTrace>,
    psi0: &SpinState,
    cfg: &IntegrationConfig,
    dd: &DDConfig,
    obs: &mut O,
) -> Result<(SpinState, RenormStats)> {
    let steps = cfg.steps()?;
    let seg = dd.steps_per_segment(cfg.dt)?;
    check_inputs(psi0, noise, steps, cfg.dt)?;
    let dt = cfg.dt;
    let mut stats = RenormStats::default();
    let mut lab = *psi0;
    obs.observe(0, 0.0, &lab, false);
    for n in 1..=steps {
        let t = n as f64 * dt;
        let delta = noise.map_or(0.0, |tr| tr.samples[n - 1]);
        let primed = ((n - 1) / seg) % 2 == 1;
        let h = if primed { hamiltonian_primed(t, p, delta) } else { hamiltonian_rot(t, p, delta) };
        lab = expm_unchecked(&h, dt).apply(&lab);
        if n % seg == 0 {
            lab = lab.flip();
        }
        if n % RENORM_INTERVAL == 0 {
            renormalize(&mut lab, &mut stats);
        }
        let toggled = (n / seg) % 2 == 1;
        let shown = if toggled { lab.flip() } else { lab };
        obs.observe(n, t, &shown, toggled);
    }
    let last = if (steps / seg) % 2 == 1 { lab.flip() } else { lab };
    Ok((last, stats))
}

/// [`evolve_dd_observed`] recording every `cfg.record_stride` steps.
pub fn evolve_dd(
    p: &DriveParams,
    noise: Option<&NoiseTrace>,
    psi0: &SpinState,
    cfg: &IntegrationConfig,
    dd: &DDConfig,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(cfg.record_stride, cfg.dt);
    let (_, stats) = evolve_dd_observed(p, noise, psi0, cfg, dd, &mut rec)?;
    Ok(rec.finish(stats))
}

/// Maps a lab-frame state into the rotating frame, `U₀ ψ` with
/// `U₀ = exp(iσz θ(t))`.
pub fn lab_to_rotating(psi: &SpinState, t: f64, lab: &LabFrameParams) -> Result<SpinState> {
    let th = theta(t, lab)?;
    let ph = C64::from_polar(1.0, th);
    Ok(SpinState { c0: psi.c0 * ph, c1: psi.c1 * ph.conj() })
}

/// Noise-free evolution under the lab-frame microwave Hamiltonian. The
/// initial state is given in the rotating frame (`θ(0) = 0`, so the frames
/// coincide at `t = 0`) and recorded states are mapped back through `U₀`.
pub fn evolve_lab(lab: &LabFrameParams, psi0: &SpinState, cfg: &IntegrationConfig) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    check_inputs(psi0, None, steps, cfg.dt)?;
    if !(lab.omega0.is_finite() && lab.omega0 > 0.0) {
        return Err(Error::InvalidArgument(format!("omega0 must be positive, got {}", lab.omega0)));
    }
    let dt = cfg.dt;
    let mut rec = Recorder::new(cfg.record_stride, dt);
    let mut stats = RenormStats::default();
    let mut psi = *psi0;
    rec.observe(0, 0.0, psi0, false);
    for n in 1..=steps {
        let t = n as f64 * dt;
        psi = expm_unchecked(&hamiltonian_lab(t, lab)?, dt).apply(&psi);
        if n % RENORM_INTERVAL == 0 {
            renormalize(&mut psi, &mut stats);
        }
        if n % cfg.record_stride == 0 {
            rec.observe(n, t, &lab_to_rotating(&psi, t, lab)?, false);
        }
    }
    Ok(rec.finish(stats))
}

/// Time-ordered product over `count` steps of `dt` starting after `t0`,
/// with generator `gen(t)` sampled at each step's end.
fn ordered_product<F>(t0: f64, dt: f64, count: usize, mut gen: F) -> Unitary2
where
    F: FnMut(f64) -> crate::algebra::PauliCoeffs,
{
    let mut u = Unitary2::IDENTITY;
    for j in 1..=count {
        let t = t0 + j as f64 * dt;
        u = expm_unchecked(&gen(t), dt) * u;
    }
    u
}

/// One decoupling cycle `σx U′(Δt) σx U(Δt)` starting at `t0` with frozen
/// noise `delta`, built from `cfg.dt` sub-steps.
pub fn dd_cycle_propagator(
    p: &DriveParams,
    delta: f64,
    t0: f64,
    dd: &DDConfig,
    cfg: &IntegrationConfig,
) -> Result<Unitary2> {
    let seg = dd.steps_per_segment(cfg.dt)?;
    let dt = cfg.dt;
    let first = ordered_product(t0, dt, seg, |t| hamiltonian_rot(t, p, delta));
    let second = ordered_product(t0 + seg as f64 * dt, dt, seg, |t| hamiltonian_primed(t, p, delta));
    let x = Unitary2::PAULI_X;
    Ok(x * second * x * first)
}

/// Spectral-norm distance between one decoupling cycle (frozen noise
/// `delta_const`) and the noise-free evolution over the same `2Δt`.
pub fn effective_propagator_error(
    p: &DriveParams,
    delta_const: f64,
    t0: f64,
    dd: &DDConfig,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    if !(delta_const.is_finite() && t0.is_finite()) {
        return Err(Error::InvalidArgument("noise level and start time must be finite".into()));
    }
    let seg = dd.steps_per_segment(cfg.dt)?;
    let cycle = dd_cycle_propagator(p, delta_const, t0, dd, cfg)?;
    let reference = ordered_product(t0, cfg.dt, 2 * seg, |t| hamiltonian_rot(t, p, 0.0));
    Ok(cycle.op_norm_diff(&reference))
}
