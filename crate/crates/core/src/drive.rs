//! Two-tone drive: field vectors, rotating-frame Hamiltonians and the
//! lab-frame microwave Hamiltonian used to validate the rotating-wave
//! approximation.
//!
//! All frequencies are angular (rad/s) and all Hamiltonians are in units
//! with ħ = 1.

use std::f64::consts::PI;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::algebra::PauliCoeffs;
use crate::error::{Error, Result};

/// `2π · 1 MHz`, the Hamiltonian energy scale.
pub const DEFAULT_ETA: f64 = 2.0 * PI * 1.0e6;
/// `2π · 50 kHz`.
pub const DEFAULT_OMEGA1: f64 = 2.0 * PI * 50.0e3;
/// `2π · 80.9 kHz`.
pub const DEFAULT_OMEGA2: f64 = 2.0 * PI * 80.9e3;
pub const DEFAULT_PHI01: f64 = PI / 10.0;
pub const DEFAULT_PHI02: f64 = 0.0;
/// Reduced qubit splitting for lab-frame validation runs, `2π · 50 MHz`.
pub const DEFAULT_LAB_OMEGA0: f64 = 2.0 * PI * 50.0e6;

/// Drive amplitude, tone frequencies, initial phases and gap parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub eta: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub phi01: f64,
    pub phi02: f64,
    pub m: f64,
}

impl Default for DriveParams {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            omega1: DEFAULT_OMEGA1,
            omega2: DEFAULT_OMEGA2,
            phi01: DEFAULT_PHI01,
            phi02: DEFAULT_PHI02,
            m: 1.0,
        }
    }
}

impl DriveParams {
    /// Default drive at gap parameter `m`.
    pub fn with_m(m: f64) -> Self {
        Self { m, ..Self::default() }
    }

    /// Checks the physical invariants (positive scales, distinct tones).
    ///
    /// The evaluation functions below do not call this: frozen or
    /// undriven configurations (`eta = 0`, `omega = 0`) are useful in tests.
    pub fn validate(&self) -> Result<()> {
        let all = [self.eta, self.omega1, self.omega2, self.phi01, self.phi02, self.m];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("drive parameters must be finite".into()));
        }
        if self.eta <= 0.0 || self.omega1 <= 0.0 || self.omega2 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "eta, omega1, omega2 must be positive (got {}, {}, {})",
                self.eta, self.omega1, self.omega2
            )));
        }
        if self.omega1 == self.omega2 {
            return Err(Error::InvalidArgument("omega1 and omega2 must differ".into()));
        }
        Ok(())
    }

    /// `ω₁ω₂/(2π)`, the pumping rate of a unit Chern number (rad/s²).
    pub fn pumping_quantum(&self) -> f64 {
        self.omega1 * self.omega2 / (2.0 * PI)
    }

    /// Common period of the two tones when their ratio is a rational
    /// `p/q` with `q <= max_den`, else `None`.
    pub fn common_period(&self, max_den: u64) -> Option<f64> {
        let ratio = self.omega2 / self.omega1;
        let (p, q) = rational_approx(ratio, max_den)?;
        (p > 0).then_some(2.0 * PI * q as f64 / self.omega1)
    }
}

fn rational_approx(x: f64, max_den: u64) -> Option<(u64, u64)> {
    for q in 1..=max_den {
        let p = (x * q as f64).round();
        if p > 0.0 && ((p / q as f64) - x).abs() <= 1e-12 * x.abs().max(1.0) {
            return Some((p as u64, q));
        }
    }
    None
}

/// Real 3-vector of Pauli coefficients (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldVector {
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

impl FieldVector {
    pub const fn new(hx: f64, hy: f64, hz: f64) -> Self {
        Self { hx, hy, hz }
    }

    pub fn norm(&self) -> f64 {
        (self.hx * self.hx + self.hy * self.hy + self.hz * self.hz).sqrt()
    }

    pub fn to_pauli(&self) -> PauliCoeffs {
        PauliCoeffs::new(0.0, self.hx, self.hy, self.hz)
    }
}

impl Add for FieldVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.hx + o.hx, self.hy + o.hy, self.hz + o.hz)
    }
}

/// `h₁ = η(sin φ₁, 0, m/2 − cos φ₁)`, `h₂ = η(0, sin φ₂, m/2 − cos φ₂)`
/// with `φₖ = ωₖ t + φ₀ₖ`.
#[inline]
pub fn field_vectors(t: f64, p: &DriveParams) -> (FieldVector, FieldVector) {
    let (s1, c1) = (p.omega1 * t + p.phi01).sin_cos();
    let (s2, c2) = (p.omega2 * t + p.phi02).sin_cos();
    let half_m = 0.5 * p.m;
    (
        FieldVector::new(p.eta * s1, 0.0, p.eta * (half_m - c1)),
        FieldVector::new(0.0, p.eta * s2, p.eta * (half_m - c2)),
    )
}

/// Exact time derivatives of [`field_vectors`].
#[inline]
pub fn field_derivatives(t: f64, p: &DriveParams) -> (FieldVector, FieldVector) {
    let (s1, c1) = (p.omega1 * t + p.phi01).sin_cos();
    let (s2, c2) = (p.omega2 * t + p.phi02).sin_cos();
    let a1 = p.eta * p.omega1;
    let a2 = p.eta * p.omega2;
    (FieldVector::new(a1 * c1, 0.0, a1 * s1), FieldVector::new(0.0, a2 * c2, a2 * s2))
}

/// Rotating-frame Hamiltonian `(h₁+h₂)·σ + δ σz`.
#[inline]
pub fn hamiltonian_rot(t: f64, p: &DriveParams, delta: f64) -> PauliCoeffs {
    let (h1, h2) = field_vectors(t, p);
    let h = h1 + h2;
    PauliCoeffs::new(0.0, h.hx, h.hy, h.hz + delta)
}

/// Sign-engineered Hamiltonian applied between the two π pulses of a
/// decoupling cycle: σy and σz drive terms flipped, the noise term kept.
#[inline]
pub fn hamiltonian_primed(t: f64, p: &DriveParams, delta: f64) -> PauliCoeffs {
    let h = hamiltonian_rot(t, p, 0.0);
    PauliCoeffs::new(0.0, h.ax, -h.ay, -h.az + delta)
}

/// `(sin(x + φ) − sin φ) / x`, finite at `x = 0`.
fn phase_increment_ratio(x: f64, phi: f64) -> f64 {
    // sin(x+φ) − sin φ = 2 cos(φ + x/2) sin(x/2)
    let half = 0.5 * x;
    let sinc = if x.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    (phi + half).cos() * sinc
}

/// Time-dependent phase rate `ω′(t)` of the microwave carrier. At `t = 0`
/// the analytic limit `2η(m − cos φ₀₁ − cos φ₀₂)` is returned.
pub fn omega_prime(t: f64, p: &DriveParams) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("omega_prime: negative time {t}")));
    }
    let r1 = phase_increment_ratio(p.omega1 * t, p.phi01);
    let r2 = phase_increment_ratio(p.omega2 * t, p.phi02);
    Ok(2.0 * p.eta * (p.m - r1 - r2))
}

/// Drive plus qubit splitting for lab-frame simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabFrameParams {
    pub omega0: f64,
    pub drive: DriveParams,
}

impl LabFrameParams {
    pub fn new(omega0: f64, drive: DriveParams) -> Self {
        Self { omega0, drive }
    }

    /// True when ω₀ is comfortably above the drive scale.
    pub fn rwa_regime_ok(&self) -> bool {
        self.omega0 >= 10.0 * self.drive.eta
    }
}

/// Rotation angle of the frame change `U₀ = exp(i σz θ(t))`.
pub fn theta(t: f64, lab: &LabFrameParams) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("theta: negative time {t}")));
    }
    let p = &lab.drive;
    let r1 = phase_increment_ratio(p.omega1 * t, p.phi01);
    let r2 = phase_increment_ratio(p.omega2 * t, p.phi02);
    Ok((0.5 * lab.omega0 - p.eta * p.m + p.eta * (r1 + r2)) * t)
}

/// Lab-frame microwave Hamiltonian
/// `ω₀/2 σz + 2η[sin φ₁ cos((ω₀−ω′)t) − sin φ₂ sin((ω₀−ω′)t)] σx`.
pub fn hamiltonian_lab(t: f64, lab: &LabFrameParams) -> Result<PauliCoeffs> {
    let p = &lab.drive;
    let carrier = (lab.omega0 - omega_prime(t, p)?) * t;
    let (sc, cc) = carrier.sin_cos();
    let s1 = (p.omega1 * t + p.phi01).sin();
    let s2 = (p.omega2 * t + p.phi02).sin();
    let x = 2.0 * p.eta * (s1 * cc - s2 * sc);
    Ok(PauliCoeffs::new(0.0, x, 0.0, 0.5 * lab.omega0))
}
