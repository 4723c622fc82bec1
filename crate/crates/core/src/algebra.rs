//! Exact 2x2 algebra over the Pauli basis.
//!
//! Every Hamiltonian in this crate is a real combination
//! `a0 I + ax X + ay Y + az Z`, so the propagator of a piecewise-constant
//! step has the closed form
//! `exp(-i H dt) = e^{-i a0 dt} (cos(|a| dt) I - i sin(|a| dt) â·σ)`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Hermitian 2x2 operator `a0 I + ax σx + ay σy + az σz` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PauliCoeffs {
    pub a0: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl PauliCoeffs {
    pub const fn new(a0: f64, ax: f64, ay: f64, az: f64) -> Self {
        Self { a0, ax, ay, az }
    }

    pub fn is_finite(&self) -> bool {
        self.a0.is_finite() && self.ax.is_finite() && self.ay.is_finite() && self.az.is_finite()
    }

    /// Length of the traceless part.
    pub fn vector_norm(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }

    /// `σx H σx`: flips the sign of the σy and σz components.
    pub fn conjugate_by_x(&self) -> Self {
        Self::new(self.a0, self.ax, -self.ay, -self.az)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a0 * s, self.ax * s, self.ay * s, self.az * s)
    }

    /// Dense row-major matrix.
    pub fn to_matrix(&self) -> [[C64; 2]; 2] {
        [
            [C64::new(self.a0 + self.az, 0.0), C64::new(self.ax, -self.ay)],
            [C64::new(self.ax, self.ay), C64::new(self.a0 - self.az, 0.0)],
        ]
    }

    /// Decomposes a Hermitian matrix back onto the Pauli basis. The
    /// anti-Hermitian residue is discarded.
    pub fn from_matrix(m: &[[C64; 2]; 2]) -> Self {
        let a0 = 0.5 * (m[0][0].re + m[1][1].re);
        let az = 0.5 * (m[0][0].re - m[1][1].re);
        let ax = 0.5 * (m[0][1].re + m[1][0].re);
        let ay = 0.5 * (m[1][0].im - m[0][1].im);
        Self::new(a0, ax, ay, az)
    }
}

impl Add for PauliCoeffs {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a0 + o.a0, self.ax + o.ax, self.ay + o.ay, self.az + o.az)
    }
}

impl Sub for PauliCoeffs {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a0 - o.a0, self.ax - o.ax, self.ay - o.ay, self.az - o.az)
    }
}

/// 2x2 complex matrix, row-major. Produced by [`expm_pauli`] and by
/// composing such propagators, hence unitary up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub const IDENTITY: Self = Self { m: [[ONE, ZERO], [ZERO, ONE]] };

    /// The instantaneous π pulse about x.
    pub const PAULI_X: Self = Self { m: [[ZERO, ONE], [ONE, ZERO]] };

    pub fn from_rows(m: [[C64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, s: &SpinState) -> SpinState {
        SpinState {
            c0: self.m[0][0] * s.c0 + self.m[0][1] * s.c1,
            c1: self.m[1][0] * s.c0 + self.m[1][1] * s.c1,
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_entry_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }

    /// Spectral norm of `self - other`.
    pub fn op_norm_diff(&self, other: &Self) -> f64 {
        let mut d = *self;
        for i in 0..2 {
            for j in 0..2 {
                d.m[i][j] -= other.m[i][j];
            }
        }
        d.op_norm()
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        // Eigenvalues of the Gram matrix A†A.
        let g = self.adjoint() * *self;
        let tr = g.m[0][0].re + g.m[1][1].re;
        let det = g.det().re;
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        (0.5 * tr + disc).max(0.0).sqrt()
    }
}

impl Mul for Unitary2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
        }
    }
}

/// Pure qubit state `c0 |0> + c1 |1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub c0: C64,
    pub c1: C64,
}

impl SpinState {
    pub const UP: Self = Self { c0: ONE, c1: ZERO };
    pub const DOWN: Self = Self { c0: ZERO, c1: ONE };

    /// Builds a normalized state from arbitrary non-zero amplitudes.
    pub fn new(c0: C64, c1: C64) -> Result<Self> {
        let mut s = Self { c0, c1 };
        let n = s.norm_sqr();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument("state amplitudes must be finite and non-zero".into()));
        }
        s.normalize();
        Ok(s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    /// Rescales to unit norm and returns `|1 - norm|` before the rescale.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm_sqr().sqrt();
        self.c0 /= n;
        self.c1 /= n;
        (1.0 - n).abs()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Applies σx.
    pub fn flip(&self) -> Self {
        Self { c0: self.c1, c1: self.c0 }
    }

    /// Bloch vector `(<σx>, <σy>, <σz>)`.
    pub fn bloch(&self) -> [f64; 3] {
        let off = self.c0.conj() * self.c1;
        [2.0 * off.re, 2.0 * off.im, self.c0.norm_sqr() - self.c1.norm_sqr()]
    }

    /// `<ψ|H|ψ>` for a Hermitian `H`; real by construction.
    pub fn expectation(&self, h: &PauliCoeffs) -> f64 {
        let [x, y, z] = self.bloch();
        h.a0 * self.norm_sqr() + h.ax * x + h.ay * y + h.az * z
    }

    pub fn is_finite(&self) -> bool {
        self.c0.re.is_finite() && self.c0.im.is_finite() && self.c1.re.is_finite() && self.c1.im.is_finite()
    }
}

/// `exp(-i H dt)` in closed form.
pub fn expm_pauli(h: &PauliCoeffs, dt: f64) -> Result<Unitary2> {
    if !h.is_finite() || !dt.is_finite() {
        return Err(Error::InvalidArgument("expm_pauli: non-finite generator or step".into()));
    }
    if dt < 0.0 {
        return Err(Error::InvalidArgument(format!("expm_pauli: negative step {dt}")));
    }
    Ok(expm_unchecked(h, dt))
}

/// Hot-loop variant of [`expm_pauli`]; inputs must already be finite.
#[inline]
pub(crate) fn expm_unchecked(h: &PauliCoeffs, dt: f64) -> Unitary2 {
    let r = h.vector_norm();
    let phase = C64::from_polar(1.0, -h.a0 * dt);
    if r == 0.0 {
        return Unitary2 { m: [[phase, ZERO], [ZERO, phase]] };
    }
    let (s, c) = (r * dt).sin_cos();
    let k = s / r;
    // cos I - i sin (n·σ)
    let m00 = C64::new(c, -k * h.az);
    let m11 = C64::new(c, k * h.az);
    let m01 = C64::new(-k * h.ay, -k * h.ax);
    let m10 = C64::new(k * h.ay, -k * h.ax);
    Unitary2 { m: [[phase * m00, phase * m01], [phase * m10, phase * m11]] }
}

/// Eigen-decomposition of a Pauli-basis operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub eplus: f64,
    pub eminus: f64,
    pub vplus: SpinState,
    pub vminus: SpinState,
}

/// Which eigenvector of a two-band operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Lower,
    Upper,
}

impl Band {
    pub fn pick(self, eig: &Eigensystem) -> SpinState {
        match self {
            Band::Lower => eig.vminus,
            Band::Upper => eig.vplus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::Lower => "lower",
            Band::Upper => "upper",
        }
    }
}

impl std::str::FromStr for Band {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Band::Lower),
            "upper" => Ok(Band::Upper),
            other => Err(Error::Config(format!("unknown band {other:?} (expected lower|upper)"))),
        }
    }
}

/// Default degeneracy floor, relative to the identity component.
pub fn default_gap_floor(h: &PauliCoeffs) -> f64 {
    1e-6 * h.a0.abs().max(1.0)
}

/// Eigenpairs with the default gap floor.
pub fn eig_pauli(h: &PauliCoeffs) -> Result<Eigensystem> {
    eig_pauli_with_floor(h, default_gap_floor(h))
}

/// Eigenpairs `a0 ± |a|`. The eigenvectors are normalized with their
/// larger-magnitude component real and non-negative.
pub fn eig_pauli_with_floor(h: &PauliCoeffs, floor: f64) -> Result<Eigensystem> {
    if !h.is_finite() {
        return Err(Error::InvalidArgument("eig_pauli: non-finite operator".into()));
    }
    let r = h.vector_norm();
    if r <= floor {
        return Err(Error::Degeneracy { norm: r, floor });
    }
    let lower_off = C64::new(h.ax, h.ay); // ax + i ay
    let upper_off = lower_off.conj(); // ax - i ay
    // Two algebraically equivalent null vectors exist for each eigenvalue;
    // use the one whose norm is bounded away from zero.
    let (vplus, vminus) = if h.az >= 0.0 {
        (
            (C64::new(r + h.az, 0.0), lower_off),
            (upper_off, C64::new(-r - h.az, 0.0)),
        )
    } else {
        (
            (upper_off, C64::new(r - h.az, 0.0)),
            (C64::new(h.az - r, 0.0), lower_off),
        )
    };
    Ok(Eigensystem {
        eplus: h.a0 + r,
        eminus: h.a0 - r,
        vplus: canonical_phase(vplus.0, vplus.1),
        vminus: canonical_phase(vminus.0, vminus.1),
    })
}

fn canonical_phase(c0: C64, c1: C64) -> SpinState {
    let big = if c0.norm_sqr() >= c1.norm_sqr() { c0 } else { c1 };
    let rot = big.conj() / big.norm();
    let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
    SpinState { c0: c0 * rot / n, c1: c1 * rot / n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn close(a: &Unitary2, b: &Unitary2, tol: f64) {
        let d = a.max_entry_diff(b);
        assert!(d <= tol, "matrices differ by {d}: {a:?} vs {b:?}");
    }

    #[test]
    fn zero_generator_is_identity() {
        let u = expm_pauli(&PauliCoeffs::default(), 3.7).unwrap();
        close(&u, &Unitary2::IDENTITY, 0.0);
    }

    #[test]
    fn pi_rotation_about_x() {
        let dt = 5e-9;
        let u = expm_pauli(&PauliCoeffs::new(0.0, PI / (2.0 * dt), 0.0, 0.0), dt).unwrap();
        let minus_i_x = Unitary2::from_rows([
            [ZERO, C64::new(0.0, -1.0)],
            [C64::new(0.0, -1.0), ZERO],
        ]);
        close(&u, &minus_i_x, 1e-15);
    }

    #[test]
    fn pure_identity_component_is_global_phase() {
        let u = expm_pauli(&PauliCoeffs::new(2.0, 0.0, 0.0, 0.0), 0.25).unwrap();
        let p = C64::from_polar(1.0, -0.5);
        close(&u, &Unitary2::from_rows([[p, ZERO], [ZERO, p]]), 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(expm_pauli(&PauliCoeffs::new(0.0, f64::NAN, 0.0, 0.0), 1.0).is_err());
        assert!(expm_pauli(&PauliCoeffs::default(), -1.0).is_err());
        assert!(expm_pauli(&PauliCoeffs::default(), f64::INFINITY).is_err());
    }

    #[test]
    fn sigma_z_eigenbasis() {
        let e = eig_pauli(&PauliCoeffs::new(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!(e.vplus, SpinState::UP);
        assert_eq!(e.vminus, SpinState::DOWN);
        assert_eq!((e.eplus, e.eminus), (1.0, -1.0));
    }

    #[test]
    fn sigma_x_eigenbasis() {
        let e = eig_pauli(&PauliCoeffs::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(e.vplus.c0.re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(e.vplus.c1.re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(e.vminus.c0.re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(e.vminus.c1.re, -s, epsilon = 1e-15);
        assert_abs_diff_eq!(e.vplus.c1.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.vminus.c1.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn band_touching_is_degenerate() {
        match eig_pauli(&PauliCoeffs::default()) {
            Err(Error::Degeneracy { .. }) => {}
            other => panic!("expected degeneracy, got {other:?}"),
        }
        // The floor scales with the identity component.
        assert!(eig_pauli(&PauliCoeffs::new(1e3, 5e-4, 0.0, 0.0)).is_err());
        assert!(eig_pauli(&PauliCoeffs::new(0.0, 5e-7, 0.0, 0.0)).is_err());
        assert!(eig_pauli(&PauliCoeffs::new(0.0, 5e-6, 0.0, 0.0)).is_ok());
    }

    #[test]
    fn phase_convention_larger_component_real() {
        let e = eig_pauli(&PauliCoeffs::new(0.3, -0.2, 0.7, -0.1)).unwrap();
        for v in [e.vplus, e.vminus] {
            let big = if v.c0.norm() >= v.c1.norm() { v.c0 } else { v.c1 };
            assert!(big.re >= 0.0);
            assert_abs_diff_eq!(big.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn conjugation_by_x_matches_matrix_product() {
        let h = PauliCoeffs::new(0.4, 1.1, -0.3, 2.5);
        let x = Unitary2::PAULI_X;
        let hm = Unitary2::from_rows(h.to_matrix());
        let conj = x * hm * x;
        let expect = Unitary2::from_rows(h.conjugate_by_x().to_matrix());
        close(&conj, &expect, 1e-15);
        let back = PauliCoeffs::from_matrix(&h.to_matrix());
        assert!((back - h).vector_norm() < 1e-15 && (back.a0 - h.a0).abs() < 1e-15);
    }

    #[test]
    fn op_norm_of_pauli_is_one() {
        assert_abs_diff_eq!(Unitary2::PAULI_X.op_norm(), 1.0, epsilon = 1e-15);
        let h = Unitary2::from_rows(PauliCoeffs::new(0.0, 3.0, 0.0, 4.0).to_matrix());
        assert_abs_diff_eq!(h.op_norm(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn normalize_reports_correction() {
        let mut s = SpinState { c0: C64::new(1.0 + 1e-9, 0.0), c1: ZERO };
        let corr = s.normalize();
        assert_abs_diff_eq!(corr, 1e-9, epsilon = 1e-15);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
        assert!(SpinState::new(ZERO, ZERO).is_err());
    }

    #[test]
    fn expectation_matches_dense_product() {
        let s = SpinState::new(C64::new(0.3, 0.2), C64::new(-0.5, 0.8)).unwrap();
        let h = PauliCoeffs::new(0.1, 0.7, -1.3, 0.4);
        let m = h.to_matrix();
        let hv = SpinState {
            c0: m[0][0] * s.c0 + m[0][1] * s.c1,
            c1: m[1][0] * s.c0 + m[1][1] * s.c1,
        };
        let dense = s.inner(&hv);
        assert!(dense.im.abs() < 1e-14);
        assert_abs_diff_eq!(s.expectation(&h), dense.re, epsilon = 1e-14);
    }
}
