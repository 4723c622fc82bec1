//! Band topology of the Floquet-zone Hamiltonian
//! `H(q₁, q₂) = sin(q₁+φ₀₁) σx + sin(q₂+φ₀₂) σy + (m − cos(q₁+φ₀₁) − cos(q₂+φ₀₂)) σz`.
//!
//! The Chern number is computed with the lattice field-strength method:
//! normalized U(1) link variables between neighbouring eigenvectors, whose
//! plaquette phases sum to an exact multiple of 2π on any grid fine enough
//! to resolve the curvature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{eig_pauli, Band, PauliCoeffs, C64};
use crate::drive::{field_vectors, DriveParams, FieldVector};
use crate::error::{Error, Result};
use crate::noise::NoiseTrace;

/// Transition points of the gap parameter.
pub const CRITICAL_POINTS: [f64; 3] = [-2.0, 0.0, 2.0];

/// Lattice computations refuse gap parameters closer than this to a
/// transition point.
pub const CRITICAL_MARGIN: f64 = 0.05;

/// Chern number from the phase diagram: −1 on (−2, 0), +1 on (0, 2), else 0.
pub fn analytic_chern(m: f64) -> Result<i32> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument(format!("m must be finite, got {m}")));
    }
    if let Some(&c) = CRITICAL_POINTS.iter().find(|&&c| m == c) {
        return Err(Error::CriticalPoint { m, critical: c, margin: 0.0 });
    }
    Ok(if m > -2.0 && m < 0.0 {
        -1
    } else if m > 0.0 && m < 2.0 {
        1
    } else {
        0
    })
}

/// Minimum band gap over the Floquet zone, `η·min(||m| − 2|, |m|)`.
pub fn min_gap(m: f64, eta: f64) -> f64 {
    eta * (m.abs() - 2.0).abs().min(m.abs())
}

fn check_not_critical(m: f64) -> Result<()> {
    for &c in &CRITICAL_POINTS {
        if (m - c).abs() < CRITICAL_MARGIN {
            return Err(Error::CriticalPoint { m, critical: c, margin: CRITICAL_MARGIN });
        }
    }
    Ok(())
}

/// Uniform `n × n` discretization of the Floquet zone `[0, 2π)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetZoneGrid {
    pub n: usize,
    pub offsets: (f64, f64),
}

impl Default for FloquetZoneGrid {
    fn default() -> Self {
        Self { n: 24, offsets: (0.0, 0.0) }
    }
}

impl FloquetZoneGrid {
    pub fn new(n: usize) -> Result<Self> {
        let g = Self { n, offsets: (0.0, 0.0) };
        g.validate()?;
        Ok(g)
    }

    pub fn with_offsets(self, q1: f64, q2: f64) -> Self {
        Self { offsets: (q1, q2), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidArgument(format!("grid needs n >= 8 points per axis, got {}", self.n)));
        }
        if !(self.offsets.0.is_finite() && self.offsets.1.is_finite()) {
            return Err(Error::InvalidArgument("grid offsets must be finite".into()));
        }
        Ok(())
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let step = 2.0 * PI / self.n as f64;
        (self.offsets.0 + i as f64 * step, self.offsets.1 + j as f64 * step)
    }
}

/// `H(q₁, q₂)` (the drive Hamiltonian divided by η, with `ωₖt → qₖ`).
pub fn zone_hamiltonian(q1: f64, q2: f64, p: &DriveParams) -> PauliCoeffs {
    let (s1, c1) = (q1 + p.phi01).sin_cos();
    let (s2, c2) = (q2 + p.phi02).sin_cos();
    PauliCoeffs::new(0.0, s1, s2, p.m - c1 - c2)
}

/// Chern number of `band` on `grid`: `(1/2π) Σ arg(U₁ U₂ U₁*' U₂*')` over
/// all plaquettes. With this sign a state prepared in a band pumps energy
/// at `P₁ = C ω₁ω₂/(2π)`, so the lower band carries `C = +1` for `0 < m < 2`.
pub fn chern_fhs(p: &DriveParams, grid: &FloquetZoneGrid, band: Band) -> Result<i32> {
    grid.validate()?;
    check_not_critical(p.m)?;
    let n = grid.n;
    let mut vecs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (q1, q2) = grid.point(i, j);
            // band touching on the grid: shift the offsets
            let e = eig_pauli(&zone_hamiltonian(q1, q2, p))?;
            vecs.push(band.pick(&e));
        }
    }
    let at = |i: usize, j: usize| &vecs[(i % n) * n + (j % n)];
    let link = |a: &crate::algebra::SpinState, b: &crate::algebra::SpinState| -> C64 {
        let z = a.inner(b);
        z / z.norm()
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u1 = link(at(i, j), at(i + 1, j));
            let u2 = link(at(i + 1, j), at(i + 1, j + 1));
            let u3 = link(at(i, j + 1), at(i + 1, j + 1));
            let u4 = link(at(i, j), at(i, j + 1));
            total += (u1 * u2 * u3.conj() * u4.conj()).arg();
        }
    }
    let c = total / (2.0 * PI);
    let rounded = c.round();
    if (c - rounded).abs() > 1e-6 {
        return Err(Error::Contract(format!("lattice Chern sum {c} is not an integer")));
    }
    Ok(rounded as i32)
}

/// One point of the field trajectory `h(t)` (+ `δ(t) ẑ` when noisy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub t: f64,
    pub h: FieldVector,
}

/// Samples `h(t)` every `stride` steps of `dt` up to `t_final`. With a
/// noise trace, step `n` carries `δ = samples[n−1]` (`samples[0]` at t = 0).
pub fn h_trajectory_sample(
    p: &DriveParams,
    dt: f64,
    t_final: f64,
    stride: usize,
    noise: Option<&NoiseTrace>,
) -> Result<Vec<FieldSample>> {
    if !(dt > 0.0 && t_final >= 0.0 && t_final.is_finite()) || stride == 0 {
        return Err(Error::InvalidArgument("h trajectory needs dt > 0, t_final >= 0, stride >= 1".into()));
    }
    let steps = (t_final / dt).round() as usize;
    if let Some(tr) = noise {
        if tr.len() < steps.max(1) {
            return Err(Error::Contract(format!("noise trace has {} samples, need {steps}", tr.len())));
        }
    }
    let out = (0..=steps)
        .step_by(stride)
        .map(|n| {
            let t = n as f64 * dt;
            let (h1, h2) = field_vectors(t, p);
            let mut h = h1 + h2;
            if let Some(tr) = noise {
                h.hz += tr.samples[n.saturating_sub(1)];
            }
            FieldSample { t, h }
        })
        .collect();
    Ok(out)
}

/// Distance of `h` from the noise-free torus `{h₁(a) + h₂(b)}` along z,
/// minimized over the four branches with matching x and y components.
/// `None` when `h` lies outside the surface's x/y footprint.
pub fn torus_z_residual(h: &FieldVector, p: &DriveParams) -> Option<f64> {
    let sx = h.hx / p.eta;
    let sy = h.hy / p.eta;
    if sx.abs() > 1.0 + 1e-12 || sy.abs() > 1.0 + 1e-12 {
        return None;
    }
    let cx = (1.0 - sx.clamp(-1.0, 1.0).powi(2)).sqrt();
    let cy = (1.0 - sy.clamp(-1.0, 1.0).powi(2)).sqrt();
    let mut best = f64::INFINITY;
    for a in [cx, -cx] {
        for b in [cy, -cy] {
            let z = p.eta * (p.m - a - b);
            let r = h.hz - z;
            if r.abs() < best.abs() {
                best = r;
            }
        }
    }
    Some(best)
}

/// Triangulated closed surface traced by `h₁(a) + h₂(b)`.
#[derive(Debug, Clone)]
pub struct TorusMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
}

impl TorusMesh {
    /// `n × n` parameter grid, two triangles per cell, periodic in both
    /// directions.
    pub fn from_drive(p: &DriveParams, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidArgument(format!("mesh needs n >= 8, got {n}")));
        }
        let step = 2.0 * PI / n as f64;
        let mut vertices = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                // h₁(a)+h₂(b) with the drive phases folded into a and b
                let (sa, ca) = (i as f64 * step).sin_cos();
                let (sb, cb) = (j as f64 * step).sin_cos();
                vertices.push([p.eta * sa, p.eta * sb, p.eta * (p.m - ca - cb)]);
            }
        }
        let idx = |i: usize, j: usize| (i % n) * n + (j % n);
        let mut triangles = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        Ok(Self { vertices, triangles })
    }

    /// Ray-crossing parity: true when `point` is enclosed by the surface.
    pub fn contains(&self, point: [f64; 3]) -> bool {
        // generic direction, avoids grazing the mesh's symmetry planes
        let dir = normalize3([0.2113, 0.3719, 0.9039]);
        let hits = self
            .triangles
            .iter()
            .filter(|t| ray_hits_triangle(point, dir, self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .count();
        hits % 2 == 1
    }

    /// Whether the band-touching point `h = 0` lies inside the surface.
    pub fn contains_origin(&self) -> bool {
        self.contains([0.0, 0.0, 0.0])
    }
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

// Möller–Trumbore, counting only hits in front of the origin.
fn ray_hits_triangle(orig: [f64; 3], dir: [f64; 3], v0: [f64; 3], v1: [f64; 3], v2: [f64; 3]) -> bool {
    let e1 = sub3(v1, v0);
    let e2 = sub3(v2, v0);
    let pv = cross3(dir, e2);
    let det = dot3(e1, pv);
    let scale = dot3(e1, e1).max(dot3(e2, e2));
    if det.abs() < 1e-14 * scale {
        return false;
    }
    let inv = 1.0 / det;
    let tv = sub3(orig, v0);
    let u = dot3(tv, pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qv = cross3(tv, e1);
    let v = dot3(dir, qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    dot3(e2, qv) * inv > 0.0
}
