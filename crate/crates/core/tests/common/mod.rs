//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use topofreq::algebra::PauliCoeffs;

pub type M2 = [[C; 2]; 2];

pub fn matrix(h: &PauliCoeffs) -> M2 {
    [
        [C::new(h.a0 + h.az, 0.0), C::new(h.ax, -h.ay)],
        [C::new(h.ax, h.ay), C::new(h.a0 - h.az, 0.0)],
    ]
}

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// exp(−i H dt) by scaling and squaring of a truncated Taylor series.
pub fn taylor_expm(h: &PauliCoeffs, dt: f64) -> M2 {
    let mut a = matrix(h);
    let norm = a.iter().flatten().map(|z| z.norm()).sum::<f64>() * dt.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let s = dt / 2f64.powi(squarings as i32);
    for row in a.iter_mut() {
        for z in row.iter_mut() {
            *z *= C::new(0.0, -s);
        }
    }
    let mut sum = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]];
    let mut term = sum;
    for k in 1..=30 {
        term = mul(&term, &a);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

/// `(1/2π) ∫ Ω dq₁dq₂` for the lower band with the curvature written as
/// `Ω = i(⟨∂₁ψ|∂₂ψ⟩ − ⟨∂₂ψ|∂₁ψ⟩)`. In projector form `Ω = i Tr(P[∂₁P, ∂₂P])`,
/// which for `P = (1 − n·σ)/2`, `n = h/|h|`, reduces to `½ n·(∂₁n × ∂₂n)`.
/// Midpoint quadrature with central differences.
pub fn berry_flux_lower(m: f64, n: usize) -> f64 {
    let proj = |q1: f64, q2: f64| -> [f64; 3] {
        let h = [q1.sin(), q2.sin(), m - q1.cos() - q2.cos()];
        let r = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        [h[0] / r, h[1] / r, h[2] / r]
    };
    let d = 2.0 * std::f64::consts::PI / n as f64;
    let eps = 1e-5;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let q1 = (i as f64 + 0.5) * d;
            let q2 = (j as f64 + 0.5) * d;
            let v = proj(q1, q2);
            let a = proj(q1 + eps, q2);
            let b = proj(q1 - eps, q2);
            let c = proj(q1, q2 + eps);
            let e = proj(q1, q2 - eps);
            let d1 = [(a[0] - b[0]) / (2.0 * eps), (a[1] - b[1]) / (2.0 * eps), (a[2] - b[2]) / (2.0 * eps)];
            let d2 = [(c[0] - e[0]) / (2.0 * eps), (c[1] - e[1]) / (2.0 * eps), (c[2] - e[2]) / (2.0 * eps)];
            let cross = [d1[1] * d2[2] - d1[2] * d2[1], d1[2] * d2[0] - d1[0] * d2[2], d1[0] * d2[1] - d1[1] * d2[0]];
            total += v[0] * cross[0] + v[1] * cross[1] + v[2] * cross[2];
        }
    }
    total * d * d / (4.0 * std::f64::consts::PI)
}
