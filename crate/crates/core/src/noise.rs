//! Ornstein–Uhlenbeck dephasing noise δ(t).
//!
//! Traces are generated ahead of propagation from a ChaCha20 stream seeded
//! with a 64-bit seed; normal deviates come from the Ziggurat sampler in
//! `rand_distr`. Both are portable, so a seed identifies a trace on every
//! platform.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variance `v` (rad²/s²), correlation time `τ` (s) and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub variance: f64,
    pub tau: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn new(variance: f64, tau: f64, seed: u64) -> Result<Self> {
        let p = Self { variance, tau, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn from_t2star(t2star: f64, tau: f64, seed: u64) -> Result<Self> {
        Self::new(variance_from_t2star(t2star)?, tau, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {}", self.variance)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("correlation time must be > 0, got {}", self.tau)));
        }
        Ok(())
    }

    /// Standard deviation σ_B = √v.
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed)
    }
}

/// `v = 1 / (2 T₂*²)`.
pub fn variance_from_t2star(t2star: f64) -> Result<f64> {
    if !(t2star > 0.0 && t2star.is_finite()) {
        return Err(Error::InvalidArgument(format!("T2* must be positive, got {t2star}")));
    }
    Ok(1.0 / (2.0 * t2star * t2star))
}

/// `T₂* = 1 / √(2v)`.
pub fn t2star_from_variance(variance: f64) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    Ok(1.0 / (2.0 * variance).sqrt())
}

/// Initial value drawn from the stationary distribution N(0, v).
pub fn ou_init<R: Rng + ?Sized>(p: &NoiseParams, rng: &mut R) -> f64 {
    let y: f64 = rng.sample(StandardNormal);
    y * p.sigma()
}

/// One exact OU update over `dt`.
pub fn ou_step<R: Rng + ?Sized>(prev: f64, dt: f64, p: &NoiseParams, rng: &mut R) -> f64 {
    let decay = (-dt / p.tau).exp();
    let kick = (p.variance * (1.0 - decay * decay)).sqrt();
    let y: f64 = rng.sample(StandardNormal);
    prev * decay + y * kick
}

/// Pre-sampled noise, one value per integration step. `samples[j]` is held
/// constant over step `j` (the interval `(j dt, (j+1) dt]`).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
}

const TRACE_MAGIC: &[u8; 8] = b"OUTRACE1";

impl NoiseTrace {
    /// Generates `len` chained samples: an `ou_init` draw followed by
    /// `len - 1` updates.
    pub fn generate(p: &NoiseParams, dt: f64, len: usize) -> Result<Self> {
        p.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise step must be positive, got {dt}")));
        }
        let mut rng = p.rng();
        let decay = (-dt / p.tau).exp();
        let kick = (p.variance * (1.0 - decay * decay)).sqrt();
        let mut samples = Vec::with_capacity(len);
        if len > 0 {
            let mut x = ou_init(p, &mut rng);
            samples.push(x);
            for _ in 1..len {
                let y: f64 = rng.sample(StandardNormal);
                x = x * decay + y * kick;
                samples.push(x);
            }
        }
        Ok(Self { dt, samples })
    }

    /// Constant δ(t) = `value`, for frozen-noise studies.
    pub fn constant(value: f64, dt: f64, len: usize) -> Self {
        Self { dt, samples: vec![value; len] }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Debug dump: 32-byte header (magic, dt, count, seed), then the
    /// samples, all little-endian.
    pub fn write_binary<W: Write>(&self, seed: u64, mut w: W) -> Result<()> {
        w.write_all(TRACE_MAGIC)?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        w.write_all(&seed.to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump written by [`NoiseTrace::write_binary`]; returns the
    /// trace and its seed.
    pub fn read_binary<R: Read>(mut r: R) -> Result<(Self, u64)> {
        let mut header = [0u8; 32];
        r.read_exact(&mut header)?;
        if &header[..8] != TRACE_MAGIC {
            return Err(Error::Io("not a noise trace dump (bad magic)".into()));
        }
        let word = |i: usize| -> [u8; 8] { header[i..i + 8].try_into().expect("8-byte slice") };
        let dt = f64::from_le_bytes(word(8));
        let count = u64::from_le_bytes(word(16)) as usize;
        let seed = u64::from_le_bytes(word(24));
        let mut samples = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            samples.push(f64::from_le_bytes(buf));
        }
        Ok((Self { dt, samples }, seed))
    }
}
