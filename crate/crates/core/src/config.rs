//! TOML experiment files.
//!
//! Every section and key is optional; an empty file gives the default
//! experiment. Frequencies are written either as `<name>_rad_per_s` or as
//! `<name>_two_pi_hz` (multiplied by 2π on load), never both.
//!
//! ```toml
//! [drive]
//! eta_two_pi_hz = 1e6
//! m = 0.9
//!
//! [noise]            # presence enables dephasing
//! t2star_s = 1e-7
//! tau_s = 1e-3
//!
//! [dd]               # presence enables decoupling
//! delta_t_s = 5e-8
//! ```

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::drive::DriveParams;
use crate::ensemble::{ExperimentConfig, NoiseModel};
use crate::error::{Error, Result};
use crate::noise::variance_from_t2star;
use crate::propagation::{DDConfig, IntegrationConfig, PulseAxis};
use crate::topology::FloquetZoneGrid;

/// Coherence time assumed by a `[noise]` section without a strength key.
pub const DEFAULT_T2STAR: f64 = 0.1e-6;
pub const DEFAULT_TAU: f64 = 1e-3;

/// Swept values for the `sweep-m` and `sweep-tau` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub m_values: Vec<f64>,
    pub taus: Vec<f64>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            m_values: vec![-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9],
            taus: vec![100e-9, 1e-6, 20e-6, 1e-3],
        }
    }
}

/// A parsed experiment file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub sweep: SweepPlan,
    pub grid: FloquetZoneGrid,
}

const SECTIONS: &[&str] = &["drive", "noise", "integration", "dd", "ensemble", "fit", "sweep", "topology"];

struct Section<'a> {
    name: &'static str,
    table: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, table: &'a Table) -> Self {
        Self { name, table, used: BTreeSet::new() }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn err(&self, key: &str, what: &str) -> Error {
        Error::Config(format!("[{}] {key}: {what}", self.name))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(self.err(key, "expected a number")),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    /// Angular frequency from `<base>_rad_per_s` or `<base>_two_pi_hz`.
    fn freq(&mut self, base: &str, default: f64) -> Result<f64> {
        let rad = self.f64(&format!("{base}_rad_per_s"))?;
        let hz = self.f64(&format!("{base}_two_pi_hz"))?;
        match (rad, hz) {
            (Some(_), Some(_)) => Err(self.err(base, "given both as _rad_per_s and _two_pi_hz")),
            (Some(r), None) => Ok(r),
            (None, Some(h)) => Ok(2.0 * PI * h),
            (None, None) => Ok(default),
        }
    }

    fn int(&mut self, key: &str) -> Result<Option<i64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(self.err(key, "expected an integer")),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.int(key)? {
            None => Ok(default),
            Some(i) => usize::try_from(i).map_err(|_| self.err(key, "must be non-negative")),
        }
    }

    /// Seeds may exceed the TOML integer range, so decimal strings are
    /// accepted too.
    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Integer(i)) => u64::try_from(*i).map_err(|_| self.err(key, "must be non-negative")),
            Some(Value::String(s)) => s.parse().map_err(|_| self.err(key, "not a 64-bit unsigned integer")),
            Some(_) => Err(self.err(key, "expected an integer")),
        }
    }

    fn str(&mut self, key: &str) -> Result<Option<&'a str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(self.err(key, "expected an array of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.err(key, "expected an array of numbers")),
        }
    }

    fn finish(self, unknown: &mut Vec<String>) {
        for k in self.table.keys() {
            if !self.used.contains(k) {
                unknown.push(format!("{}.{k}", self.name));
            }
        }
    }
}

fn section_table<'a>(root: &'a Table, name: &str) -> Result<Option<&'a Table>> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(Error::Config(format!("{name} must be a [section]"))),
    }
}

/// Parses an experiment file from TOML text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let root: Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut unknown: Vec<String> = root.keys().filter(|k| !SECTIONS.contains(&k.as_str())).cloned().collect();
    let empty = Table::new();

    let mut s = Section::new("drive", section_table(&root, "drive")?.unwrap_or(&empty));
    let d = DriveParams::default();
    let drive = DriveParams {
        eta: s.freq("eta", d.eta)?,
        omega1: s.freq("omega1", d.omega1)?,
        omega2: s.freq("omega2", d.omega2)?,
        phi01: s.f64_or("phi01_rad", d.phi01)?,
        phi02: s.f64_or("phi02_rad", d.phi02)?,
        m: s.f64_or("m", d.m)?,
    };
    s.finish(&mut unknown);

    let mut s = Section::new("integration", section_table(&root, "integration")?.unwrap_or(&empty));
    let d = IntegrationConfig::default();
    let integration = IntegrationConfig {
        dt: s.f64_or("dt_s", d.dt)?,
        t_final: s.f64_or("t_final_s", d.t_final)?,
        record_stride: s.usize_or("record_stride", d.record_stride)?,
    };
    s.finish(&mut unknown);

    let noise = match section_table(&root, "noise")? {
        None => None,
        Some(t) => {
            let mut s = Section::new("noise", t);
            let t2 = s.f64("t2star_s")?;
            let var = s.f64("variance_rad2_per_s2")?;
            let variance = match (t2, var) {
                (Some(_), Some(_)) => return Err(s.err("t2star_s", "given together with variance_rad2_per_s2")),
                (Some(t2), None) => variance_from_t2star(t2)?,
                (None, Some(v)) => v,
                (None, None) => variance_from_t2star(DEFAULT_T2STAR)?,
            };
            let tau = s.f64_or("tau_s", DEFAULT_TAU)?;
            s.finish(&mut unknown);
            Some(NoiseModel { variance, tau })
        }
    };

    let dd = match section_table(&root, "dd")? {
        None => None,
        Some(t) => {
            let mut s = Section::new("dd", t);
            let delta_t = s.f64_or("delta_t_s", DDConfig::default().delta_t)?;
            match s.str("pulse_axis")? {
                None | Some("x") => {}
                Some(other) => return Err(s.err("pulse_axis", &format!("unsupported axis {other:?} (only \"x\")"))),
            }
            s.finish(&mut unknown);
            Some(DDConfig { delta_t, pulse_axis: PulseAxis::X })
        }
    };

    let mut s = Section::new("ensemble", section_table(&root, "ensemble")?.unwrap_or(&empty));
    let d = ExperimentConfig::default();
    let instances = s.usize_or("instances", d.instances)?;
    let base_seed = s.u64_or("base_seed", d.base_seed)?;
    let band = match s.str("band")? {
        None => d.band,
        Some(b) => b.parse()?,
    };
    s.finish(&mut unknown);

    let mut s = Section::new("fit", section_table(&root, "fit")?.unwrap_or(&empty));
    let start = s.f64("window_start_s")?;
    let end = s.f64("window_end_s")?;
    let fit_window = match (start, end) {
        (None, None) => None,
        (a, b) => Some((a.unwrap_or(0.0), b.unwrap_or(integration.steps().unwrap_or(0) as f64 * integration.dt))),
    };
    s.finish(&mut unknown);

    let mut s = Section::new("sweep", section_table(&root, "sweep")?.unwrap_or(&empty));
    let d = SweepPlan::default();
    let sweep = SweepPlan {
        m_values: s.f64_list("m_values")?.unwrap_or(d.m_values),
        taus: s.f64_list("tau_s")?.unwrap_or(d.taus),
    };
    s.finish(&mut unknown);

    let mut s = Section::new("topology", section_table(&root, "topology")?.unwrap_or(&empty));
    let grid = FloquetZoneGrid::new(s.usize_or("grid_size", FloquetZoneGrid::default().n)?)
        .map_err(|e| Error::Config(e.to_string()))?;
    s.finish(&mut unknown);

    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    let experiment = ExperimentConfig { drive, noise, integration, dd, band, instances, base_seed, fit_window };
    experiment.validate().map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::Config(msg),
        other => other,
    })?;
    Ok(RunConfig { experiment, sweep, grid })
}

/// Reads and parses an experiment file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Canonical TOML form: fixed key order, every key explicit, floats with
/// 17 significant digits. Parsing the output gives back `cfg` exactly.
pub fn to_canonical_toml(cfg: &RunConfig) -> String {
    let e = &cfg.experiment;
    let d = &e.drive;
    let i = &e.integration;
    let mut s = String::new();
    let _ = writeln!(s, "[drive]");
    let _ = writeln!(s, "eta_rad_per_s = {}", num(d.eta));
    let _ = writeln!(s, "omega1_rad_per_s = {}", num(d.omega1));
    let _ = writeln!(s, "omega2_rad_per_s = {}", num(d.omega2));
    let _ = writeln!(s, "phi01_rad = {}", num(d.phi01));
    let _ = writeln!(s, "phi02_rad = {}", num(d.phi02));
    let _ = writeln!(s, "m = {}", num(d.m));
    let _ = writeln!(s, "\n[integration]");
    let _ = writeln!(s, "dt_s = {}", num(i.dt));
    let _ = writeln!(s, "t_final_s = {}", num(i.t_final));
    let _ = writeln!(s, "record_stride = {}", i.record_stride);
    if let Some(n) = &e.noise {
        let _ = writeln!(s, "\n[noise]");
        let _ = writeln!(s, "variance_rad2_per_s2 = {}", num(n.variance));
        let _ = writeln!(s, "tau_s = {}", num(n.tau));
    }
    if let Some(dd) = &e.dd {
        let _ = writeln!(s, "\n[dd]");
        let _ = writeln!(s, "delta_t_s = {}", num(dd.delta_t));
        let _ = writeln!(s, "pulse_axis = \"x\"");
    }
    let _ = writeln!(s, "\n[ensemble]");
    let _ = writeln!(s, "instances = {}", e.instances);
    if e.base_seed <= i64::MAX as u64 {
        let _ = writeln!(s, "base_seed = {}", e.base_seed);
    } else {
        let _ = writeln!(s, "base_seed = \"{}\"", e.base_seed);
    }
    let _ = writeln!(s, "band = \"{}\"", e.band.as_str());
    if let Some((a, b)) = e.fit_window {
        let _ = writeln!(s, "\n[fit]");
        let _ = writeln!(s, "window_start_s = {}", num(a));
        let _ = writeln!(s, "window_end_s = {}", num(b));
    }
    let _ = writeln!(s, "\n[sweep]");
    let _ = writeln!(s, "m_values = {}", list(&cfg.sweep.m_values));
    let _ = writeln!(s, "tau_s = {}", list(&cfg.sweep.taus));
    let _ = writeln!(s, "\n[topology]");
    let _ = writeln!(s, "grid_size = {}", cfg.grid.n);
    s
}
