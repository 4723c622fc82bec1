//! C ABI for the topofreq simulator.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `*_from_toml` and released by the matching `*_free`. Every fallible call
//! returns a [`TfStatus`]; the message of the most recent failure on the
//! calling thread is available from [`tf_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use topofreq::config::parse_config_str;
use topofreq::ensemble::{run_ensemble, run_ensemble_with_workers, EnsembleResult, ExperimentConfig, NoiseModel};
use topofreq::topology::{analytic_chern, chern_fhs, min_gap, FloquetZoneGrid};
use topofreq::{Band, DDConfig, Error};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    InvalidArgument = 1,
    Degeneracy = 2,
    CriticalPoint = 3,
    Contract = 4,
    Config = 5,
    Io = 6,
    EnsembleAborted = 7,
    NullPointer = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Time series stored in a [`TfResult`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfSeries {
    /// Sample times (s)
    Times = 0,
    /// Mean work of tone 1 (rad/s)
    Work1 = 1,
    /// Mean work of tone 2 (rad/s)
    Work2 = 2,
    /// Mean eigenstate fidelity
    Fidelity = 3,
}

/// Opaque experiment description.
pub struct TfExperiment {
    cfg: ExperimentConfig,
    grid: FloquetZoneGrid,
}

/// Opaque ensemble output.
pub struct TfResult {
    inner: EnsembleResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.as_bytes().to_vec());
}

fn status_of(e: &Error) -> TfStatus {
    match e {
        Error::InvalidArgument(_) => TfStatus::InvalidArgument,
        Error::Degeneracy { .. } => TfStatus::Degeneracy,
        Error::CriticalPoint { .. } => TfStatus::CriticalPoint,
        Error::Contract(_) => TfStatus::Contract,
        Error::Config(_) => TfStatus::Config,
        Error::Io(_) => TfStatus::Io,
        Error::EnsembleAborted { .. } => TfStatus::EnsembleAborted,
    }
}

fn guard<F: FnOnce() -> Result<(), TfStatus>>(f: F) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            TfStatus::Panic
        }
    }
}

fn fail(e: Error) -> TfStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> TfStatus {
    set_error(&format!("null pointer: {what}"));
    TfStatus::NullPointer
}

unsafe fn exp_mut<'a>(h: *mut TfExperiment) -> Result<&'a mut TfExperiment, TfStatus> {
    h.as_mut().ok_or_else(|| null("experiment"))
}

unsafe fn exp_ref<'a>(h: *const TfExperiment) -> Result<&'a TfExperiment, TfStatus> {
    h.as_ref().ok_or_else(|| null("experiment"))
}

unsafe fn res_ref<'a>(h: *const TfResult) -> Result<&'a TfResult, TfStatus> {
    h.as_ref().ok_or_else(|| null("result"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), TfStatus> {
    if out.is_null() {
        return Err(null("output"));
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Experiment with default parameters (noise-free, no decoupling).
#[no_mangle]
pub extern "C" fn tf_experiment_new() -> *mut TfExperiment {
    Box::into_raw(Box::new(TfExperiment { cfg: ExperimentConfig::default(), grid: FloquetZoneGrid::default() }))
}

/// Parses an experiment file given as NUL-terminated TOML text.
///
/// # Safety
/// `toml` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_from_toml(toml: *const c_char, out: *mut *mut TfExperiment) -> TfStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(toml).to_str().map_err(|_| fail(Error::Config("TOML text is not UTF-8".into())))?;
        let rc = parse_config_str(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(TfExperiment { cfg: rc.experiment, grid: rc.grid }));
        Ok(())
    })
}

/// Releases an experiment handle. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_free(h: *mut TfExperiment) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_set_m(h: *mut TfExperiment, m: f64) -> TfStatus {
    guard(|| {
        if !m.is_finite() {
            return Err(fail(Error::InvalidArgument(format!("m must be finite, got {m}"))));
        }
        exp_mut(h)?.cfg.drive.m = m;
        Ok(())
    })
}

/// Time step (s), horizon (s) and recording stride.
///
/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_set_integration(h: *mut TfExperiment, dt: f64, t_final: f64, stride: usize) -> TfStatus {
    guard(|| {
        let e = exp_mut(h)?;
        let ic = topofreq::IntegrationConfig { dt, t_final, record_stride: stride };
        ic.validate().map_err(fail)?;
        e.cfg.integration = ic;
        Ok(())
    })
}

/// Enables OU dephasing with coherence time `t2star` (s) and correlation
/// time `tau` (s).
///
/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_set_noise(h: *mut TfExperiment, t2star: f64, tau: f64) -> TfStatus {
    guard(|| {
        let e = exp_mut(h)?;
        let n = NoiseModel::from_t2star(t2star, tau).map_err(fail)?;
        n.with_seed(0).validate().map_err(fail)?;
        e.cfg.noise = Some(n);
        Ok(())
    })
}

/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_clear_noise(h: *mut TfExperiment) -> TfStatus {
    guard(|| {
        exp_mut(h)?.cfg.noise = None;
        Ok(())
    })
}

/// Enables σx decoupling pulses every `delta_t` seconds.
///
/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_set_dd(h: *mut TfExperiment, delta_t: f64) -> TfStatus {
    guard(|| {
        let e = exp_mut(h)?;
        let dd = DDConfig::new(delta_t);
        dd.steps_per_segment(e.cfg.integration.dt).map_err(fail)?;
        e.cfg.dd = Some(dd);
        Ok(())
    })
}

/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_clear_dd(h: *mut TfExperiment) -> TfStatus {
    guard(|| {
        exp_mut(h)?.cfg.dd = None;
        Ok(())
    })
}

/// Ensemble size and base seed (instance `i` uses `seed ^ i`).
///
/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_set_ensemble(h: *mut TfExperiment, instances: usize, seed: u64) -> TfStatus {
    guard(|| {
        if instances == 0 {
            return Err(fail(Error::InvalidArgument("instances must be >= 1".into())));
        }
        let e = exp_mut(h)?;
        e.cfg.instances = instances;
        e.cfg.base_seed = seed;
        Ok(())
    })
}

/// Selects the prepared band: 0 = lower, 1 = upper.
///
/// # Safety
/// `h` must be a valid experiment handle.
#[no_mangle]
pub unsafe extern "C" fn tf_experiment_set_band(h: *mut TfExperiment, band: i32) -> TfStatus {
    guard(|| {
        let b = match band {
            0 => Band::Lower,
            1 => Band::Upper,
            _ => return Err(fail(Error::InvalidArgument(format!("band must be 0 or 1, got {band}")))),
        };
        exp_mut(h)?.cfg.band = b;
        Ok(())
    })
}

/// Integer Chern number of the lower band for the gap parameter `m`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_analytic_chern(m: f64, out: *mut i32) -> TfStatus {
    guard(|| write_out(out, analytic_chern(m).map_err(fail)?))
}

/// Lattice Chern number of the experiment's band over an `n × n` grid.
///
/// # Safety
/// `h` must be a valid experiment handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_chern_fhs(h: *const TfExperiment, n: usize, out: *mut i32) -> TfStatus {
    guard(|| {
        let e = exp_ref(h)?;
        let grid = FloquetZoneGrid::new(n).map_err(fail)?.with_offsets(e.grid.offsets.0, e.grid.offsets.1);
        write_out(out, chern_fhs(&e.cfg.drive, &grid, e.cfg.band).map_err(fail)?)
    })
}

/// Minimum band gap (rad/s) over the Floquet zone.
#[no_mangle]
pub extern "C" fn tf_min_gap(m: f64, eta: f64) -> f64 {
    min_gap(m, eta)
}

/// Runs the ensemble. `workers == 0` uses the default thread pool.
///
/// # Safety
/// `h` must be a valid experiment handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_run_ensemble(h: *const TfExperiment, workers: usize, out: *mut *mut TfResult) -> TfStatus {
    guard(|| {
        let e = exp_ref(h)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = if workers == 0 { run_ensemble(&e.cfg) } else { run_ensemble_with_workers(&e.cfg, workers) };
        *out = Box::into_raw(Box::new(TfResult { inner: r.map_err(fail)? }));
        Ok(())
    })
}

/// Releases a result handle. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_result_free(h: *mut TfResult) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of samples in each time series.
///
/// # Safety
/// `h` must be a valid result handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_result_len(h: *const TfResult, out: *mut usize) -> TfStatus {
    guard(|| write_out(out, res_ref(h)?.inner.times.len()))
}

/// Successful and failed instance counts.
///
/// # Safety
/// `h` must be a valid result handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tf_result_instances(h: *const TfResult, ok: *mut usize, failed: *mut usize) -> TfStatus {
    guard(|| {
        let r = &res_ref(h)?.inner;
        write_out(ok, r.instances)?;
        write_out(failed, r.failed)
    })
}

/// Mean Chern estimate and its standard error.
///
/// # Safety
/// `h` must be a valid result handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tf_result_chern(h: *const TfResult, mean: *mut f64, stderr: *mut f64) -> TfStatus {
    guard(|| {
        let r = &res_ref(h)?.inner;
        write_out(mean, r.mean_fit.chern_estimate)?;
        write_out(stderr, r.chern_stderr)
    })
}

/// Mean pumping rates (rad/s²) with standard errors.
///
/// # Safety
/// `h` must be a valid result handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tf_result_rates(
    h: *const TfResult,
    p1: *mut f64,
    p2: *mut f64,
    stderr1: *mut f64,
    stderr2: *mut f64,
) -> TfStatus {
    guard(|| {
        let f = &res_ref(h)?.inner.mean_fit;
        write_out(p1, f.p1)?;
        write_out(p2, f.p2)?;
        write_out(stderr1, f.stderr1)?;
        write_out(stderr2, f.stderr2)
    })
}

/// Copies one series into `buf`, which must hold at least
/// `tf_result_len` values.
///
/// # Safety
/// `h` must be a valid result handle; `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_result_copy_series(h: *const TfResult, which: TfSeries, buf: *mut f64, len: usize) -> TfStatus {
    guard(|| {
        let r = &res_ref(h)?.inner;
        let src = match which {
            TfSeries::Times => &r.times,
            TfSeries::Work1 => &r.mean_e1,
            TfSeries::Work2 => &r.mean_e2,
            TfSeries::Fidelity => &r.mean_fidelity,
        };
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < src.len() {
            set_error(&format!("buffer holds {len} values, need {}", src.len()));
            return Err(TfStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_error_class_has_a_distinct_status() {
        let errs = [
            Error::InvalidArgument(String::new()),
            Error::Degeneracy { norm: 0.0, floor: 1.0 },
            Error::CriticalPoint { m: 2.0, critical: 2.0, margin: 0.05 },
            Error::Contract(String::new()),
            Error::Config(String::new()),
            Error::Io(String::new()),
            Error::EnsembleAborted { failed: 2, total: 3 },
        ];
        let mut codes: Vec<i32> = errs.iter().map(|e| status_of(e) as i32).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), errs.len());
        assert!(!codes.contains(&(TfStatus::Ok as i32)));
    }

    #[test]
    fn panics_become_status_codes() {
        assert_eq!(guard(|| panic!("boom")), TfStatus::Panic);
        let mut buf = [0 as c_char; 32];
        let n = unsafe { tf_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, "internal panic".len());
    }

    #[test]
    fn messages_truncate_to_buffer() {
        set_error("abcdef");
        let mut buf = [1 as c_char; 4];
        let n = unsafe { tf_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, 6);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "abc");
    }
}
