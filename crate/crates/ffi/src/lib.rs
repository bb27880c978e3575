//! C ABI over khm-core.
//!
//! Objects cross the boundary as opaque handles created by `khm_*_new`-style
//! functions and released with the matching `khm_*_free`. Every fallible call
//! returns a [`KhmStatus`]; on failure [`khm_last_error`] describes the cause.

use khm_core::cli::{cmd_budget, cmd_ou_bench, cmd_simulate, cmd_stats, cmd_verify, with_threads, Outcome};
use khm_core::integrator::checkpoint::Checkpoint;
use khm_core::integrator::{energy_report, simulate_ensemble, EnergyReport, Snapshot};
use khm_core::io::Config;
use khm_core::khm::{verify_monin_identity, verify_pressure_cancellation, MoninLattice, TestTensorPair};
use khm_core::spectral::random::random_solenoidal;
use khm_core::spectral::{Grid, SpectralField};
use khm_core::Error;
use libc::c_char;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhmStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad configuration, argument or input file contents.
    Invalid = 2,
    /// Blow-up or another numerical failure.
    Numerical = 3,
    Io = 4,
    /// A command ran but one of its checks failed.
    CheckFailed = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhmCommand {
    Simulate = 0,
    Stats = 1,
    Budget = 2,
    Verify = 3,
    OuBench = 4,
}

/// Parsed run configuration.
pub struct KhmConfig(Config);

/// Velocity field in spectral form.
pub struct KhmField(SpectralField);

/// In-memory ensemble run: final states and the energy report.
pub struct KhmRun {
    report: EnergyReport,
    finals: Vec<SpectralField>,
    snapshots: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KhmEnergyReport {
    pub epsilon: f64,
    pub nu: f64,
    /// nu <||grad u||^2> and its standard error
    pub dissipation: f64,
    pub dissipation_stderr: f64,
    /// <||u||^2>
    pub energy: f64,
    pub energy_stderr: f64,
    /// (nu <||grad u||^2> - epsilon) / epsilon
    pub balance_residual: f64,
    pub balance_residual_stderr: f64,
    pub samples: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KhmStatus {
    match e {
        Error::BlowUp { .. } => KhmStatus::Numerical,
        Error::Io(_) => KhmStatus::Io,
        _ => KhmStatus::Invalid,
    }
}

/// Runs `f`, recording any error or panic for `khm_last_error`.
fn guard(f: impl FnOnce() -> Result<(), KhmStatus>) -> KhmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KhmStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            KhmStatus::Panic
        }
    }
}

fn fail(e: Error) -> KhmStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> KhmStatus {
    set_error(format!("{what} is NULL"));
    KhmStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, KhmStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        KhmStatus::Invalid
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, KhmStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, KhmStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or NULL after a
/// successful one. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn khm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn khm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse configuration text. `source` names it in error messages and may be NULL.
///
/// # Safety
/// `text` and a non-NULL `source` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_config_parse(text: *const c_char, source: *const c_char, out: *mut *mut KhmConfig) -> KhmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let text = str_arg(text, "text")?;
        let source = if source.is_null() { "<memory>" } else { str_arg(source, "source")? };
        let cfg = khm_core::io::parse_config(text, source).map_err(fail)?;
        *out = Box::into_raw(Box::new(KhmConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_config_load(path: *const c_char, out: *mut *mut KhmConfig) -> KhmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = Config::load(Path::new(str_arg(path, "path")?)).map_err(fail)?;
        *out = Box::into_raw(Box::new(KhmConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from `khm_config_parse`/`khm_config_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn khm_config_free(cfg: *mut KhmConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Grid points per axis.
///
/// # Safety
/// `cfg` must be a live config handle; `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_config_grid_n(cfg: *const KhmConfig, n: *mut u32) -> KhmStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        *out_ptr(n, "n")? = cfg.0.run.grid.n() as u32;
        Ok(())
    })
}

/// Run one CLI command into `out_dir` with `threads` workers (0 = all cores).
/// Summary lines are discarded; a failed check gives `CheckFailed`.
///
/// # Safety
/// `cfg` must be a live config handle and `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn khm_run_command(
    cfg: *const KhmConfig,
    command: KhmCommand,
    out_dir: *const c_char,
    threads: u32,
) -> KhmStatus {
    guard(|| {
        let cfg = &handle(cfg, "cfg")?.0;
        let out = Path::new(str_arg(out_dir, "out_dir")?);
        std::fs::create_dir_all(out).map_err(|e| fail(e.into()))?;
        let threads = if threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            threads as usize
        };
        let f: fn(&Config, &Path, usize) -> khm_core::Result<Outcome> = match command {
            KhmCommand::Simulate => cmd_simulate,
            KhmCommand::Stats => cmd_stats,
            KhmCommand::Budget => cmd_budget,
            KhmCommand::Verify => cmd_verify,
            KhmCommand::OuBench => cmd_ou_bench,
        };
        let o = f(cfg, out, threads).map_err(fail)?;
        if o.failed {
            set_error(o.lines.iter().filter(|l| l.starts_with("FAIL")).cloned().collect::<Vec<_>>().join("\n"));
            return Err(KhmStatus::CheckFailed);
        }
        Ok(())
    })
}

/// Integrate the configured ensemble in memory, without writing files.
///
/// # Safety
/// `cfg` must be a live config handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_simulate(cfg: *const KhmConfig, threads: u32, out: *mut *mut KhmRun) -> KhmStatus {
    guard(|| {
        let cfg = &handle(cfg, "cfg")?.0;
        let out = out_ptr(out, "out")?;
        let run = &cfg.run;
        let threads = if threads == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { threads as usize };
        let sinks = (0..run.ensemble_size).map(|_| |_: &Snapshot<'_>| Ok(())).collect();
        let runs = with_threads(threads, || simulate_ensemble(run, sinks)).map_err(fail)?.map_err(fail)?;
        let stats: Vec<_> = runs.iter().map(|r| r.0.clone()).collect();
        let report = energy_report(&stats, run.forcing.epsilon(), run.nu, run.sobolev_s);
        *out = Box::into_raw(Box::new(KhmRun {
            report,
            finals: runs.into_iter().map(|r| r.1).collect(),
            snapshots: stats.iter().map(|s| s.energy.len() as u64).sum(),
        }));
        Ok(())
    })
}

/// # Safety
/// `run` must be NULL or a handle from `khm_simulate` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn khm_run_free(run: *mut KhmRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live run handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_run_energy_report(run: *const KhmRun, out: *mut KhmEnergyReport) -> KhmStatus {
    guard(|| {
        let r = &handle(run, "run")?.report;
        *out_ptr(out, "out")? = KhmEnergyReport {
            epsilon: r.epsilon,
            nu: r.nu,
            dissipation: r.dissipation.mean,
            dissipation_stderr: r.dissipation.stderr,
            energy: r.energy.mean,
            energy_stderr: r.energy.stderr,
            balance_residual: r.balance_residual.mean,
            balance_residual_stderr: r.balance_residual.stderr,
            samples: handle(run, "run")?.snapshots,
        };
        Ok(())
    })
}

/// Copy of the final state of ensemble member `member`.
///
/// # Safety
/// `run` must be a live run handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_run_final_field(run: *const KhmRun, member: u32, out: *mut *mut KhmField) -> KhmStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let out = out_ptr(out, "out")?;
        let f = run.finals.get(member as usize).ok_or_else(|| {
            set_error(format!("member {member} out of range (ensemble of {})", run.finals.len()));
            KhmStatus::Invalid
        })?;
        *out = Box::into_raw(Box::new(KhmField(f.clone())));
        Ok(())
    })
}

/// Random solenoidal field on an n^3 grid with spectrum ~ |k|^-slope.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_field_random(n: u32, seed: u64, slope: f64, out: *mut *mut KhmField) -> KhmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = Grid::new(n as usize).map_err(fail)?;
        *out = Box::into_raw(Box::new(KhmField(random_solenoidal(g, seed, slope))));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_field_read_checkpoint(path: *const c_char, out: *mut *mut KhmField) -> KhmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = Checkpoint::read(Path::new(str_arg(path, "path")?)).map_err(fail)?;
        *out = Box::into_raw(Box::new(KhmField(c.field)));
        Ok(())
    })
}

/// # Safety
/// `field` must be NULL or a field handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn khm_field_free(field: *mut KhmField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Grid points per axis.
///
/// # Safety
/// `field` must be a live field handle; `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_field_grid_n(field: *const KhmField, n: *mut u32) -> KhmStatus {
    guard(|| {
        *out_ptr(n, "n")? = handle(field, "field")?.0.grid().n() as u32;
        Ok(())
    })
}

/// ||u||^2 over the box.
///
/// # Safety
/// `field` must be a live field handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_field_energy(field: *const KhmField, out: *mut f64) -> KhmStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(field, "field")?.0.energy();
        Ok(())
    })
}

/// Largest relative mismatch of the mixed-correlation identity on the
/// lattice drawn from `lattice_seed`.
///
/// # Safety
/// `field` must be a live field handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_monin_residual(field: *const KhmField, lattice_seed: u64, out: *mut f64) -> KhmStatus {
    guard(|| {
        let f = &handle(field, "field")?.0;
        let out = out_ptr(out, "out")?;
        *out = verify_monin_identity(f, &MoninLattice::new(lattice_seed)).map_err(fail)?.residual;
        Ok(())
    })
}

/// Normalized pressure pairing with the test tensor of scale `scale`.
///
/// # Safety
/// `field` must be a live field handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn khm_pressure_residual(field: *const KhmField, scale: f64, out: *mut f64) -> KhmStatus {
    guard(|| {
        let f = &handle(field, "field")?.0;
        let out = out_ptr(out, "out")?;
        if !(scale > 0.0 && scale.is_finite()) {
            set_error(format!("scale must be positive, got {scale}"));
            return Err(KhmStatus::Invalid);
        }
        let eta = TestTensorPair::at_scale("ffi", scale);
        *out = verify_pressure_cancellation(f, &eta).map_err(fail)?.residual;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last() -> String {
        let p = khm_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn null_arguments_are_reported() {
        let mut n = 0u32;
        assert_eq!(unsafe { khm_config_grid_n(ptr::null(), &mut n) }, KhmStatus::NullPointer);
        assert!(last().contains("cfg"));
        let mut f = ptr::null_mut();
        assert_eq!(unsafe { khm_field_random(8, 1, 1.0, ptr::null_mut()) }, KhmStatus::NullPointer);
        assert_eq!(unsafe { khm_field_random(8, 1, 1.0, &mut f) }, KhmStatus::Ok);
        assert!(khm_last_error().is_null());
        unsafe { khm_field_free(f) };
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let text = CString::new("format = 1\n[run]\nnu = 0\nn = 16\n").unwrap();
        let src = CString::new("bad.ini").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(unsafe { khm_config_parse(text.as_ptr(), src.as_ptr(), &mut cfg) }, KhmStatus::Invalid);
        assert!(cfg.is_null());
        assert!(last().starts_with("bad.ini:3:"), "{}", last());
    }

    #[test]
    fn version_is_the_crate_version() {
        let v = unsafe { CStr::from_ptr(khm_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
