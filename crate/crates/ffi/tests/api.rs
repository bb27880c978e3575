use khm_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

const CONFIG: &str = "format = 1
[run]
nu = 0.3
n = 8
dt = 0.02
burn_in = 2
averaging = 4
stride = 10
seed = 5
ensemble = 2
nonlinear = true
save_snapshots = true
[stats]
ell = 0.3, 0.6, 0.9
";

fn config() -> *mut KhmConfig {
    let text = CString::new(CONFIG).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { khm_config_parse(text.as_ptr(), ptr::null(), &mut cfg) }, KhmStatus::Ok);
    cfg
}

#[test]
fn in_memory_run_and_field_checks() {
    let cfg = config();
    let mut n = 0;
    assert_eq!(unsafe { khm_config_grid_n(cfg, &mut n) }, KhmStatus::Ok);
    assert_eq!(n, 8);

    let mut run = ptr::null_mut();
    assert_eq!(unsafe { khm_simulate(cfg, 1, &mut run) }, KhmStatus::Ok);
    let mut rep = KhmEnergyReport::default();
    assert_eq!(unsafe { khm_run_energy_report(run, &mut rep) }, KhmStatus::Ok);
    assert_eq!(rep.nu, 0.3);
    assert_eq!(rep.samples, 2 * 20);
    assert!(rep.energy > 0.0 && rep.dissipation > 0.0);

    let mut f = ptr::null_mut();
    assert_eq!(unsafe { khm_run_final_field(run, 2, &mut f) }, KhmStatus::Invalid);
    assert_eq!(unsafe { khm_run_final_field(run, 1, &mut f) }, KhmStatus::Ok);
    let mut e = 0.0;
    assert_eq!(unsafe { khm_field_energy(f, &mut e) }, KhmStatus::Ok);
    assert!(e > 0.0);
    let mut r = 1.0;
    assert_eq!(unsafe { khm_monin_residual(f, 3, &mut r) }, KhmStatus::Ok);
    assert!(r <= 1e-8, "{r}");
    assert_eq!(unsafe { khm_pressure_residual(f, 1.0, &mut r) }, KhmStatus::Ok);
    assert!(r <= 1e-8, "{r}");
    assert_eq!(unsafe { khm_pressure_residual(f, -1.0, &mut r) }, KhmStatus::Invalid);

    unsafe {
        khm_field_free(f);
        khm_run_free(run);
        khm_config_free(cfg);
    }
}

#[test]
fn commands_write_into_the_output_directory() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    for c in [KhmCommand::Simulate, KhmCommand::Stats, KhmCommand::Budget] {
        let s = unsafe { khm_run_command(cfg, c, out.as_ptr(), 1) };
        assert_eq!(s, KhmStatus::Ok, "{c:?}: {:?}", unsafe { CStr::from_ptr(khm_last_error()) });
    }
    for f in ["manifest-simulate.txt", "structure_functions.csv", "khm_budget.csv", "report.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let ck = CString::new(dir.path().join("checkpoint_m001.khm").to_str().unwrap()).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { khm_field_read_checkpoint(ck.as_ptr(), &mut f) }, KhmStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { khm_field_grid_n(f, &mut n) }, KhmStatus::Ok);
    assert_eq!(n, 8);
    unsafe { khm_field_free(f) };

    let missing = CString::new(dir.path().join("nope.khm").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { khm_field_read_checkpoint(missing.as_ptr(), &mut f) }, KhmStatus::Io);
    unsafe { khm_config_free(cfg) };
}

#[test]
fn stats_without_snapshots_is_invalid() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { khm_run_command(cfg, KhmCommand::Stats, out.as_ptr(), 1) }, KhmStatus::Invalid);
    let msg = unsafe { CStr::from_ptr(khm_last_error()) }.to_string_lossy().into_owned();
    assert!(msg.contains("does not exist"), "{msg}");
    unsafe { khm_config_free(cfg) };
}
