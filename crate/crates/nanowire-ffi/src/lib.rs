//! C ABI for the nanowire toolkit: opaque handles, integer status codes,
//! and a thread-local last-error message. The header is generated by
//! cbindgen at build time into `include/nanowire.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nanowire::fdtd::SimulationConfig;
use nanowire::sweep::{run_emission_job, OutputKind, PipelineOutput, PipelineSettings};
use nanowire::waveguide::{
    solve_modes, v_parameter, GuidedMode, ModeFamily, WaveguideSpec,
};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwStatus {
    Ok = 0,
    /// Bad argument or unparsable input.
    InvalidArgument = 1,
    /// Numerical failure (instability, unconverged run, solver failure).
    Numerical = 2,
    /// Null pointer where a value was required.
    NullPointer = 3,
    /// Index past the end of a collection.
    OutOfRange = 4,
    /// Panic trapped at the ABI boundary.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: NwStatus, msg: impl Into<String>) -> NwStatus {
    set_error(msg);
    status
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
#[no_mangle]
pub extern "C" fn nw_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

fn guard<F: FnOnce() -> NwStatus>(f: F) -> NwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(NwStatus::Internal, "internal panic"),
    }
}

/// Mode family discriminant mirrored into C.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwModeFamily {
    He = 0,
    Eh = 1,
    Te = 2,
    Tm = 3,
}

/// Scalar summary of one guided mode.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NwModeInfo {
    pub family: NwModeFamily,
    pub azimuthal_order: u32,
    pub radial_index: u32,
    pub n_eff: f64,
}

/// Opaque set of solved guided modes.
pub struct NwModeSet {
    modes: Vec<GuidedMode>,
}

/// Opaque, validated simulation description.
pub struct NwConfig {
    config: SimulationConfig,
}

/// Opaque emission-pipeline result (one entry per record wavelength).
pub struct NwReportSet {
    output: PipelineOutput,
}

/// One reduced emission record, mirrored into C.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NwEmissionRecord {
    pub wavelength_nm: f64,
    /// Polarization angle sigma: 0 for s, pi/2 for p.
    pub sigma_rad: f64,
    pub alpha: f64,
    pub eta: f64,
    pub enhancement: f64,
    pub total_power_w: f64,
    /// Closed-box flux over total power; 1 when energy balances.
    pub audit_ratio: f64,
    /// 1 when the run rang down below the convergence threshold.
    pub converged: i32,
}

/// Output-selection flags for `nw_simulate`, OR-able.
pub const NW_OUTPUT_ALPHA: u32 = 1;
pub const NW_OUTPUT_ETA: u32 = 2;
pub const NW_OUTPUT_ENHANCEMENT: u32 = 4;

/// V parameter of a circular step-index waveguide.
#[no_mangle]
pub extern "C" fn nw_v_parameter(
    diameter_nm: f64,
    wavelength_nm: f64,
    core_index: f64,
    clad_index: f64,
    out: *mut f64,
) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        match WaveguideSpec::new(
            diameter_nm * 1e-9,
            core_index,
            clad_index,
            wavelength_nm * 1e-9,
        ) {
            Ok(spec) => {
                unsafe { *out = v_parameter(&spec) };
                NwStatus::Ok
            }
            Err(e) => fail(NwStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Solves the guided modes up to `max_order`; the handle must be released
/// with `nw_mode_set_free`.
#[no_mangle]
pub extern "C" fn nw_modes_solve(
    diameter_nm: f64,
    wavelength_nm: f64,
    core_index: f64,
    clad_index: f64,
    max_order: u32,
    out: *mut *mut NwModeSet,
) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        let spec = match WaveguideSpec::new(
            diameter_nm * 1e-9,
            core_index,
            clad_index,
            wavelength_nm * 1e-9,
        ) {
            Ok(s) => s,
            Err(e) => return fail(NwStatus::InvalidArgument, e.to_string()),
        };
        match solve_modes(&spec, max_order) {
            Ok(modes) => {
                let handle = Box::new(NwModeSet { modes });
                unsafe { *out = Box::into_raw(handle) };
                NwStatus::Ok
            }
            Err(e) => fail(NwStatus::Numerical, e.to_string()),
        }
    })
}

/// Number of modes in the set; 0 for a null handle.
#[no_mangle]
pub extern "C" fn nw_mode_set_len(set: *const NwModeSet) -> usize {
    if set.is_null() {
        return 0;
    }
    unsafe { (*set).modes.len() }
}

/// Scalar info of mode `index`.
#[no_mangle]
pub extern "C" fn nw_mode_set_get(
    set: *const NwModeSet,
    index: usize,
    out: *mut NwModeInfo,
) -> NwStatus {
    guard(|| {
        if set.is_null() || out.is_null() {
            return fail(NwStatus::NullPointer, "set or out is null");
        }
        let modes = unsafe { &(*set).modes };
        let Some(m) = modes.get(index) else {
            return fail(
                NwStatus::OutOfRange,
                format!("index {index} >= {}", modes.len()),
            );
        };
        let family = match m.family {
            ModeFamily::HE => NwModeFamily::He,
            ModeFamily::EH => NwModeFamily::Eh,
            ModeFamily::TE => NwModeFamily::Te,
            ModeFamily::TM => NwModeFamily::Tm,
        };
        unsafe {
            *out = NwModeInfo {
                family,
                azimuthal_order: m.azimuthal_order,
                radial_index: m.radial_index,
                n_eff: m.n_eff,
            };
        }
        NwStatus::Ok
    })
}

/// Releases a mode set. Null is a no-op.
#[no_mangle]
pub extern "C" fn nw_mode_set_free(set: *mut NwModeSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Parses and validates a JSON scene description; release with
/// `nw_config_free`.
#[no_mangle]
pub extern "C" fn nw_config_parse(json: *const c_char, out: *mut *mut NwConfig) -> NwStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(NwStatus::NullPointer, "json or out is null");
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(NwStatus::InvalidArgument, "json is not valid UTF-8"),
        };
        match SimulationConfig::from_json(text) {
            Ok(config) => {
                unsafe { *out = Box::into_raw(Box::new(NwConfig { config })) };
                NwStatus::Ok
            }
            Err(e) => fail(NwStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Releases a config. Null is a no-op.
#[no_mangle]
pub extern "C" fn nw_config_free(config: *mut NwConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Runs the FDTD emission pipeline on the scene; `output_flags` is an OR of
/// `NW_OUTPUT_*`. Release the handle with `nw_report_set_free`. Blocks for
/// the full simulation.
#[no_mangle]
pub extern "C" fn nw_simulate(
    config: *const NwConfig,
    output_flags: u32,
    out: *mut *mut NwReportSet,
) -> NwStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(NwStatus::NullPointer, "config or out is null");
        }
        let mut outputs = Vec::new();
        if output_flags & NW_OUTPUT_ALPHA != 0 {
            outputs.push(OutputKind::Alpha);
        }
        if output_flags & NW_OUTPUT_ETA != 0 {
            outputs.push(OutputKind::Eta);
        }
        if output_flags & NW_OUTPUT_ENHANCEMENT != 0 {
            outputs.push(OutputKind::Enhancement);
        }
        let cfg = unsafe { &(*config).config };
        match run_emission_job(cfg, &outputs, &PipelineSettings::default()) {
            Ok(output) => {
                unsafe { *out = Box::into_raw(Box::new(NwReportSet { output })) };
                NwStatus::Ok
            }
            Err(e) => fail(NwStatus::Numerical, e.to_string()),
        }
    })
}

/// Number of record wavelengths in the result; 0 for a null handle.
#[no_mangle]
pub extern "C" fn nw_report_set_len(set: *const NwReportSet) -> usize {
    if set.is_null() {
        return 0;
    }
    unsafe { (*set).output.reports.len() }
}

/// Reduced record at `index`.
#[no_mangle]
pub extern "C" fn nw_report_set_get(
    set: *const NwReportSet,
    index: usize,
    out: *mut NwEmissionRecord,
) -> NwStatus {
    guard(|| {
        if set.is_null() || out.is_null() {
            return fail(NwStatus::NullPointer, "set or out is null");
        }
        let o = unsafe { &(*set).output };
        let Some(r) = o.reports.get(index) else {
            return fail(
                NwStatus::OutOfRange,
                format!("index {index} >= {}", o.reports.len()),
            );
        };
        unsafe {
            *out = NwEmissionRecord {
                wavelength_nm: r.wavelength * 1e9,
                sigma_rad: r.sigma,
                alpha: r.alpha,
                eta: r.eta,
                enhancement: r.enhancement,
                total_power_w: r.total_power,
                audit_ratio: o.audit_ratio[index],
                converged: o.converged as i32,
            };
        }
        NwStatus::Ok
    })
}

/// Releases a report set. Null is a no-op.
#[no_mangle]
pub extern "C" fn nw_report_set_free(set: *mut NwReportSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Sidewall taper angle in degrees from the etch profile; `undercut` is set
/// to 1 when the waist is narrower than the bottom.
#[no_mangle]
pub extern "C" fn nw_taper_angle(
    height_nm: f64,
    bottom_nm: f64,
    top_nm: f64,
    waist_nm: f64,
    out_degrees: *mut f64,
    out_undercut: *mut i32,
) -> NwStatus {
    guard(|| {
        if out_degrees.is_null() || out_undercut.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        use nanowire::fab::LengthCell;
        let outcome = nanowire::fab::EtchOutcome {
            height_nm: Some(height_nm),
            bottom_diameter_nm: Some(LengthCell::Exact(bottom_nm)),
            top_diameter_nm: Some(LengthCell::Exact(top_nm)),
            waist_diameter_nm: Some(LengthCell::Exact(waist_nm)),
            mask_consumed_nm: None,
            result: String::new(),
        };
        match nanowire::fab::taper_angle(&outcome) {
            Ok(t) => {
                unsafe {
                    *out_degrees = t.degrees;
                    *out_undercut = t.undercut_inverted as i32;
                }
                NwStatus::Ok
            }
            Err(e) => fail(NwStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Etch rate in nm/min.
#[no_mangle]
pub extern "C" fn nw_etch_rate(
    height_nm: f64,
    duration_min: f64,
    out: *mut f64,
) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        match nanowire::fab::etch_rate(height_nm, duration_min) {
            Ok(rate) => {
                unsafe { *out = rate };
                NwStatus::Ok
            }
            Err(e) => fail(NwStatus::InvalidArgument, e.to_string()),
        }
    })
}
