//! C ABI for the conserv-stat pipelines.
//!
//! Jobs are configured with the same JSON accepted by the CLI, run behind an
//! opaque handle, and hand the diagnostics report back as a JSON string. All
//! functions are panic-safe: a caught panic maps to `CS_STATUS_INTERNAL`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use conserv_stat::pipeline::{self, JobConfig, JobStatus, PipelineError, RunOutput};

/// Status codes mirroring the CLI exit codes.
pub const CS_STATUS_OK: i32 = 0;
pub const CS_STATUS_NO_CONVERGENCE: i32 = 2;
pub const CS_STATUS_OBSTRUCTION: i32 = 3;
pub const CS_STATUS_CONFIG: i32 = 4;
pub const CS_STATUS_IO: i32 = 5;
pub const CS_STATUS_INTERNAL: i32 = 6;

/// Job kinds accepted by [`cs_job_run`].
pub const CS_JOB_SOLVE: i32 = 0;
pub const CS_JOB_VERIFY: i32 = 1;
pub const CS_JOB_ROUNDTRIP: i32 = 2;

/// Opaque job handle: owns the parsed configuration and, after a run, the
/// diagnostics report.
pub struct CsJob {
    config: JobConfig,
    report_json: Option<CString>,
    error: Option<CString>,
}

impl CsJob {
    fn set_error(&mut self, msg: &str) {
        self.error = Some(CString::new(msg.replace('\0', " ")).unwrap());
    }
}

fn error_status(err: &PipelineError) -> i32 {
    err.exit_code()
}

/// Parse a JSON job configuration into a fresh handle.
///
/// Returns null if `config_json` is null, not UTF-8, or not a valid
/// configuration. A non-null handle must be released with [`cs_job_free`].
/// # Safety
/// `config_json` must be null or a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cs_job_new(config_json: *const c_char) -> *mut CsJob {
    if config_json.is_null() {
        return ptr::null_mut();
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t,
        Err(_) => return ptr::null_mut(),
    };
    match catch_unwind(|| JobConfig::from_json(text)) {
        Ok(Ok(config)) => Box::into_raw(Box::new(CsJob {
            config,
            report_json: None,
            error: None,
        })),
        _ => ptr::null_mut(),
    }
}

/// Run a job on the handle. `kind` is one of the `CS_JOB_*` constants.
///
/// Returns a `CS_STATUS_*` code. On any return value except
/// `CS_STATUS_INTERNAL` with a poisoned handle, the handle stays valid; a
/// report is available via [`cs_job_report_json`] whenever the run reached a
/// terminal state (including non-convergence and obstruction).
/// # Safety
/// `job` must be null or a live handle from [`cs_job_new`], not used
/// concurrently from another thread.
#[no_mangle]
pub unsafe extern "C" fn cs_job_run(job: *mut CsJob, kind: i32) -> i32 {
    let Some(job) = job.as_mut() else {
        return CS_STATUS_CONFIG;
    };
    job.report_json = None;
    job.error = None;
    let runner: fn(&JobConfig) -> Result<RunOutput, PipelineError> = match kind {
        CS_JOB_SOLVE => pipeline::run_forward,
        CS_JOB_VERIFY => pipeline::run_verify,
        CS_JOB_ROUNDTRIP => pipeline::run_roundtrip,
        _ => {
            job.set_error("unknown job kind");
            return CS_STATUS_CONFIG;
        }
    };
    let result = catch_unwind(AssertUnwindSafe(|| runner(&job.config)));
    match result {
        Ok(Ok(out)) => {
            let text = serde_json::to_string_pretty(&out.report).unwrap();
            job.report_json = Some(CString::new(text.replace('\0', " ")).unwrap());
            match out.status {
                JobStatus::Success => CS_STATUS_OK,
                JobStatus::NonConverged => CS_STATUS_NO_CONVERGENCE,
                JobStatus::Obstruction => CS_STATUS_OBSTRUCTION,
            }
        }
        Ok(Err(err)) => {
            let code = error_status(&err);
            job.set_error(&err.to_string());
            code
        }
        Err(_) => {
            job.set_error("internal panic");
            CS_STATUS_INTERNAL
        }
    }
}

/// Diagnostics report of the last run as a JSON string, or null if no report
/// is available. The caller owns the returned string and must release it with
/// [`cs_string_free`].
/// # Safety
/// `job` must be null or a live handle from [`cs_job_new`].
#[no_mangle]
pub unsafe extern "C" fn cs_job_report_json(job: *const CsJob) -> *mut c_char {
    let Some(job) = job.as_ref() else {
        return ptr::null_mut();
    };
    match &job.report_json {
        Some(text) => text.clone().into_raw(),
        None => ptr::null_mut(),
    }
}

/// Human-readable message for the last error on the handle, or null. Same
/// ownership rules as [`cs_job_report_json`].
/// # Safety
/// `job` must be null or a live handle from [`cs_job_new`].
#[no_mangle]
pub unsafe extern "C" fn cs_job_error_message(job: *const CsJob) -> *mut c_char {
    let Some(job) = job.as_ref() else {
        return ptr::null_mut();
    };
    match &job.error {
        Some(text) => text.clone().into_raw(),
        None => ptr::null_mut(),
    }
}

/// Release a handle created by [`cs_job_new`]. Null is a no-op.
/// # Safety
/// `job` must be null or a handle from [`cs_job_new`] not yet freed;
/// the handle is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_job_free(job: *mut CsJob) {
    if !job.is_null() {
        drop(Box::from_raw(job));
    }
}

/// Release a string returned by this library. Null is a no-op.
/// # Safety
/// `text` must be null or a string returned by this library not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn cs_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn run_json(config: &str, kind: i32) -> (i32, Option<String>) {
        let c = CString::new(config).unwrap();
        unsafe {
            let job = cs_job_new(c.as_ptr());
            assert!(!job.is_null());
            let status = cs_job_run(job, kind);
            let report = {
                let p = cs_job_report_json(job);
                if p.is_null() {
                    None
                } else {
                    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
                    cs_string_free(p);
                    Some(s)
                }
            };
            cs_job_free(job);
            (status, report)
        }
    }

    #[test]
    fn solve_roundtrips_through_the_abi() {
        let config = r#"{
            "chart": {"kind": "torus", "nx": 32, "ny": 32, "rho": 1.0},
            "moduli": {"w": 1.0, "q": 2.0}
        }"#;
        let (status, report) = run_json(config, CS_JOB_SOLVE);
        assert_eq!(status, CS_STATUS_OK);
        let text = report.unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], "conserv-stat/1");
        assert_eq!(v["verdicts"]["conservative"], true);
    }

    #[test]
    fn obstruction_maps_to_status_3() {
        let config = r#"{
            "chart": {"kind": "torus", "nx": 32, "ny": 32},
            "moduli": {"w": 0.0, "q": 0.0}
        }"#;
        let (status, report) = run_json(config, CS_JOB_SOLVE);
        assert_eq!(status, CS_STATUS_OBSTRUCTION);
        assert!(report.is_some());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let c = CString::new("not json").unwrap();
        unsafe {
            assert!(cs_job_new(c.as_ptr()).is_null());
            assert!(cs_job_new(std::ptr::null()).is_null());
            assert_eq!(
                cs_job_run(std::ptr::null_mut(), CS_JOB_SOLVE),
                CS_STATUS_CONFIG
            );
            cs_job_free(std::ptr::null_mut());
            cs_string_free(std::ptr::null_mut());
        }
        // verify without a fields_dir is a config error
        let (status, report) = run_json(r#"{}"#, CS_JOB_VERIFY);
        assert_eq!(status, CS_STATUS_CONFIG);
        assert!(report.is_none());
    }

    #[test]
    fn version_is_a_c_string() {
        unsafe {
            let v = CStr::from_ptr(cs_version());
            assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
        }
    }
}
