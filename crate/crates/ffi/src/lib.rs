//! C interface to `muxphoton`.
//!
//! Every function returns an [`MpStatus`]. Results are written through
//! out-pointers, which are left untouched when the call fails. The message
//! behind the most recent failure on the calling thread is available from
//! [`mp_last_error_message`].
//!
//! Parameters and schemes live behind opaque handles created with
//! `mp_params_new` / `mp_scheme_new` and released with the matching `_free`.
//! Enumerations cross the boundary as `int32_t` using the `MP_*` constants,
//! so an out-of-range value is reported instead of being undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use muxphoton::bell::{composed_success, BellScheme};
use muxphoton::control::{phase_schedule, select_last, HeraldFrame};
use muxphoton::efficiency::{
    avg_linear_transmission, bin_success, detection_efficiency, generation_rate, total_efficiency,
};
use muxphoton::model::pair_count_distribution;
use muxphoton::montecarlo::estimate_eta;
use muxphoton::{Detection, Error, PairDistribution, SchemeConfig, Selection, SourceParams, Topology};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A value lies outside the range where the model is defined.
    Domain = 3,
    Config = 4,
    /// The caller's buffer is too short; the required size was still reported.
    BufferTooSmall = 5,
    /// The library panicked; the handle involved should not be reused.
    Panic = 6,
}

pub const MP_TOPOLOGY_BINARY_DELAY: i32 = 0;
pub const MP_TOPOLOGY_SINGLE_DELAY_LINE: i32 = 1;

pub const MP_DETECTION_SINGLE_DETECTOR: i32 = 0;
pub const MP_DETECTION_DETECTOR_ARRAY: i32 = 1;

pub const MP_SELECTION_FIRST_PHOTON: i32 = 0;
pub const MP_SELECTION_LAST_PHOTON: i32 = 1;

/// Four heralded sources.
pub const MP_BELL_HBS4: i32 = 0;
/// Two sources with post-selection.
pub const MP_BELL_POST_SELECTED2: i32 = 1;

pub const MP_PAIR_DIST_POISSON: i32 = 0;
pub const MP_PAIR_DIST_THERMAL_APPROX: i32 = 1;

/// Source parameters. Starts from the library defaults.
pub struct MpParams {
    inner: SourceParams,
}

/// Frame size, delay topology, detection protocol and selection policy.
pub struct MpScheme {
    inner: SchemeConfig,
}

/// Summary of a Monte Carlo run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpEstimate {
    pub eta_hat: f64,
    pub std_err: f64,
    pub n_trials: u64,
    pub single_count: u64,
    pub multi_count: u64,
    pub vacuum_count: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure {
    status: MpStatus,
    message: String,
}

impl Failure {
    fn new(status: MpStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(MpStatus::InvalidArgument, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config { .. } => MpStatus::Config,
            _ => MpStatus::Domain,
        };
        Failure::new(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> MpStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return MpStatus::Ok,
        Ok(Err(fail)) => (fail.status, fail.message),
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            (MpStatus::Panic, format!("panic: {text}"))
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
    status
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure::new(MpStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Failure::new(MpStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    deref(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    deref_mut(p, name)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn topology(v: i32) -> FfiResult<Topology> {
    match v {
        MP_TOPOLOGY_BINARY_DELAY => Ok(Topology::BinaryDelay),
        MP_TOPOLOGY_SINGLE_DELAY_LINE => Ok(Topology::SingleDelayLine),
        _ => Err(Failure::invalid(format!("unknown topology {v}"))),
    }
}

fn detection(v: i32) -> FfiResult<Detection> {
    match v {
        MP_DETECTION_SINGLE_DETECTOR => Ok(Detection::SingleDetector),
        MP_DETECTION_DETECTOR_ARRAY => Ok(Detection::DetectorArray),
        _ => Err(Failure::invalid(format!("unknown detection protocol {v}"))),
    }
}

fn selection(v: i32) -> FfiResult<Selection> {
    match v {
        MP_SELECTION_FIRST_PHOTON => Ok(Selection::FirstPhoton),
        MP_SELECTION_LAST_PHOTON => Ok(Selection::LastPhoton),
        _ => Err(Failure::invalid(format!("unknown selection policy {v}"))),
    }
}

fn flag(key: &str, value: f64) -> FfiResult<bool> {
    if value == 0.0 {
        Ok(false)
    } else if value == 1.0 {
        Ok(true)
    } else {
        Err(Failure::invalid(format!("`{key}` takes 0 or 1, got {value}")))
    }
}

unsafe fn key_str<'a>(key: *const c_char) -> FfiResult<&'a str> {
    if key.is_null() {
        return Err(Failure::new(MpStatus::NullPointer, "`key` is null"));
    }
    CStr::from_ptr(key)
        .to_str()
        .map_err(|_| Failure::invalid("`key` is not valid UTF-8"))
}

fn set_param(p: &mut SourceParams, key: &str, value: f64) -> FfiResult<()> {
    match key {
        "lambda" => p.lambda = value,
        "period" => p.period = value,
        "eta_f" => p.eta_f = value,
        "eta_c" => p.eta_c = value,
        "eta_sw" => p.eta_sw = value,
        "eta_det_single" => p.eta_det_single = value,
        "eta_det_array" => p.eta_det_array = value,
        "eta_conv" => p.eta_conv = value,
        "alpha_inc" => p.alpha_inc = value,
        "pair_dist" => {
            p.pair_dist = match value {
                v if v == MP_PAIR_DIST_POISSON as f64 => PairDistribution::Poisson,
                v if v == MP_PAIR_DIST_THERMAL_APPROX as f64 => PairDistribution::ThermalApprox,
                v => return Err(Failure::invalid(format!("unknown pair distribution {v}"))),
            }
        }
        "strict_eq6" => p.conventions.strict_eq6 = flag(key, value)?,
        "omit_filter_in_d0" => p.conventions.omit_filter_in_d0 = flag(key, value)?,
        _ => return Err(Failure::invalid(format!("unknown parameter `{key}`"))),
    }
    Ok(())
}

fn get_param(p: &SourceParams, key: &str) -> FfiResult<f64> {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    Ok(match key {
        "lambda" => p.lambda,
        "period" => p.period,
        "eta_f" => p.eta_f,
        "eta_c" => p.eta_c,
        "eta_sw" => p.eta_sw,
        "eta_det_single" => p.eta_det_single,
        "eta_det_array" => p.eta_det_array,
        "eta_conv" => p.eta_conv,
        "alpha_inc" => p.alpha_inc,
        "pair_dist" => match p.pair_dist {
            PairDistribution::Poisson => MP_PAIR_DIST_POISSON as f64,
            PairDistribution::ThermalApprox => MP_PAIR_DIST_THERMAL_APPROX as f64,
        },
        "strict_eq6" => b(p.conventions.strict_eq6),
        "omit_filter_in_d0" => b(p.conventions.omit_filter_in_d0),
        _ => return Err(Failure::invalid(format!("unknown parameter `{key}`"))),
    })
}

/// Creates a parameter set with the library defaults.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_params_new(out: *mut *mut MpParams) -> MpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(MpParams {
            inner: SourceParams::default(),
        }));
        Ok(())
    })
}

/// Creates a lossless parameter set: all efficiencies one, no delay loss.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_params_ideal(lambda: f64, out: *mut *mut MpParams) -> MpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let inner = SourceParams::ideal(lambda);
        inner.validate()?;
        *out = Box::into_raw(Box::new(MpParams { inner }));
        Ok(())
    })
}

/// Sets one parameter by name. Flags and `pair_dist` take integral values.
/// The handle is unchanged if the new value is rejected.
///
/// # Safety
/// `params` must come from `mp_params_new`; `key` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mp_params_set(params: *mut MpParams, key: *const c_char, value: f64) -> MpStatus {
    guard(|| {
        let params = deref_mut(params, "params")?;
        let key = key_str(key)?;
        let mut next = params.inner.clone();
        set_param(&mut next, key, value)?;
        next.validate()?;
        params.inner = next;
        Ok(())
    })
}

/// Reads one parameter by name.
///
/// # Safety
/// `params` must come from `mp_params_new`; `key` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mp_params_get(params: *const MpParams, key: *const c_char, out: *mut f64) -> MpStatus {
    guard(|| {
        let params = deref(params, "params")?;
        let value = get_param(&params.inner, key_str(key)?)?;
        *deref_mut(out, "out")? = value;
        Ok(())
    })
}

/// Releases a parameter set. Null is ignored.
///
/// # Safety
/// `params` must come from `mp_params_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mp_params_free(params: *mut MpParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Creates a scheme whose selection policy follows the detection protocol.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_scheme_new(
    n_bins: usize,
    topology_kind: i32,
    detection_kind: i32,
    out: *mut *mut MpScheme,
) -> MpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let inner = SchemeConfig::new(n_bins, topology(topology_kind)?, detection(detection_kind)?)?;
        *out = Box::into_raw(Box::new(MpScheme { inner }));
        Ok(())
    })
}

/// Overrides the native selection policy.
///
/// # Safety
/// `scheme` must come from `mp_scheme_new`.
#[no_mangle]
pub unsafe extern "C" fn mp_scheme_set_selection(scheme: *mut MpScheme, selection_kind: i32) -> MpStatus {
    guard(|| {
        let scheme = deref_mut(scheme, "scheme")?;
        scheme.inner = scheme.inner.with_selection_override(selection(selection_kind)?);
        Ok(())
    })
}

/// Releases a scheme. Null is ignored.
///
/// # Safety
/// `scheme` must come from `mp_scheme_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mp_scheme_free(scheme: *mut MpScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Probability that a frame emits exactly one photon.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_total_efficiency(
    params: *const MpParams,
    scheme: *const MpScheme,
    out: *mut f64,
) -> MpStatus {
    guard(|| {
        let (p, s) = (deref(params, "params")?, deref(scheme, "scheme")?);
        let eta = total_efficiency(&p.inner, &s.inner)?.eta_total;
        *deref_mut(out, "out")? = eta;
        Ok(())
    })
}

/// Probability that bin `r` (1-based) supplies the single output photon.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_bin_success(
    params: *const MpParams,
    scheme: *const MpScheme,
    r: usize,
    out: *mut f64,
) -> MpStatus {
    guard(|| {
        let (p, s) = (deref(params, "params")?, deref(scheme, "scheme")?);
        let b = bin_success(&p.inner, &s.inner, r)?;
        *deref_mut(out, "out")? = b;
        Ok(())
    })
}

/// Effective heralding efficiency of a detection protocol.
///
/// # Safety
/// `params` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_detection_efficiency(
    params: *const MpParams,
    detection_kind: i32,
    out: *mut f64,
) -> MpStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let d = detection(detection_kind)?;
        p.inner.validate()?;
        *deref_mut(out, "out")? = detection_efficiency(&p.inner, d);
        Ok(())
    })
}

/// Output photon rate in Hz.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_generation_rate(
    params: *const MpParams,
    scheme: *const MpScheme,
    out: *mut f64,
) -> MpStatus {
    guard(|| {
        let (p, s) = (deref(params, "params")?, deref(scheme, "scheme")?);
        *deref_mut(out, "out")? = generation_rate(&p.inner, &s.inner);
        Ok(())
    })
}

/// Mean delay-line transmission of the selected photon.
///
/// # Safety
/// `params` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_avg_lin(
    params: *const MpParams,
    n_bins: usize,
    selection_kind: i32,
    lambda: f64,
    out: *mut f64,
) -> MpStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let v = avg_linear_transmission(&p.inner, n_bins, selection(selection_kind)?, lambda)?;
        *deref_mut(out, "out")? = v;
        Ok(())
    })
}

/// Monte Carlo estimate of the total efficiency. Reproducible for a given seed.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_estimate_eta(
    params: *const MpParams,
    scheme: *const MpScheme,
    n_trials: u64,
    seed: u64,
    out: *mut MpEstimate,
) -> MpStatus {
    guard(|| {
        let (p, s) = (deref(params, "params")?, deref(scheme, "scheme")?);
        let out = deref_mut(out, "out")?;
        let r = estimate_eta(&p.inner, &s.inner, n_trials, seed)?;
        *out = MpEstimate {
            eta_hat: r.eta_hat,
            std_err: r.std_err,
            n_trials: r.n_trials,
            single_count: r.single_count,
            multi_count: r.multi_count,
            vacuum_count: r.vacuum_count,
        };
        Ok(())
    })
}

/// Bell-state success probability with sources of efficiency `eta`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_composed_success(eta: f64, scheme_kind: i32, out: *mut f64) -> MpStatus {
    guard(|| {
        let scheme = match scheme_kind {
            MP_BELL_HBS4 => BellScheme::Hbs4,
            MP_BELL_POST_SELECTED2 => BellScheme::PostSelected2,
            v => return Err(Failure::invalid(format!("unknown Bell scheme {v}"))),
        };
        let v = composed_success(eta, scheme)?;
        *deref_mut(out, "out")? = v;
        Ok(())
    })
}

/// Switch phases for every bin of a power-of-two frame.
///
/// Row `r - 1` holds the settings for bin `r`, one byte per switch, 1 for
/// a π phase. `*switches` always receives the row length; when `len` is
/// below `n_bins * *switches` nothing else is written.
///
/// # Safety
/// `buf` must be valid for `len` bytes; `switches` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_phase_schedule(
    n_bins: usize,
    buf: *mut u8,
    len: usize,
    switches: *mut usize,
) -> MpStatus {
    guard(|| {
        let switches = deref_mut(switches, "switches")?;
        let schedule = phase_schedule(n_bins)?;
        let width = schedule.switch_count();
        *switches = width;
        let needed = n_bins * width;
        if len < needed {
            return Err(Failure::new(
                MpStatus::BufferTooSmall,
                format!("schedule needs {needed} bytes, got {len}"),
            ));
        }
        let buf = slice_mut(buf, needed, "buf")?;
        for (dst, phase) in buf.iter_mut().zip(schedule.rows().flatten()) {
            *dst = u8::from(phase.is_pi());
        }
        Ok(())
    })
}

/// Last-photon selection on one frame of herald bits.
///
/// `bits[r - 1]` is nonzero when bin `r` heralded. `out_bits` receives the
/// one-hot decision and `*bin` the selected bin, or 0 when nothing fired.
///
/// # Safety
/// `bits` and `out_bits` must be valid for `n_bins` bytes; `bin` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_select_last(
    bits: *const u8,
    n_bins: usize,
    out_bits: *mut u8,
    bin: *mut usize,
) -> MpStatus {
    guard(|| {
        if n_bins == 0 {
            return Err(Failure::invalid("n_bins must be >= 1"));
        }
        let input = slice(bits, n_bins, "bits")?;
        let output = slice_mut(out_bits, n_bins, "out_bits")?;
        let bin = deref_mut(bin, "bin")?;
        let sel = select_last(&HeraldFrame::new(input.iter().map(|&b| b != 0).collect()));
        for (dst, &fired) in output.iter_mut().zip(sel.output.bits()) {
            *dst = u8::from(fired);
        }
        *bin = sel.bin.unwrap_or(0);
        Ok(())
    })
}

/// Probability of exactly `n` pairs in one bin.
///
/// # Safety
/// `params` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mp_pair_count_distribution(params: *const MpParams, n: i64, out: *mut f64) -> MpStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let n = usize::try_from(n).map_err(|_| Failure::invalid(format!("pair number {n} is negative")))?;
        let v = pair_count_distribution(&p.inner, n)?;
        *deref_mut(out, "out")? = v;
        Ok(())
    })
}

/// Copies the last failure message of this thread into `buf`, truncated and
/// NUL-terminated. Returns the full message length without the terminator,
/// so a caller can size its buffer with a first call using `len = 0`.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
