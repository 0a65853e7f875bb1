//! C API over `relaybf`.
//!
//! Objects are opaque handles created by `rbf_*_new`/`rbf_*_draw`/`rbf_select`
//! functions and released with the matching `rbf_*_free`. Every fallible call
//! returns an [`RbfStatus`]; on failure `rbf_last_error()` describes the cause
//! for the calling thread. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use relaybf::cli::{build_spec, curve_to_csv, FileConfig, FlagOverrides};
use relaybf::linalg::{ComplexMatrix, ComplexVector, C64};
use relaybf::rng::tag;
use relaybf::selection::run_algorithm;
use relaybf::{
    draw_channels, msinr_solve, Algorithm, ChannelRealization, Error, ExperimentKind, ExperimentSpec,
    RandomStream, SelectionMask, SelectionResult,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Relay selection algorithm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbfAlgorithm {
    /// All relays.
    None = 0,
    /// Random selection of `n_select` relays.
    Rrrs = 1,
    /// Exhaustive search.
    Resrs = 2,
    /// Greedy backward elimination.
    Rgsrs = 3,
}

impl From<RbfAlgorithm> for Algorithm {
    fn from(a: RbfAlgorithm) -> Self {
        match a {
            RbfAlgorithm::None => Algorithm::None,
            RbfAlgorithm::Rrrs => Algorithm::Rrrs,
            RbfAlgorithm::Resrs => Algorithm::Resrs,
            RbfAlgorithm::Rgsrs => Algorithm::Rgsrs,
        }
    }
}

/// Network, covariance model and experiment settings.
pub struct RbfConfig {
    spec: ExperimentSpec,
}

/// One channel realization.
pub struct RbfChannel {
    inner: ChannelRealization,
}

/// Selected relays, weights and SINR.
pub struct RbfSelection {
    inner: SelectionResult,
}

struct Failure {
    status: RbfStatus,
    message: String,
}

impl Failure {
    fn new(status: RbfStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

fn status_of(e: &Error) -> RbfStatus {
    match e {
        Error::Dimension { .. } => RbfStatus::DimensionMismatch,
        Error::NotPositiveDefinite { .. }
        | Error::NotHermitian { .. }
        | Error::Convergence { .. }
        | Error::DegenerateChannel => RbfStatus::Numerical,
        Error::InvalidParameter { .. } | Error::Config(_) | Error::Contract(_) => RbfStatus::InvalidArgument,
        Error::Io { .. } => RbfStatus::Io,
        Error::Context { source, .. } => status_of(source),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(status_of(&e), e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RbfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            RbfStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            RbfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(RbfStatus::NullPointer, format!("`{name}` is null")))
}

fn check_out<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::new(RbfStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(RbfStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(RbfStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(RbfStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::new(RbfStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn expect_len(name: &str, expected: usize, found: usize) -> Result<(), Failure> {
    if expected != found {
        return Err(Failure::new(
            RbfStatus::DimensionMismatch,
            format!("`{name}` has length {found}, expected {expected}"),
        ));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rbf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failed call on this thread, or an empty
/// string. Valid until the next `rbf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rbf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Creates a configuration for experiment `kind` (`sinr_vs_snr`,
/// `sinr_vs_m` or `ber_vs_snr`). `toml` holds config-file keys and may be
/// null for defaults.
///
/// # Safety
/// `kind` and `toml` (if not null) must be NUL-terminated strings; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rbf_config_new(
    kind: *const c_char,
    toml: *const c_char,
    out: *mut *mut RbfConfig,
) -> RbfStatus {
    guard(|| {
        check_out(out, "out")?;
        let kind: ExperimentKind = read_str(kind, "kind")?.parse()?;
        let file = if toml.is_null() {
            FileConfig::default()
        } else {
            FileConfig::from_toml_str(read_str(toml, "toml")?)?
        };
        let spec = build_spec(kind, &file, &FlagOverrides::default())?;
        *out = Box::into_raw(Box::new(RbfConfig { spec }));
        Ok(())
    })
}

/// Number of relays `M`.
///
/// # Safety
/// `cfg` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn rbf_config_relays(cfg: *const RbfConfig) -> usize {
    cfg.as_ref().map_or(0, |c| c.spec.base.m)
}

/// Number of sources `K`.
///
/// # Safety
/// `cfg` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn rbf_config_sources(cfg: *const RbfConfig) -> usize {
    cfg.as_ref().map_or(0, |c| c.spec.base.k)
}

/// # Safety
/// `cfg` must come from `rbf_config_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rbf_config_free(cfg: *mut RbfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Draws the channel used by trial `trial` of the configured seed.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rbf_channel_draw(
    cfg: *const RbfConfig,
    trial: u64,
    out: *mut *mut RbfChannel,
) -> RbfStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        check_out(out, "out")?;
        let spec = &cfg.spec;
        let mut rng = RandomStream::substream(spec.master_seed, &[tag::CHANNEL, 0, trial]);
        let inner = draw_channels(&spec.base, &mut rng)?;
        *out = Box::into_raw(Box::new(RbfChannel { inner }));
        Ok(())
    })
}

/// Builds a channel from explicit coefficients. `f_re`/`f_im` hold the
/// `m×k` source-to-relay matrix in row-major order; `g_re`/`g_im` the `m`
/// relay-to-destination gains.
///
/// # Safety
/// The arrays must hold `m*k` and `m` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rbf_channel_from_arrays(
    m: usize,
    k: usize,
    f_re: *const f64,
    f_im: *const f64,
    g_re: *const f64,
    g_im: *const f64,
    out: *mut *mut RbfChannel,
) -> RbfStatus {
    guard(|| {
        check_out(out, "out")?;
        if m == 0 || k == 0 {
            return Err(Failure::new(RbfStatus::InvalidArgument, "m and k must be positive"));
        }
        let len = m
            .checked_mul(k)
            .ok_or_else(|| Failure::new(RbfStatus::InvalidArgument, "m*k overflows"))?;
        let (fr, fi) = (slice(f_re, len, "f_re")?, slice(f_im, len, "f_im")?);
        let (gr, gi) = (slice(g_re, m, "g_re")?, slice(g_im, m, "g_im")?);
        let f = ComplexMatrix::from_row_major(m, k, fr.iter().zip(fi).map(|(r, i)| C64::new(*r, *i)).collect())?;
        let g: ComplexVector = gr.iter().zip(gi).map(|(r, i)| C64::new(*r, *i)).collect();
        if !f.is_finite() || !g.is_finite() {
            return Err(Failure::new(RbfStatus::InvalidArgument, "channel coefficients must be finite"));
        }
        let inner = ChannelRealization::from_channels(f, g)?;
        *out = Box::into_raw(Box::new(RbfChannel { inner }));
        Ok(())
    })
}

/// Number of relays in the channel.
///
/// # Safety
/// `ch` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn rbf_channel_relays(ch: *const RbfChannel) -> usize {
    ch.as_ref().map_or(0, |c| c.inner.relays())
}

/// # Safety
/// `ch` must come from an `rbf_channel_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rbf_channel_free(ch: *mut RbfChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

fn check_channel(cfg: &RbfConfig, ch: &RbfChannel) -> Result<(), Failure> {
    expect_len("channel relays", cfg.spec.base.m, ch.inner.relays())?;
    expect_len("channel sources", cfg.spec.base.k, ch.inner.sources())
}

/// Runs `algorithm` on `ch`. `trial` keys the random stream used by RRRS.
///
/// # Safety
/// `cfg` and `ch` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rbf_select(
    cfg: *const RbfConfig,
    ch: *const RbfChannel,
    algorithm: RbfAlgorithm,
    trial: u64,
    out: *mut *mut RbfSelection,
) -> RbfStatus {
    guard(|| {
        let (cfg, ch) = (deref(cfg, "cfg")?, deref(ch, "ch")?);
        check_out(out, "out")?;
        check_channel(cfg, ch)?;
        let spec = &cfg.spec;
        let p = spec.base.source_powers();
        let mut rng = RandomStream::substream(spec.master_seed, &[tag::RANDOM_SELECTION, 0, trial]);
        let inner = run_algorithm(
            algorithm.into(),
            &spec.base,
            &ch.inner,
            &p,
            spec.n_select,
            &mut rng,
            &spec.model,
        )?;
        *out = Box::into_raw(Box::new(RbfSelection { inner }));
        Ok(())
    })
}

/// Solves for the weights of a fixed subset. `mask` holds `len` bytes,
/// nonzero meaning selected; null selects every relay.
///
/// # Safety
/// `mask` (if not null) must hold `len` bytes; handles must be live; `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn rbf_solve(
    cfg: *const RbfConfig,
    ch: *const RbfChannel,
    mask: *const u8,
    len: usize,
    out: *mut *mut RbfSelection,
) -> RbfStatus {
    guard(|| {
        let (cfg, ch) = (deref(cfg, "cfg")?, deref(ch, "ch")?);
        check_out(out, "out")?;
        check_channel(cfg, ch)?;
        let m = ch.inner.relays();
        let mask = if mask.is_null() {
            SelectionMask::full(m)
        } else {
            expect_len("mask", m, len)?;
            SelectionMask::from_bools(slice(mask, len, "mask")?.iter().map(|&b| b != 0).collect())
        };
        let spec = &cfg.spec;
        let p = spec.base.source_powers();
        let solution = msinr_solve(&ch.inner, &mask, &p, spec.base.p_t(), spec.base.noise_variance, &spec.model)?;
        let inner = SelectionResult {
            mask,
            solver_calls: 1,
            solution,
            trace: Vec::new(),
        };
        *out = Box::into_raw(Box::new(RbfSelection { inner }));
        Ok(())
    })
}

/// SINR the weights were designed for (linear).
///
/// # Safety
/// `sel` must be a live handle; `sinr` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rbf_selection_sinr(sel: *const RbfSelection, sinr: *mut f64) -> RbfStatus {
    guard(|| {
        let sel = deref(sel, "sel")?;
        check_out(sinr, "sinr")?;
        *sinr = sel.inner.solution.sinr;
        Ok(())
    })
}

/// Number of beamforming solves the selection performed.
///
/// # Safety
/// `sel` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn rbf_selection_solver_calls(sel: *const RbfSelection) -> usize {
    sel.as_ref().map_or(0, |s| s.inner.solver_calls)
}

/// Writes the 0/1 selection mask into `mask[0..len]`; `len` must equal `M`.
///
/// # Safety
/// `sel` must be a live handle; `mask` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rbf_selection_mask(sel: *const RbfSelection, mask: *mut u8, len: usize) -> RbfStatus {
    guard(|| {
        let sel = deref(sel, "sel")?;
        let bits = sel.inner.mask.as_slice();
        expect_len("mask", bits.len(), len)?;
        let dst = slice_mut(mask, len, "mask")?;
        for (d, &b) in dst.iter_mut().zip(bits) {
            *d = u8::from(b);
        }
        Ok(())
    })
}

/// Writes the weight vector `w̃` into `re[0..len]`, `im[0..len]`; deselected
/// relays get zero. A relay applies the conjugate of its entry.
///
/// # Safety
/// `sel` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rbf_selection_weights(
    sel: *const RbfSelection,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> RbfStatus {
    guard(|| {
        let sel = deref(sel, "sel")?;
        let w = &sel.inner.solution.w_tilde;
        expect_len("weights", w.len(), len)?;
        let (re, im) = (slice_mut(re, len, "re")?, slice_mut(im, len, "im")?);
        for (i, z) in w.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `sel` must come from `rbf_select`/`rbf_solve` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rbf_selection_free(sel: *mut RbfSelection) {
    if !sel.is_null() {
        drop(Box::from_raw(sel));
    }
}

/// Runs the configured experiment on `threads` workers and returns the curve
/// as CSV text in `*csv`, to be released with `rbf_string_free`.
///
/// # Safety
/// `cfg` must be a live handle; `csv` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rbf_run_experiment(
    cfg: *const RbfConfig,
    threads: usize,
    csv: *mut *mut c_char,
) -> RbfStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        check_out(csv, "csv")?;
        let curve = relaybf::simulator::run(&cfg.spec, threads)?;
        let text = CString::new(curve_to_csv(&curve))
            .map_err(|_| Failure::new(RbfStatus::InvalidArgument, "CSV contains NUL"))?;
        *csv = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rbf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
