//! C ABI over the `tjp` kernels.
//!
//! Objects cross the boundary as opaque heap handles (`TjpGrid`,
//! `TjpConfig`, `TjpField`) that the caller releases with the matching
//! `*_free`. Every fallible call returns a [`TjpStatus`]; on failure the
//! message is available from [`tjp_last_error`] on the same thread until the
//! next failing call. Results are written through out-pointers only on
//! success.
//!
//! Randomized calls take `(seed, index)` and draw from the same substream the
//! batch pipeline uses for patch `index`, so outputs match the CLI bit for bit.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use tjp::deformation::{degrade_deform, jacobian_stats, warp, DeformationField};
use tjp::io::manifest::Task;
use tjp::io::npy::{read_array, write_array};
use tjp::lowres::degrade_lowres;
use tjp::masking::dual_mask;
use tjp::noising::degrade_noise;
use tjp::{metrics, rng_substream, DegradationConfig, Error, Grid, LabelGrid, RngStream};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TjpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    WindowTooLarge = 5,
    EmptyCorpus = 6,
    DegenerateMask = 7,
    DegenerateField = 8,
    UndefinedMetric = 9,
    Format = 10,
    Unsupported = 11,
    Manifest = 12,
    Io = 13,
    Panic = 14,
}

/// Opaque 2D/3D f32 grid.
pub struct TjpGrid(Grid);

/// Opaque degradation configuration.
pub struct TjpConfig(DegradationConfig);

/// Opaque displacement field.
pub struct TjpField(DeformationField);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TjpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => TjpStatus::Config,
            Error::Domain(_) => TjpStatus::Domain,
            Error::WindowTooLarge { .. } => TjpStatus::WindowTooLarge,
            Error::EmptyCorpus => TjpStatus::EmptyCorpus,
            Error::DegenerateMask { .. } => TjpStatus::DegenerateMask,
            Error::DegenerateField(_) => TjpStatus::DegenerateField,
            Error::UndefinedMetric(_) => TjpStatus::UndefinedMetric,
            Error::Format(_) => TjpStatus::Format,
            Error::Unsupported(_) => TjpStatus::Unsupported,
            Error::Manifest(_) => TjpStatus::Manifest,
            Error::Io(_) => TjpStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TjpStatus::NullArgument, format!("{what} is null"))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TjpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TjpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TjpStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TjpStatus::InvalidUtf8, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn task_stream(seed: u64, task: Task, index: u64) -> Result<RngStream, Failure> {
    Ok(rng_substream(seed, task.label(), index)?)
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tjp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies row-major values for the `rank` extents in `shape`.
///
/// # Safety
/// `shape` must point to `rank` extents and `data` to their product of floats.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_new(
    rank: usize,
    shape: *const usize,
    data: *const f32,
    out: *mut *mut TjpGrid,
) -> TjpStatus {
    guard(|| {
        if shape.is_null() || data.is_null() {
            return Err(null("shape or data"));
        }
        if !(2..=3).contains(&rank) {
            return Err(Failure(
                TjpStatus::Domain,
                format!("rank {rank} not in {{2, 3}}"),
            ));
        }
        let shape = std::slice::from_raw_parts(shape, rank).to_vec();
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .ok_or_else(|| Failure(TjpStatus::Domain, "shape overflows".into()))?;
        let values = std::slice::from_raw_parts(data, n).to_vec();
        put(out, TjpGrid(Grid::new(shape, values)?), "out")
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// The handle must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_free(grid: *mut TjpGrid) {
    free(grid);
}

/// Rank of the grid, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_rank(grid: *const TjpGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.rank())
}

/// Extent along `axis`, or 0 when out of range.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_extent(grid: *const TjpGrid, axis: usize) -> usize {
    grid.as_ref()
        .and_then(|g| g.0.shape().get(axis).copied())
        .unwrap_or(0)
}

/// Number of values.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_len(grid: *const TjpGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Borrowed pointer to the row-major values; valid while the handle lives.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_data(grid: *const TjpGrid) -> *const f32 {
    grid.as_ref().map_or(ptr::null(), |g| g.0.data().as_ptr())
}

/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_read_npy(
    path: *const c_char,
    out: *mut *mut TjpGrid,
) -> TjpStatus {
    guard(|| {
        let g = read_array(path_arg(path)?)?;
        put(out, TjpGrid(g), "out")
    })
}

/// # Safety
/// `grid` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tjp_grid_write_npy(
    grid: *const TjpGrid,
    path: *const c_char,
) -> TjpStatus {
    guard(|| {
        let g = as_ref(grid, "grid")?;
        Ok(write_array(&g.0, path_arg(path)?)?)
    })
}

/// Default configuration. Never null.
#[no_mangle]
pub extern "C" fn tjp_config_default() -> *mut TjpConfig {
    Box::into_raw(Box::new(TjpConfig(DegradationConfig::default())))
}

/// Parses a JSON degradation config; missing keys take defaults, unknown keys
/// are rejected.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tjp_config_from_json(
    json: *const c_char,
    out: *mut *mut TjpConfig,
) -> TjpStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Failure(TjpStatus::InvalidUtf8, "json is not UTF-8".into()))?;
        let cfg: DegradationConfig =
            parse_config(text).map_err(|m| Failure(TjpStatus::Config, m))?;
        cfg.validate()?;
        put(out, TjpConfig(cfg), "out")
    })
}

fn parse_config(text: &str) -> Result<DegradationConfig, String> {
    tjp::pipeline::RunConfig::from_json(&format!("{{\"degradation\": {text}}}"))
        .map(|c| c.degradation)
        .map_err(|e| e.to_string())
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// The handle must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tjp_config_free(cfg: *mut TjpConfig) {
    free(cfg);
}

/// Two masked views of `grid`. `out_mask_a`/`out_mask_b` may be null.
///
/// # Safety
/// Handles must be live; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_degrade_mask(
    grid: *const TjpGrid,
    cfg: *const TjpConfig,
    seed: u64,
    index: u64,
    out_a: *mut *mut TjpGrid,
    out_b: *mut *mut TjpGrid,
    out_mask_a: *mut *mut TjpGrid,
    out_mask_b: *mut *mut TjpGrid,
) -> TjpStatus {
    guard(|| {
        let (g, c) = (as_ref(grid, "grid")?, as_ref(cfg, "cfg")?);
        if out_a.is_null() || out_b.is_null() {
            return Err(null("out_a or out_b"));
        }
        let (a, b, pair) = dual_mask(&g.0, &c.0, &task_stream(seed, Task::Mask, index)?)?;
        put(out_a, TjpGrid(a), "out_a")?;
        put(out_b, TjpGrid(b), "out_b")?;
        if !out_mask_a.is_null() {
            put(out_mask_a, TjpGrid(pair.m_a), "out_mask_a")?;
        }
        if !out_mask_b.is_null() {
            put(out_mask_b, TjpGrid(pair.m_b), "out_mask_b")?;
        }
        Ok(())
    })
}

/// Warped grid plus the displacement field (`out_field` may be null).
///
/// # Safety
/// Handles must be live; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_degrade_deform(
    grid: *const TjpGrid,
    cfg: *const TjpConfig,
    seed: u64,
    index: u64,
    out: *mut *mut TjpGrid,
    out_field: *mut *mut TjpField,
) -> TjpStatus {
    guard(|| {
        let (g, c) = (as_ref(grid, "grid")?, as_ref(cfg, "cfg")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let (warped, field, _) =
            degrade_deform(&g.0, &c.0, &task_stream(seed, Task::Deform, index)?)?;
        put(out, TjpGrid(warped), "out")?;
        if !out_field.is_null() {
            put(out_field, TjpField(field), "out_field")?;
        }
        Ok(())
    })
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_degrade_lowres(
    grid: *const TjpGrid,
    cfg: *const TjpConfig,
    seed: u64,
    index: u64,
    out: *mut *mut TjpGrid,
) -> TjpStatus {
    guard(|| {
        let (g, c) = (as_ref(grid, "grid")?, as_ref(cfg, "cfg")?);
        let (result, _) = degrade_lowres(&g.0, &c.0, &task_stream(seed, Task::Lowres, index)?)?;
        put(out, TjpGrid(result), "out")
    })
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_degrade_noise(
    grid: *const TjpGrid,
    cfg: *const TjpConfig,
    seed: u64,
    index: u64,
    out: *mut *mut TjpGrid,
) -> TjpStatus {
    guard(|| {
        let (g, c) = (as_ref(grid, "grid")?, as_ref(cfg, "cfg")?);
        let (result, _) = degrade_noise(&g.0, &c.0, &task_stream(seed, Task::Noise, index)?)?;
        put(out, TjpGrid(result), "out")
    })
}

/// Builds a field from one displacement grid per axis (normalized units).
///
/// # Safety
/// `components` must point to `count` live grid handles.
#[no_mangle]
pub unsafe extern "C" fn tjp_field_from_components(
    components: *const *const TjpGrid,
    count: usize,
    out: *mut *mut TjpField,
) -> TjpStatus {
    guard(|| {
        if components.is_null() {
            return Err(null("components"));
        }
        let comps = std::slice::from_raw_parts(components, count)
            .iter()
            .map(|&p| as_ref(p, "component").map(|g| g.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        put(
            out,
            TjpField(DeformationField::from_components(comps)?),
            "out",
        )
    })
}

/// Copy of the displacement along `axis`.
///
/// # Safety
/// `field` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_field_component(
    field: *const TjpField,
    axis: usize,
    out: *mut *mut TjpGrid,
) -> TjpStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        let c =
            f.0.components()
                .get(axis)
                .cloned()
                .ok_or_else(|| Failure(TjpStatus::Domain, format!("axis {axis} out of range")))?;
        put(out, TjpGrid(c), "out")
    })
}

/// Resamples `grid` through `field`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_warp(
    grid: *const TjpGrid,
    field: *const TjpField,
    out: *mut *mut TjpGrid,
) -> TjpStatus {
    guard(|| {
        let (g, f) = (as_ref(grid, "grid")?, as_ref(field, "field")?);
        put(out, TjpGrid(warp(&g.0, &f.0)?), "out")
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// The handle must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tjp_field_free(field: *mut TjpField) {
    free(field);
}

/// Standard deviation of log Jacobian determinants and the folding fraction.
///
/// # Safety
/// `field` must be live; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_jacobian_stats(
    field: *const TjpField,
    out_sdlogj: *mut f64,
    out_nonpos_fraction: *mut f64,
) -> TjpStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        if out_sdlogj.is_null() || out_nonpos_fraction.is_null() {
            return Err(null("output"));
        }
        let s = jacobian_stats(&f.0)?;
        *out_sdlogj = s.sdlogj;
        *out_nonpos_fraction = s.nonpos_fraction;
        Ok(())
    })
}

unsafe fn write_metric(out: *mut f64, value: Result<f64, Error>) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value?;
    Ok(())
}

/// PSNR in dB; `INFINITY` for identical inputs.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_psnr(
    a: *const TjpGrid,
    b: *const TjpGrid,
    max_val: f64,
    out: *mut f64,
) -> TjpStatus {
    guard(|| {
        let (a, b) = (as_ref(a, "a")?, as_ref(b, "b")?);
        write_metric(out, metrics::psnr(&a.0, &b.0, max_val))
    })
}

/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_ssim(
    a: *const TjpGrid,
    b: *const TjpGrid,
    max_val: f64,
    out: *mut f64,
) -> TjpStatus {
    guard(|| {
        let (a, b) = (as_ref(a, "a")?, as_ref(b, "b")?);
        write_metric(out, metrics::ssim(&a.0, &b.0, max_val))
    })
}

fn labels(g: &TjpGrid) -> Result<LabelGrid, Failure> {
    Ok(LabelGrid::from_grid(&g.0)?)
}

/// Dice overlap of `label`. Grid values must be nonnegative integers.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_dice(
    a: *const TjpGrid,
    b: *const TjpGrid,
    label: u32,
    out: *mut f64,
) -> TjpStatus {
    guard(|| {
        let (a, b) = (labels(as_ref(a, "a")?)?, labels(as_ref(b, "b")?)?);
        write_metric(out, metrics::dice(&a, &b, label))
    })
}

/// 95th-percentile surface distance of `label`. `spacing` holds one value per
/// axis, or is null for unit spacing.
///
/// # Safety
/// Handles must be live; `spacing` null or `rank` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tjp_hd95(
    a: *const TjpGrid,
    b: *const TjpGrid,
    label: u32,
    spacing: *const f64,
    out: *mut f64,
) -> TjpStatus {
    guard(|| {
        let (a, b) = (labels(as_ref(a, "a")?)?, labels(as_ref(b, "b")?)?);
        let rank = a.shape().len();
        let spacing = if spacing.is_null() {
            vec![1.0; rank]
        } else {
            std::slice::from_raw_parts(spacing, rank).to_vec()
        };
        write_metric(out, metrics::hd95(&a, &b, label, &spacing))
    })
}
