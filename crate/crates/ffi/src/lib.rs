//! C ABI over the uhrkit metrics, spectral loss, timestep sampling and
//! manifest routines.
//!
//! Every function returns a [`UhrStatus`]. On failure the message is kept in
//! thread-local storage and can be read with [`uhr_last_error_message`].
//! Handles are opaque; each `*_new`/`*_load`/`*_read` has a matching `*_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uhrkit::curation::{self, ImageRecord, SelectionConfig};
use uhrkit::dots::{self, BetaParams};
use uhrkit::metrics::{self, MetricConfig};
use uhrkit::spectral::{self, FreqRegConfig, Tensor2D};
use uhrkit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UhrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Io = 3,
    Parse = 4,
    ScorerUnavailable = 5,
    Numerical = 6,
    Decode = 7,
    OutOfRange = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> UhrStatus {
    match e {
        Error::InvalidInput(_) => UhrStatus::InvalidInput,
        Error::Io { .. } => UhrStatus::Io,
        Error::Parse { .. } => UhrStatus::Parse,
        Error::ScorerUnavailable(_) => UhrStatus::ScorerUnavailable,
        Error::Numerical { .. } => UhrStatus::Numerical,
        Error::Decode { .. } => UhrStatus::Decode,
    }
}

struct Fail(UhrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UhrStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UhrStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            UhrStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(UhrStatus::NullPointer, format!("{name} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn as_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg<'a>(p: *const c_char, name: &str) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(UhrStatus::InvalidInput, format!("{name} is not UTF-8")))?;
    Ok(Path::new(s))
}

/// Copies `s` plus a terminating nul into `buf` when it fits. Returns the
/// buffer size needed, including the nul.
unsafe fn copy_out(s: &[u8], buf: *mut c_char, len: usize) -> usize {
    let needed = s.len() + 1;
    if !buf.is_null() && len >= needed {
        ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, s.len());
        *buf.add(s.len()) = 0;
    }
    needed
}

/// Copies the calling thread's last error message into `buf` and returns the
/// size needed including the nul terminator, or 0 if there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn uhr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => copy_out(msg.as_bytes(), buf, len),
        None => 0,
    })
}

// ---------------------------------------------------------------- images

/// Grayscale image with values in [0, 255].
pub struct UhrGrayImage(metrics::GrayImage);

/// # Safety
/// `data` must hold `width * height` doubles, row-major; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_gray_image_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut UhrGrayImage,
) -> UhrStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Fail(UhrStatus::InvalidInput, "image size overflows".into()))?;
        let px = slice(data, n, "data")?.to_vec();
        let img = metrics::GrayImage::new(width, height, px)?;
        *out = Box::into_raw(Box::new(UhrGrayImage(img)));
        Ok(())
    })
}

/// Builds a luma image from packed 8-bit RGB.
///
/// # Safety
/// `rgb` must hold `3 * width * height` bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_gray_image_from_rgb8(
    width: usize,
    height: usize,
    rgb: *const u8,
    out: *mut *mut UhrGrayImage,
) -> UhrStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let n = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Fail(UhrStatus::InvalidInput, "image size overflows".into()))?;
        let img = metrics::to_grayscale(slice(rgb, n, "rgb")?, width, height)?;
        *out = Box::into_raw(Box::new(UhrGrayImage(img)));
        Ok(())
    })
}

/// Decodes an image file into luma.
///
/// # Safety
/// `path` must be a nul-terminated UTF-8 string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_gray_image_load(path: *const c_char, out: *mut *mut UhrGrayImage) -> UhrStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let img = curation::load_gray(path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(UhrGrayImage(img)));
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uhr_gray_image_free(img: *mut UhrGrayImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_gray_image_size(
    img: *const UhrGrayImage,
    width: *mut usize,
    height: *mut usize,
) -> UhrStatus {
    guard(|| {
        let img = as_ref(img, "img")?;
        *as_mut(width, "width")? = img.0.width();
        *as_mut(height, "height")? = img.0.height();
        Ok(())
    })
}

// ---------------------------------------------------------------- metrics

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UhrMetricConfig {
    pub metric_long_side: usize,
    pub glcm_levels: usize,
    pub glcm_distance: usize,
    pub sobel_grad_threshold: f64,
}

impl From<UhrMetricConfig> for MetricConfig {
    fn from(c: UhrMetricConfig) -> Self {
        MetricConfig {
            metric_long_side: c.metric_long_side,
            glcm_levels: c.glcm_levels,
            glcm_distance: c.glcm_distance,
            sobel_grad_threshold: c.sobel_grad_threshold,
        }
    }
}

/// Per-direction arrays are ordered 0, 45, 90, 135 degrees.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct UhrMetrics {
    pub laplacian_var: f64,
    pub sobel_edge_density: f64,
    pub glcm_aggregate: f64,
    pub glcm_contrast: [f64; 4],
    pub glcm_entropy: [f64; 4],
    pub glcm_correlation: [f64; 4],
    pub shannon_entropy: f64,
}

#[no_mangle]
pub extern "C" fn uhr_metric_config_default() -> UhrMetricConfig {
    let c = MetricConfig::default();
    UhrMetricConfig {
        metric_long_side: c.metric_long_side,
        glcm_levels: c.glcm_levels,
        glcm_distance: c.glcm_distance,
        sobel_grad_threshold: c.sobel_grad_threshold,
    }
}

/// Full metric vector. `cfg` may be null for defaults.
///
/// # Safety
/// `img` and `out` must be valid; `cfg` null or valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_metrics_compute(
    img: *const UhrGrayImage,
    cfg: *const UhrMetricConfig,
    out: *mut UhrMetrics,
) -> UhrStatus {
    guard(|| {
        let img = as_ref(img, "img")?;
        let out = as_mut(out, "out")?;
        let cfg: MetricConfig = cfg.as_ref().map(|c| (*c).into()).unwrap_or_default();
        let m = metrics::compute_metrics(&img.0, &cfg)?;
        let mut r = UhrMetrics {
            laplacian_var: m.laplacian_var,
            sobel_edge_density: m.sobel_edge_density,
            glcm_aggregate: m.glcm.aggregate,
            shannon_entropy: m.shannon_entropy,
            ..Default::default()
        };
        for (i, d) in m.glcm.directions.iter().enumerate() {
            r.glcm_contrast[i] = d.contrast;
            r.glcm_entropy[i] = d.entropy;
            r.glcm_correlation[i] = d.correlation;
        }
        *out = r;
        Ok(())
    })
}

/// # Safety
/// `img` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_laplacian_variance(img: *const UhrGrayImage, out: *mut f64) -> UhrStatus {
    guard(|| {
        *as_mut(out, "out")? = metrics::laplacian_variance(&as_ref(img, "img")?.0)?;
        Ok(())
    })
}

/// # Safety
/// `img` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_sobel_edge_density(
    img: *const UhrGrayImage,
    grad_threshold: f64,
    out: *mut f64,
) -> UhrStatus {
    guard(|| {
        *as_mut(out, "out")? = metrics::sobel_edge_density(&as_ref(img, "img")?.0, grad_threshold)?;
        Ok(())
    })
}

/// # Safety
/// `img` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_shannon_entropy(img: *const UhrGrayImage, out: *mut f64) -> UhrStatus {
    guard(|| {
        *as_mut(out, "out")? = metrics::shannon_entropy(&as_ref(img, "img")?.0);
        Ok(())
    })
}

// ---------------------------------------------------------------- spectral

fn freq_cfg(lambda: f64, gamma: f64) -> Result<FreqRegConfig, Fail> {
    let c = FreqRegConfig { lambda, gamma };
    c.validate()?;
    Ok(c)
}

unsafe fn tensor(p: *const f64, h: usize, w: usize, name: &str) -> Result<Tensor2D, Fail> {
    let n = h
        .checked_mul(w)
        .ok_or_else(|| Fail(UhrStatus::InvalidInput, "tensor size overflows".into()))?;
    Ok(Tensor2D::new(h, w, slice(p, n, name)?.to_vec())?)
}

/// Radial weight `1 + lambda (e^(gamma r) - 1) / (e^gamma - 1)` for r in [0, 1].
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_soft_weight(r: f64, lambda: f64, gamma: f64, out: *mut f64) -> UhrStatus {
    guard(|| {
        *as_mut(out, "out")? = spectral::soft_weight(r, &freq_cfg(lambda, gamma)?)?;
        Ok(())
    })
}

/// Weighted spectral loss between two `height x width` row-major fields.
///
/// # Safety
/// `x` and `y` must hold `height * width` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_freq_loss(
    x: *const f64,
    y: *const f64,
    height: usize,
    width: usize,
    lambda: f64,
    gamma: f64,
    out: *mut f64,
) -> UhrStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let (x, y) = (tensor(x, height, width, "x")?, tensor(y, height, width, "y")?);
        *out = spectral::freq_loss(&x, &y, &freq_cfg(lambda, gamma)?)?;
        Ok(())
    })
}

/// Gradient of [`uhr_freq_loss`] in `x`, written to `grad` (`height * width`).
///
/// # Safety
/// `x`, `y` and `grad` must hold `height * width` doubles.
#[no_mangle]
pub unsafe extern "C" fn uhr_freq_loss_grad(
    x: *const f64,
    y: *const f64,
    height: usize,
    width: usize,
    lambda: f64,
    gamma: f64,
    grad: *mut f64,
) -> UhrStatus {
    guard(|| {
        let (xt, yt) = (tensor(x, height, width, "x")?, tensor(y, height, width, "y")?);
        let g = spectral::freq_loss_grad(&xt, &yt, &freq_cfg(lambda, gamma)?)?;
        slice_mut(grad, height * width, "grad")?.copy_from_slice(g.data());
        Ok(())
    })
}

// ---------------------------------------------------------------- beta

fn beta(alpha: f64, b: f64) -> Result<BetaParams, Fail> {
    Ok(BetaParams::new(alpha, b)?)
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_beta_pdf(t: f64, alpha: f64, b: f64, out: *mut f64) -> UhrStatus {
    guard(|| {
        *as_mut(out, "out")? = dots::beta_pdf(t, &beta(alpha, b)?)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_beta_cdf(t: f64, alpha: f64, b: f64, out: *mut f64) -> UhrStatus {
    guard(|| {
        *as_mut(out, "out")? = dots::beta_cdf(t, &beta(alpha, b)?)?;
        Ok(())
    })
}

/// Seeded Beta(alpha, beta) timestep stream.
pub struct UhrBetaSampler {
    params: BetaParams,
    rng: ChaCha8Rng,
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_beta_sampler_new(
    alpha: f64,
    b: f64,
    seed: u64,
    out: *mut *mut UhrBetaSampler,
) -> UhrStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let s = UhrBetaSampler {
            params: beta(alpha, b)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        *out = Box::into_raw(Box::new(s));
        Ok(())
    })
}

/// Writes the next `n` samples into `buf`.
///
/// # Safety
/// `sampler` must be a live handle; `buf` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn uhr_beta_sampler_fill(sampler: *mut UhrBetaSampler, buf: *mut f64, n: usize) -> UhrStatus {
    guard(|| {
        let s = as_mut(sampler, "sampler")?;
        for v in slice_mut(buf, n, "buf")? {
            *v = dots::sample_beta(&mut s.rng, &s.params);
        }
        Ok(())
    })
}

/// # Safety
/// `sampler` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uhr_beta_sampler_free(sampler: *mut UhrBetaSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

// ---------------------------------------------------------------- manifests

/// Loaded manifest records.
pub struct UhrManifest(Vec<ImageRecord>);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct UhrRecordInfo {
    pub width: u32,
    pub height: u32,
    pub has_metrics: bool,
    pub has_aesthetic: bool,
    pub has_caption: bool,
    pub caption_len: u32,
    pub in_s: bool,
    pub in_sg: bool,
    pub in_se: bool,
    pub in_sa: bool,
    pub selected: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UhrSelectionConfig {
    pub laplacian_min: f64,
    pub sobel_density_min: f64,
    pub top_fraction: f64,
    pub min_avg_resolution: f64,
}

#[no_mangle]
pub extern "C" fn uhr_selection_config_default() -> UhrSelectionConfig {
    let c = SelectionConfig::default();
    UhrSelectionConfig {
        laplacian_min: c.laplacian_min,
        sobel_density_min: c.sobel_density_min,
        top_fraction: c.top_fraction,
        min_avg_resolution: c.min_avg_resolution,
    }
}

/// # Safety
/// `path` must be a nul-terminated UTF-8 string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_manifest_read(path: *const c_char, out: *mut *mut UhrManifest) -> UhrStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let recs = curation::read_manifest(path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(UhrManifest(recs)));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle; `path` a nul-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn uhr_manifest_write(m: *const UhrManifest, path: *const c_char) -> UhrStatus {
    guard(|| {
        curation::write_manifest(&as_ref(m, "manifest")?.0, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_manifest_len(m: *const UhrManifest, out: *mut usize) -> UhrStatus {
    guard(|| {
        *as_mut(out, "out")? = as_ref(m, "manifest")?.0.len();
        Ok(())
    })
}

fn record(m: &UhrManifest, index: usize) -> Result<&ImageRecord, Fail> {
    m.0.get(index).ok_or_else(|| {
        Fail(
            UhrStatus::OutOfRange,
            format!("record {index} out of range ({} records)", m.0.len()),
        )
    })
}

/// # Safety
/// `m` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_manifest_record(
    m: *const UhrManifest,
    index: usize,
    out: *mut UhrRecordInfo,
) -> UhrStatus {
    guard(|| {
        let r = record(as_ref(m, "manifest")?, index)?;
        *as_mut(out, "out")? = UhrRecordInfo {
            width: r.width,
            height: r.height,
            has_metrics: r.metrics.is_some(),
            has_aesthetic: r.aesthetic().is_some(),
            has_caption: r.caption.is_some(),
            caption_len: r.caption_len.unwrap_or(0),
            in_s: r.in_s,
            in_sg: r.in_sg,
            in_se: r.in_se,
            in_sa: r.in_sa,
            selected: r.selected,
        };
        Ok(())
    })
}

/// Copies record `index`'s path into `buf`; `needed` receives the size
/// including the nul. A short buffer is left untouched.
///
/// # Safety
/// `m` and `needed` must be valid; `buf` null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn uhr_manifest_path(
    m: *const UhrManifest,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> UhrStatus {
    guard(|| {
        let r = record(as_ref(m, "manifest")?, index)?;
        *as_mut(needed, "needed")? = copy_out(r.path.as_bytes(), buf, len);
        Ok(())
    })
}

/// Recomputes subset membership in place. `cfg` may be null for defaults.
///
/// # Safety
/// `m` must be a live handle; `cfg` null or valid; `selected` null or valid.
#[no_mangle]
pub unsafe extern "C" fn uhr_manifest_select(
    m: *mut UhrManifest,
    cfg: *const UhrSelectionConfig,
    selected: *mut usize,
) -> UhrStatus {
    guard(|| {
        let m = as_mut(m, "manifest")?;
        let mut c = SelectionConfig::default();
        if let Some(u) = cfg.as_ref() {
            c.laplacian_min = u.laplacian_min;
            c.sobel_density_min = u.sobel_density_min;
            c.top_fraction = u.top_fraction;
            c.min_avg_resolution = u.min_avg_resolution;
        }
        let counts = curation::run_selection(&mut m.0, &c)?;
        if let Some(s) = selected.as_mut() {
            *s = counts.selected;
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uhr_manifest_free(m: *mut UhrManifest) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
