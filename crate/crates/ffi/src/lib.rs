//! C ABI over the quasiwarp library.
//!
//! Objects are opaque handles created by `qw_*_new` style functions and
//! released with the matching `qw_*_free`. Every fallible call returns a
//! [`QwStatus`]; on failure the message is available from
//! [`qw_last_error_message`] on the same thread until the next failing call.
//! Panics never cross the boundary; they are reported as `QW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quasiwarp::compositing::Raster;
use quasiwarp::estimation::{ransac, CorrespondenceSet, RansacParams};
use quasiwarp::{stitch_pair, Error, ErrorCategory, Homography, Point, QuasiHomography, StitchOptions, Stitched, WarpMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    /// A required pointer was null or a length was inconsistent.
    InvalidArgument = 1,
    InputInvalid = 2,
    DegenerateGeometry = 3,
    Internal = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwWarpMode {
    Quasi = 0,
    Homography = 1,
}

/// Borrowed 8-bit image: `height` rows of `width * channels` interleaved
/// samples, rows packed without padding. `channels` is 1 or 3.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QwImage {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub pixels: *const u8,
}

pub struct QwHomography {
    inner: Homography,
}

pub struct QwQuasiWarp {
    inner: QuasiHomography,
}

pub struct QwStitchResult {
    inner: Stitched,
    report: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> QwStatus {
    match e.category() {
        ErrorCategory::InputMissing | ErrorCategory::InputInvalid => QwStatus::InputInvalid,
        ErrorCategory::DegenerateGeometry => QwStatus::DegenerateGeometry,
        ErrorCategory::Internal => QwStatus::Internal,
    }
}

enum Failure {
    Argument(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QwStatus::Ok,
        Ok(Err(Failure::Argument(msg))) => {
            set_last_error(msg.to_string());
            QwStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            QwStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Argument(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Argument(what));
    }
    out.write(value);
    Ok(())
}

/// Boxes `value` into `*out`, checking `out` first so nothing leaks.
unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Argument("out is null"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn points(xy: *const f64, n: usize, what: &'static str) -> Result<Vec<Point>, Failure> {
    if xy.is_null() {
        return Err(Failure::Argument(what));
    }
    let s = std::slice::from_raw_parts(xy, 2 * n);
    Ok(s.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
}

unsafe fn correspondences(src_xy: *const f64, dst_xy: *const f64, n: usize) -> Result<CorrespondenceSet, Failure> {
    let src = points(src_xy, n, "source points are null")?;
    let dst = points(dst_xy, n, "destination points are null")?;
    Ok(CorrespondenceSet::from_pairs(src.into_iter().zip(dst)))
}

unsafe fn raster(img: *const QwImage) -> Result<Raster, Failure> {
    let img = deref(img, "image is null")?;
    if img.pixels.is_null() {
        return Err(Failure::Argument("image pixels are null"));
    }
    let (w, h, c) = (img.width as usize, img.height as usize, img.channels as usize);
    let bytes = std::slice::from_raw_parts(img.pixels, w * h * c);
    let data = bytes.iter().map(|&b| b as f32 / 255.0).collect();
    Ok(Raster::from_data(w, h, c, data)?)
}

/// Message of the last failing call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a homography from `h1..h8` (row-major, `h9 = 1`).
///
/// # Safety
/// `params` must point to 8 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_homography_new(params: *const f64, out: *mut *mut QwHomography) -> QwStatus {
    guard(|| {
        if params.is_null() {
            return Err(Failure::Argument("params is null"));
        }
        let mut p = [0.0; 8];
        p.copy_from_slice(std::slice::from_raw_parts(params, 8));
        let h = Homography::new(p)?;
        write_handle(out, QwHomography { inner: h })
    })
}

/// Parses the text form (9 whitespace-separated numbers).
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_homography_parse(text: *const c_char, out: *mut *mut QwHomography) -> QwStatus {
    guard(|| {
        if text.is_null() {
            return Err(Failure::Argument("text is null"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|_| Failure::Argument("text is not UTF-8"))?;
        let h: Homography = s.parse()?;
        write_handle(out, QwHomography { inner: h })
    })
}

/// Estimates a homography mapping `src` onto `dst` with seeded RANSAC.
/// Both arrays hold `n` interleaved `x, y` pairs.
///
/// # Safety
/// `src_xy` and `dst_xy` must each point to `2 * n` doubles. `out` must be
/// writable; `inliers` may be null.
#[no_mangle]
pub unsafe extern "C" fn qw_estimate(
    src_xy: *const f64,
    dst_xy: *const f64,
    n: usize,
    seed: u64,
    out: *mut *mut QwHomography,
    inliers: *mut usize,
) -> QwStatus {
    guard(|| {
        let corrs = correspondences(src_xy, dst_xy, n)?;
        let params = RansacParams { seed, ..RansacParams::default() };
        let fit = ransac(&corrs, &params)?;
        if !inliers.is_null() {
            inliers.write(fit.inlier_count());
        }
        write_handle(out, QwHomography { inner: fit.homography })
    })
}

/// Copies `h1..h8` into `params`.
///
/// # Safety
/// `h` must be a live handle and `params` must have room for 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_homography_params(h: *const QwHomography, params: *mut f64) -> QwStatus {
    guard(|| {
        let h = deref(h, "homography is null")?;
        if params.is_null() {
            return Err(Failure::Argument("params is null"));
        }
        std::slice::from_raw_parts_mut(params, 8).copy_from_slice(&h.inner.params());
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `ox` and `oy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_homography_apply(h: *const QwHomography, x: f64, y: f64, ox: *mut f64, oy: *mut f64) -> QwStatus {
    guard(|| {
        let q = deref(h, "homography is null")?.inner.apply(Point::new(x, y))?;
        write_out(ox, q.x, "ox is null")?;
        write_out(oy, q.y, "oy is null")
    })
}

/// Row of the source that the homography maps to a horizontal line.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_homography_horizon_row(h: *const QwHomography, out: *mut f64) -> QwStatus {
    guard(|| {
        let y = deref(h, "homography is null")?.inner.horizon_row()?;
        write_out(out, y, "out is null")
    })
}

/// # Safety
/// `h` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_homography_free(h: *mut QwHomography) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Builds the quasi-homography warp of `h` partitioned at column `x_star`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_quasi_new(h: *const QwHomography, x_star: f64, out: *mut *mut QwQuasiWarp) -> QwStatus {
    guard(|| {
        let q = QuasiHomography::build(deref(h, "homography is null")?.inner, x_star)?;
        write_handle(out, QwQuasiWarp { inner: q })
    })
}

/// # Safety
/// `q` must be a live handle; `ox` and `oy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_quasi_forward(q: *const QwQuasiWarp, x: f64, y: f64, ox: *mut f64, oy: *mut f64) -> QwStatus {
    guard(|| {
        let p = deref(q, "warp is null")?.inner.forward(Point::new(x, y))?;
        write_out(ox, p.x, "ox is null")?;
        write_out(oy, p.y, "oy is null")
    })
}

/// # Safety
/// `q` must be a live handle; `ox` and `oy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_quasi_backward(q: *const QwQuasiWarp, x: f64, y: f64, ox: *mut f64, oy: *mut f64) -> QwStatus {
    guard(|| {
        let p = deref(q, "warp is null")?.inner.backward(Point::new(x, y))?;
        write_out(ox, p.x, "ox is null")?;
        write_out(oy, p.y, "oy is null")
    })
}

/// Partition column and horizon row of the warp.
///
/// # Safety
/// `q` must be a live handle; `x_star` and `y_star` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_quasi_partition(q: *const QwQuasiWarp, x_star: *mut f64, y_star: *mut f64) -> QwStatus {
    guard(|| {
        let q = &deref(q, "warp is null")?.inner;
        write_out(x_star, q.x_star(), "x_star is null")?;
        write_out(y_star, q.y_star(), "y_star is null")
    })
}

/// # Safety
/// `q` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_quasi_free(q: *mut QwQuasiWarp) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Stitches `target` onto `reference`. With `n == 0` correspondences are
/// detected from the images; otherwise `src_xy` (target) and `dst_xy`
/// (reference) hold `n` interleaved `x, y` pairs. Both images must have the
/// same channel count.
///
/// # Safety
/// Image descriptors must reference `width * height * channels` readable
/// bytes. Point arrays must hold `2 * n` doubles when `n > 0`. `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qw_stitch_pair(
    target: *const QwImage,
    reference: *const QwImage,
    src_xy: *const f64,
    dst_xy: *const f64,
    n: usize,
    mode: QwWarpMode,
    seed: u64,
    out: *mut *mut QwStitchResult,
) -> QwStatus {
    guard(|| {
        let target = raster(target)?;
        let reference = raster(reference)?;
        let corrs = if n == 0 { None } else { Some(correspondences(src_xy, dst_xy, n)?) };
        let mut opts = StitchOptions {
            mode: match mode {
                QwWarpMode::Quasi => WarpMode::Quasi,
                QwWarpMode::Homography => WarpMode::Homography,
            },
            ..StitchOptions::default()
        };
        opts.ransac.seed = seed;
        let stitched = stitch_pair(&target, &reference, corrs.as_ref(), &opts)?;
        let report = CString::new(stitched.report.to_json()).map_err(|_| Failure::Argument("report has nul"))?;
        write_handle(out, QwStitchResult { inner: stitched, report })
    })
}

/// Mosaic dimensions.
///
/// # Safety
/// `r` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_result_size(r: *const QwStitchResult, width: *mut u32, height: *mut u32, channels: *mut u32) -> QwStatus {
    guard(|| {
        let canvas = &deref(r, "result is null")?.inner.mosaic.canvas;
        write_out(width, canvas.width as u32, "width is null")?;
        write_out(height, canvas.height as u32, "height is null")?;
        write_out(channels, canvas.channels as u32, "channels is null")
    })
}

/// Copies the mosaic as packed 8-bit samples; pixels not covered by any
/// image are zero. `len` must equal `width * height * channels`.
///
/// # Safety
/// `r` must be a live handle and `buf` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn qw_result_pixels(r: *const QwStitchResult, buf: *mut u8, len: usize) -> QwStatus {
    guard(|| {
        let bytes = deref(r, "result is null")?.inner.mosaic.canvas.to_bytes();
        if buf.is_null() || len != bytes.len() {
            return Err(Failure::Argument("buffer is null or has the wrong length"));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&bytes);
        Ok(())
    })
}

/// Copies the per-pixel source labels (`-1` uncovered, `0` reference,
/// `1` target). `len` must equal `width * height`.
///
/// # Safety
/// `r` must be a live handle and `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_result_labels(r: *const QwStitchResult, buf: *mut i32, len: usize) -> QwStatus {
    guard(|| {
        let labels = &deref(r, "result is null")?.inner.mosaic.labels;
        if buf.is_null() || len != labels.len() {
            return Err(Failure::Argument("buffer is null or has the wrong length"));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(labels);
        Ok(())
    })
}

/// Canvas position of the reference image's top-left pixel.
///
/// # Safety
/// `r` must be a live handle; `ox` and `oy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_result_origin(r: *const QwStitchResult, ox: *mut f64, oy: *mut f64) -> QwStatus {
    guard(|| {
        let frame = &deref(r, "result is null")?.inner.frame;
        let origin = frame.to_canvas(Point::new(0.0, 0.0));
        write_out(ox, origin.x, "ox is null")?;
        write_out(oy, origin.y, "oy is null")
    })
}

/// JSON report owned by the result; valid until the result is freed.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_result_report_json(r: *const QwStitchResult) -> *const c_char {
    r.as_ref().map_or(ptr::null(), |r| r.report.as_ptr())
}

/// Inlier RMS reprojection error of the estimated homography.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_result_inlier_rms(r: *const QwStitchResult, out: *mut f64) -> QwStatus {
    guard(|| {
        let pair = deref(r, "result is null")?.inner.report.pairs.first().ok_or(Failure::Argument("no pair report"))?;
        write_out(out, pair.inlier_rms, "out is null")
    })
}

/// # Safety
/// `r` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_result_free(r: *mut QwStitchResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

