//! C ABI over the radiomap engine.
//!
//! Objects cross the boundary as opaque handles created and freed by this
//! library. Every function returns an [`RmStatus`]; on failure the message is
//! available from [`rm_last_error`] on the same thread. Panics never unwind
//! into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use radiomap::features::{extract_global, ExtractConfig, FeatureVector};
use radiomap::io::{read_volume_auto, write_volume_auto};
use radiomap::maps::{extract_map_fast, MapConfig};
use radiomap::metrics::{auroc, average_precision, ScoredCases};
use radiomap::preprocess::Discretization;
use radiomap::{Error, Geometry, MaskGrid, VolumeGrid};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Unsupported = 5,
    Data = 6,
    Precondition = 7,
    NoConvergence = 8,
    Panic = 9,
}

/// 3D scalar volume with geometry.
pub struct RmVolume(VolumeGrid);

/// Label volume; nonzero voxels are in the region.
pub struct RmMask(MaskGrid);

/// Named feature values with C string names kept alive alongside.
pub struct RmFeatures {
    values: FeatureVector,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RmStatus {
    match e {
        Error::Io { .. } => RmStatus::Io,
        Error::Format { .. } | Error::Json(_) | Error::Csv(_) => RmStatus::Format,
        Error::Unsupported(_) => RmStatus::Unsupported,
        Error::Argument(_) => RmStatus::InvalidArgument,
        Error::Precondition(_) => RmStatus::Precondition,
        Error::Data(_) | Error::EmptyMatrix(_) => RmStatus::Data,
        Error::NoConvergence { .. } => RmStatus::NoConvergence,
    }
}

enum Fail {
    Null(&'static str),
    Engine(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Engine(e)
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> RmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RmStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            RmStatus::NullPointer
        }
        Ok(Err(Fail::Engine(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            RmStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Engine(Error::Argument(format!("{what} is not UTF-8"))))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn geometry(dims: *const usize, spacing: *const f64, origin: *const f64) -> Result<Geometry, Fail> {
    let d = slice(dims, 3, "dims")?;
    let s = slice(spacing, 3, "spacing")?;
    let o = slice(origin, 3, "origin")?;
    Ok(Geometry::new([d[0], d[1], d[2]], [s[0], s[1], s[2]], [o[0], o[1], o[2]])?)
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a volume from `dims[0]*dims[1]*dims[2]` values, x fastest.
///
/// # Safety
/// `dims`, `spacing`, `origin` point to 3 elements; `values` to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn rm_volume_new(
    dims: *const usize,
    spacing: *const f64,
    origin: *const f64,
    values: *const f64,
    len: usize,
    out: *mut *mut RmVolume,
) -> RmStatus {
    guard(|| {
        let g = geometry(dims, spacing, origin)?;
        let v = slice(values, len, "values")?;
        put(out, RmVolume(VolumeGrid::new(g, v.to_vec())?))
    })
}

/// Reads a `.nii`, `.nii.gz` or rawjson `.json` volume.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rm_volume_read(path: *const c_char, out: *mut *mut RmVolume) -> RmStatus {
    guard(|| {
        let p = as_str(path, "path")?;
        put(out, RmVolume(read_volume_auto(p)?))
    })
}

/// Writes a volume; the format follows the file extension.
///
/// # Safety
/// `volume` is a live handle; `path` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rm_volume_write(volume: *const RmVolume, path: *const c_char) -> RmStatus {
    guard(|| {
        let v = as_ref(volume, "volume")?;
        write_volume_auto(&v.0, as_str(path, "path")?)?;
        Ok(())
    })
}

/// Copies dims (3), spacing (3) and origin (3); any output may be null.
///
/// # Safety
/// Non-null outputs have room for 3 elements.
#[no_mangle]
pub unsafe extern "C" fn rm_volume_geometry(
    volume: *const RmVolume,
    dims: *mut usize,
    spacing: *mut f64,
    origin: *mut f64,
) -> RmStatus {
    guard(|| {
        let g = as_ref(volume, "volume")?.0.geometry;
        if !dims.is_null() {
            ptr::copy_nonoverlapping(g.dims.as_ptr(), dims, 3);
        }
        if !spacing.is_null() {
            ptr::copy_nonoverlapping(g.spacing.as_ptr(), spacing, 3);
        }
        if !origin.is_null() {
            ptr::copy_nonoverlapping(g.origin.as_ptr(), origin, 3);
        }
        Ok(())
    })
}

/// Copies voxel values into `buffer`, which must hold exactly the voxel count.
///
/// # Safety
/// `buffer` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rm_volume_copy_values(volume: *const RmVolume, buffer: *mut f64, len: usize) -> RmStatus {
    guard(|| {
        let v = &as_ref(volume, "volume")?.0.values;
        if buffer.is_null() {
            return Err(Fail::Null("buffer"));
        }
        if len != v.len() {
            return Err(Error::Argument(format!("buffer holds {len} values, volume has {}", v.len())).into());
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buffer, len);
        Ok(())
    })
}

/// # Safety
/// `volume` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rm_volume_free(volume: *mut RmVolume) {
    if !volume.is_null() {
        drop(Box::from_raw(volume));
    }
}

/// Builds a mask from integer labels, x fastest.
///
/// # Safety
/// As [`rm_volume_new`], with `labels` pointing to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn rm_mask_new(
    dims: *const usize,
    spacing: *const f64,
    origin: *const f64,
    labels: *const i32,
    len: usize,
    out: *mut *mut RmMask,
) -> RmStatus {
    guard(|| {
        let g = geometry(dims, spacing, origin)?;
        let l = slice(labels, len, "labels")?;
        put(out, RmMask(MaskGrid::new(g, l.to_vec())?))
    })
}

/// Reads a mask; stored values are rounded to integer labels.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rm_mask_read(path: *const c_char, out: *mut *mut RmMask) -> RmStatus {
    guard(|| {
        let p = as_str(path, "path")?;
        put(out, RmMask(MaskGrid::from_volume(&read_volume_auto(p)?)))
    })
}

/// Number of nonzero voxels.
///
/// # Safety
/// `mask` is a live handle; `count` is writable.
#[no_mangle]
pub unsafe extern "C" fn rm_mask_count(mask: *const RmMask, count: *mut usize) -> RmStatus {
    guard(|| {
        let m = as_ref(mask, "mask")?;
        if count.is_null() {
            return Err(Fail::Null("count"));
        }
        *count = m.0.count();
        Ok(())
    })
}

/// # Safety
/// `mask` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rm_mask_free(mask: *mut RmMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Global features of the original image plus shape. `bin_width > 0` selects
/// fixed-width binning, otherwise `bin_count` fixed bins are used.
///
/// # Safety
/// Handles are live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rm_extract_global(
    volume: *const RmVolume,
    mask: *const RmMask,
    bin_width: f64,
    bin_count: usize,
    out: *mut *mut RmFeatures,
) -> RmStatus {
    guard(|| {
        let v = as_ref(volume, "volume")?;
        let m = as_ref(mask, "mask")?;
        let discretization = if bin_width > 0.0 {
            Discretization::FixedBinWidth { width: bin_width }
        } else {
            Discretization::FixedBinCount { count: bin_count }
        };
        let cfg = ExtractConfig {
            discretization,
            ..ExtractConfig::default()
        };
        let values = extract_global(&v.0, &m.0, &cfg)?;
        let names = values
            .names()
            .iter()
            .map(|n| CString::new(*n).expect("feature names have no NUL"))
            .collect();
        put(out, RmFeatures { values, names })
    })
}

/// Number of features held.
///
/// # Safety
/// `features` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_features_len(features: *const RmFeatures) -> usize {
    features.as_ref().map_or(0, |f| f.names.len())
}

/// Name of feature `index`, or null when out of range. Owned by the handle.
///
/// # Safety
/// `features` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_features_name(features: *const RmFeatures, index: usize) -> *const c_char {
    features
        .as_ref()
        .and_then(|f| f.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// Value of feature `index`; NaN marks an undefined feature.
///
/// # Safety
/// `features` is a live handle; `value` is writable.
#[no_mangle]
pub unsafe extern "C" fn rm_features_value(features: *const RmFeatures, index: usize, value: *mut f64) -> RmStatus {
    guard(|| {
        let f = as_ref(features, "features")?;
        if value.is_null() {
            return Err(Fail::Null("value"));
        }
        let all = f.values.values();
        *value = *all
            .get(index)
            .ok_or_else(|| Error::Argument(format!("feature index {index} out of range")))?;
        Ok(())
    })
}

/// # Safety
/// `features` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rm_features_free(features: *mut RmFeatures) {
    if !features.is_null() {
        drop(Box::from_raw(features));
    }
}

/// Parametric map of one feature with a `kernel^3` window; NaN outside the
/// defined region. `threads` workers are used.
///
/// # Safety
/// Handles are live; `feature` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rm_extract_map(
    volume: *const RmVolume,
    mask: *const RmMask,
    feature: *const c_char,
    kernel: usize,
    threads: usize,
    out: *mut *mut RmVolume,
) -> RmStatus {
    guard(|| {
        let v = as_ref(volume, "volume")?;
        let m = as_ref(mask, "mask")?;
        let name = as_str(feature, "feature")?;
        let mut maps = extract_map_fast(&v.0, &m.0, &[name], &MapConfig::with_kernel(kernel), threads)?;
        put(out, RmVolume(maps.remove(0).grid))
    })
}

unsafe fn scored(scores: *const f64, labels: *const u8, n: usize) -> Result<ScoredCases, Fail> {
    let s = slice(scores, n, "scores")?;
    let l = slice(labels, n, "labels")?;
    Ok(ScoredCases::from_scores(s.to_vec(), l.to_vec())?)
}

/// Mann-Whitney AUROC of `n` scores with 0/1 labels.
///
/// # Safety
/// `scores` and `labels` point to `n` elements; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rm_auroc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> RmStatus {
    guard(|| {
        let s = scored(scores, labels, n)?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = auroc(&s)?;
        Ok(())
    })
}

/// Average precision of `n` scores with 0/1 labels.
///
/// # Safety
/// As [`rm_auroc`].
#[no_mangle]
pub unsafe extern "C" fn rm_average_precision(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> RmStatus {
    guard(|| {
        let s = scored(scores, labels, n)?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = average_precision(&s)?;
        Ok(())
    })
}
