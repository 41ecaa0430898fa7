//! C interface to splatlab models.
//!
//! Models are opaque handles created by [`splatlab_model_load`] and released
//! with [`splatlab_model_free`]. Every fallible call returns a
//! [`SplatlabStatus`]; on failure [`splatlab_last_error`] describes what went
//! wrong on the calling thread.

use nalgebra::{Matrix3, Vector2, Vector3};
use splatlab::io::{self, SplatModel};
use splatlab::{Camera, ExecMode, RenderSettings};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplatlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Render = 5,
    Panic = 6,
}

/// Pinhole camera. `rotation` is the row-major world-to-camera rotation;
/// camera space is x right, y down, z forward.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SplatlabCamera {
    pub rotation: [f32; 9],
    pub translation: [f32; 3],
    pub focal: [f32; 2],
    pub principal_point: [f32; 2],
    pub width: u32,
    pub height: u32,
}

/// Opaque model handle.
pub struct SplatlabModel {
    inner: SplatModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &splatlab::Error) -> SplatlabStatus {
    use splatlab::Error as E;
    match err {
        E::Io(_) | E::MissingFile(_) => SplatlabStatus::Io,
        E::InvalidCamera(_) | E::InvalidArgument(_) | E::ResolutionMismatch(..) => {
            SplatlabStatus::InvalidArgument
        }
        E::ResourceLimit(_) => SplatlabStatus::Render,
        _ => SplatlabStatus::Format,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SplatlabStatus, String)>) -> SplatlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SplatlabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SplatlabStatus::Panic
        }
    }
}

fn lib_err(e: splatlab::Error) -> (SplatlabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SplatlabStatus, String) {
    (SplatlabStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (SplatlabStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        (
            SplatlabStatus::InvalidArgument,
            "path is not valid UTF-8".to_string(),
        )
    })?;
    Ok(PathBuf::from(s))
}

/// Message for the last failed call on this thread; empty if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn splatlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn splatlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a binary model or PLY export into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn splatlab_model_load(
    path: *const c_char,
    out: *mut *mut SplatlabModel,
) -> SplatlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let path = path_arg(path)?;
        let bytes = std::fs::read(&path)
            .map_err(|e| (SplatlabStatus::Io, format!("{}: {e}", path.display())))?;
        let inner = if bytes.starts_with(b"ply\n") {
            SplatModel {
                sh_degree: splatlab::gaussian::MAX_SH_DEGREE as u32,
                gaussians: io::ply::decode_ply(&bytes).map_err(lib_err)?,
            }
        } else {
            SplatModel::decode(&bytes).map_err(lib_err)?
        };
        *out = Box::into_raw(Box::new(SplatlabModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`splatlab_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splatlab_model_free(model: *mut SplatlabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of Gaussians in the model; 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splatlab_model_count(model: *const SplatlabModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.gaussians.len())
}

/// SH degree the model was trained to; 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn splatlab_model_sh_degree(model: *const SplatlabModel) -> u32 {
    model.as_ref().map_or(0, |m| m.inner.sh_degree)
}

/// Renders `model` into `out_rgb`, `width * height * 3` linear-RGB floats in
/// row-major order. `background` may be null for black.
///
/// # Safety
/// `model` and `camera` must be valid; `background` null or 3 floats;
/// `out_rgb` must have room for `out_len` floats.
#[no_mangle]
pub unsafe extern "C" fn splatlab_model_render(
    model: *const SplatlabModel,
    camera: *const SplatlabCamera,
    background: *const f32,
    out_rgb: *mut f32,
    out_len: usize,
) -> SplatlabStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let cam = camera.as_ref().ok_or_else(|| null("camera"))?;
        if out_rgb.is_null() {
            return Err(null("out_rgb"));
        }
        let need = cam.width as usize * cam.height as usize * 3;
        if out_len < need {
            return Err((
                SplatlabStatus::InvalidArgument,
                format!("output holds {out_len} floats, {need} needed"),
            ));
        }
        let bg = if background.is_null() {
            Vector3::zeros()
        } else {
            Vector3::from_column_slice(std::slice::from_raw_parts(background, 3))
        };
        let camera = Camera::new(
            Matrix3::from_row_slice(&cam.rotation),
            Vector3::from(cam.translation),
            Vector2::from(cam.focal),
            Vector2::from(cam.principal_point),
            cam.width,
            cam.height,
        )
        .map_err(lib_err)?;
        let settings = RenderSettings {
            background: bg,
            sh_degree: model.inner.sh_degree as usize,
            mode: ExecMode::Deterministic,
        };
        let frame =
            splatlab::render(&model.inner.gaussians, &camera, &settings, false).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(out_rgb, need).copy_from_slice(&frame.output.image.data);
        Ok(())
    })
}

/// Writes the model in the binary format.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn splatlab_model_save(
    model: *const SplatlabModel,
    path: *const c_char,
) -> SplatlabStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        model.inner.save(&path_arg(path)?).map_err(lib_err)
    })
}

/// Writes the model as a PLY file readable by common splat viewers.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn splatlab_model_export_ply(
    model: *const SplatlabModel,
    path: *const c_char,
) -> SplatlabStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        io::save_ply(&path_arg(path)?, &model.inner.gaussians).map_err(lib_err)
    })
}
