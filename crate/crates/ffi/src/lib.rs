//! C ABI for gaussurf.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every call returns a `GsStatus`;
//! on failure, `gs_last_error` returns a description that stays valid until
//! the next failing call on the same thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use gaussurf::dataset::OffsetConfig;
use gaussurf::density::recommend_sigma;
use gaussurf::io::{read_ply, save_mesh, MeshFormat};
use gaussurf::pipeline::{reconstruct, ReconstructionConfig, RunArtifacts};
use gaussurf::report::RunReport;
use gaussurf::solver::SolverConfig;
use gaussurf::{Error, Point3, PointCloud, UnitVector3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    NotConverged = 6,
    EmptyMesh = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Point cloud with unit normals.
pub struct GsCloud(PointCloud);

/// Result of one reconstruction run: mesh, statistics and report.
pub struct GsReconstruction {
    artifacts: RunArtifacts,
    report: RunReport,
}

/// Reconstruction settings. Fields set to zero or a negative value select
/// the automatic default where one exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsReconstructOptions {
    /// Gaussian width; `<= 0` uses the density recommendation.
    pub sigma: f64,
    /// Normal offset; `<= 0` uses 1% of the bounding-box diagonal.
    pub delta: f64,
    /// Mask distance; `<= 0` uses twice the width.
    pub epsilon: f64,
    pub grid: [usize; 3],
    pub rel_tolerance: f64,
    pub restart_length: usize,
    pub max_iterations: usize,
    pub subdomain_size: usize,
    pub overlap_sigmas: f64,
    pub cutoff_sigmas: f64,
    /// Nonzero enables the Schwarz preconditioner.
    pub precondition: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GsDensity {
    pub separation_q: f64,
    /// Zero unless a reference sample was supplied (see `has_fill`).
    pub fill_h: f64,
    pub has_fill: u8,
    pub h_max: f64,
    pub sigma_from_q: f64,
    pub sigma_from_h: f64,
    pub sigma_from_hmax: f64,
    pub recommended_sigma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GsSummary {
    pub sigma: f64,
    pub delta: f64,
    pub mask_epsilon: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: u8,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub components: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> GsStatus {
    match err.root() {
        Error::Io(_) => GsStatus::Io,
        Error::Ply(_) => GsStatus::Parse,
        Error::InvalidArgument(_) | Error::Empty(_) | Error::DimensionMismatch { .. } => {
            GsStatus::InvalidArgument
        }
        _ => GsStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<GsStatus, (GsStatus, String)>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            GsStatus::Panic
        }
    }
}

fn fail(err: Error) -> (GsStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (GsStatus, String) {
    (GsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (GsStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| (GsStatus::InvalidArgument, "path is not valid UTF-8".to_string()))
}

unsafe fn points_arg(xyz: *const f64, count: usize) -> Result<Vec<Point3>, (GsStatus, String)> {
    if count > 0 && xyz.is_null() {
        return Err(null("coordinate array"));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    Ok(std::slice::from_raw_parts(xyz, 3 * count)
        .chunks_exact(3)
        .map(|c| Point3::new(c[0], c[1], c[2]))
        .collect())
}

/// Message describing the most recent failure on this thread, or null.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a cloud from `count` interleaved positions and normals
/// (`x y z` triples). Normals are normalized.
///
/// # Safety
/// `xyz` and `normals` must each point to `3 * count` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_cloud_new(
    xyz: *const f64,
    normals: *const f64,
    count: usize,
    out: *mut *mut GsCloud,
) -> GsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let points = points_arg(xyz, count)?;
        let normals = points_arg(normals, count)?
            .into_iter()
            .map(UnitVector3::from_point)
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail)?;
        let cloud = PointCloud::new(points, normals).map_err(fail)?;
        *out = Box::into_raw(Box::new(GsCloud(cloud)));
        Ok(GsStatus::Ok)
    })
}

/// Reads an oriented PLY point cloud.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_cloud_read_ply(path: *const c_char, out: *mut *mut GsCloud) -> GsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cloud = read_ply(path_arg(path)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(GsCloud(cloud)));
        Ok(GsStatus::Ok)
    })
}

/// Number of points after duplicate removal.
///
/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_cloud_len(cloud: *const GsCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_cloud_free(cloud: *mut GsCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Density measures of the cloud. `reference` (may be null) is a dense
/// sample of `reference_count` points of the underlying domain; when given
/// the fill distance is computed against it.
///
/// # Safety
/// `cloud` must be a live handle, `reference` null or `3 * reference_count`
/// doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_density(
    cloud: *const GsCloud,
    reference: *const f64,
    reference_count: usize,
    out: *mut GsDensity,
) -> GsStatus {
    guard(|| {
        let cloud = cloud.as_ref().ok_or_else(|| null("cloud"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let reference = if reference.is_null() {
            None
        } else {
            Some(points_arg(reference, reference_count)?)
        };
        let d = recommend_sigma(cloud.0.points(), reference.as_deref()).map_err(fail)?;
        *out = GsDensity {
            separation_q: d.separation_q,
            fill_h: d.fill_h.unwrap_or(0.0),
            has_fill: d.fill_h.is_some() as u8,
            h_max: d.h_max,
            sigma_from_q: d.sigma_from_q,
            sigma_from_h: d.sigma_from_h.unwrap_or(0.0),
            sigma_from_hmax: d.sigma_from_hmax,
            recommended_sigma: d.recommended_sigma(),
        };
        Ok(GsStatus::Ok)
    })
}

/// Fills `out` with the library defaults.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_reconstruct_options_default(out: *mut GsReconstructOptions) -> GsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = ReconstructionConfig::default();
        let s = SolverConfig::default();
        *out = GsReconstructOptions {
            sigma: 0.0,
            delta: 0.0,
            epsilon: 0.0,
            grid: cfg.grid_resolution,
            rel_tolerance: s.rel_tolerance,
            restart_length: s.restart_length,
            max_iterations: s.max_outer_iterations,
            subdomain_size: s.subdomain_target_size,
            overlap_sigmas: s.overlap_radius_in_sigmas,
            cutoff_sigmas: cfg.cutoff_sigmas,
            precondition: cfg.precondition as u8,
        };
        Ok(GsStatus::Ok)
    })
}

fn config_from(o: &GsReconstructOptions) -> ReconstructionConfig {
    let auto = |v: f64| (v > 0.0).then_some(v);
    ReconstructionConfig {
        offset: match auto(o.delta) {
            Some(d) => OffsetConfig::with_delta(d),
            None => OffsetConfig::default(),
        },
        sigma: auto(o.sigma),
        cutoff_sigmas: o.cutoff_sigmas,
        solver: SolverConfig {
            rel_tolerance: o.rel_tolerance,
            max_outer_iterations: o.max_iterations,
            restart_length: o.restart_length,
            subdomain_target_size: o.subdomain_size,
            overlap_radius_in_sigmas: o.overlap_sigmas,
            fixed_iterations: None,
        },
        precondition: o.precondition != 0,
        grid_resolution: o.grid,
        mask_epsilon: auto(o.epsilon),
        ..ReconstructionConfig::default()
    }
}

/// Runs the full reconstruction. `options` may be null for defaults.
///
/// Returns `Ok` when a non-empty mesh was produced. `NotConverged` and
/// `EmptyMesh` still store a handle in `out` so the summary and report can
/// be inspected; any other failure leaves `out` untouched.
///
/// # Safety
/// `cloud` must be a live handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_reconstruct(
    cloud: *const GsCloud,
    options: *const GsReconstructOptions,
    out: *mut *mut GsReconstruction,
) -> GsStatus {
    guard(|| {
        let cloud = cloud.as_ref().ok_or_else(|| null("cloud"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = match options.as_ref() {
            Some(o) => config_from(o),
            None => ReconstructionConfig::default(),
        };
        let artifacts = reconstruct(&cloud.0, &cfg).map_err(fail)?;
        let report = RunReport::new(&artifacts, &cfg, cloud.0.len(), worker_threads());
        let status = if !artifacts.converged() {
            set_error(artifacts.warnings.join("; "));
            GsStatus::NotConverged
        } else if !artifacts.succeeded() {
            set_error(artifacts.warnings.join("; "));
            GsStatus::EmptyMesh
        } else {
            GsStatus::Ok
        };
        *out = Box::into_raw(Box::new(GsReconstruction { artifacts, report }));
        Ok(status)
    })
}

fn worker_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// # Safety
/// `rec` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_reconstruction_summary(rec: *const GsReconstruction, out: *mut GsSummary) -> GsStatus {
    guard(|| {
        let rec = rec.as_ref().ok_or_else(|| null("reconstruction"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let a = &rec.artifacts;
        let stats = a.mesh_stats.as_ref();
        *out = GsSummary {
            sigma: a.sigma,
            delta: a.delta,
            mask_epsilon: a.mask_epsilon,
            iterations: a.solve.as_ref().map_or(0, |s| s.iterations),
            relative_residual: a.solve.as_ref().map_or(f64::NAN, |s| s.final_relative_residual),
            converged: a.converged() as u8,
            vertex_count: stats.map_or(0, |m| m.vertices),
            triangle_count: stats.map_or(0, |m| m.triangles),
            components: stats.map_or(0, |m| m.components),
        };
        Ok(GsStatus::Ok)
    })
}

/// Copies the mesh into caller buffers: `3 * vertex_count` doubles and
/// `3 * triangle_count` indices. Either buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold the stated capacities (in elements).
#[no_mangle]
pub unsafe extern "C" fn gs_mesh_copy(
    rec: *const GsReconstruction,
    vertices: *mut f64,
    vertex_capacity: usize,
    triangles: *mut u32,
    triangle_capacity: usize,
) -> GsStatus {
    guard(|| {
        let rec = rec.as_ref().ok_or_else(|| null("reconstruction"))?;
        let Some(mesh) = rec.artifacts.mesh.as_ref() else {
            return Err((GsStatus::EmptyMesh, "no mesh was extracted".into()));
        };
        if !vertices.is_null() {
            let need = 3 * mesh.vertices.len();
            if vertex_capacity < need {
                return Err((GsStatus::BufferTooSmall, format!("vertex buffer needs {need} doubles")));
            }
            let dst = std::slice::from_raw_parts_mut(vertices, need);
            for (d, v) in dst.chunks_exact_mut(3).zip(&mesh.vertices) {
                d.copy_from_slice(&v.to_array());
            }
        }
        if !triangles.is_null() {
            let need = 3 * mesh.triangles.len();
            if triangle_capacity < need {
                return Err((GsStatus::BufferTooSmall, format!("triangle buffer needs {need} indices")));
            }
            let dst = std::slice::from_raw_parts_mut(triangles, need);
            for (d, t) in dst.chunks_exact_mut(3).zip(&mesh.triangles) {
                d.copy_from_slice(t);
            }
        }
        Ok(GsStatus::Ok)
    })
}

/// Writes the mesh as PLY or OBJ, chosen by the file extension.
///
/// # Safety
/// `rec` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gs_mesh_write(rec: *const GsReconstruction, path: *const c_char) -> GsStatus {
    guard(|| {
        let rec = rec.as_ref().ok_or_else(|| null("reconstruction"))?;
        let path = path_arg(path)?;
        let format = MeshFormat::from_path(&path).ok_or_else(|| {
            (
                GsStatus::InvalidArgument,
                format!("unknown mesh format for {}", path.display()),
            )
        })?;
        let Some(mesh) = rec.artifacts.mesh.as_ref() else {
            return Err((GsStatus::EmptyMesh, "no mesh was extracted".into()));
        };
        save_mesh(&path, mesh, format).map_err(fail)?;
        Ok(GsStatus::Ok)
    })
}

/// JSON run report as a newly allocated string; release it with
/// `gs_string_free`. Returns null if `rec` is null.
///
/// # Safety
/// `rec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_reconstruction_report_json(rec: *const GsReconstruction) -> *mut c_char {
    let Some(rec) = rec.as_ref() else {
        set_error("reconstruction is null");
        return ptr::null_mut();
    };
    catch_unwind(AssertUnwindSafe(|| {
        CString::new(rec.report.to_json()).map_or(ptr::null_mut(), CString::into_raw)
    }))
    .unwrap_or(ptr::null_mut())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `rec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_reconstruction_free(rec: *mut GsReconstruction) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}
