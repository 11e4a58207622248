use std::ffi::{CStr, CString};
use std::ptr;

use gaussurf::synthetic::{make_sphere_cloud, sphere_reference_sample};
use gaussurf_ffi::*;

fn flatten<I: IntoIterator<Item = [f64; 3]>>(it: I) -> Vec<f64> {
    it.into_iter().flatten().collect()
}

fn sphere_handle(n: usize) -> *mut GsCloud {
    let cloud = make_sphere_cloud(n, 4).unwrap();
    let xyz = flatten(cloud.points().iter().map(|p| p.to_array()));
    let nrm = flatten(cloud.normals().iter().map(|v| v.as_point().to_array()));
    let mut h = ptr::null_mut();
    let s = unsafe { gs_cloud_new(xyz.as_ptr(), nrm.as_ptr(), n, &mut h) };
    assert_eq!(s, GsStatus::Ok);
    h
}

fn last_error() -> String {
    let p = gs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn reconstruct_round_trip() {
    let cloud = sphere_handle(120);
    assert_eq!(unsafe { gs_cloud_len(cloud) }, 120);

    let mut opts = GsReconstructOptions {
        sigma: 0.0,
        delta: 0.0,
        epsilon: 0.0,
        grid: [0; 3],
        rel_tolerance: 0.0,
        restart_length: 0,
        max_iterations: 0,
        subdomain_size: 0,
        overlap_sigmas: 0.0,
        cutoff_sigmas: 0.0,
        precondition: 0,
    };
    assert_eq!(unsafe { gs_reconstruct_options_default(&mut opts) }, GsStatus::Ok);
    assert_eq!(opts.restart_length, 30);
    assert_eq!(opts.precondition, 1);
    opts.grid = [24, 24, 24];

    let mut rec = ptr::null_mut();
    assert_eq!(unsafe { gs_reconstruct(cloud, &opts, &mut rec) }, GsStatus::Ok);
    let mut sum = GsSummary::default();
    assert_eq!(unsafe { gs_reconstruction_summary(rec, &mut sum) }, GsStatus::Ok);
    assert_eq!(sum.converged, 1);
    assert!(sum.vertex_count > 0 && sum.triangle_count > 0);
    assert!(sum.relative_residual <= 1e-6);

    let mut v = vec![0.0; 3 * sum.vertex_count];
    let mut t = vec![0u32; 3 * sum.triangle_count];
    let s = unsafe { gs_mesh_copy(rec, v.as_mut_ptr(), v.len(), t.as_mut_ptr(), t.len()) };
    assert_eq!(s, GsStatus::Ok);
    assert!(t.iter().all(|&i| (i as usize) < sum.vertex_count));
    for c in v.chunks_exact(3) {
        let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        assert!((r - 1.0).abs() < 0.1, "vertex radius {r}");
    }
    let s = unsafe { gs_mesh_copy(rec, v.as_mut_ptr(), 2, ptr::null_mut(), 0) };
    assert_eq!(s, GsStatus::BufferTooSmall);
    assert!(last_error().contains("vertex buffer"));

    let json = unsafe { gs_reconstruction_report_json(rec) };
    assert!(!json.is_null());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { gs_string_free(json) };
    assert!(text.contains("\"status\": \"ok\""));

    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("m.obj").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { gs_mesh_write(rec, out.as_ptr()) }, GsStatus::Ok);
    assert!(dir.path().join("m.obj").exists());
    let bad = CString::new(dir.path().join("m.stl").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { gs_mesh_write(rec, bad.as_ptr()) }, GsStatus::InvalidArgument);

    unsafe {
        gs_reconstruction_free(rec);
        gs_cloud_free(cloud);
    }
}

#[test]
fn density_with_and_without_reference() {
    let cloud = sphere_handle(200);
    let mut d = GsDensity::default();
    assert_eq!(unsafe { gs_density(cloud, ptr::null(), 0, &mut d) }, GsStatus::Ok);
    assert_eq!(d.has_fill, 0);
    assert_eq!(d.recommended_sigma, d.sigma_from_hmax);
    assert!((d.sigma_from_q - 2.0 * d.separation_q).abs() < 1e-15);

    let reference = flatten(sphere_reference_sample(5000).iter().map(|p| p.to_array()));
    assert_eq!(unsafe { gs_density(cloud, reference.as_ptr(), 5000, &mut d) }, GsStatus::Ok);
    assert_eq!(d.has_fill, 1);
    assert!((d.sigma_from_h - d.fill_h * 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(d.recommended_sigma, d.sigma_from_h);
    unsafe { gs_cloud_free(cloud) };
}

#[test]
fn error_paths() {
    let mut h = ptr::null_mut();
    let s = unsafe { gs_cloud_new(ptr::null(), ptr::null(), 3, &mut h) };
    assert_eq!(s, GsStatus::NullPointer);
    assert!(h.is_null());

    let xyz = [0.0, 0.0, 0.0];
    let zero = [0.0, 0.0, 0.0];
    assert_eq!(unsafe { gs_cloud_new(xyz.as_ptr(), zero.as_ptr(), 1, &mut h) }, GsStatus::InvalidArgument);

    let missing = CString::new("/nonexistent/cloud.ply").unwrap();
    assert_eq!(unsafe { gs_cloud_read_ply(missing.as_ptr(), &mut h) }, GsStatus::Io);
    assert!(last_error().contains("No such file"));

    let mut rec = ptr::null_mut();
    assert_eq!(unsafe { gs_reconstruct(ptr::null(), ptr::null(), &mut rec) }, GsStatus::NullPointer);
    assert!(unsafe { gs_reconstruction_report_json(ptr::null()) }.is_null());
    assert_eq!(unsafe { gs_cloud_len(ptr::null()) }, 0);
    unsafe {
        gs_cloud_free(ptr::null_mut());
        gs_reconstruction_free(ptr::null_mut());
        gs_string_free(ptr::null_mut());
    }
}

#[test]
fn non_convergence_still_returns_handle() {
    let cloud = sphere_handle(60);
    let mut opts = std::mem::MaybeUninit::<GsReconstructOptions>::uninit();
    unsafe { gs_reconstruct_options_default(opts.as_mut_ptr()) };
    let mut opts = unsafe { opts.assume_init() };
    opts.precondition = 0;
    opts.max_iterations = 1;
    opts.restart_length = 1;
    let mut rec = ptr::null_mut();
    assert_eq!(unsafe { gs_reconstruct(cloud, &opts, &mut rec) }, GsStatus::NotConverged);
    assert!(!rec.is_null());
    assert!(last_error().contains("did not converge"));
    let mut sum = GsSummary::default();
    unsafe { gs_reconstruction_summary(rec, &mut sum) };
    assert_eq!((sum.converged, sum.vertex_count, sum.iterations), (0, 0, 1));
    let s = unsafe { gs_mesh_copy(rec, ptr::null_mut(), 0, ptr::null_mut(), 0) };
    assert_eq!(s, GsStatus::EmptyMesh);
    unsafe {
        gs_reconstruction_free(rec);
        gs_cloud_free(cloud);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gaussurf.h")).unwrap();
    for name in [
        "gs_last_error",
        "gs_cloud_new",
        "gs_cloud_read_ply",
        "gs_cloud_len",
        "gs_cloud_free",
        "gs_density",
        "gs_reconstruct_options_default",
        "gs_reconstruct",
        "gs_reconstruction_summary",
        "gs_mesh_copy",
        "gs_mesh_write",
        "gs_reconstruction_report_json",
        "gs_string_free",
        "gs_reconstruction_free",
        "typedef struct GsCloud GsCloud",
        "GS_STATUS_NOT_CONVERGED = 6",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
