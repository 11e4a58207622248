#ifndef GAUSSURF_H
#define GAUSSURF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_IO = 3,
  GS_STATUS_PARSE = 4,
  GS_STATUS_NUMERICAL = 5,
  GS_STATUS_NOT_CONVERGED = 6,
  GS_STATUS_EMPTY_MESH = 7,
  GS_STATUS_BUFFER_TOO_SMALL = 8,
  GS_STATUS_PANIC = 9,
} GsStatus;

/**
 * Point cloud with unit normals.
 */
typedef struct GsCloud GsCloud;

/**
 * Result of one reconstruction run: mesh, statistics and report.
 */
typedef struct GsReconstruction GsReconstruction;

typedef struct GsDensity {
  double separation_q;
  /**
   * Zero unless a reference sample was supplied (see `has_fill`).
   */
  double fill_h;
  uint8_t has_fill;
  double h_max;
  double sigma_from_q;
  double sigma_from_h;
  double sigma_from_hmax;
  double recommended_sigma;
} GsDensity;

/**
 * Reconstruction settings. Fields set to zero or a negative value select
 * the automatic default where one exists.
 */
typedef struct GsReconstructOptions {
  /**
   * Gaussian width; `<= 0` uses the density recommendation.
   */
  double sigma;
  /**
   * Normal offset; `<= 0` uses 1% of the bounding-box diagonal.
   */
  double delta;
  /**
   * Mask distance; `<= 0` uses twice the width.
   */
  double epsilon;
  size_t grid[3];
  double rel_tolerance;
  size_t restart_length;
  size_t max_iterations;
  size_t subdomain_size;
  double overlap_sigmas;
  double cutoff_sigmas;
  /**
   * Nonzero enables the Schwarz preconditioner.
   */
  uint8_t precondition;
} GsReconstructOptions;

typedef struct GsSummary {
  double sigma;
  double delta;
  double mask_epsilon;
  size_t iterations;
  double relative_residual;
  uint8_t converged;
  size_t vertex_count;
  size_t triangle_count;
  size_t components;
} GsSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null.
 */
const char *gs_last_error(void);

/**
 * Builds a cloud from `count` interleaved positions and normals
 * (`x y z` triples). Normals are normalized.
 *
 * # Safety
 * `xyz` and `normals` must each point to `3 * count` doubles; `out` must
 * be writable.
 */
enum GsStatus gs_cloud_new(const double *xyz,
                           const double *normals,
                           size_t count,
                           struct GsCloud **out);

/**
 * Reads an oriented PLY point cloud.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum GsStatus gs_cloud_read_ply(const char *path, struct GsCloud **out);

/**
 * Number of points after duplicate removal.
 *
 * # Safety
 * `cloud` must be null or a live handle.
 */
size_t gs_cloud_len(const struct GsCloud *cloud);

/**
 * # Safety
 * `cloud` must be null or a handle not yet freed.
 */
void gs_cloud_free(struct GsCloud *cloud);

/**
 * Density measures of the cloud. `reference` (may be null) is a dense
 * sample of `reference_count` points of the underlying domain; when given
 * the fill distance is computed against it.
 *
 * # Safety
 * `cloud` must be a live handle, `reference` null or `3 * reference_count`
 * doubles, `out` writable.
 */
enum GsStatus gs_density(const struct GsCloud *cloud,
                         const double *reference,
                         size_t reference_count,
                         struct GsDensity *out);

/**
 * Fills `out` with the library defaults.
 *
 * # Safety
 * `out` must be writable.
 */
enum GsStatus gs_reconstruct_options_default(struct GsReconstructOptions *out);

/**
 * Runs the full reconstruction. `options` may be null for defaults.
 *
 * Returns `Ok` when a non-empty mesh was produced. `NotConverged` and
 * `EmptyMesh` still store a handle in `out` so the summary and report can
 * be inspected; any other failure leaves `out` untouched.
 *
 * # Safety
 * `cloud` must be a live handle, `options` null or valid, `out` writable.
 */
enum GsStatus gs_reconstruct(const struct GsCloud *cloud,
                             const struct GsReconstructOptions *options,
                             struct GsReconstruction **out);

/**
 * # Safety
 * `rec` must be a live handle and `out` writable.
 */
enum GsStatus gs_reconstruction_summary(const struct GsReconstruction *rec, struct GsSummary *out);

/**
 * Copies the mesh into caller buffers: `3 * vertex_count` doubles and
 * `3 * triangle_count` indices. Either buffer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must hold the stated capacities (in elements).
 */
enum GsStatus gs_mesh_copy(const struct GsReconstruction *rec,
                           double *vertices,
                           size_t vertex_capacity,
                           uint32_t *triangles,
                           size_t triangle_capacity);

/**
 * Writes the mesh as PLY or OBJ, chosen by the file extension.
 *
 * # Safety
 * `rec` must be a live handle and `path` a nul-terminated string.
 */
enum GsStatus gs_mesh_write(const struct GsReconstruction *rec, const char *path);

/**
 * JSON run report as a newly allocated string; release it with
 * `gs_string_free`. Returns null if `rec` is null.
 *
 * # Safety
 * `rec` must be null or a live handle.
 */
char *gs_reconstruction_report_json(const struct GsReconstruction *rec);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void gs_string_free(char *s);

/**
 * # Safety
 * `rec` must be null or a handle not yet freed.
 */
void gs_reconstruction_free(struct GsReconstruction *rec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSSURF_H */
