#ifndef QUASIWARP_H
#define QUASIWARP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QwStatus {
  QW_STATUS_OK = 0,
  /**
   * A required pointer was null or a length was inconsistent.
   */
  QW_STATUS_INVALID_ARGUMENT = 1,
  QW_STATUS_INPUT_INVALID = 2,
  QW_STATUS_DEGENERATE_GEOMETRY = 3,
  QW_STATUS_INTERNAL = 4,
  QW_STATUS_PANIC = 5,
} QwStatus;

typedef enum QwWarpMode {
  QW_WARP_MODE_QUASI = 0,
  QW_WARP_MODE_HOMOGRAPHY = 1,
} QwWarpMode;

typedef struct QwHomography QwHomography;

typedef struct QwQuasiWarp QwQuasiWarp;

typedef struct QwStitchResult QwStitchResult;

/**
 * Borrowed 8-bit image: `height` rows of `width * channels` interleaved
 * samples, rows packed without padding. `channels` is 1 or 3.
 */
typedef struct QwImage {
  uint32_t width;
  uint32_t height;
  uint32_t channels;
  const uint8_t *pixels;
} QwImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *qw_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *qw_version(void);

/**
 * Creates a homography from `h1..h8` (row-major, `h9 = 1`).
 *
 * # Safety
 * `params` must point to 8 doubles; `out` must be writable.
 */
enum QwStatus qw_homography_new(const double *params, struct QwHomography **out);

/**
 * Parses the text form (9 whitespace-separated numbers).
 *
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum QwStatus qw_homography_parse(const char *text, struct QwHomography **out);

/**
 * Estimates a homography mapping `src` onto `dst` with seeded RANSAC.
 * Both arrays hold `n` interleaved `x, y` pairs.
 *
 * # Safety
 * `src_xy` and `dst_xy` must each point to `2 * n` doubles. `out` must be
 * writable; `inliers` may be null.
 */
enum QwStatus qw_estimate(const double *src_xy,
                          const double *dst_xy,
                          size_t n,
                          uint64_t seed,
                          struct QwHomography **out,
                          size_t *inliers);

/**
 * Copies `h1..h8` into `params`.
 *
 * # Safety
 * `h` must be a live handle and `params` must have room for 8 doubles.
 */
enum QwStatus qw_homography_params(const struct QwHomography *h, double *params);

/**
 * # Safety
 * `h` must be a live handle; `ox` and `oy` must be writable.
 */
enum QwStatus qw_homography_apply(const struct QwHomography *h,
                                  double x,
                                  double y,
                                  double *ox,
                                  double *oy);

/**
 * Row of the source that the homography maps to a horizontal line.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum QwStatus qw_homography_horizon_row(const struct QwHomography *h, double *out);

/**
 * # Safety
 * `h` must be null or a handle from this library not yet freed.
 */
void qw_homography_free(struct QwHomography *h);

/**
 * Builds the quasi-homography warp of `h` partitioned at column `x_star`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum QwStatus qw_quasi_new(const struct QwHomography *h, double x_star, struct QwQuasiWarp **out);

/**
 * # Safety
 * `q` must be a live handle; `ox` and `oy` must be writable.
 */
enum QwStatus qw_quasi_forward(const struct QwQuasiWarp *q,
                               double x,
                               double y,
                               double *ox,
                               double *oy);

/**
 * # Safety
 * `q` must be a live handle; `ox` and `oy` must be writable.
 */
enum QwStatus qw_quasi_backward(const struct QwQuasiWarp *q,
                                double x,
                                double y,
                                double *ox,
                                double *oy);

/**
 * Partition column and horizon row of the warp.
 *
 * # Safety
 * `q` must be a live handle; `x_star` and `y_star` must be writable.
 */
enum QwStatus qw_quasi_partition(const struct QwQuasiWarp *q, double *x_star, double *y_star);

/**
 * # Safety
 * `q` must be null or a handle from this library not yet freed.
 */
void qw_quasi_free(struct QwQuasiWarp *q);

/**
 * Stitches `target` onto `reference`. With `n == 0` correspondences are
 * detected from the images; otherwise `src_xy` (target) and `dst_xy`
 * (reference) hold `n` interleaved `x, y` pairs. Both images must have the
 * same channel count.
 *
 * # Safety
 * Image descriptors must reference `width * height * channels` readable
 * bytes. Point arrays must hold `2 * n` doubles when `n > 0`. `out` must be
 * writable.
 */
enum QwStatus qw_stitch_pair(const struct QwImage *target,
                             const struct QwImage *reference,
                             const double *src_xy,
                             const double *dst_xy,
                             size_t n,
                             enum QwWarpMode mode,
                             uint64_t seed,
                             struct QwStitchResult **out);

/**
 * Mosaic dimensions.
 *
 * # Safety
 * `r` must be a live handle; the out pointers must be writable.
 */
enum QwStatus qw_result_size(const struct QwStitchResult *r,
                             uint32_t *width,
                             uint32_t *height,
                             uint32_t *channels);

/**
 * Copies the mosaic as packed 8-bit samples; pixels not covered by any
 * image are zero. `len` must equal `width * height * channels`.
 *
 * # Safety
 * `r` must be a live handle and `buf` must have room for `len` bytes.
 */
enum QwStatus qw_result_pixels(const struct QwStitchResult *r, uint8_t *buf, size_t len);

/**
 * Copies the per-pixel source labels (`-1` uncovered, `0` reference,
 * `1` target). `len` must equal `width * height`.
 *
 * # Safety
 * `r` must be a live handle and `buf` must have room for `len` values.
 */
enum QwStatus qw_result_labels(const struct QwStitchResult *r, int32_t *buf, size_t len);

/**
 * Canvas position of the reference image's top-left pixel.
 *
 * # Safety
 * `r` must be a live handle; `ox` and `oy` must be writable.
 */
enum QwStatus qw_result_origin(const struct QwStitchResult *r, double *ox, double *oy);

/**
 * JSON report owned by the result; valid until the result is freed.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
const char *qw_result_report_json(const struct QwStitchResult *r);

/**
 * Inlier RMS reprojection error of the estimated homography.
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum QwStatus qw_result_inlier_rms(const struct QwStitchResult *r, double *out);

/**
 * # Safety
 * `r` must be null or a handle from this library not yet freed.
 */
void qw_result_free(struct QwStitchResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUASIWARP_H */
