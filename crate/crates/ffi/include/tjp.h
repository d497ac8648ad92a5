#ifndef TJP_H
#define TJP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum TjpStatus {
  TJP_STATUS_OK = 0,
  TJP_STATUS_NULL_ARGUMENT = 1,
  TJP_STATUS_INVALID_UTF8 = 2,
  TJP_STATUS_CONFIG = 3,
  TJP_STATUS_DOMAIN = 4,
  TJP_STATUS_WINDOW_TOO_LARGE = 5,
  TJP_STATUS_EMPTY_CORPUS = 6,
  TJP_STATUS_DEGENERATE_MASK = 7,
  TJP_STATUS_DEGENERATE_FIELD = 8,
  TJP_STATUS_UNDEFINED_METRIC = 9,
  TJP_STATUS_FORMAT = 10,
  TJP_STATUS_UNSUPPORTED = 11,
  TJP_STATUS_MANIFEST = 12,
  TJP_STATUS_IO = 13,
  TJP_STATUS_PANIC = 14,
} TjpStatus;

/**
 * Opaque degradation configuration.
 */
typedef struct TjpConfig TjpConfig;

/**
 * Opaque displacement field.
 */
typedef struct TjpField TjpField;

/**
 * Opaque 2D/3D f32 grid.
 */
typedef struct TjpGrid TjpGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tjp_last_error(void);

/**
 * Copies row-major values for the `rank` extents in `shape`.
 *
 * # Safety
 * `shape` must point to `rank` extents and `data` to their product of floats.
 */
enum TjpStatus tjp_grid_new(size_t rank,
                            const size_t *shape,
                            const float *data,
                            struct TjpGrid **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * The handle must come from this library and not be used afterwards.
 */
void tjp_grid_free(struct TjpGrid *grid);

/**
 * Rank of the grid, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t tjp_grid_rank(const struct TjpGrid *grid);

/**
 * Extent along `axis`, or 0 when out of range.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t tjp_grid_extent(const struct TjpGrid *grid, size_t axis);

/**
 * Number of values.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t tjp_grid_len(const struct TjpGrid *grid);

/**
 * Borrowed pointer to the row-major values; valid while the handle lives.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
const float *tjp_grid_data(const struct TjpGrid *grid);

/**
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum TjpStatus tjp_grid_read_npy(const char *path, struct TjpGrid **out);

/**
 * # Safety
 * `grid` must be a live handle and `path` a NUL-terminated string.
 */
enum TjpStatus tjp_grid_write_npy(const struct TjpGrid *grid, const char *path);

/**
 * Default configuration. Never null.
 */
struct TjpConfig *tjp_config_default(void);

/**
 * Parses a JSON degradation config; missing keys take defaults, unknown keys
 * are rejected.
 *
 * # Safety
 * `json` must be a NUL-terminated string.
 */
enum TjpStatus tjp_config_from_json(const char *json, struct TjpConfig **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * The handle must come from this library and not be used afterwards.
 */
void tjp_config_free(struct TjpConfig *cfg);

/**
 * Two masked views of `grid`. `out_mask_a`/`out_mask_b` may be null.
 *
 * # Safety
 * Handles must be live; non-null out-pointers must be writable.
 */
enum TjpStatus tjp_degrade_mask(const struct TjpGrid *grid,
                                const struct TjpConfig *cfg,
                                uint64_t seed,
                                uint64_t index,
                                struct TjpGrid **out_a,
                                struct TjpGrid **out_b,
                                struct TjpGrid **out_mask_a,
                                struct TjpGrid **out_mask_b);

/**
 * Warped grid plus the displacement field (`out_field` may be null).
 *
 * # Safety
 * Handles must be live; non-null out-pointers must be writable.
 */
enum TjpStatus tjp_degrade_deform(const struct TjpGrid *grid,
                                  const struct TjpConfig *cfg,
                                  uint64_t seed,
                                  uint64_t index,
                                  struct TjpGrid **out,
                                  struct TjpField **out_field);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TjpStatus tjp_degrade_lowres(const struct TjpGrid *grid,
                                  const struct TjpConfig *cfg,
                                  uint64_t seed,
                                  uint64_t index,
                                  struct TjpGrid **out);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TjpStatus tjp_degrade_noise(const struct TjpGrid *grid,
                                 const struct TjpConfig *cfg,
                                 uint64_t seed,
                                 uint64_t index,
                                 struct TjpGrid **out);

/**
 * Builds a field from one displacement grid per axis (normalized units).
 *
 * # Safety
 * `components` must point to `count` live grid handles.
 */
enum TjpStatus tjp_field_from_components(const struct TjpGrid *const *components,
                                         size_t count,
                                         struct TjpField **out);

/**
 * Copy of the displacement along `axis`.
 *
 * # Safety
 * `field` must be live; `out` writable.
 */
enum TjpStatus tjp_field_component(const struct TjpField *field, size_t axis, struct TjpGrid **out);

/**
 * Resamples `grid` through `field`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum TjpStatus tjp_warp(const struct TjpGrid *grid,
                        const struct TjpField *field,
                        struct TjpGrid **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * The handle must come from this library and not be used afterwards.
 */
void tjp_field_free(struct TjpField *field);

/**
 * Standard deviation of log Jacobian determinants and the folding fraction.
 *
 * # Safety
 * `field` must be live; out-pointers writable.
 */
enum TjpStatus tjp_jacobian_stats(const struct TjpField *field,
                                  double *out_sdlogj,
                                  double *out_nonpos_fraction);

/**
 * PSNR in dB; `INFINITY` for identical inputs.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum TjpStatus tjp_psnr(const struct TjpGrid *a,
                        const struct TjpGrid *b,
                        double max_val,
                        double *out);

/**
 * # Safety
 * Handles must be live; `out` writable.
 */
enum TjpStatus tjp_ssim(const struct TjpGrid *a,
                        const struct TjpGrid *b,
                        double max_val,
                        double *out);

/**
 * Dice overlap of `label`. Grid values must be nonnegative integers.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum TjpStatus tjp_dice(const struct TjpGrid *a,
                        const struct TjpGrid *b,
                        uint32_t label,
                        double *out);

/**
 * 95th-percentile surface distance of `label`. `spacing` holds one value per
 * axis, or is null for unit spacing.
 *
 * # Safety
 * Handles must be live; `spacing` null or `rank` doubles; `out` writable.
 */
enum TjpStatus tjp_hd95(const struct TjpGrid *a,
                        const struct TjpGrid *b,
                        uint32_t label,
                        const double *spacing,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TJP_H */
