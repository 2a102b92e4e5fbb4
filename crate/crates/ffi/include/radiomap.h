#ifndef RADIOMAP_H
#define RADIOMAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every call.
 */
typedef enum RmStatus {
  RM_STATUS_OK = 0,
  RM_STATUS_NULL_POINTER = 1,
  RM_STATUS_INVALID_ARGUMENT = 2,
  RM_STATUS_IO = 3,
  RM_STATUS_FORMAT = 4,
  RM_STATUS_UNSUPPORTED = 5,
  RM_STATUS_DATA = 6,
  RM_STATUS_PRECONDITION = 7,
  RM_STATUS_NO_CONVERGENCE = 8,
  RM_STATUS_PANIC = 9,
} RmStatus;

/*
 Named feature values with C string names kept alive alongside.
 */
typedef struct RmFeatures RmFeatures;

/*
 Label volume; nonzero voxels are in the region.
 */
typedef struct RmMask RmMask;

/*
 3D scalar volume with geometry.
 */
typedef struct RmVolume RmVolume;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 Valid until the next call on the same thread.
 */
const char *rm_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *rm_version(void);

/*
 Builds a volume from `dims[0]*dims[1]*dims[2]` values, x fastest.

 # Safety
 `dims`, `spacing`, `origin` point to 3 elements; `values` to `len` elements.
 */
enum RmStatus rm_volume_new(const size_t *dims,
                            const double *spacing,
                            const double *origin,
                            const double *values,
                            size_t len,
                            struct RmVolume **out);

/*
 Reads a `.nii`, `.nii.gz` or rawjson `.json` volume.

 # Safety
 `path` is a NUL-terminated string; `out` is writable.
 */
enum RmStatus rm_volume_read(const char *path, struct RmVolume **out);

/*
 Writes a volume; the format follows the file extension.

 # Safety
 `volume` is a live handle; `path` is a NUL-terminated string.
 */
enum RmStatus rm_volume_write(const struct RmVolume *volume, const char *path);

/*
 Copies dims (3), spacing (3) and origin (3); any output may be null.

 # Safety
 Non-null outputs have room for 3 elements.
 */
enum RmStatus rm_volume_geometry(const struct RmVolume *volume,
                                 size_t *dims,
                                 double *spacing,
                                 double *origin);

/*
 Copies voxel values into `buffer`, which must hold exactly the voxel count.

 # Safety
 `buffer` points to `len` writable doubles.
 */
enum RmStatus rm_volume_copy_values(const struct RmVolume *volume, double *buffer, size_t len);

/*
 # Safety
 `volume` is null or a handle not yet freed.
 */
void rm_volume_free(struct RmVolume *volume);

/*
 Builds a mask from integer labels, x fastest.

 # Safety
 As [`rm_volume_new`], with `labels` pointing to `len` elements.
 */
enum RmStatus rm_mask_new(const size_t *dims,
                          const double *spacing,
                          const double *origin,
                          const int32_t *labels,
                          size_t len,
                          struct RmMask **out);

/*
 Reads a mask; stored values are rounded to integer labels.

 # Safety
 `path` is a NUL-terminated string; `out` is writable.
 */
enum RmStatus rm_mask_read(const char *path, struct RmMask **out);

/*
 Number of nonzero voxels.

 # Safety
 `mask` is a live handle; `count` is writable.
 */
enum RmStatus rm_mask_count(const struct RmMask *mask, size_t *count);

/*
 # Safety
 `mask` is null or a handle not yet freed.
 */
void rm_mask_free(struct RmMask *mask);

/*
 Global features of the original image plus shape. `bin_width > 0` selects
 fixed-width binning, otherwise `bin_count` fixed bins are used.

 # Safety
 Handles are live; `out` is writable.
 */
enum RmStatus rm_extract_global(const struct RmVolume *volume,
                                const struct RmMask *mask,
                                double bin_width,
                                size_t bin_count,
                                struct RmFeatures **out);

/*
 Number of features held.

 # Safety
 `features` is a live handle.
 */
size_t rm_features_len(const struct RmFeatures *features);

/*
 Name of feature `index`, or null when out of range. Owned by the handle.

 # Safety
 `features` is a live handle.
 */
const char *rm_features_name(const struct RmFeatures *features, size_t index);

/*
 Value of feature `index`; NaN marks an undefined feature.

 # Safety
 `features` is a live handle; `value` is writable.
 */
enum RmStatus rm_features_value(const struct RmFeatures *features, size_t index, double *value);

/*
 # Safety
 `features` is null or a handle not yet freed.
 */
void rm_features_free(struct RmFeatures *features);

/*
 Parametric map of one feature with a `kernel^3` window; NaN outside the
 defined region. `threads` workers are used.

 # Safety
 Handles are live; `feature` is a NUL-terminated string; `out` is writable.
 */
enum RmStatus rm_extract_map(const struct RmVolume *volume,
                             const struct RmMask *mask,
                             const char *feature,
                             size_t kernel,
                             size_t threads,
                             struct RmVolume **out);

/*
 Mann-Whitney AUROC of `n` scores with 0/1 labels.

 # Safety
 `scores` and `labels` point to `n` elements; `out` is writable.
 */
enum RmStatus rm_auroc(const double *scores, const uint8_t *labels, size_t n, double *out);

/*
 Average precision of `n` scores with 0/1 labels.

 # Safety
 As [`rm_auroc`].
 */
enum RmStatus rm_average_precision(const double *scores,
                                   const uint8_t *labels,
                                   size_t n,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RADIOMAP_H */
