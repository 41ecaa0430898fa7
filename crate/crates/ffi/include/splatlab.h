#ifndef SPLATLAB_H
#define SPLATLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SplatlabStatus {
  SPLATLAB_STATUS_OK = 0,
  SPLATLAB_STATUS_NULL_POINTER = 1,
  SPLATLAB_STATUS_INVALID_ARGUMENT = 2,
  SPLATLAB_STATUS_IO = 3,
  SPLATLAB_STATUS_FORMAT = 4,
  SPLATLAB_STATUS_RENDER = 5,
  SPLATLAB_STATUS_PANIC = 6,
} SplatlabStatus;

/*
 Opaque model handle.
 */
typedef struct SplatlabModel SplatlabModel;

/*
 Pinhole camera. `rotation` is the row-major world-to-camera rotation;
 camera space is x right, y down, z forward.
 */
typedef struct SplatlabCamera {
  float rotation[9];
  float translation[3];
  float focal[2];
  float principal_point[2];
  uint32_t width;
  uint32_t height;
} SplatlabCamera;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty if none failed.
 The pointer stays valid until the next failing call on the same thread.
 */
const char *splatlab_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *splatlab_version(void);

/*
 Loads a binary model or PLY export into `*out`.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SplatlabStatus splatlab_model_load(const char *path, struct SplatlabModel **out);

/*
 Releases a model. Null is ignored.

 # Safety
 `model` must be null or a handle from [`splatlab_model_load`] not yet freed.
 */
void splatlab_model_free(struct SplatlabModel *model);

/*
 Number of Gaussians in the model; 0 for null.

 # Safety
 `model` must be null or a live handle.
 */
size_t splatlab_model_count(const struct SplatlabModel *model);

/*
 SH degree the model was trained to; 0 for null.

 # Safety
 `model` must be null or a live handle.
 */
uint32_t splatlab_model_sh_degree(const struct SplatlabModel *model);

/*
 Renders `model` into `out_rgb`, `width * height * 3` linear-RGB floats in
 row-major order. `background` may be null for black.

 # Safety
 `model` and `camera` must be valid; `background` null or 3 floats;
 `out_rgb` must have room for `out_len` floats.
 */
enum SplatlabStatus splatlab_model_render(const struct SplatlabModel *model,
                                          const struct SplatlabCamera *camera,
                                          const float *background,
                                          float *out_rgb,
                                          size_t out_len);

/*
 Writes the model in the binary format.

 # Safety
 `model` must be a live handle and `path` a NUL-terminated string.
 */
enum SplatlabStatus splatlab_model_save(const struct SplatlabModel *model, const char *path);

/*
 Writes the model as a PLY file readable by common splat viewers.

 # Safety
 `model` must be a live handle and `path` a NUL-terminated string.
 */
enum SplatlabStatus splatlab_model_export_ply(const struct SplatlabModel *model, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLATLAB_H */
