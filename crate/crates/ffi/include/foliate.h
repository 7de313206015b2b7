#ifndef FOLIATE_H
#define FOLIATE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every call.
typedef enum FolStatus {
  FOL_STATUS_OK = 0,
  FOL_STATUS_NULL_POINTER = 1,
  // Bad parameters or an unsupported shift/domain combination.
  FOL_STATUS_CONFIG = 2,
  FOL_STATUS_DIMENSION_MISMATCH = 3,
  FOL_STATUS_INVALID_PATTERN = 4,
  FOL_STATUS_DISTANCE_TIE = 5,
  // Arguments outside an operation's domain, e.g. points of different foils.
  FOL_STATUS_DOMAIN = 6,
  FOL_STATUS_SCHEMA = 7,
  FOL_STATUS_IO = 8,
  FOL_STATUS_BUFFER_TOO_SMALL = 9,
  // A Rust panic was caught at the boundary. The handle involved should be dropped.
  FOL_STATUS_PANIC = 10,
} FolStatus;

typedef enum FolModelKind {
  FOL_MODEL_KIND_POISSON = 0,
  FOL_MODEL_KIND_BERNOULLI_GRID = 1,
  FOL_MODEL_KIND_POISSON_CLUSTER = 2,
} FolModelKind;

typedef enum FolShiftKind {
  FOL_SHIFT_KIND_STRIP = 0,
  FOL_SHIFT_KIND_MNN = 1,
  FOL_SHIFT_KIND_NEXT_ROW = 2,
  FOL_SHIFT_KIND_CONDENSER = 3,
  FOL_SHIFT_KIND_MULTI_TYPE_STRIP = 4,
} FolShiftKind;

// Opaque result of evaluating a shift: the map, its foliation and the stable bijections.
typedef struct FolFoliation FolFoliation;

// Opaque point pattern.
typedef struct FolPattern FolPattern;

// Generator parameters. Only the fields of the chosen model are read.
typedef struct FolModel {
  enum FolModelKind kind;
  double intensity;
  double p;
  double parent_intensity;
  double mark_circle_radius;
  double mark_intensity;
} FolModel;

// Shift selection. `ball_radius <= 0` means the default of 1 (condenser only).
typedef struct FolShift {
  enum FolShiftKind kind;
  double ball_radius;
  // Condenser: measure closeness along the first coordinate instead of Euclidean.
  bool first_coordinate;
} FolShift;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the next failing call
// on the same thread.
const char *fol_last_error(void);

void fol_clear_error(void);

// Library version, static storage.
const char *fol_version(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void fol_string_free(char *s);

// Simulate a pattern. `extents` holds `dim` values; `buffer` is ignored on a torus.
//
// # Safety
// `extents` must point to `dim` doubles and `out` must be writable.
enum FolStatus fol_pattern_generate(struct FolModel model,
                                    size_t dim,
                                    const double *extents,
                                    bool torus,
                                    double buffer,
                                    uint64_t seed,
                                    struct FolPattern **out);

// Build a pattern from `n` points given point-major in `coords` (`n * dim` values).
//
// # Safety
// `extents` must hold `dim` doubles, `coords` `n * dim` doubles (may be NULL when `n == 0`).
enum FolStatus fol_pattern_new(size_t dim,
                               const double *extents,
                               bool torus,
                               double buffer,
                               const double *coords,
                               size_t n,
                               struct FolPattern **out);

// Parse the JSON pattern format written by the command line tool.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum FolStatus fol_pattern_from_json(const char *json, struct FolPattern **out);

// Serialize to JSON. Free the result with `fol_string_free`.
//
// # Safety
// `pattern` must be a live handle and `out` writable.
enum FolStatus fol_pattern_to_json(const struct FolPattern *pattern, char **out);

// Number of points, 0 for NULL.
//
// # Safety
// `pattern` must be NULL or a live handle.
size_t fol_pattern_len(const struct FolPattern *pattern);

// Dimension, 0 for NULL.
//
// # Safety
// `pattern` must be NULL or a live handle.
size_t fol_pattern_dim(const struct FolPattern *pattern);

// Copy the point-major coordinates (`len * dim` doubles).
//
// # Safety
// `out` must have room for `cap` doubles.
enum FolStatus fol_pattern_coords(const struct FolPattern *pattern, double *out, size_t cap);

// # Safety
// `pattern` must be NULL or a handle not yet freed.
void fol_pattern_free(struct FolPattern *pattern);

// Evaluate a shift on a pattern and build its foliation and stable maps.
//
// # Safety
// `pattern` must be a live handle and `out` writable.
enum FolStatus fol_foliate(const struct FolPattern *pattern,
                           struct FolShift shift,
                           struct FolFoliation **out);

// Number of points, 0 for NULL.
//
// # Safety
// `fol` must be NULL or a live handle.
size_t fol_foliation_len(const struct FolFoliation *fol);

// # Safety
// `fol` must be NULL or a live handle.
size_t fol_foliation_n_components(const struct FolFoliation *fol);

// # Safety
// `fol` must be NULL or a live handle.
size_t fol_foliation_n_foils(const struct FolFoliation *fol);

// Image of every point, -1 where censored.
//
// # Safety
// `out` must have room for `cap` values.
enum FolStatus fol_foliation_images(const struct FolFoliation *fol, int64_t *out, size_t cap);

// # Safety
// `out` must have room for `cap` values.
enum FolStatus fol_foliation_component_ids(const struct FolFoliation *fol,
                                           uint64_t *out,
                                           size_t cap);

// # Safety
// `out` must have room for `cap` values.
enum FolStatus fol_foliation_foil_ids(const struct FolFoliation *fol, uint64_t *out, size_t cap);

// The foil-preserving bijection: next point of the same foil.
//
// # Safety
// `out` must have room for `cap` values.
enum FolStatus fol_foliation_f_perp(const struct FolFoliation *fol, uint64_t *out, size_t cap);

// The component-preserving bijection: next point in succession order.
//
// # Safety
// `out` must have room for `cap` values.
enum FolStatus fol_foliation_h_dense(const struct FolFoliation *fol, uint64_t *out, size_t cap);

// Number of `f_perp` steps from `x` to `y`; both must lie in one foil.
//
// # Safety
// `fol` must be a live handle and `out` writable.
enum FolStatus fol_delta(const struct FolFoliation *fol, size_t x, size_t y, int64_t *out);

// Check the counting identities for orders `1..=n_max` on the uncensored components.
// `max_discrepancy` receives the largest `|lhs - rhs|` (0 when nothing could be checked).
//
// # Safety
// `fol` must be a live handle and `max_discrepancy` writable.
enum FolStatus fol_verify_identities(const struct FolFoliation *fol,
                                     size_t n_max,
                                     double *max_discrepancy);

// Foliation as JSON (components, foil and component ids). Free with `fol_string_free`.
//
// # Safety
// `fol` must be a live handle and `out` writable.
enum FolStatus fol_foliation_to_json(const struct FolFoliation *fol, char **out);

// # Safety
// `fol` must be NULL or a handle not yet freed.
void fol_foliation_free(struct FolFoliation *fol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOLIATE_H */
