#ifndef VLMPREP_H
#define VLMPREP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of an FFI call.
typedef enum VlmStatus {
  Ok = 0,
  NullPointer = 1,
  InvalidUtf8 = 2,
  InvalidArgument = 3,
  BufferTooSmall = 4,
  OperationFailed = 5,
} VlmStatus;

// Opaque packed-batch handle produced by `vlmprep_pack_new`.
typedef struct VlmPack VlmPack;

// Resize geometry for one image, mirroring the core patch-grid record.
typedef struct VlmPatchGrid {
  uintptr_t orig_h;
  uintptr_t orig_w;
  uintptr_t resized_h;
  uintptr_t resized_w;
  uintptr_t grid_h;
  uintptr_t grid_w;
  uintptr_t merged_h;
  uintptr_t merged_w;
  uintptr_t vit_tokens;
  uintptr_t llm_tokens;
} VlmPatchGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. The pointer
// stays valid until the next failing call on the same thread; the caller
// must not free it.
const char *vlmprep_last_error(void);

// Rounds an image to the patch geometry that fits the token budget.
//
// # Safety
// `out` must point to a writable `VlmPatchGrid`.
enum VlmStatus vlmprep_smart_resize(uintptr_t height,
                                    uintptr_t width,
                                    uintptr_t min_tokens,
                                    uintptr_t max_tokens,
                                    struct VlmPatchGrid *out);

// Intersection-over-union of two boxes given as corner coordinates.
//
// # Safety
// `out` must point to a writable `double`.
enum VlmStatus vlmprep_box_iou(int64_t ax1,
                               int64_t ay1,
                               int64_t ax2,
                               int64_t ay2,
                               int64_t bx1,
                               int64_t by1,
                               int64_t bx2,
                               int64_t by2,
                               double *out);

// Mean temporal IoU over `n` span pairs. Each spans array holds `2 * n`
// doubles laid out start,end,start,end,...
//
// # Safety
// `pred` and `gold` must each point to `2 * n` readable doubles and `out`
// to a writable double.
enum VlmStatus vlmprep_temporal_miou(const double *pred,
                                     const double *gold,
                                     uintptr_t n,
                                     double *out);

// Packs `n` sample lengths into bins of `capacity` and returns an opaque
// handle, or null on failure (see `vlmprep_last_error`). Free with
// `vlmprep_pack_free`.
//
// # Safety
// `lengths` must point to `n` readable `size_t` values.
struct VlmPack *vlmprep_pack_new(const uintptr_t *lengths, uintptr_t n, uintptr_t capacity);

// Number of bins in a packed batch; 0 for a null handle.
uintptr_t vlmprep_pack_bin_count(const struct VlmPack *pack);

// Number of samples in one bin; 0 for a null handle or out-of-range bin.
uintptr_t vlmprep_pack_bin_size(const struct VlmPack *pack, uintptr_t bin);

// Copies one bin's original sample indices into `out`.
//
// # Safety
// `out` must point to `out_len` writable `size_t` values.
enum VlmStatus vlmprep_pack_bin_samples(const struct VlmPack *pack,
                                        uintptr_t bin,
                                        uintptr_t *out,
                                        uintptr_t out_len);

// Releases a packed-batch handle. Null is a no-op.
//
// # Safety
// `pack` must be a handle from `vlmprep_pack_new` not yet freed.
void vlmprep_pack_free(struct VlmPack *pack);

// Number of position-id entries (3 per token) an image span needs.
uintptr_t vlmprep_mrope_image_id_count(uintptr_t merged_h, uintptr_t merged_w);

// Writes the (t, h, w) position-id triples for an image span into `out`
// (t0,h0,w0,t1,h1,w1,...) and the id the following span starts at into
// `next_start`.
//
// # Safety
// `out` must point to `out_len` writable `uint64_t` values and
// `next_start` to a writable `uint64_t`.
enum VlmStatus vlmprep_mrope_image_ids(uint64_t start,
                                       uintptr_t merged_h,
                                       uintptr_t merged_w,
                                       uint64_t *out,
                                       uintptr_t out_len,
                                       uint64_t *next_start);

// Parses a QwenVL HTML document and returns its layout as a JSON string,
// or null on failure (see `vlmprep_last_error`). Free the result with
// `vlmprep_string_free`.
//
// # Safety
// `html` must be a valid NUL-terminated string.
char *vlmprep_doc_parse_to_json(const char *html);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be a string returned by this library not yet freed.
void vlmprep_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VLMPREP_H */
