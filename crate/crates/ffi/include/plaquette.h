/* C interface to the plaquette lattice averaging library. */

#ifndef PLAQUETTE_H
#define PLAQUETTE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this interface.
 */
typedef enum PqStatus {
  /**
   * The call succeeded and all out-parameters are valid.
   */
  PQ_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PQ_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PQ_STATUS_INVALID_UTF8 = 2,
  /**
   * The arguments name no valid object: unknown scheme, factor or
   * dimension the scheme does not admit, mismatched operands.
   */
  PQ_STATUS_DOMAIN = 3,
  /**
   * The library failed internally; the last-error message has detail.
   */
  PQ_STATUS_INTERNAL = 4,
} PqStatus;

/**
 * Opaque handle to an exact weight stencil.
 */
typedef struct PqStencil PqStencil;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null
 * if no call has failed yet. The pointer stays valid until the next
 * failing call on the same thread; do not free it.
 */
const char *pq_last_error(void);

/**
 * Builds the weight stencil of catalogue scheme `scheme` at refinement
 * factor `d` in dimension `dim` and stores an owned handle in `out`.
 *
 * # Safety
 * `scheme` must be null or nul-terminated; `out` must be null or
 * valid for one pointer write.
 */
enum PqStatus pq_stencil_new(const char *scheme, int64_t d, uintptr_t dim, struct PqStencil **out);

/**
 * Releases a stencil handle. Null is accepted and ignored.
 *
 * # Safety
 * `stencil` must be null or a handle from this interface that has not
 * been freed.
 */
void pq_stencil_free(struct PqStencil *stencil);

/**
 * Refinement factor of the stencil, or 0 if the handle is null.
 *
 * # Safety
 * `stencil` must be null or a live handle from this interface.
 */
int64_t pq_stencil_factor(const struct PqStencil *stencil);

/**
 * Lattice dimension of the stencil, or 0 if the handle is null.
 *
 * # Safety
 * `stencil` must be null or a live handle from this interface.
 */
uintptr_t pq_stencil_dim(const struct PqStencil *stencil);

/**
 * Number of offsets carrying nonzero weight, or 0 if the handle is
 * null.
 *
 * # Safety
 * `stencil` must be null or a live handle from this interface.
 */
uintptr_t pq_stencil_support_size(const struct PqStencil *stencil);

/**
 * Writes the exact weight at `offset` (a `dim`-long array) as a
 * freshly allocated `p/q` string. Offsets outside the support yield
 * "0/1". Release the string with [`pq_string_free`].
 *
 * # Safety
 * `stencil` must be a live handle or null; `offset` must be null or
 * point to `dim` readable values; `out` must be null or valid for one
 * pointer write.
 */
enum PqStatus pq_stencil_weight(const struct PqStencil *stencil,
                                const int64_t *offset,
                                uintptr_t dim,
                                char **out);

/**
 * Releases a string returned by this interface. Null is accepted and
 * ignored.
 *
 * # Safety
 * `s` must be null or a string from this interface that has not been
 * freed.
 */
void pq_string_free(char *s);

/**
 * Composes two stencils (`outer` applied after `inner`) into a new
 * owned handle whose factor is the product of the two.
 *
 * # Safety
 * `outer` and `inner` must be live handles or null; `out` must be
 * null or valid for one pointer write.
 */
enum PqStatus pq_compose(const struct PqStencil *outer,
                         const struct PqStencil *inner,
                         struct PqStencil **out);

/**
 * Checks the composition law for a catalogue scheme over every
 * admissible ordered factor pair with both factors at most
 * `max_factor`, comparing exact weights. Writes the verdict to
 * `out_coherent`.
 *
 * # Safety
 * `scheme` must be null or nul-terminated; `out_coherent` must be
 * null or valid for one write.
 */
enum PqStatus pq_family_coherent(const char *scheme,
                                 uintptr_t dim,
                                 int64_t max_factor,
                                 bool *out_coherent);

/**
 * Checks the two-scale refinement identity of the triangular kernel
 * at factor `d` and writes the verdict to `out_holds`.
 *
 * # Safety
 * `out_holds` must be null or valid for one write.
 */
enum PqStatus pq_hat_refinement_check(int64_t d, bool *out_holds);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLAQUETTE_H */
