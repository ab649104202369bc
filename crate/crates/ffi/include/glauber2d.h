#ifndef GLAUBER2D_H
#define GLAUBER2D_H

/* generated by cbindgen from the glauber2d-ffi crate; do not edit */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every fallible entry point.
 */
typedef enum G2dStatus {
  G2D_OK = 0,
  G2D_NULL_POINTER = 1,
  G2D_INVALID_ARGUMENT = 2,
  G2D_INVALID_GEOMETRY = 3,
  G2D_SUBCRITICAL = 4,
  G2D_NO_COALESCENCE = 5,
  G2D_INTERNAL = 6,
} G2dStatus;

/**
 * One Glauber chain on a torus driven by its source's clock stream.
 */
typedef struct G2dChain G2dChain;

/**
 * Keyed source of all randomness for one coupling realization.
 */
typedef struct G2dSource G2dSource;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code; never null, never freed.
 */
const char *g2d_status_message(enum G2dStatus status);

/**
 * Critical inverse temperature asinh(1)/2.
 */
double g2d_beta_c(void);

struct G2dSource *g2d_source_new(uint64_t seed);

/**
 * # Safety
 * `src` must be null or a pointer from [`g2d_source_new`], not yet freed.
 */
void g2d_source_free(struct G2dSource *src);

/**
 * Heat-bath chain on the n x n torus, initialized from the product
 * Rad(p_init) measure drawn from `src`'s time-zero randomness.
 *
 * # Safety
 * `src` and `out` must be valid pointers; `out` receives an owned handle
 * on success and is untouched otherwise.
 */
enum G2dStatus g2d_chain_new_torus(const struct G2dSource *src,
                                   int64_t n,
                                   double beta,
                                   double p_init,
                                   struct G2dChain **out);

/**
 * # Safety
 * `chain` must be null or an unfreed handle from [`g2d_chain_new_torus`].
 */
void g2d_chain_free(struct G2dChain *chain);

/**
 * Advance the chain to absolute time `t` (no-op if already past it).
 *
 * # Safety
 * `chain` must be a valid handle.
 */
enum G2dStatus g2d_chain_evolve(struct G2dChain *chain, double t);

/**
 * # Safety
 * `chain` and `out` must be valid pointers.
 */
enum G2dStatus g2d_chain_magnetization(const struct G2dChain *chain, double *out);

/**
 * Spin at torus coordinate (x, y), reduced modulo n; writes -1 or +1.
 *
 * # Safety
 * `chain` and `out` must be valid pointers.
 */
enum G2dStatus g2d_chain_spin(const struct G2dChain *chain, int64_t x, int64_t y, int32_t *out);

/**
 * Current chain time.
 *
 * # Safety
 * `chain` and `out` must be valid pointers.
 */
enum G2dStatus g2d_chain_time(const struct G2dChain *chain, double *out);

/**
 * Exact surface tension tau_beta(theta) for beta > beta_c,
 * theta in [-pi/4, pi/4].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum G2dStatus g2d_surface_tension(double beta, double theta, double *out);

/**
 * Kramers-Wannier dual temperature: sinh(2 beta) sinh(2 beta*) = 1.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum G2dStatus g2d_dual_beta(double beta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLAUBER2D_H */
