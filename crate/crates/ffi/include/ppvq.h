#ifndef PPVQ_H
#define PPVQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PPVQ_SPREAD_FAST 0

#define PPVQ_SPREAD_TUNED_SORTED 1

#define PPVQ_SPREAD_TUNED_BUCKETED 2

#define PPVQ_SPREAD_TUNED_ITERATED 3

typedef enum PpvqStatus {
  PPVQ_OK = 0,
  PPVQ_NULL_POINTER = 1,
  PPVQ_INVALID_ARGUMENT = 2,
  PPVQ_INVALID_DISTRIBUTION = 3,
  PPVQ_DIMENSION_MISMATCH = 4,
  PPVQ_INVALID_COUNTS = 5,
  PPVQ_DECODE_ERROR = 6,
  PPVQ_VERIFICATION_MISMATCH = 7,
  PPVQ_REDUCIBLE_CHAIN = 8,
  PPVQ_NON_CONVERGENCE = 9,
  PPVQ_BUFFER_TOO_SMALL = 10,
  PPVQ_PANIC = 11,
} PpvqStatus;

/**
 * Opaque tANS coding tables.
 */
typedef struct PpvqCoder PpvqCoder;

/**
 * Opaque symbol spread.
 */
typedef struct PpvqSpread PpvqSpread;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * Valid until the next call on the same thread.
 */
const char *ppvq_last_error(void);

/**
 * Shannon entropy of `p[0..len]` in bits.
 *
 * # Safety
 * `p` must point to `len` doubles and `out` to one double.
 */
enum PpvqStatus ppvq_entropy(const double *p, size_t len, double *out);

/**
 * `KL(p || q)` in bits.
 *
 * # Safety
 * `p` and `q` must point to `len` doubles and `out` to one double.
 */
enum PpvqStatus ppvq_kl_divergence(const double *p, const double *q, size_t len, double *out);

/**
 * Quantizes `p` to `len` counts summing to `total`, each at least
 * `min_count`, with deformation power `power`.
 *
 * # Safety
 * `p` must point to `len` doubles and `counts_out` to `len` integers.
 */
enum PpvqStatus ppvq_quantize(const double *p,
                              size_t len,
                              uint32_t total,
                              double power,
                              uint32_t min_count,
                              uint32_t *counts_out);

/**
 * Decoder-side distribution `q_s ∝ counts_s^power + offset`.
 *
 * # Safety
 * `counts` must point to `len` integers and `q_out` to `len` doubles.
 */
enum PpvqStatus ppvq_reconstruct(const uint32_t *counts,
                                 size_t len,
                                 double power,
                                 double offset,
                                 double *q_out);

/**
 * Exact `lg` of the number of count vectors of `alphabet` entries summing
 * to `total`, and its closed-form estimate.
 *
 * # Safety
 * `exact` and `estimate` must each point to one double.
 */
enum PpvqStatus ppvq_header_cost_bits(size_t alphabet,
                                      uint32_t total,
                                      double *exact,
                                      double *estimate);

/**
 * Encodes `counts` as a self-delimiting header. `*len_out` receives the
 * header length, also when `capacity` is too small.
 *
 * # Safety
 * `counts` must point to `len` integers, `buf` to `capacity` bytes and
 * `len_out` to one `size_t`.
 */
enum PpvqStatus ppvq_header_encode(const uint32_t *counts,
                                   size_t len,
                                   uint8_t *buf,
                                   size_t capacity,
                                   size_t *len_out);

/**
 * Decodes a header from the start of `buf`. Writes the alphabet size to
 * `*alphabet_out` (also when `capacity` is too small), the counts to
 * `counts_out`, their sum to `*total_out` and the header length to
 * `*consumed_out`.
 *
 * # Safety
 * `buf` must point to `len` bytes, `counts_out` to `capacity` integers and
 * the scalar outputs to one value each.
 */
enum PpvqStatus ppvq_header_decode(const uint8_t *buf,
                                   size_t len,
                                   uint32_t *counts_out,
                                   size_t capacity,
                                   size_t *alphabet_out,
                                   uint32_t *total_out,
                                   size_t *consumed_out);

/**
 * Builds a spread of `kind` (a `PPVQ_SPREAD_*` constant) for `counts`,
 * whose sum must be a power of two. `p` may be null for the fast spread;
 * `iterations` is used by the iterated kind only.
 *
 * # Safety
 * `counts` must point to `len` integers, `p` to `len` doubles or be null,
 * and `out` to one handle slot.
 */
enum PpvqStatus ppvq_spread_new(uint32_t kind,
                                uint32_t iterations,
                                const uint32_t *counts,
                                const double *p,
                                size_t len,
                                struct PpvqSpread **out);

/**
 * Releases a spread; null is ignored.
 *
 * # Safety
 * `spread` must come from [`ppvq_spread_new`] and not be used afterwards.
 */
void ppvq_spread_free(struct PpvqSpread *spread);

/**
 * Number of states `L`, or 0 for a null handle.
 *
 * # Safety
 * `spread` must be null or a live handle.
 */
uint32_t ppvq_spread_states(const struct PpvqSpread *spread);

/**
 * Copies the symbol of each state `L..2L` into `symbols_out`.
 *
 * # Safety
 * `spread` must be a live handle and `symbols_out` point to `capacity`
 * integers.
 */
enum PpvqStatus ppvq_spread_symbols(const struct PpvqSpread *spread,
                                    uint32_t *symbols_out,
                                    size_t capacity);

/**
 * Relative overhead `(bits/symbol - H(p)) / H(p)` of the spread's automaton
 * on an i.i.d. `p` source.
 *
 * # Safety
 * `spread` must be a live handle, `p` point to `len` doubles and `out` to
 * one double.
 */
enum PpvqStatus ppvq_automaton_delta_h(const struct PpvqSpread *spread,
                                       const double *p,
                                       size_t len,
                                       double *out);

/**
 * Builds coding tables for a spread. The spread may be freed afterwards.
 *
 * # Safety
 * `spread` must be a live handle and `out` point to one handle slot.
 */
enum PpvqStatus ppvq_coder_new(const struct PpvqSpread *spread, struct PpvqCoder **out);

/**
 * Releases a coder; null is ignored.
 *
 * # Safety
 * `coder` must come from [`ppvq_coder_new`] and not be used afterwards.
 */
void ppvq_coder_free(struct PpvqCoder *coder);

/**
 * Encodes `symbols[0..len]`. Writes the bit count to `*bits_out` (also when
 * `capacity` is too small; the buffer needs `(bits + 7) / 8` bytes) and the
 * final state, which the decoder starts from, to `*state_out`.
 *
 * # Safety
 * `coder` must be a live handle, `symbols` point to `len` integers, `buf` to
 * `capacity` bytes and the scalar outputs to one value each.
 */
enum PpvqStatus ppvq_coder_encode(const struct PpvqCoder *coder,
                                  const uint32_t *symbols,
                                  size_t len,
                                  uint8_t *buf,
                                  size_t capacity,
                                  uint64_t *bits_out,
                                  uint32_t *state_out);

/**
 * Decodes `len` symbols from `bits` bits of `buf`, starting at `state`.
 * Fails unless the whole stream is consumed.
 *
 * # Safety
 * `coder` must be a live handle, `buf` point to `(bits + 7) / 8` bytes and
 * `symbols_out` to `len` integers.
 */
enum PpvqStatus ppvq_coder_decode(const struct PpvqCoder *coder,
                                  const uint8_t *buf,
                                  uint64_t bits,
                                  uint32_t state,
                                  uint32_t *symbols_out,
                                  size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPVQ_H */
