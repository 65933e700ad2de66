#ifndef FRACPOW_H
#define FRACPOW_H

/* Generated by cbindgen from the fracpow-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
#include <stdint.h>
#include <stddef.h>

// Execution mode selector for [`fp_measure_power`].
typedef enum FpMode {
  FP_MODE_STANDARD = 0,
  FP_MODE_INVERSE_FREE = 1,
  // Requires a prime fixture and an integral exponent.
  FP_MODE_EXACT_RATIONAL = 2,
} FpMode;

// Status codes; nonzero means the out-parameters were not written.
typedef enum FpStatus {
  FP_STATUS_OK = 0,
  // Unspecified internal failure (a bug, not bad input).
  FP_STATUS_INTERNAL = 1,
  // Invalid argument, fixture, gap promise or premise.
  FP_STATUS_INVALID = 2,
  // Width or size limit exceeded.
  FP_STATUS_RESOURCE = 3,
} FpStatus;

// Opaque fixture handle; create with one of the `fp_fixture_*` constructors
// and release with [`fp_fixture_free`].
typedef struct FpFixture FpFixture;

// Aggregated statistics of one seeded error measurement.
typedef struct FpRunStats {
  // Max pure-state trace distance to the exact spectral oracle.
  double max_err;
  double mean_err;
  // Largest ancilla weight discarded by the all-zeros projection.
  double max_residual;
  // Query counts of one run: plain, controlled, inverse, controlled-inverse.
  uint64_t calls_u;
  uint64_t calls_cu;
  uint64_t calls_uinv;
  uint64_t calls_cuinv;
  uint32_t dim;
  double gap;
} FpRunStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Seeded fixture with eigenphases on the 1/2^m grid and a Haar eigenbasis.
//
// # Safety
// `out` must be a valid pointer to an `FpFixture*`.
enum FpStatus fp_fixture_dyadic(uint32_t dim, uint32_t m, uint64_t seed, struct FpFixture **out);

// The fixed 1-qubit fixture with eigenphases {0, 1/3}.
//
// # Safety
// `out` must be a valid pointer to an `FpFixture*`.
enum FpStatus fp_fixture_third(uint64_t seed, struct FpFixture **out);

// The quantum Fourier transform on `qubits` qubits as a fixture.
//
// # Safety
// `out` must be a valid pointer to an `FpFixture*`.
enum FpStatus fp_fixture_qft(uint32_t qubits, struct FpFixture **out);

// Prime-denominator spectrum over the first `b` primes.
//
// # Safety
// `out` must be a valid pointer to an `FpFixture*`.
enum FpStatus fp_fixture_prime(uint32_t b, uint32_t dim, uint64_t seed, struct FpFixture **out);

// Loads a fixture from a JSON document (the CLI `file:` schema:
// `{dim, eigvecs: [[re,im],...] row-major, eigphases, gap}`).
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum FpStatus fp_fixture_from_json(const char *json, struct FpFixture **out);

// Releases a fixture handle. Accepts NULL.
//
// # Safety
// `fx` must be NULL or a pointer obtained from an `fp_fixture_*` constructor,
// not freed before.
void fp_fixture_free(struct FpFixture *fx);

// Hilbert-space dimension of the fixture; 0 on NULL.
//
// # Safety
// `fx` must be NULL or a live fixture handle.
uint32_t fp_fixture_dim(const struct FpFixture *fx);

// Declared spectral gap of the fixture; 0 on NULL.
//
// # Safety
// `fx` must be NULL or a live fixture handle.
double fp_fixture_gap(const struct FpFixture *fx);

// Runs `U^t` on `samples` seeded Haar inputs and writes the aggregated error
// and query statistics. `r = 0` selects the default repetition count 2m+1.
// In `ExactRational` mode `t` must be a nonnegative integer below 2^53.
//
// # Safety
// `fx` must be a live fixture handle and `out` a valid stats pointer.
enum FpStatus fp_measure_power(const struct FpFixture *fx,
                               double t,
                               uint32_t m,
                               uint32_t r,
                               enum FpMode mode,
                               uint32_t samples,
                               uint64_t seed,
                               struct FpRunStats *out);

// Static description of a status code.
const char *fp_status_message(enum FpStatus status);

// Library version as a static string.
const char *fp_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FRACPOW_H */
