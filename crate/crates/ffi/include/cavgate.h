#ifndef CAVGATE_H
#define CAVGATE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum CgStatus {
  CG_STATUS_OK = 0,
  CG_STATUS_NULL_POINTER = 1,
  CG_STATUS_INVALID_ARGUMENT = 2,
  CG_STATUS_NUMERICAL = 3,
  CG_STATUS_SERIALIZATION = 4,
  CG_STATUS_PANIC = 5,
} CgStatus;

// Which gate to compile.
typedef enum CgGateKind {
  // n-qubit controlled phase gate.
  CG_GATE_KIND_PHASE = 0,
  // n-qubit Toffoli gate (phase gate conjugated by target pulses).
  CG_GATE_KIND_TOFFOLI = 1,
} CgGateKind;

// Opaque handle to a compiled gate schedule.
typedef struct CgSchedule CgSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Compiles a gate on `n` qubits with the default physical parameters.
//
// On success `*out` owns a new handle that must be released with
// `cg_schedule_free`.
enum CgStatus cg_schedule_compile(uint32_t n, enum CgGateKind kind, struct CgSchedule **out);

// Restores a schedule from its JSON form.
enum CgStatus cg_schedule_from_json(const char *json, struct CgSchedule **out);

// Releases a handle. Passing null is a no-op.
void cg_schedule_free(struct CgSchedule *handle);

// Serializes a schedule to JSON. Free the result with `cg_string_free`.
enum CgStatus cg_schedule_to_json(const struct CgSchedule *handle, char **out);

// Total gate time in seconds.
enum CgStatus cg_schedule_duration(const struct CgSchedule *handle, double *out_seconds);

// Number of basic operations (pulses and interactions, retuning gaps excluded).
enum CgStatus cg_schedule_operation_count(const struct CgSchedule *handle, size_t *out);

// Hilbert space dimension of the schedule's layout.
enum CgStatus cg_schedule_dimension(const struct CgSchedule *handle, size_t *out);

// Runs every computational basis state through the ideal engine and reports
// the largest deviation from a controlled phase flip and the largest leakage.
//
// Only meaningful for phase-gate schedules; a Toffoli schedule reports a
// non-diagonal table through a phase error of infinity.
enum CgStatus cg_schedule_ideal_check(const struct CgSchedule *handle,
                                      double *out_phase_error,
                                      double *out_leakage);

// Noisy fidelity of the `n`-qubit phase gate with default parameters.
//
// `dt_ns` lengthens every interaction, `c` sets the ancilla coupling to
// `c·g`. `photon_cutoff` is the highest cavity Fock level kept.
enum CgStatus cg_simulate_fidelity(uint32_t n,
                                   uint32_t photon_cutoff,
                                   double dt_ns,
                                   double c,
                                   double *out_fidelity);

// Message for the last failed call on this thread, or an empty string.
//
// The pointer stays valid until the next library call on the same thread.
const char *cg_last_error_message(void);

// Releases a string returned by the library. Passing null is a no-op.
void cg_string_free(char *s);

// Library version as a static NUL-terminated string.
const char *cg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVGATE_H */
