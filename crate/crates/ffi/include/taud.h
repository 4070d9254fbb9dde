#ifndef TAUD_H
#define TAUD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum TaudStatus {
  TAUD_STATUS_OK = 0,
  TAUD_STATUS_NULL_POINTER = 1,
  TAUD_STATUS_INVALID_UTF8 = 2,
  TAUD_STATUS_PARSE = 3,
  TAUD_STATUS_DIMENSION = 4,
  TAUD_STATUS_EVALUATION = 5,
  TAUD_STATUS_IO = 6,
  TAUD_STATUS_INVALID_ARGUMENT = 7,
  TAUD_STATUS_PANIC = 8,
} TaudStatus;

/*
 A trained policy evaluated with its deterministic action.
 */
typedef struct TaudPolicy TaudPolicy;

/*
 A parsed task specification.
 */
typedef struct TaudSpec TaudSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next call into this library on the same thread.
 */
const char *taud_last_error(void);

/*
 Parses `text` over states of dimension `n_x` into `*out`.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TaudStatus taud_spec_parse(const char *text, size_t n_x, struct TaudSpec **out);

/*
 # Safety
 `spec` must be null or a handle from [`taud_spec_parse`] not yet freed.
 */
void taud_spec_free(struct TaudSpec *spec);

/*
 Window length `tau`; 0 for a null handle.

 # Safety
 `spec` must be null or a live handle.
 */
size_t taud_spec_tau(const struct TaudSpec *spec);

/*
 Episode horizon `T`; 0 for a null handle.

 # Safety
 `spec` must be null or a live handle.
 */
size_t taud_spec_horizon(const struct TaudSpec *spec);

/*
 Number of distinct sub-formulae, which is the flag count.

 # Safety
 `spec` must be null or a live handle.
 */
size_t taud_spec_num_subformulas(const struct TaudSpec *spec);

/*
 # Safety
 `spec` must be null or a live handle.
 */
size_t taud_spec_state_dim(const struct TaudSpec *spec);

/*
 Robustness at instant `t` of a trace of `len` states.

 # Safety
 `states` must hold `len * n_x` doubles and `out` must be valid.
 */
enum TaudStatus taud_spec_robustness(const struct TaudSpec *spec,
                                     const double *states,
                                     size_t len,
                                     size_t t,
                                     double *out);

/*
 Whether the trace satisfies the specification at `t` (robustness >= 0).

 # Safety
 `states` must hold `len * n_x` doubles and `out` must be valid.
 */
enum TaudStatus taud_spec_satisfies(const struct TaudSpec *spec,
                                    const double *states,
                                    size_t len,
                                    size_t t,
                                    bool *out);

/*
 Reward of a window of exactly `tau` states.

 # Safety
 `window` must hold `tau * n_x` doubles and `out` must be valid.
 */
enum TaudStatus taud_spec_reward(const struct TaudSpec *spec,
                                 double beta,
                                 const double *window,
                                 size_t tau,
                                 double *out);

/*
 Writes the network input `(current state, flags, action history)` of the
 extended state made of `tau` states and `d` actions of width `n_u`.
 `out_len` must be at least `n_x + M + d * n_u`.

 # Safety
 Buffers must hold the number of doubles their sizes describe.
 */
enum TaudStatus taud_preprocess(const struct TaudSpec *spec,
                                const double *window,
                                size_t tau,
                                const double *history,
                                size_t d,
                                size_t n_u,
                                double *out,
                                size_t out_len);

/*
 Loads an actor network file and attaches the action box `[low, high]`.

 # Safety
 `path` must be NUL-terminated, `low`/`high` must hold `n_u` doubles and
 `out` must be valid.
 */
enum TaudStatus taud_policy_load(const char *path,
                                 const double *low,
                                 const double *high,
                                 size_t n_u,
                                 struct TaudPolicy **out);

/*
 # Safety
 `policy` must be null or a handle from [`taud_policy_load`] not yet freed.
 */
void taud_policy_free(struct TaudPolicy *policy);

/*
 # Safety
 `policy` must be null or a live handle.
 */
size_t taud_policy_input_dim(const struct TaudPolicy *policy);

/*
 # Safety
 `policy` must be null or a live handle.
 */
size_t taud_policy_action_dim(const struct TaudPolicy *policy);

/*
 Deterministic action for one network input.

 # Safety
 `input` must hold `input_len` doubles and `action` `action_len` doubles.
 */
enum TaudStatus taud_policy_act(const struct TaudPolicy *policy,
                                const double *input,
                                size_t input_len,
                                double *action,
                                size_t action_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAUD_H */
