#ifndef VACUUM_FRICTION_H
#define VACUUM_FRICTION_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VfStatus {
  VF_STATUS_OK = 0,
  VF_STATUS_NULL_POINTER = 1,
  VF_STATUS_INVALID_INPUT = 2,
  VF_STATUS_NUMERICAL = 3,
  VF_STATUS_IO = 4,
  VF_STATUS_PANIC = 5,
} VfStatus;

typedef enum VfMethod {
  VF_METHOD_CLOSED_FORM = 0,
  VF_METHOD_QUADRATURE_UNPRIMED = 1,
  VF_METHOD_QUADRATURE_PRIMED = 2,
  VF_METHOD_MONTE_CARLO = 3,
  VF_METHOD_NAIVE = 4,
} VfMethod;

typedef enum VfTier {
  VF_TIER_FIRST_ORDER = 0,
  VF_TIER_EXACT = 1,
} VfTier;

typedef enum VfBranch {
  VF_BRANCH_CONSTANT_MASS = 0,
  VF_BRANCH_CONSTANT_VELOCITY = 1,
} VfBranch;

/**
 * Opaque emission pattern.
 */
typedef struct VfPattern VfPattern;

typedef struct VfVec3 {
  double x;
  double y;
  double z;
} VfVec3;

/**
 * Force in N; `std_error` is zero except for Monte Carlo.
 */
typedef struct VfForceResult {
  struct VfVec3 force;
  struct VfVec3 std_error;
  uint64_t samples;
  enum VfMethod method;
} VfForceResult;

/**
 * First-order values with exact cross-checks. `lifetime_margin` is
 * infinite for an effectively infinite lifetime.
 */
typedef struct VfTrapReport {
  double epsilon;
  double omega_ground;
  double omega_excited;
  double delta_omega;
  double separation_time;
  double period_count;
  double lifetime_margin;
  bool feasible;
  double exact_omega_excited;
  double exact_delta_omega;
  double exact_separation_time;
  double exact_period_count;
} VfTrapReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *vf_last_error_message(void);

/**
 * Isotropic pattern for a transition at `omega0` (rad/s) with decay rate `gamma` (1/s).
 */
enum VfStatus vf_pattern_isotropic(double omega0, double gamma, struct VfPattern **out);

/**
 * Electric-dipole pattern `3 sin^2(psi) / 8 pi` about `axis`.
 */
enum VfStatus vf_pattern_dipole(double omega0,
                                double gamma,
                                struct VfVec3 axis,
                                struct VfPattern **out);

/**
 * Tabulated pattern from a CSV file with header
 * `cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,weight`.
 *
 * # Safety
 * `path` must be a valid nul-terminated UTF-8 string.
 */
enum VfStatus vf_pattern_from_csv(double omega0,
                                  double gamma,
                                  const char *path,
                                  struct VfPattern **out);

/**
 * Releases a pattern. Null is ignored.
 *
 * # Safety
 * `p` must come from a `vf_pattern_*` constructor and not be freed twice.
 */
void vf_pattern_free(struct VfPattern *p);

/**
 * Closed-form friction force `-exp(-Gamma t) (hbar omega0 / c^2) Gamma v`.
 *
 * # Safety
 * `p` must be a live pattern handle and `out` writable.
 */
enum VfStatus vf_friction_force(const struct VfPattern *p,
                                struct VfVec3 v,
                                double t,
                                struct VfForceResult *out);

/**
 * Doppler-only force; isotropic patterns only.
 *
 * # Safety
 * As [`vf_friction_force`].
 */
enum VfStatus vf_naive_force(const struct VfPattern *p,
                             struct VfVec3 v,
                             double t,
                             struct VfForceResult *out);

/**
 * Rest-frame recoil by quadrature; zero for parity-symmetric patterns.
 *
 * # Safety
 * As [`vf_friction_force`].
 */
enum VfStatus vf_rest_frame_force(const struct VfPattern *p,
                                  double t,
                                  size_t n_cos,
                                  size_t n_phi,
                                  struct VfForceResult *out);

/**
 * Friction force by quadrature over rest-frame angles, or over lab angles
 * when `primed` is true.
 *
 * # Safety
 * As [`vf_friction_force`].
 */
enum VfStatus vf_friction_force_quadrature(const struct VfPattern *p,
                                           struct VfVec3 v,
                                           double t,
                                           size_t n_cos,
                                           size_t n_phi,
                                           enum VfTier tier,
                                           bool primed,
                                           struct VfForceResult *out);

/**
 * Monte Carlo friction force; bit-identical for a given seed.
 *
 * # Safety
 * As [`vf_friction_force`].
 */
enum VfStatus vf_friction_force_montecarlo(const struct VfPattern *p,
                                           struct VfVec3 v,
                                           double t,
                                           uint64_t n_samples,
                                           uint64_t seed,
                                           bool antithetic,
                                           enum VfTier tier,
                                           struct VfForceResult *out);

/**
 * Total momentum transferred over the decay, `-(hbar omega0 / c^2) v`.
 *
 * # Safety
 * As [`vf_friction_force`].
 */
enum VfStatus vf_impulse(const struct VfPattern *p, struct VfVec3 v, struct VfVec3 *out);

/**
 * Constant-velocity branch: `m(t) - m0` in kg. `t` may be infinite.
 *
 * # Safety
 * `out` must be writable.
 */
enum VfStatus vf_mass_excess(double omega0,
                             double gamma,
                             double mass,
                             struct VfVec3 v,
                             double t,
                             double *out);

/**
 * Constant-mass branch: `v(t) - v0` in m/s. `t` may be infinite.
 *
 * # Safety
 * `out` must be writable.
 */
enum VfStatus vf_velocity_excess(double omega0,
                                 double gamma,
                                 double mass,
                                 struct VfVec3 v,
                                 double t,
                                 struct VfVec3 *out);

/**
 * `d(m v)/dt - F` along the branch's analytic trajectory.
 *
 * # Safety
 * `out` must be writable.
 */
enum VfStatus vf_newton_residual(enum VfBranch branch,
                                 double omega0,
                                 double gamma,
                                 double mass,
                                 struct VfVec3 v,
                                 double t,
                                 struct VfVec3 *out);

/**
 * Trap feasibility for an ion of mass `mass` (kg) with transition `nu0_hz`
 * and excited-state lifetime `lifetime_s` (may be infinite) in a trap of
 * ground-state frequency `trap_hz`. A positive finite `epsilon` replaces
 * the value implied by the constants; pass 0 or NaN to keep it.
 *
 * # Safety
 * `out` must be writable.
 */
enum VfStatus vf_trap_report(double mass,
                             double nu0_hz,
                             double lifetime_s,
                             double trap_hz,
                             double epsilon,
                             struct VfTrapReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VACUUM_FRICTION_H */
