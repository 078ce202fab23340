//! C ABI for `vacuum-friction`.
//!
//! Every function returns a [`VfStatus`]; on anything but `VF_STATUS_OK` the
//! message is available from [`vf_last_error_message`] on the same thread.
//! Patterns are opaque handles owned by the caller and released with
//! [`vf_pattern_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vacuum_friction::dynamics::{
    mass_excess_analytic, newton_residual, velocity_excess_analytic, Branch, DecayScenario,
};
use vacuum_friction::force::{
    friction_force, friction_force_montecarlo, friction_force_quadrature_primed,
    friction_force_quadrature_unprimed, impulse, naive_doppler_force, rest_frame_force, ForceMethod, ForceResult,
    McSpec,
};
use vacuum_friction::trap::{feasibility_report, IonSpec, Lifetime, TrapSpec};
use vacuum_friction::{
    AngularDensity, Direction, EmissionPattern, Error, QuadratureSpec, TabulatedDensity, Tier, Vec3, Velocity,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfTier {
    FirstOrder = 0,
    Exact = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfMethod {
    ClosedForm = 0,
    QuadratureUnprimed = 1,
    QuadraturePrimed = 2,
    MonteCarlo = 3,
    Naive = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfBranch {
    ConstantMass = 0,
    ConstantVelocity = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VfVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Force in N; `std_error` is zero except for Monte Carlo.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfForceResult {
    pub force: VfVec3,
    pub std_error: VfVec3,
    pub samples: u64,
    pub method: VfMethod,
}

/// First-order values with exact cross-checks. `lifetime_margin` is
/// infinite for an effectively infinite lifetime.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfTrapReport {
    pub epsilon: f64,
    pub omega_ground: f64,
    pub omega_excited: f64,
    pub delta_omega: f64,
    pub separation_time: f64,
    pub period_count: f64,
    pub lifetime_margin: f64,
    pub feasible: bool,
    pub exact_omega_excited: f64,
    pub exact_delta_omega: f64,
    pub exact_separation_time: f64,
    pub exact_period_count: f64,
}

/// Opaque emission pattern.
pub struct VfPattern(EmissionPattern);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VfStatus {
    match e {
        Error::Io(_) => VfStatus::Io,
        e if e.is_numerical() => VfStatus::Numerical,
        _ => VfStatus::InvalidInput,
    }
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), VfStatus>) -> VfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VfStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            VfStatus::Panic
        }
    }
}

fn check<T>(r: vacuum_friction::Result<T>) -> Result<T, VfStatus> {
    r.map_err(|e| {
        let s = status_of(&e);
        set_error(e.to_string());
        s
    })
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, VfStatus> {
    // SAFETY: caller promises a valid pointer or null; null is rejected here.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        VfStatus::NullPointer
    })
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, VfStatus> {
    // SAFETY: as above, for an exclusive output location.
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        VfStatus::NullPointer
    })
}

impl From<Vec3> for VfVec3 {
    fn from(v: Vec3) -> Self {
        VfVec3 { x: v.x, y: v.y, z: v.z }
    }
}

impl From<VfVec3> for Vec3 {
    fn from(v: VfVec3) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

impl From<VfTier> for Tier {
    fn from(t: VfTier) -> Self {
        match t {
            VfTier::FirstOrder => Tier::FirstOrder,
            VfTier::Exact => Tier::Exact,
        }
    }
}

impl From<&ForceResult> for VfForceResult {
    fn from(r: &ForceResult) -> Self {
        VfForceResult {
            force: r.force.into(),
            std_error: r.stderr.into(),
            samples: r.samples,
            method: match r.method {
                ForceMethod::ClosedForm => VfMethod::ClosedForm,
                ForceMethod::QuadratureUnprimed => VfMethod::QuadratureUnprimed,
                ForceMethod::QuadraturePrimed => VfMethod::QuadraturePrimed,
                ForceMethod::MonteCarlo => VfMethod::MonteCarlo,
                ForceMethod::Naive => VfMethod::Naive,
            },
        }
    }
}

fn velocity(v: VfVec3) -> Result<Velocity, VfStatus> {
    check(Velocity::from_vec(v.into()))
}

fn emit_pattern(p: vacuum_friction::Result<EmissionPattern>, out: *mut *mut VfPattern) -> Result<(), VfStatus> {
    let slot = out_ptr(out, "out")?;
    *slot = ptr::null_mut();
    let p = check(p)?;
    *slot = Box::into_raw(Box::new(VfPattern(p)));
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn vf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Isotropic pattern for a transition at `omega0` (rad/s) with decay rate `gamma` (1/s).
#[no_mangle]
pub extern "C" fn vf_pattern_isotropic(omega0: f64, gamma: f64, out: *mut *mut VfPattern) -> VfStatus {
    guard(|| emit_pattern(EmissionPattern::isotropic(omega0, gamma), out))
}

/// Electric-dipole pattern `3 sin^2(psi) / 8 pi` about `axis`.
#[no_mangle]
pub extern "C" fn vf_pattern_dipole(omega0: f64, gamma: f64, axis: VfVec3, out: *mut *mut VfPattern) -> VfStatus {
    guard(|| {
        let axis = check(Direction::new(axis.x, axis.y, axis.z))?;
        emit_pattern(EmissionPattern::dipole(omega0, gamma, axis), out)
    })
}

/// Tabulated pattern from a CSV file with header
/// `cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,weight`.
///
/// # Safety
/// `path` must be a valid nul-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn vf_pattern_from_csv(
    omega0: f64,
    gamma: f64,
    path: *const c_char,
    out: *mut *mut VfPattern,
) -> VfStatus {
    guard(|| {
        let path = non_null(path, "path")?;
        // SAFETY: non-null and nul-terminated by contract.
        let path = unsafe { CStr::from_ptr(path) }.to_str().map_err(|e| {
            set_error(format!("path is not UTF-8: {e}"));
            VfStatus::InvalidInput
        })?;
        let table = check(TabulatedDensity::from_csv_path(Path::new(path)))?;
        emit_pattern(EmissionPattern::new(omega0, gamma, AngularDensity::Tabulated(table)), out)
    })
}

/// Releases a pattern. Null is ignored.
///
/// # Safety
/// `p` must come from a `vf_pattern_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vf_pattern_free(p: *mut VfPattern) {
    if !p.is_null() {
        // SAFETY: created by Box::into_raw in emit_pattern.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Closed-form friction force `-exp(-Gamma t) (hbar omega0 / c^2) Gamma v`.
///
/// # Safety
/// `p` must be a live pattern handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vf_friction_force(
    p: *const VfPattern,
    v: VfVec3,
    t: f64,
    out: *mut VfForceResult,
) -> VfStatus {
    guard(|| {
        let p = non_null(p, "pattern")?;
        let r = check(friction_force(&p.0, velocity(v)?, t))?;
        *out_ptr(out, "out")? = (&r).into();
        Ok(())
    })
}

/// Doppler-only force; isotropic patterns only.
///
/// # Safety
/// As [`vf_friction_force`].
#[no_mangle]
pub unsafe extern "C" fn vf_naive_force(p: *const VfPattern, v: VfVec3, t: f64, out: *mut VfForceResult) -> VfStatus {
    guard(|| {
        let p = non_null(p, "pattern")?;
        let r = check(naive_doppler_force(&p.0, velocity(v)?, t))?;
        *out_ptr(out, "out")? = (&r).into();
        Ok(())
    })
}

/// Rest-frame recoil by quadrature; zero for parity-symmetric patterns.
///
/// # Safety
/// As [`vf_friction_force`].
#[no_mangle]
pub unsafe extern "C" fn vf_rest_frame_force(
    p: *const VfPattern,
    t: f64,
    n_cos: usize,
    n_phi: usize,
    out: *mut VfForceResult,
) -> VfStatus {
    guard(|| {
        let p = non_null(p, "pattern")?;
        let q = check(QuadratureSpec::new(n_cos, n_phi))?;
        let r = check(rest_frame_force(&p.0, t, q))?;
        *out_ptr(out, "out")? = (&r).into();
        Ok(())
    })
}

/// Friction force by quadrature over rest-frame angles, or over lab angles
/// when `primed` is true.
///
/// # Safety
/// As [`vf_friction_force`].
#[no_mangle]
pub unsafe extern "C" fn vf_friction_force_quadrature(
    p: *const VfPattern,
    v: VfVec3,
    t: f64,
    n_cos: usize,
    n_phi: usize,
    tier: VfTier,
    primed: bool,
    out: *mut VfForceResult,
) -> VfStatus {
    guard(|| {
        let p = non_null(p, "pattern")?;
        let q = check(QuadratureSpec::new(n_cos, n_phi))?;
        let v = velocity(v)?;
        let r = if primed {
            check(friction_force_quadrature_primed(&p.0, v, t, q, tier.into()))?
        } else {
            check(friction_force_quadrature_unprimed(&p.0, v, t, q, tier.into()))?
        };
        *out_ptr(out, "out")? = (&r).into();
        Ok(())
    })
}

/// Monte Carlo friction force; bit-identical for a given seed.
///
/// # Safety
/// As [`vf_friction_force`].
#[no_mangle]
pub unsafe extern "C" fn vf_friction_force_montecarlo(
    p: *const VfPattern,
    v: VfVec3,
    t: f64,
    n_samples: u64,
    seed: u64,
    antithetic: bool,
    tier: VfTier,
    out: *mut VfForceResult,
) -> VfStatus {
    guard(|| {
        let p = non_null(p, "pattern")?;
        let mc = check(McSpec::new(n_samples, seed, antithetic))?;
        let r = check(friction_force_montecarlo(&p.0, velocity(v)?, t, mc, tier.into()))?;
        *out_ptr(out, "out")? = (&r).into();
        Ok(())
    })
}

/// Total momentum transferred over the decay, `-(hbar omega0 / c^2) v`.
///
/// # Safety
/// As [`vf_friction_force`].
#[no_mangle]
pub unsafe extern "C" fn vf_impulse(p: *const VfPattern, v: VfVec3, out: *mut VfVec3) -> VfStatus {
    guard(|| {
        let p = non_null(p, "pattern")?;
        let j = check(impulse(&p.0, velocity(v)?))?;
        *out_ptr(out, "out")? = j.into();
        Ok(())
    })
}

fn scenario(branch: VfBranch, omega0: f64, gamma: f64, mass: f64, v: VfVec3) -> Result<DecayScenario, VfStatus> {
    let branch = match branch {
        VfBranch::ConstantMass => Branch::ConstantMass,
        VfBranch::ConstantVelocity => Branch::ConstantVelocity,
    };
    check(DecayScenario::new(branch, omega0, gamma, mass, velocity(v)?))
}

/// Constant-velocity branch: `m(t) - m0` in kg. `t` may be infinite.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_mass_excess(
    omega0: f64,
    gamma: f64,
    mass: f64,
    v: VfVec3,
    t: f64,
    out: *mut f64,
) -> VfStatus {
    guard(|| {
        let s = scenario(VfBranch::ConstantVelocity, omega0, gamma, mass, v)?;
        *out_ptr(out, "out")? = check(mass_excess_analytic(&s, t))?;
        Ok(())
    })
}

/// Constant-mass branch: `v(t) - v0` in m/s. `t` may be infinite.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_velocity_excess(
    omega0: f64,
    gamma: f64,
    mass: f64,
    v: VfVec3,
    t: f64,
    out: *mut VfVec3,
) -> VfStatus {
    guard(|| {
        let s = scenario(VfBranch::ConstantMass, omega0, gamma, mass, v)?;
        *out_ptr(out, "out")? = check(velocity_excess_analytic(&s, t))?.into();
        Ok(())
    })
}

/// `d(m v)/dt - F` along the branch's analytic trajectory.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_newton_residual(
    branch: VfBranch,
    omega0: f64,
    gamma: f64,
    mass: f64,
    v: VfVec3,
    t: f64,
    out: *mut VfVec3,
) -> VfStatus {
    guard(|| {
        let s = scenario(branch, omega0, gamma, mass, v)?;
        *out_ptr(out, "out")? = check(newton_residual(&s, t))?.into();
        Ok(())
    })
}

/// Trap feasibility for an ion of mass `mass` (kg) with transition `nu0_hz`
/// and excited-state lifetime `lifetime_s` (may be infinite) in a trap of
/// ground-state frequency `trap_hz`. A positive finite `epsilon` replaces
/// the value implied by the constants; pass 0 or NaN to keep it.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_trap_report(
    mass: f64,
    nu0_hz: f64,
    lifetime_s: f64,
    trap_hz: f64,
    epsilon: f64,
    out: *mut VfTrapReport,
) -> VfStatus {
    guard(|| {
        let lifetime = if lifetime_s == f64::INFINITY {
            Lifetime::EffectivelyInfinite
        } else {
            Lifetime::Finite(lifetime_s)
        };
        let mut ion = check(IonSpec::new("ion", mass, nu0_hz, lifetime))?;
        if epsilon.is_finite() && epsilon > 0.0 {
            ion = check(ion.with_epsilon(epsilon))?;
        }
        let trap = check(TrapSpec::ground_frequency(trap_hz))?;
        let r = check(feasibility_report(trap, &ion))?;
        *out_ptr(out, "out")? = VfTrapReport {
            epsilon: r.epsilon,
            omega_ground: r.omega_ground,
            omega_excited: r.omega_excited,
            delta_omega: r.delta_omega,
            separation_time: r.separation_time,
            period_count: r.period_count,
            lifetime_margin: r.lifetime_margin.unwrap_or(f64::INFINITY),
            feasible: r.feasible,
            exact_omega_excited: r.exact.omega_excited,
            exact_delta_omega: r.exact.delta_omega,
            exact_separation_time: r.exact.separation_time,
            exact_period_count: r.exact.period_count,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_out_is_reported() {
        let s = vf_pattern_isotropic(1e15, 1.0, ptr::null_mut());
        assert_eq!(s, VfStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(vf_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("out"));
    }

    #[test]
    fn error_is_cleared_on_success() {
        let mut p = ptr::null_mut();
        assert_eq!(vf_pattern_isotropic(-1.0, 1.0, &mut p), VfStatus::InvalidInput);
        assert!(p.is_null());
        assert!(!vf_last_error_message().is_null());
        assert_eq!(vf_pattern_isotropic(1e15, 1.0, &mut p), VfStatus::Ok);
        assert!(vf_last_error_message().is_null());
        unsafe { vf_pattern_free(p) };
    }
}
