//! Vector primitives and the first-order and exact relativistic transforms
//! that map an emitted photon from the emitter's rest frame to the lab frame.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::constants::C;
use crate::error::{Error, Result};

/// Accuracy of a kinematic transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    /// Linear in v/c: Doppler factor (1 + beta cos theta), k' = k + omega v / c^2.
    #[default]
    FirstOrder,
    /// Full Lorentz transformation of the photon wavevector.
    Exact,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::FirstOrder => "first-order",
            Tier::Exact => "exact",
        }
    }
}

/// Plain Cartesian 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// Emitter velocity in the lab frame, m/s. Always subluminal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Velocity(Vec3);

impl Velocity {
    pub const ZERO: Velocity = Velocity(Vec3::ZERO);

    pub fn new(vx: f64, vy: f64, vz: f64) -> Result<Self> {
        Self::from_vec(Vec3::new(vx, vy, vz))
    }

    pub fn from_vec(v: Vec3) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::domain("velocity components must be finite"));
        }
        let speed = v.norm();
        if speed >= C {
            return Err(Error::Superluminal { speed });
        }
        Ok(Velocity(v))
    }

    /// Velocity `beta * c` along `axis`.
    pub fn from_beta(beta: f64, axis: Direction) -> Result<Self> {
        check_beta(beta)?;
        Self::from_vec(axis.vec() * (beta * C))
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }

    pub fn speed(&self) -> f64 {
        self.0.norm()
    }

    pub fn beta(&self) -> f64 {
        self.speed() / C
    }

    pub fn lorentz_factor(&self) -> f64 {
        // beta < 1 by construction
        1.0 / (1.0 - self.beta().powi(2)).sqrt()
    }

    /// Direction of motion, or `None` at rest.
    pub fn direction(&self) -> Option<Direction> {
        Direction::new(self.0.x, self.0.y, self.0.z).ok()
    }

    pub fn scaled(&self, s: f64) -> Result<Velocity> {
        Velocity::from_vec(self.0 * s)
    }
}

/// Unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Direction(Vec3);

impl Direction {
    pub const X: Direction = Direction(Vec3::X);
    pub const Y: Direction = Direction(Vec3::Y);
    pub const Z: Direction = Direction(Vec3::Z);

    /// Normalizes `(nx, ny, nz)`. Fails for zero or non-finite input.
    pub fn new(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let v = Vec3::new(nx, ny, nz);
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain("direction needs a finite, non-zero vector"));
        }
        Ok(Direction(v * (1.0 / n)))
    }

    /// Direction with polar cosine `cos_theta` and azimuth `phi` in the global frame.
    pub fn from_cos_phi(cos_theta: f64, phi: f64) -> Result<Self> {
        check_cos(cos_theta)?;
        let s = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        Direction::new(s * phi.cos(), s * phi.sin(), cos_theta)
    }

    pub fn from_theta_phi(theta: f64, phi: f64) -> Result<Self> {
        check_theta(theta)?;
        Direction::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    pub(crate) fn from_unit_unchecked(v: Vec3) -> Self {
        Direction(v)
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }

    /// Two unit vectors completing a right-handed orthonormal basis `(e1, e2, self)`.
    pub fn orthonormal_basis(&self) -> (Vec3, Vec3) {
        let a = self.0;
        // pick the global axis least aligned with `a`
        let helper = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
            Vec3::X
        } else if a.y.abs() <= a.z.abs() {
            Vec3::Y
        } else {
            Vec3::Z
        };
        let e1 = helper.cross(a);
        let e1 = e1 * (1.0 / e1.norm());
        let e2 = a.cross(e1);
        (e1, e2)
    }

    /// Direction at polar cosine `cos_theta` and azimuth `phi` about `self`.
    pub fn rotate_from_axis(&self, cos_theta: f64, phi: f64) -> Direction {
        let (e1, e2) = self.orthonormal_basis();
        let s = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        let v = e1 * (s * phi.cos()) + e2 * (s * phi.sin()) + self.0 * cos_theta;
        Direction(v * (1.0 / v.norm()))
    }
}

impl Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

/// Photon wavevector, rad/m. Frequency follows from free-space dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveVector(Vec3);

impl WaveVector {
    pub fn new(kx: f64, ky: f64, kz: f64) -> Result<Self> {
        let v = Vec3::new(kx, ky, kz);
        if !v.is_finite() {
            return Err(Error::domain("wavevector components must be finite"));
        }
        Ok(WaveVector(v))
    }

    /// Wavevector of a photon with angular frequency `omega` travelling along `n`.
    pub fn from_direction(n: Direction, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::domain("omega must be finite and non-negative"));
        }
        Ok(WaveVector(n.vec() * (omega / C)))
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    pub fn omega(&self) -> f64 {
        C * self.magnitude()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::domain(format!("beta = {beta} must lie in [0, 1)")))
    }
}

fn check_cos(cos_theta: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&cos_theta) {
        Ok(())
    } else {
        Err(Error::domain(format!("|cos theta| = {} exceeds 1", cos_theta.abs())))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=std::f64::consts::PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::domain(format!("theta = {theta} must lie in [0, pi]")))
    }
}

/// `(1 - beta^2)^(-1/2)`.
pub fn lorentz_factor(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(1.0 / (1.0 - beta * beta).sqrt())
}

/// First-order Doppler shift `omega0 (1 + beta cos theta)`.
pub fn doppler_frequency(omega0: f64, beta: f64, cos_theta: f64) -> Result<f64> {
    if !(omega0.is_finite() && omega0 >= 0.0) {
        return Err(Error::domain("omega0 must be finite and non-negative"));
    }
    check_beta(beta)?;
    check_cos(cos_theta)?;
    Ok(omega0 * (1.0 + beta * cos_theta))
}

/// Relativistic Doppler shift `gamma omega0 (1 + beta cos theta)`, with theta
/// the rest-frame emission angle.
pub fn doppler_frequency_exact(omega0: f64, beta: f64, cos_theta: f64) -> Result<f64> {
    Ok(lorentz_factor(beta)? * doppler_frequency(omega0, beta, cos_theta)?)
}

/// Doppler shift at the given accuracy tier.
pub fn doppler_frequency_tier(omega0: f64, beta: f64, cos_theta: f64, tier: Tier) -> Result<f64> {
    match tier {
        Tier::FirstOrder => doppler_frequency(omega0, beta, cos_theta),
        Tier::Exact => doppler_frequency_exact(omega0, beta, cos_theta),
    }
}

/// Lab-frame `(cos theta', sin theta')` for a photon emitted at rest-frame
/// angle `(cos theta, sin theta)` from the direction of motion.
pub fn aberrate_cos_sin(cos_theta: f64, sin_theta: f64, beta: f64) -> Result<(f64, f64)> {
    check_beta(beta)?;
    check_cos(cos_theta)?;
    let d = 1.0 + beta * cos_theta;
    let cos_p = (cos_theta + beta) / d;
    let sin_p = sin_theta * (1.0 - beta * beta).sqrt() / d;
    Ok((cos_p, sin_p))
}

/// Exact relativistic aberration: rest-frame polar angle to lab-frame polar angle.
pub fn aberrate_exact(theta: f64, beta: f64) -> Result<f64> {
    check_theta(theta)?;
    let (c, s) = aberrate_cos_sin(theta.cos(), theta.sin(), beta)?;
    Ok(s.atan2(c))
}

/// Inverse of [`aberrate_exact`]: lab-frame angle back to the rest frame.
pub fn deaberrate_exact(theta_lab: f64, beta: f64) -> Result<f64> {
    check_theta(theta_lab)?;
    check_beta(beta)?;
    let (c, s) = (theta_lab.cos(), theta_lab.sin());
    let d = 1.0 - beta * c;
    let cos_r = (c - beta) / d;
    let sin_r = s * (1.0 - beta * beta).sqrt() / d;
    Ok(sin_r.atan2(cos_r))
}

/// Exact rest-frame cosine for a lab-frame cosine.
pub fn deaberrate_cos_exact(cos_lab: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_cos(cos_lab)?;
    Ok((cos_lab - beta) / (1.0 - beta * cos_lab))
}

/// First-order rest-frame cosine for a lab-frame cosine,
/// `cos theta = cos theta' - beta (1 - cos^2 theta')`.
pub fn deaberrate_cos_first_order(cos_lab: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_cos(cos_lab)?;
    Ok(cos_lab - beta * (1.0 - cos_lab * cos_lab))
}

pub const BRADLEY_MAX_ITERATIONS: usize = 100;
const BRADLEY_RESIDUAL: f64 = 1e-14;

/// Bradley's aberration: solves `sin(theta - theta') = beta sin(theta')` by the
/// fixed-point iteration `theta'_{n+1} = theta - asin(beta sin theta'_n)`
/// starting from `theta`.
///
/// Only meaningful to first order in beta. The iteration contracts for
/// `beta < 1`, but slowly near 1; it gives up after [`BRADLEY_MAX_ITERATIONS`].
pub fn aberrate_bradley(theta: f64, beta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_beta(beta)?;
    let residual = |tp: f64| ((theta - tp).sin() - beta * tp.sin()).abs();
    let mut tp = theta;
    for _ in 0..BRADLEY_MAX_ITERATIONS {
        if residual(tp) < BRADLEY_RESIDUAL {
            return Ok(tp);
        }
        let next = theta - (beta * tp.sin()).asin();
        if next == tp {
            break;
        }
        tp = next;
    }
    if residual(tp) < BRADLEY_RESIDUAL {
        Ok(tp)
    } else {
        Err(Error::NonConvergence {
            iterations: BRADLEY_MAX_ITERATIONS,
            beta,
        })
    }
}

/// First-order Bradley form `theta - beta sin theta`.
pub fn aberrate_bradley_linear(theta: f64, beta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_beta(beta)?;
    Ok(theta - beta * theta.sin())
}

/// `dOmega / dOmega' = (1 + beta cos theta)^2`, first order in beta.
pub fn solid_angle_jacobian(cos_theta: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_cos(cos_theta)?;
    Ok((1.0 + beta * cos_theta).powi(2))
}

/// Exact `dOmega / dOmega' = gamma^2 (1 + beta cos theta)^2`.
pub fn solid_angle_jacobian_exact(cos_theta: f64, beta: f64) -> Result<f64> {
    let g = lorentz_factor(beta)?;
    Ok(g * g * solid_angle_jacobian(cos_theta, beta)?)
}

/// First-order wavevector transform `k' = k + (omega / c^2) v`.
pub fn transform_wavevector(k: WaveVector, v: Velocity) -> WaveVector {
    let omega = k.omega();
    WaveVector(k.vec() + v.vec() * (omega / (C * C)))
}

/// Lorentz transformation of a photon wavevector from the emitter rest frame
/// into a lab frame in which the emitter moves at `v`.
pub fn transform_wavevector_exact(k: WaveVector, v: Velocity) -> WaveVector {
    let Some(axis) = v.direction() else {
        return k;
    };
    let beta = v.beta();
    let gamma = v.lorentz_factor();
    let kv = k.vec();
    let k_par = kv.dot(axis.vec());
    let k_perp = kv - axis.vec() * k_par;
    let omega_over_c = k.magnitude();
    let k_par_lab = gamma * (k_par + beta * omega_over_c);
    WaveVector(k_perp + axis.vec() * k_par_lab)
}

pub fn transform_wavevector_tier(k: WaveVector, v: Velocity, tier: Tier) -> WaveVector {
    match tier {
        Tier::FirstOrder => transform_wavevector(k, v),
        Tier::Exact => transform_wavevector_exact(k, v),
    }
}

/// `k' - k` for the given tier, formed without subtracting `k`.
pub fn wavevector_shift(k: WaveVector, v: Velocity, tier: Tier) -> Vec3 {
    match tier {
        Tier::FirstOrder => v.vec() * (k.omega() / (C * C)),
        Tier::Exact => {
            let Some(axis) = v.direction() else {
                return Vec3::ZERO;
            };
            let beta = v.beta();
            let gamma = v.lorentz_factor();
            // gamma - 1 = gamma^2 beta^2 / (gamma + 1)
            let gm1 = gamma * gamma * beta * beta / (gamma + 1.0);
            let k_par = k.vec().dot(axis.vec());
            axis.vec() * (gm1 * k_par + gamma * beta * k.magnitude())
        }
    }
}

/// Spherical-coordinate form of the lab wavevector: first-order Doppler
/// magnitude `(omega/c)(1 + beta cos theta)` along the exactly aberrated
/// direction, azimuth about the velocity preserved.
///
/// Agrees with [`transform_wavevector`] to first order in beta.
pub fn transform_wavevector_spherical(k: WaveVector, v: Velocity) -> Result<WaveVector> {
    let Some(axis) = v.direction() else {
        return Ok(k);
    };
    let omega = k.omega();
    if omega == 0.0 {
        return Ok(k);
    }
    let beta = v.beta();
    let n = k.vec() * (1.0 / k.magnitude());
    let cos_t = n.dot(axis.vec()).clamp(-1.0, 1.0);
    let perp = n - axis.vec() * cos_t;
    let sin_t = perp.norm();
    let (cos_p, sin_p) = aberrate_cos_sin(cos_t, sin_t, beta)?;
    let perp_unit = if sin_t > 0.0 { perp * (1.0 / sin_t) } else { Vec3::ZERO };
    let dir = perp_unit * sin_p + axis.vec() * cos_p;
    let mag = doppler_frequency(omega, beta, cos_t)? / C;
    Ok(WaveVector(dir * mag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn doppler_examples() {
        assert_eq!(doppler_frequency(4.034e15, 0.0, 0.5).unwrap(), 4.034e15);
        assert_relative_eq!(doppler_frequency(1.0, 0.01, -1.0).unwrap(), 0.99, epsilon = 1e-15);
        // 4.034e15 * (1 + 1e-3 * 0.7) = 4.034e15 * 1.0007
        assert_relative_eq!(
            doppler_frequency(4.034e15, 1e-3, 0.7).unwrap(),
            4.0368238e15,
            max_relative = 1e-15
        );
    }

    #[test]
    fn doppler_domain_errors() {
        assert!(doppler_frequency(1.0, 0.1, 1.0 + 1e-12).is_err());
        assert!(doppler_frequency(1.0, 1.0, 0.0).is_err());
        assert!(doppler_frequency(1.0, -0.1, 0.0).is_err());
        assert!(doppler_frequency(-1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn exact_doppler_carries_gamma() {
        let w = doppler_frequency_exact(1.0, 0.6, 1.0).unwrap();
        assert_relative_eq!(w, 1.25 * 1.6, epsilon = 1e-15);
    }

    #[test]
    fn aberration_examples() {
        assert_eq!(aberrate_exact(0.0, 0.3).unwrap(), 0.0);
        assert_relative_eq!(aberrate_exact(FRAC_PI_2, 0.1).unwrap(), 0.1f64.acos(), epsilon = 1e-15);
        assert_relative_eq!(0.1f64.acos(), 1.4706289056333368, epsilon = 1e-15);

        // independent route: tan(theta'/2) = sqrt((1-b)/(1+b)) tan(theta/2)
        let (theta, beta) = (2.0f64, 0.05f64);
        let oracle = 2.0 * (((1.0 - beta) / (1.0 + beta)).sqrt() * (theta / 2.0).tan()).atan();
        let got = aberrate_exact(theta, beta).unwrap();
        assert_relative_eq!(got, oracle, epsilon = 1e-14);
        let (c, s) = aberrate_cos_sin(theta.cos(), theta.sin(), beta).unwrap();
        assert!((c * c + s * s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn aberration_domain_errors() {
        assert!(aberrate_exact(-0.1, 0.1).is_err());
        assert!(aberrate_exact(PI + 0.1, 0.1).is_err());
        assert!(aberrate_exact(1.0, 1.0).is_err());
    }

    #[test]
    fn bradley_examples() {
        for theta in [0.0, 0.3, 1.0, 2.5, PI] {
            assert_eq!(aberrate_bradley(theta, 0.0).unwrap(), theta);
        }
        let got = aberrate_bradley(FRAC_PI_2, 0.01).unwrap();
        assert!((got - (FRAC_PI_2 - 0.01)).abs() < 1e-4);
        let lin = aberrate_bradley_linear(FRAC_PI_2, 0.01).unwrap();
        assert_relative_eq!(lin, FRAC_PI_2 - 0.01, epsilon = 1e-15);
    }

    #[test]
    fn bradley_converges_to_exact_quadratically() {
        let theta = 1.0;
        let err = |b: f64| (aberrate_bradley(theta, b).unwrap() - aberrate_exact(theta, b).unwrap()).abs();
        let (e1, e2) = (err(1e-3), err(5e-4));
        assert!(e1 <= 1e-6, "C ~ 1 bound: {e1}");
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn bradley_reports_non_convergence() {
        // contraction factor ~beta: 0.9999^100 is nowhere near 1e-14
        let r = aberrate_bradley(2.0, 0.9999);
        assert!(matches!(r, Err(Error::NonConvergence { .. })), "{r:?}");
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(solid_angle_jacobian(0.3, 0.0).unwrap(), 1.0);
        assert_eq!(solid_angle_jacobian(0.0, 0.5).unwrap(), 1.0);
        assert_relative_eq!(solid_angle_jacobian(1.0, 0.1).unwrap(), 1.21, epsilon = 1e-15);
        assert!(solid_angle_jacobian(1.5, 0.1).is_err());
    }

    #[test]
    fn jacobian_matches_numerical_derivative() {
        // d(cos theta)/d(cos theta') by central differences on the inverse map
        let h = 1e-5;
        for &beta in &[1e-4, 1e-3] {
            for i in 0..=20 {
                let cp = -0.99 + 1.98 * i as f64 / 20.0;
                let d = (deaberrate_cos_exact(cp + h, beta).unwrap()
                    - deaberrate_cos_exact(cp - h, beta).unwrap())
                    / (2.0 * h);
                let c = deaberrate_cos_exact(cp, beta).unwrap();
                let j = solid_angle_jacobian(c, beta).unwrap();
                assert!((d - j).abs() < 2.0 * beta * beta, "beta={beta} cp={cp}: {d} vs {j}");
                let jx = solid_angle_jacobian_exact(c, beta).unwrap();
                assert!((d - jx).abs() < 1e-9, "exact jacobian: {d} vs {jx}");
            }
        }
    }

    #[test]
    fn lorentz_examples() {
        assert_eq!(lorentz_factor(0.0).unwrap(), 1.0);
        assert_relative_eq!(lorentz_factor(0.6).unwrap(), 1.25, epsilon = 1e-15);
        assert!((lorentz_factor(1e-5).unwrap() - (1.0 + 5e-11)).abs() < 1e-15);
        assert!(lorentz_factor(1.0).is_err());
        assert!(lorentz_factor(1.5).is_err());
    }

    #[test]
    fn velocity_rejects_superluminal() {
        assert!(matches!(Velocity::new(0.0, 0.0, C), Err(Error::Superluminal { .. })));
        assert!(Velocity::new(0.0, 0.0, f64::NAN).is_err());
        let v = Velocity::new(0.0, 0.0, 0.6 * C).unwrap();
        assert_relative_eq!(v.beta(), 0.6, epsilon = 1e-15);
        assert_relative_eq!(v.lorentz_factor(), 1.25, epsilon = 1e-14);
    }

    #[test]
    fn direction_is_normalized() {
        let n = Direction::new(3.0, 4.0, 12.0).unwrap();
        assert!((n.vec().norm() - 1.0).abs() < 1e-12);
        assert!(Direction::new(0.0, 0.0, 0.0).is_err());
        let (e1, e2) = n.orthonormal_basis();
        assert!(e1.dot(n.vec()).abs() < 1e-15 && e2.dot(n.vec()).abs() < 1e-15);
        assert!(e1.dot(e2).abs() < 1e-15);
        assert!((e1.cross(e2) - n.vec()).norm() < 1e-15);
    }

    #[test]
    fn wavevector_examples() {
        let w0 = 4.0e15;
        let k = WaveVector::from_direction(Direction::new(0.3, -0.2, 0.9).unwrap(), w0).unwrap();
        assert_relative_eq!(k.omega(), w0, max_relative = 1e-15);
        assert_eq!(transform_wavevector(k, Velocity::ZERO), k);
        assert_eq!(transform_wavevector_exact(k, Velocity::ZERO), k);

        let beta = 1e-3;
        let v = Velocity::from_beta(beta, Direction::Z).unwrap();
        let kf = WaveVector::from_direction(Direction::Z, w0).unwrap();
        let kp = transform_wavevector(kf, v);
        assert_relative_eq!(kp.vec().z, w0 / C * (1.0 + beta), max_relative = 1e-15);
        assert_eq!(kp.vec().x, 0.0);
    }

    #[test]
    fn spherical_form_matches_additive_at_first_order() {
        let w0 = 4.0e15;
        let n = Direction::from_theta_phi(PI / 3.0, 0.7).unwrap();
        let k = WaveVector::from_direction(n, w0).unwrap();
        let v = Velocity::new(0.0, 0.0, 300.0).unwrap();
        let beta = v.beta();
        let add = transform_wavevector(k, v);
        let sph = transform_wavevector_spherical(k, v).unwrap();
        let diff = (add.vec() - sph.vec()).norm() / k.magnitude();
        assert!(diff <= 5.0 * beta * beta, "{diff}");
    }

    #[test]
    fn exact_transform_is_null_and_aberrates() {
        let w0 = 1.0e15;
        let beta = 0.4;
        let v = Velocity::from_beta(beta, Direction::Z).unwrap();
        let theta = 1.1;
        let k = WaveVector::from_direction(Direction::from_theta_phi(theta, 0.0).unwrap(), w0).unwrap();
        let kp = transform_wavevector_exact(k, v);
        let cos_lab = kp.vec().z / kp.magnitude();
        assert_relative_eq!(cos_lab, aberrate_exact(theta, beta).unwrap().cos(), epsilon = 1e-14);
        assert_relative_eq!(
            kp.omega(),
            doppler_frequency_exact(w0, beta, theta.cos()).unwrap(),
            max_relative = 1e-14
        );
    }

    proptest! {
        #[test]
        fn aberration_sin_cos_consistent(theta in 0.0..=PI, beta in 0.0..0.999f64) {
            let (c, s) = aberrate_cos_sin(theta.cos(), theta.sin(), beta).unwrap();
            prop_assert!((c * c + s * s - 1.0).abs() < 1e-12);
            prop_assert!(s >= 0.0);
        }

        #[test]
        fn aberration_round_trip(theta in 0.0..=PI, beta in 0.0..=0.5f64) {
            let tp = aberrate_exact(theta, beta).unwrap();
            let back = deaberrate_exact(tp, beta).unwrap();
            prop_assert!((back - theta).abs() < 1e-10, "{} vs {}", back, theta);
        }

        #[test]
        fn bradley_close_to_exact(theta in 0.0..=PI, beta in 0.0..=0.01f64) {
            let b = aberrate_bradley(theta, beta).unwrap();
            let e = aberrate_exact(theta, beta).unwrap();
            prop_assert!((b - e).abs() <= 2.0 * beta * beta + 1e-15);
        }

        #[test]
        fn spherical_vs_additive(theta in 0.0..=PI, phi in 0.0..(2.0 * PI), beta in 0.0..=0.01f64,
                                 ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in 0.1..1.0f64) {
            let k = WaveVector::from_direction(Direction::from_theta_phi(theta, phi).unwrap(), 3.0e15).unwrap();
            let v = Velocity::from_beta(beta, Direction::new(ax, ay, az).unwrap()).unwrap();
            let add = transform_wavevector(k, v);
            let sph = transform_wavevector_spherical(k, v).unwrap();
            let rel = (add.vec() - sph.vec()).norm() / k.magnitude();
            prop_assert!(rel <= 5.0 * beta * beta + 1e-15, "{}", rel);
        }
    }
}
