//! Momentum balance of a decaying emitter under the friction force.
//!
//! `d(m v)/dt = -exp(-Gamma t) (hbar omega0 / c^2) Gamma v` has two readings:
//! hold the mass fixed and the velocity decays, or hold the velocity fixed
//! and the mass decays by `hbar omega0 / c^2`. Both are integrated here.
//!
//! The relative changes are of order 1e-11, so trajectories are carried in
//! excess variables (`m - m0`, `v - v0`) rather than absolute ones.

use std::io::Write;

use serde::Serialize;

use crate::constants::{C, HBAR};
use crate::error::{Error, Result};
use crate::kinematics::{Vec3, Velocity};

/// Which quantity is held fixed while the force acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Newton's law as `F = m a`: the velocity decays (the paradoxical reading).
    ConstantMass,
    /// `F = dp/dt` with `v` fixed: the rest mass decays.
    ConstantVelocity,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::ConstantMass => "constant-mass",
            Branch::ConstantVelocity => "constant-velocity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomState {
    /// kg
    pub mass: f64,
    pub velocity: Velocity,
    /// s
    pub time: f64,
    pub excited_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayScenario {
    branch: Branch,
    omega0: f64,
    gamma_total: f64,
    initial: AtomState,
}

impl DecayScenario {
    /// Atom prepared in the excited state at t = 0.
    pub fn new(branch: Branch, omega0: f64, gamma_total: f64, mass: f64, velocity: Velocity) -> Result<Self> {
        if !(omega0.is_finite() && omega0 >= 0.0) {
            return Err(Error::domain("omega0 must be finite and non-negative"));
        }
        if !(gamma_total.is_finite() && gamma_total > 0.0) {
            return Err(Error::domain("Gamma must be positive"));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain("mass must be positive"));
        }
        Ok(DecayScenario {
            branch,
            omega0,
            gamma_total,
            initial: AtomState {
                mass,
                velocity,
                time: 0.0,
                excited_prob: 1.0,
            },
        })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_total
    }

    pub fn initial(&self) -> AtomState {
        self.initial
    }

    /// `hbar omega0 / c^2`, kg.
    pub fn mass_defect(&self) -> f64 {
        mass_defect(self.omega0)
    }

    /// `hbar omega0 / (m0 c^2)`.
    pub fn epsilon(&self) -> f64 {
        self.mass_defect() / self.initial.mass
    }

    /// Friction force at time `t` on an atom moving at `v`.
    pub fn force(&self, t: f64, v: Vec3) -> Vec3 {
        v * -((-self.gamma_total * t).exp() * self.mass_defect() * self.gamma_total)
    }

    fn expect(&self, branch: Branch) -> Result<()> {
        if self.branch == branch {
            Ok(())
        } else {
            Err(Error::BranchMismatch {
                expected: branch.as_str(),
                actual: self.branch.as_str(),
            })
        }
    }

    /// `1 - exp(-Gamma t)`, accurate for small `Gamma t`.
    fn decayed_fraction(&self, t: f64) -> f64 {
        -(-self.gamma_total * t).exp_m1()
    }

    fn velocity_excess_unchecked(&self, t: f64) -> Vec3 {
        let factor = (-self.epsilon() * self.decayed_fraction(t)).exp_m1();
        self.initial.velocity.vec() * factor
    }

    fn mass_excess_unchecked(&self, t: f64) -> f64 {
        -self.mass_defect() * self.decayed_fraction(t)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("time t = {t} must be non-negative")))
    }
}

/// `hbar omega0 / c^2`.
pub fn mass_defect(omega0: f64) -> f64 {
    HBAR * omega0 / (C * C)
}

/// `epsilon = hbar omega0 / (m c^2)`, the fractional speed loss under the
/// constant-mass reading.
pub fn fractional_speed_loss(omega0: f64, mass: f64) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::domain("mass must be positive"));
    }
    if !(omega0.is_finite() && omega0 >= 0.0) {
        return Err(Error::domain("omega0 must be finite and non-negative"));
    }
    Ok(HBAR * omega0 / (mass * C * C))
}

/// Constant-mass branch: `v(t) = v0 exp[-epsilon (1 - exp(-Gamma t))]`.
/// `t` may be `f64::INFINITY`.
pub fn velocity_trajectory_analytic(s: &DecayScenario, t: f64) -> Result<Velocity> {
    s.expect(Branch::ConstantMass)?;
    check_time(t)?;
    Velocity::from_vec(s.initial.velocity.vec() + s.velocity_excess_unchecked(t))
}

/// Constant-mass branch, `v(t) - v0`.
pub fn velocity_excess_analytic(s: &DecayScenario, t: f64) -> Result<Vec3> {
    s.expect(Branch::ConstantMass)?;
    check_time(t)?;
    Ok(s.velocity_excess_unchecked(t))
}

/// Constant-velocity branch: `m(t) = m0 - (hbar omega0 / c^2)(1 - exp(-Gamma t))`.
///
/// The absolute mass cannot resolve the change to better than about 1e-5
/// relative; use [`mass_excess_analytic`] for the change itself.
pub fn mass_trajectory_analytic(s: &DecayScenario, t: f64) -> Result<f64> {
    Ok(s.initial.mass + mass_excess_analytic(s, t)?)
}

/// Constant-velocity branch, `m(t) - m0`. Exactly `-hbar omega0 / c^2` at `t = inf`.
pub fn mass_excess_analytic(s: &DecayScenario, t: f64) -> Result<f64> {
    s.expect(Branch::ConstantVelocity)?;
    check_time(t)?;
    Ok(s.mass_excess_unchecked(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub mass_excess: f64,
    pub velocity_excess: Vec3,
    pub excited_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: AtomState,
    pub branch: Branch,
    pub step: f64,
    /// Set when `Gamma dt > 0.1`.
    pub coarse_step: bool,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn mass_at(&self, i: usize) -> f64 {
        self.initial.mass + self.samples[i].mass_excess
    }

    pub fn velocity_at(&self, i: usize) -> Vec3 {
        self.initial.velocity.vec() + self.samples[i].velocity_excess
    }

    /// CSV with header `t_s,mass_excess_kg,vx,vy,vz,excited_prob`, 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t_s,mass_excess_kg,vx,vy,vz,excited_prob")?;
        for (i, s) in self.samples.iter().enumerate() {
            let v = self.velocity_at(i);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                sci(s.time),
                sci(s.mass_excess),
                sci(v.x),
                sci(v.y),
                sci(v.z),
                sci(s.excited_prob)
            )?;
        }
        Ok(())
    }
}

/// 17 significant digits, `.` decimal separator.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

const COARSE_STEP: f64 = 0.1;

fn rk4_step<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], t: f64, y: &[f64; N], h: f64) -> [f64; N] {
    let axpy = |y: &[f64; N], k: &[f64; N], a: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Classical fourth-order Runge-Kutta on the branch's free variable, in
/// excess form. The frozen variable stays bit-identical to its initial value.
pub fn integrate_scenario(s: &DecayScenario, dt: f64, n_steps: usize) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain(format!("step dt = {dt} must be positive")));
    }
    let gamma = s.gamma_total;
    let coarse_step = gamma * dt > COARSE_STEP;
    if coarse_step {
        log::warn!("Gamma*dt = {} exceeds {COARSE_STEP}; expect visible truncation error", gamma * dt);
    }
    let rate = |t: f64| (-gamma * t).exp() * gamma;
    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(TrajectorySample {
        time: 0.0,
        mass_excess: 0.0,
        velocity_excess: Vec3::ZERO,
        excited_prob: 1.0,
    });
    match s.branch {
        Branch::ConstantVelocity => {
            let defect = s.mass_defect();
            let rhs = |t: f64, _: &[f64; 1]| [-defect * rate(t)];
            let mut y = [0.0];
            for k in 0..n_steps {
                let t = k as f64 * dt;
                y = rk4_step(rhs, t, &y, dt);
                let t1 = (k + 1) as f64 * dt;
                samples.push(TrajectorySample {
                    time: t1,
                    mass_excess: y[0],
                    velocity_excess: Vec3::ZERO,
                    excited_prob: (-gamma * t1).exp(),
                });
            }
        }
        Branch::ConstantMass => {
            let eps = s.epsilon();
            let v0 = s.initial.velocity.vec().to_array();
            let rhs = |t: f64, y: &[f64; 3]| {
                let r = -eps * rate(t);
                std::array::from_fn(|i| r * (v0[i] + y[i]))
            };
            let mut y = [0.0; 3];
            for k in 0..n_steps {
                let t = k as f64 * dt;
                y = rk4_step(rhs, t, &y, dt);
                let t1 = (k + 1) as f64 * dt;
                samples.push(TrajectorySample {
                    time: t1,
                    mass_excess: 0.0,
                    velocity_excess: Vec3::from(y),
                    excited_prob: (-gamma * t1).exp(),
                });
            }
        }
    }
    Ok(Trajectory {
        initial: s.initial,
        branch: s.branch,
        step: dt,
        coarse_step,
        samples,
    })
}

/// `d(m v)/dt - F` along the branch's analytic trajectory, with the
/// derivative taken by central differences of step `1e-6 / Gamma`.
pub fn newton_residual(s: &DecayScenario, t: f64) -> Result<Vec3> {
    check_time(t)?;
    let h = 1e-6 / s.gamma_total;
    let v0 = s.initial.velocity.vec();
    let (dp_dt, v_now) = match s.branch {
        Branch::ConstantVelocity => {
            let dm = (s.mass_excess_unchecked(t + h) - s.mass_excess_unchecked(t - h)) / (2.0 * h);
            (v0 * dm, v0)
        }
        Branch::ConstantMass => {
            let dv = (s.velocity_excess_unchecked(t + h) - s.velocity_excess_unchecked(t - h)) * (1.0 / (2.0 * h));
            (dv * s.initial.mass, v0 + s.velocity_excess_unchecked(t))
        }
    };
    Ok(dp_dt - s.force(t, v_now))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::AMU;
    use approx::assert_relative_eq;

    const OMEGA0: f64 = 2.0 * std::f64::consts::PI * 642e12;
    const GAMMA: f64 = 1.0e3;

    fn yb_mass() -> f64 {
        170.936 * AMU
    }

    fn scenario(branch: Branch, v0: f64) -> DecayScenario {
        DecayScenario::new(branch, OMEGA0, GAMMA, yb_mass(), Velocity::new(v0, 0.5 * v0, -v0).unwrap()).unwrap()
    }

    #[test]
    fn fractional_speed_loss_examples() {
        assert_eq!(fractional_speed_loss(0.0, 1.0).unwrap(), 0.0);
        // independent python evaluation with CODATA 2018
        assert_relative_eq!(
            fractional_speed_loss(OMEGA0, yb_mass()).unwrap(),
            1.667504508889991e-11,
            max_relative = 1e-12
        );
        let a = fractional_speed_loss(OMEGA0, 2.0 * yb_mass()).unwrap();
        assert_relative_eq!(a * 2.0, fractional_speed_loss(OMEGA0, yb_mass()).unwrap(), max_relative = 1e-15);
        assert!(fractional_speed_loss(OMEGA0, 0.0).is_err());
    }

    #[test]
    fn velocity_branch_examples() {
        let s = scenario(Branch::ConstantMass, 2.0);
        assert_eq!(velocity_trajectory_analytic(&s, 0.0).unwrap(), s.initial().velocity);
        let eps = s.epsilon();
        let dv = velocity_excess_analytic(&s, f64::INFINITY).unwrap();
        assert_relative_eq!(dv.x, 2.0 * (-eps).exp_m1(), max_relative = 1e-15);
        let dv1 = velocity_excess_analytic(&s, 1.0 / GAMMA).unwrap();
        let expected = (-eps * (1.0 - (-1.0f64).exp())).exp_m1() * 2.0;
        assert_relative_eq!(dv1.x, expected, max_relative = 1e-14);
        assert!(matches!(
            mass_excess_analytic(&s, 1.0),
            Err(Error::BranchMismatch { .. })
        ));
    }

    #[test]
    fn mass_branch_examples() {
        let s = scenario(Branch::ConstantVelocity, 2.0);
        assert_eq!(mass_excess_analytic(&s, 0.0).unwrap(), 0.0);
        assert_eq!(mass_trajectory_analytic(&s, 0.0).unwrap(), yb_mass());
        assert_eq!(mass_excess_analytic(&s, f64::INFINITY).unwrap(), -mass_defect(OMEGA0));
        // hbar * 2 pi * 642e12 / c^2 by independent evaluation
        assert_relative_eq!(
            mass_excess_analytic(&s, f64::INFINITY).unwrap(),
            -4.733143278987671e-36,
            max_relative = 1e-12
        );
        assert!(velocity_trajectory_analytic(&s, 1.0).is_err());
        assert!(mass_excess_analytic(&s, -1.0).is_err());
    }

    #[test]
    fn rk4_matches_analytic() {
        for branch in [Branch::ConstantMass, Branch::ConstantVelocity] {
            let s = scenario(branch, 3.0);
            let dt = 1e-3 / GAMMA;
            let tr = integrate_scenario(&s, dt, 20_000).unwrap();
            let t_end = tr.last().time;
            assert_relative_eq!(t_end, 20.0 / GAMMA, max_relative = 1e-14);
            match branch {
                Branch::ConstantVelocity => {
                    let exact = mass_excess_analytic(&s, t_end).unwrap();
                    assert_relative_eq!(tr.last().mass_excess, exact, max_relative = 1e-9);
                    assert!(tr.samples.iter().all(|x| x.velocity_excess == Vec3::ZERO));
                }
                Branch::ConstantMass => {
                    let exact = velocity_excess_analytic(&s, t_end).unwrap();
                    assert!((tr.last().velocity_excess - exact).norm() <= 1e-9 * exact.norm());
                    assert!(tr.samples.iter().all(|x| x.mass_excess == 0.0));
                }
            }
            assert!(tr.samples.windows(2).all(|w| w[1].time > w[0].time));
            assert!(!tr.coarse_step);
        }
    }

    #[test]
    fn rk4_at_rest_stays_at_rest() {
        let s = scenario(Branch::ConstantMass, 0.0);
        let tr = integrate_scenario(&s, 1e-3 / GAMMA, 1000).unwrap();
        assert!(tr.samples.iter().all(|x| x.velocity_excess == Vec3::ZERO));
    }

    #[test]
    fn rk4_is_fourth_order() {
        // a light particle (epsilon ~ 0.2) makes the velocity coupling matter
        let mass = mass_defect(OMEGA0) * 5.0;
        let s = DecayScenario::new(Branch::ConstantMass, OMEGA0, 1.0, mass, Velocity::new(0.0, 0.0, 1.0).unwrap())
            .unwrap();
        let horizon = 4.0;
        let err = |n: usize| {
            let tr = integrate_scenario(&s, horizon / n as f64, n).unwrap();
            (tr.last().velocity_excess - velocity_excess_analytic(&s, horizon).unwrap()).norm()
        };
        let errs: Vec<f64> = [10, 20, 40].iter().map(|&n| err(n)).collect();
        let p1 = (errs[0] / errs[1]).log2();
        let p2 = (errs[1] / errs[2]).log2();
        assert!((p1 - 4.0).abs() < 0.2 && (p2 - 4.0).abs() < 0.2, "{p1} {p2}");
    }

    #[test]
    fn coarse_steps_are_flagged() {
        let s = scenario(Branch::ConstantVelocity, 1.0);
        assert!(integrate_scenario(&s, 0.5 / GAMMA, 4).unwrap().coarse_step);
        assert!(integrate_scenario(&s, 0.0, 4).is_err());
    }

    #[test]
    fn newton_residual_is_small_on_both_branches() {
        for branch in [Branch::ConstantMass, Branch::ConstantVelocity] {
            let s = scenario(branch, 5.0);
            let f0 = s.force(0.0, s.initial().velocity.vec()).norm();
            for t in [0.0, 1.0 / GAMMA, 5.0 / GAMMA] {
                let r = newton_residual(&s, t).unwrap();
                assert!(r.norm() <= 1e-8 * f0, "{branch:?} t={t}: {}", r.norm() / f0);
            }
        }
        let s = scenario(Branch::ConstantMass, 0.0);
        assert_eq!(newton_residual(&s, 1.0 / GAMMA).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn momentum_change_is_carried_by_mass() {
        let s = scenario(Branch::ConstantVelocity, 4.0);
        let p = crate::pattern::EmissionPattern::isotropic(OMEGA0, GAMMA).unwrap();
        let v = s.initial().velocity;
        let total = crate::force::impulse(&p, v).unwrap();
        for t in [0.3 / GAMMA, 2.0 / GAMMA, f64::INFINITY] {
            let dp = v.vec() * mass_excess_analytic(&s, t).unwrap();
            let frac = -(-GAMMA * t).exp_m1();
            assert!((dp - total * frac).norm() <= 1e-10 * dp.norm());
        }
    }

    #[test]
    fn csv_has_expected_layout() {
        let s = scenario(Branch::ConstantVelocity, 1.0);
        let tr = integrate_scenario(&s, 0.01 / GAMMA, 3).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_s,mass_excess_kg,vx,vy,vz,excited_prob");
        assert_eq!(lines.len(), 5);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
    }
}
