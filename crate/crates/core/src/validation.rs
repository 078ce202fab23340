//! The nine acceptance checks, shared by `vacfric selftest` and the
//! `acceptance` test target.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{AMU, C, HBAR};
use crate::dynamics::{
    integrate_scenario, mass_defect, mass_excess_analytic, newton_residual, velocity_excess_analytic, Branch,
    DecayScenario,
};
use crate::error::Result;
use crate::force::{
    friction_force, friction_force_montecarlo, friction_force_montecarlo_with_workers,
    friction_force_quadrature_primed, friction_force_quadrature_unprimed, impulse, naive_doppler_force,
    naive_doppler_force_quadrature, rest_frame_force, ForceResult, McSpec,
};
use crate::kinematics::{Direction, Tier, Vec3, Velocity};
use crate::pattern::{AngularDensity, EmissionPattern, TabulatedDensity};
use crate::quadrature::{GaussLegendre, QuadratureSpec};
use crate::trap::{feasibility_report, IonCatalog, TrapSpec, PUBLISHED_YB_EPSILON};

/// 171Yb+ octupole line.
const OMEGA0: f64 = 2.0 * PI * 642e12;
const GAMMA: f64 = 1.0e3;
const SEED: u64 = 0x5eed_f00d;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_s: f64,
    pub limit_s: f64,
}

impl CriterionOutcome {
    /// One line: `PASS  3 monte carlo (0.41 s / 60 s): ...`.
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} ({:.2} s / {} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed_s,
            self.limit_s,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str, f64); 9] = [
    (1, "naive/correct ratio", 1.0),
    (2, "friction law", 10.0),
    (3, "monte carlo", 60.0),
    (4, "pattern independence", 10.0),
    (5, "rest-frame null", 1.0),
    (6, "mass-loss resolution", 5.0),
    (7, "yb+ trap chain", 1.0),
    (8, "impulse identity", 1.0),
    (9, "determinism", 60.0),
];

/// Runs criterion `id` (1 to 9). A check that errors counts as failed.
pub fn run_criterion(id: u8) -> Option<CriterionOutcome> {
    let &(id, title, limit_s) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let result = match id {
        1 => naive_ratio(),
        2 => friction_law(),
        3 => monte_carlo(),
        4 => pattern_independence(),
        5 => rest_frame_null(),
        6 => mass_loss(),
        7 => trap_chain(),
        8 => impulse_identity(),
        _ => determinism(),
    };
    let elapsed_s = start.elapsed().as_secs_f64();
    let (ok, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    let in_time = elapsed_s < limit_s;
    Some(CriterionOutcome {
        id,
        title,
        passed: ok && in_time,
        detail: if in_time { detail } else { format!("{detail}; over time limit") },
        elapsed_s,
        limit_s,
    })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.0)).collect()
}

type Check = Result<(bool, String)>;

fn rel(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm() / b.norm()
}

fn iso() -> Result<EmissionPattern> {
    EmissionPattern::isotropic(OMEGA0, GAMMA)
}

fn vel(beta: f64) -> Result<Velocity> {
    Velocity::from_beta(beta, Direction::new(0.36, -0.48, 0.8)?)
}

fn random_axes(n: usize) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..n).map(|_| AngularDensity::Isotropic.sample(&mut rng)).collect()
}

fn smooth_table() -> Result<TabulatedDensity> {
    TabulatedDensity::from_function(32, 64, |n| {
        let c = n.vec().z;
        let x = n.vec().x;
        1.0 + 0.4 * c * c + 0.2 * x * x * c * c
    })
}

fn naive_ratio() -> Check {
    let p = iso()?;
    let v = vel(1e-3)?;
    let correct = friction_force(&p, v, 0.0)?.force;
    let naive = naive_doppler_force(&p, v, 0.0)?.force;
    let ratio = naive.dot(correct) / correct.dot(correct);
    let closed_ok = (ratio - 1.0 / 3.0).abs() <= f64::EPSILON;
    let quad = naive_doppler_force_quadrature(&p, v, 0.0, QuadratureSpec::default())?.force;
    let quad_err = rel(quad, correct * (1.0 / 3.0));
    Ok((
        closed_ok && quad_err <= 1e-10,
        format!("closed-form ratio {ratio:.17}, quadrature rel err {quad_err:.2e} (tol 1e-10)"),
    ))
}

fn friction_law() -> Check {
    let q = QuadratureSpec::default();
    let patterns = [iso()?, EmissionPattern::dipole(OMEGA0, GAMMA, Direction::new(1.0, 2.0, 2.0)?)?];
    let mut ok = true;
    let mut worst = 0.0f64;
    for p in &patterns {
        for beta in [1e-5, 1e-4, 1e-3, 1e-2] {
            let v = vel(beta)?;
            let closed = friction_force(p, v, 0.0)?.force;
            let tol = f64::max(1e-12, 5.0 * beta * beta);
            for tier in [Tier::FirstOrder, Tier::Exact] {
                for r in [
                    friction_force_quadrature_unprimed(p, v, 0.0, q, tier)?,
                    friction_force_quadrature_primed(p, v, 0.0, q, tier)?,
                ] {
                    let e = rel(r.force, closed);
                    worst = worst.max(e / tol);
                    ok &= e <= tol;
                }
            }
        }
    }
    let p = &patterns[0];
    let gap = |beta: f64| -> Result<f64> {
        let v = vel(beta)?;
        let u = friction_force_quadrature_unprimed(p, v, 0.0, q, Tier::FirstOrder)?.force;
        let pr = friction_force_quadrature_primed(p, v, 0.0, q, Tier::FirstOrder)?.force;
        Ok(rel(pr, u))
    };
    let shrink = gap(1e-2)? / gap(5e-3)?;
    let shrink_ok = (shrink - 4.0).abs() <= 0.2;
    Ok((
        ok && shrink_ok,
        format!("worst route error {worst:.2} x tolerance; theta/theta' gap shrink {shrink:.3} (4 +- 0.2)"),
    ))
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn within_3_sigma(r: &ForceResult, target: Vec3) -> bool {
    let d = r.force - target;
    [(d.x, r.stderr.x), (d.y, r.stderr.y), (d.z, r.stderr.z)]
        .iter()
        .all(|&(d, s)| d.abs() <= 3.0 * s)
}

fn mc_series(p: &EmissionPattern, v: Velocity, antithetic: bool) -> Result<Vec<ForceResult>> {
    [10_000u64, 100_000, 1_000_000]
        .iter()
        .map(|&n| friction_force_montecarlo(p, v, 0.0, McSpec::new(n, SEED, antithetic)?, Tier::FirstOrder))
        .collect()
}

fn stderr_slope(runs: &[ForceResult]) -> f64 {
    let pts: Vec<(f64, f64)> = runs.iter().map(|r| (r.samples as f64, r.stderr.norm())).collect();
    loglog_slope(&pts)
}

fn monte_carlo() -> Check {
    let p = iso()?;
    let v = Velocity::from_beta(1e-3, Direction::Z)?;
    let closed = friction_force(&p, v, 0.0)?.force;
    let runs = mc_series(&p, v, true)?;
    let big = &runs[2];
    let in_sigma = within_3_sigma(big, closed);
    let rel_se = big.stderr.norm() / closed.norm();
    let slope = stderr_slope(&runs);
    let slope_ok = slope.is_finite() && (slope + 0.5).abs() <= 0.05;
    // plain sampling carries the O(1) recoil noise that pairing removes
    let plain = mc_series(&p, v, false)?;
    let plain_slope = stderr_slope(&plain);
    Ok((
        in_sigma && rel_se < 0.01 && slope_ok,
        format!(
            "antithetic N=1e6: within 3 sigma {in_sigma}, stderr/|F| {rel_se:.2e}, slope {slope:.3}; \
             plain: within 3 sigma {}, slope {plain_slope:.3}",
            within_3_sigma(&plain[2], closed)
        ),
    ))
}

fn pattern_independence() -> Check {
    let q = QuadratureSpec::default();
    let v = vel(1e-3)?;
    let reference = friction_force_quadrature_unprimed(&iso()?, v, 0.0, q, Tier::FirstOrder)?.force;
    let closed = friction_force(&iso()?, v, 0.0)?.force;
    let mut patterns = Vec::new();
    for axis in random_axes(3) {
        patterns.push(EmissionPattern::dipole(OMEGA0, GAMMA, axis)?);
    }
    patterns.push(EmissionPattern::new(OMEGA0, GAMMA, AngularDensity::Tabulated(smooth_table()?))?);
    let mut worst = rel(reference, closed);
    let mut closed_same = true;
    for p in &patterns {
        let f = friction_force_quadrature_unprimed(p, v, 0.0, q, Tier::FirstOrder)?.force;
        worst = worst.max(rel(f, reference));
        closed_same &= friction_force(p, v, 0.0)?.force == closed;
    }
    Ok((
        worst <= 1e-10 && closed_same,
        format!("worst quadrature spread {worst:.2e} (tol 1e-10) over 3 dipoles and a table; closed forms identical {closed_same}"),
    ))
}

fn rest_frame_null() -> Check {
    let q = QuadratureSpec::default();
    let p = iso()?;
    let bound = 1e-14 * HBAR * p.k0() * GAMMA;
    let mut patterns = vec![p];
    for axis in [Direction::X, Direction::Y, Direction::Z].into_iter().chain(random_axes(3)) {
        patterns.push(EmissionPattern::dipole(OMEGA0, GAMMA, axis)?);
    }
    let mut worst = 0.0f64;
    for p in &patterns {
        worst = worst.max(rest_frame_force(p, 0.0, q)?.force.norm() / bound);
    }
    Ok((worst <= 1.0, format!("worst |F_rest| = {worst:.2e} x bound over {} patterns", patterns.len())))
}

fn mass_loss() -> Check {
    let mass = 170.936 * AMU;
    let v0 = Velocity::new(3.0, -1.0, 2.0)?;
    let cv = DecayScenario::new(Branch::ConstantVelocity, OMEGA0, GAMMA, mass, v0)?;
    let cm = DecayScenario::new(Branch::ConstantMass, OMEGA0, GAMMA, mass, v0)?;

    let loss = mass_excess_analytic(&cv, f64::INFINITY)?;
    let loss_ok = loss == -mass_defect(OMEGA0);

    let dt = 1e-3 / GAMMA;
    let steps = 20_000;
    let t_end = steps as f64 * dt;
    let tr_v = integrate_scenario(&cv, dt, steps)?;
    let err_m = (tr_v.last().mass_excess / mass_excess_analytic(&cv, t_end)? - 1.0).abs();
    let tr_m = integrate_scenario(&cm, dt, steps)?;
    let exact_v = velocity_excess_analytic(&cm, t_end)?;
    let err_v = rel(tr_m.last().velocity_excess, exact_v);
    let rk4_ok = err_m <= 1e-9 && err_v <= 1e-9;

    let mut worst_res = 0.0f64;
    for s in [&cv, &cm] {
        let f0 = s.force(0.0, v0.vec()).norm();
        for t in [0.0, 0.5 / GAMMA, 1.0 / GAMMA, 5.0 / GAMMA] {
            worst_res = worst_res.max(newton_residual(s, t)?.norm() / f0);
        }
    }

    let eps = cm.epsilon();
    let v_inf = velocity_excess_analytic(&cm, f64::INFINITY)?;
    let v_inf_err = rel(v_inf, v0.vec() * (-eps).exp_m1());
    Ok((
        loss_ok && rk4_ok && worst_res <= 1e-8 && v_inf_err <= 1e-12,
        format!(
            "m(inf)-m0 exact {loss_ok}; rk4 rel err {err_m:.1e}/{err_v:.1e}; \
             newton residual {worst_res:.1e} x |F(0)|; v(inf) rel err {v_inf_err:.1e}"
        ),
    ))
}

fn trap_chain() -> Check {
    let ion = IonCatalog::builtin().get("yb171")?.with_epsilon(PUBLISHED_YB_EPSILON)?;
    let r = feasibility_report(TrapSpec::ground_frequency(1.3e6)?, &ion)?;
    let hours = r.separation_time / 3600.0;
    let ok = (r.period_count / 7.4e10 - 1.0).abs() < 0.01
        && (r.separation_time / 5.7e4 - 1.0).abs() < 0.01
        && (hours / 15.0 - 1.0).abs() < 0.05;
    Ok((
        ok,
        format!("periods {:.4e}, T {:.5e} s, {hours:.3} h", r.period_count, r.separation_time),
    ))
}

fn impulse_identity() -> Check {
    let gl = GaussLegendre::new(16);
    let panels = 100;
    let h = 50.0 / GAMMA / panels as f64;
    let mut worst = 0.0f64;
    let mut patterns = vec![iso()?];
    patterns.push(EmissionPattern::dipole(OMEGA0, GAMMA, Direction::X)?);
    for p in &patterns {
        let v = vel(1e-4)?;
        let mut acc = Vec3::ZERO;
        for k in 0..panels {
            let a = k as f64 * h;
            for (t, w) in gl.mapped(a, a + h) {
                acc = acc + friction_force(p, v, t)?.force * w;
            }
        }
        let j = impulse(p, v)?;
        worst = worst.max(rel(acc, j));
        let expected = v.vec() * -(HBAR * OMEGA0 / (C * C));
        worst = worst.max(rel(j, expected));
    }
    Ok((worst <= 1e-10, format!("time quadrature vs impulse rel err {worst:.2e} (tol 1e-10)")))
}

fn determinism() -> Check {
    let p = EmissionPattern::dipole(OMEGA0, GAMMA, Direction::new(1.0, -1.0, 0.5)?)?;
    let v = vel(1e-3)?;
    let mut ok = true;
    for antithetic in [true, false] {
        for tier in [Tier::FirstOrder, Tier::Exact] {
            let mc = McSpec::new(300_000, SEED, antithetic)?;
            let base = friction_force_montecarlo(&p, v, 0.0, mc, tier)?;
            for workers in [1, 2, 3, 8] {
                let r = friction_force_montecarlo_with_workers(&p, v, 0.0, mc, tier, workers)?;
                ok &= bits(r.force) == bits(base.force) && bits(r.stderr) == bits(base.stderr);
            }
        }
    }
    Ok((ok, "repeat runs with 1, 2, 3, 8 workers, both tiers, paired and plain".into()))
}

fn bits(v: Vec3) -> [u64; 3] {
    [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&n: &f64| (n, 3.0 / n.sqrt())).collect();
        assert!((loglog_slope(&pts) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn unknown_criterion_is_none() {
        assert!(run_criterion(0).is_none());
        assert!(run_criterion(10).is_none());
    }

    #[test]
    fn fast_criteria_pass() {
        for id in [1, 5, 7, 8] {
            let o = run_criterion(id).unwrap();
            assert!(o.passed, "{}", o.line());
        }
    }
}
