//! Property tests over random patterns, velocities and traps.

use std::f64::consts::PI;

use proptest::prelude::*;
use vacuum_friction::force::{
    friction_force, friction_force_quadrature_primed, friction_force_quadrature_unprimed, naive_doppler_force,
    rest_frame_force,
};
use vacuum_friction::trap::{feasibility_report, IonSpec, Lifetime, TrapSpec};
use vacuum_friction::{
    AngularDensity, Direction, EmissionPattern, QuadratureSpec, TabulatedDensity, Tier, Velocity,
};

const OMEGA0: f64 = 2.0 * PI * 642e12;

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, 0.0..2.0 * PI).prop_map(|(c, phi)| Direction::from_cos_phi(c, phi).unwrap())
}

fn symmetric_table() -> impl Strategy<Value = TabulatedDensity> {
    (0.0f64..2.0, 0.0f64..1.0).prop_map(|(a, b)| {
        TabulatedDensity::from_function(8, 16, move |n| 1.0 + a * n.vec().z.powi(2) + b * n.vec().x.powi(2)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tables_are_normalized(t in symmetric_table()) {
        let total = AngularDensity::Tabulated(t).total_weight(QuadratureSpec::default());
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dipoles_are_normalized_and_symmetric(axis in direction()) {
        let d = AngularDensity::dipole(axis);
        let q = QuadratureSpec::default();
        prop_assert!((d.total_weight(q) - 1.0).abs() < 1e-12);
        prop_assert!(d.mean_direction(q).norm() < 1e-14);
    }

    #[test]
    fn force_is_linear_and_antiparallel(beta in 1e-6f64..1e-2, dir in direction(), axis in direction()) {
        let p = EmissionPattern::dipole(OMEGA0, 1e3, axis).unwrap();
        let v = Velocity::from_beta(beta, dir).unwrap();
        let f = friction_force(&p, v, 0.0).unwrap().force;
        let f2 = friction_force(&p, Velocity::from_vec(v.vec() * 2.0).unwrap(), 0.0).unwrap().force;
        prop_assert!((f2 - f * 2.0).norm() <= 1e-15 * f2.norm());
        prop_assert!(f.dot(v.vec()) < 0.0);
        prop_assert!(f.cross(v.vec()).norm() < 1e-10 * f.norm() * v.speed());
    }

    #[test]
    fn three_routes_agree(beta in 1e-5f64..1e-2, dir in direction(), axis in direction(), exact in any::<bool>()) {
        let tier = if exact { Tier::Exact } else { Tier::FirstOrder };
        let q = QuadratureSpec::default();
        let v = Velocity::from_beta(beta, dir).unwrap();
        let tol = f64::max(1e-12, 5.0 * beta * beta);
        for p in [
            EmissionPattern::isotropic(OMEGA0, 1e3).unwrap(),
            EmissionPattern::dipole(OMEGA0, 1e3, axis).unwrap(),
        ] {
            let c = friction_force(&p, v, 0.0).unwrap().force;
            let u = friction_force_quadrature_unprimed(&p, v, 0.0, q, tier).unwrap().force;
            let pr = friction_force_quadrature_primed(&p, v, 0.0, q, tier).unwrap().force;
            prop_assert!((u - c).norm() <= tol * c.norm());
            prop_assert!((pr - c).norm() <= tol * c.norm());
        }
    }

    #[test]
    fn tables_match_closed_form_via_quadrature(t in symmetric_table(), beta in 1e-4f64..1e-2, dir in direction()) {
        let p = EmissionPattern::new(OMEGA0, 1e3, AngularDensity::Tabulated(t)).unwrap();
        let v = Velocity::from_beta(beta, dir).unwrap();
        let c = friction_force(&p, v, 0.0).unwrap().force;
        let u = friction_force_quadrature_unprimed(&p, v, 0.0, QuadratureSpec::default(), Tier::FirstOrder).unwrap().force;
        prop_assert!((u - c).norm() <= 1e-10 * c.norm());
        let rest = rest_frame_force(&p, 0.0, QuadratureSpec::default()).unwrap().force;
        prop_assert!(rest.norm() <= 1e-14 * 1.054571817e-34 * p.k0() * 1e3);
    }

    #[test]
    fn naive_is_one_third(beta in 1e-6f64..0.5, dir in direction(), t in 0.0f64..5e-3) {
        let p = EmissionPattern::isotropic(OMEGA0, 1e3).unwrap();
        let v = Velocity::from_beta(beta, dir).unwrap();
        let n = naive_doppler_force(&p, v, t).unwrap().force;
        let c = friction_force(&p, v, t).unwrap().force;
        prop_assert!((n * 3.0 - c).norm() <= 1e-15 * c.norm());
    }

    #[test]
    fn period_count_is_inverse_epsilon(eps in 1e-14f64..1e-6, mhz in 0.1f64..50.0) {
        let ion = IonSpec::from_amu("x", 100.0, 5e14, Lifetime::EffectivelyInfinite).unwrap().with_epsilon(eps).unwrap();
        let r = feasibility_report(TrapSpec::ground_frequency(mhz * 1e6).unwrap(), &ion).unwrap();
        prop_assert!((r.period_count * eps - 1.0).abs() < 1e-12);
        // exact count is 1/eps + 3/4 to leading order
        prop_assert!((r.exact.period_count - 1.0 / eps - 0.75).abs() < 1e-3 * (1.0 + 1.0 / eps) * eps.max(1e-12) + 1e-2);
        prop_assert!(r.exact.omega_excited < r.omega_ground);
    }
}
