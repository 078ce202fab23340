//! Distributional checks on the direction samplers and the Monte Carlo force.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vacuum_friction::force::{friction_force, friction_force_montecarlo, McSpec};
use vacuum_friction::{AngularDensity, Direction, EmissionPattern, TabulatedDensity, Tier, Velocity};

const OMEGA0: f64 = 2.0 * PI * 642e12;

#[test]
fn isotropic_mean_direction_shrinks_like_one_over_root_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 400_000;
    let mut sum = [0.0f64; 3];
    for _ in 0..n {
        let d = AngularDensity::Isotropic.sample(&mut rng).vec();
        sum[0] += d.x;
        sum[1] += d.y;
        sum[2] += d.z;
    }
    let bound = 4.0 / (n as f64).sqrt();
    for s in sum {
        assert!((s / n as f64).abs() <= bound);
    }
}

#[test]
fn dipole_second_moment_about_axis_is_one_fifth() {
    let axis = Direction::new(1.0, 1.0, -0.5).unwrap();
    let d = AngularDensity::dipole(axis);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 400_000;
    let mean: f64 = (0..n).map(|_| d.sample(&mut rng).vec().dot(axis.vec()).powi(2)).sum::<f64>() / n as f64;
    // var(cos^2) = E[cos^4] - 1/25 = 3/35 - 1/25
    let sd = ((3.0 / 35.0 - 1.0 / 25.0) / n as f64).sqrt();
    assert!((mean - 0.2).abs() <= 4.0 * sd, "{mean}");
}

#[test]
fn tabulated_sampler_passes_chi_squared() {
    let table = TabulatedDensity::from_function(16, 32, |n| 1.0 + 2.0 * n.vec().z.powi(2) + n.vec().x.abs()).unwrap();
    let d = AngularDensity::Tabulated(table.clone());
    let (nc, np) = (table.n_cos(), table.n_phi());
    let n = 512_000;
    let mut counts = vec![0u64; nc * np];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let locate = |edges: &[f64], x: f64| edges.partition_point(|&e| e <= x).saturating_sub(1).min(edges.len() - 2);
    for _ in 0..n {
        let v = d.sample(&mut rng).vec();
        let phi = v.y.atan2(v.x).rem_euclid(2.0 * PI);
        counts[locate(table.cos_edges(), v.z) * np + locate(table.phi_edges(), phi)] += 1;
    }
    let mut chi2 = 0.0;
    for i in 0..nc {
        for j in 0..np {
            let area = (table.cos_edges()[i + 1] - table.cos_edges()[i]) * (table.phi_edges()[j + 1] - table.phi_edges()[j]);
            let expected = n as f64 * table.cell_density(i, j) * area;
            chi2 += (counts[i * np + j] as f64 - expected).powi(2) / expected;
        }
    }
    // 511 degrees of freedom: mean 511, sd ~32; 5 sd margin
    assert!(chi2 < 511.0 + 5.0 * (2.0f64 * 511.0).sqrt(), "chi2 = {chi2}");
}

#[test]
fn plain_sampling_is_within_three_sigma_and_scales() {
    let p = EmissionPattern::dipole(OMEGA0, 1e3, Direction::new(0.2, 0.3, 1.0).unwrap()).unwrap();
    let v = Velocity::from_beta(1e-2, Direction::Y).unwrap();
    let closed = friction_force(&p, v, 0.0).unwrap().force;
    let small = friction_force_montecarlo(&p, v, 0.0, McSpec::new(40_000, 11, false).unwrap(), Tier::FirstOrder).unwrap();
    let big = friction_force_montecarlo(&p, v, 0.0, McSpec::new(640_000, 11, false).unwrap(), Tier::FirstOrder).unwrap();
    let d = big.force - closed;
    for (d, s) in [(d.x, big.stderr.x), (d.y, big.stderr.y), (d.z, big.stderr.z)] {
        assert!(d.abs() <= 4.0 * s, "{d} vs {s}");
    }
    let ratio = small.stderr.norm() / big.stderr.norm();
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
}

#[test]
fn antithetic_pairs_cancel_rest_frame_recoil() {
    let p = EmissionPattern::dipole(OMEGA0, 1e3, Direction::X).unwrap();
    let at_rest = friction_force_montecarlo(&p, Velocity::ZERO, 0.0, McSpec::new(10_000, 5, true).unwrap(), Tier::Exact)
        .unwrap();
    assert_eq!(at_rest.force.norm(), 0.0);
    let v = Velocity::from_beta(1e-3, Direction::Z).unwrap();
    let r = friction_force_montecarlo(&p, v, 0.0, McSpec::new(10_000, 5, true).unwrap(), Tier::FirstOrder).unwrap();
    let closed = friction_force(&p, v, 0.0).unwrap().force;
    assert!((r.force - closed).norm() <= 1e-14 * closed.norm());
}
