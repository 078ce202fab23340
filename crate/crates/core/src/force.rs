//! Net recoil force on a moving spontaneous emitter.
//!
//! Every evaluator reports the instantaneous ensemble-averaged force at time
//! `t` after preparation in the excited state, so each result carries the
//! survival factor `exp(-Gamma t)`. [`impulse`] gives the time integral.
//!
//! Routes:
//! - closed form `-exp(-Gamma t) (hbar omega0 / c^2) Gamma v` ([`friction_force`]),
//! - quadrature over rest-frame emission angles ([`friction_force_quadrature_unprimed`]),
//! - quadrature over lab-frame angles with the solid-angle Jacobian
//!   ([`friction_force_quadrature_primed`]),
//! - Monte Carlo over rest-frame photon directions ([`friction_force_montecarlo`]),
//! - the Doppler-only force without aberration ([`naive_doppler_force`]).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{C, HBAR};
use crate::error::{Error, Result};
use crate::kinematics::{transform_wavevector_tier, wavevector_shift, Direction, Tier, Vec3, Velocity, WaveVector};
use crate::pattern::{AngularDensity, EmissionPattern, TabulatedDensity, CELL_RULE_POINTS};
use crate::quadrature::{GaussLegendre, QuadratureSpec, SphereRule};
use crate::stats::{Neumaier, Vec3Sum, Welford};

/// Rest-frame recoil above this fraction of `hbar k0 Gamma` means the
/// pattern is not parity symmetric and the closed forms do not apply.
pub const PARITY_TOLERANCE: f64 = 1e-9;

/// Monte Carlo work unit: every chunk of this many draws (pairs when
/// antithetic) uses its own ChaCha stream, so results do not depend on
/// how chunks are scheduled.
pub const MC_CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceMethod {
    ClosedForm,
    QuadratureUnprimed,
    QuadraturePrimed,
    MonteCarlo,
    Naive,
}

impl ForceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForceMethod::ClosedForm => "closed_form",
            ForceMethod::QuadratureUnprimed => "quadrature_unprimed",
            ForceMethod::QuadraturePrimed => "quadrature_primed",
            ForceMethod::MonteCarlo => "monte_carlo",
            ForceMethod::Naive => "naive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceResult {
    /// N
    pub force: Vec3,
    pub method: ForceMethod,
    /// Standard error of the Monte Carlo mean per component, N. Zero otherwise.
    pub stderr: Vec3,
    /// Photon directions sampled (Monte Carlo) or quadrature nodes used.
    pub samples: u64,
    pub tier: Option<Tier>,
}

impl ForceResult {
    fn exact(force: Vec3, method: ForceMethod, samples: u64, tier: Option<Tier>) -> Self {
        ForceResult {
            force,
            method,
            stderr: Vec3::ZERO,
            samples,
            tier,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McSpec {
    n_samples: u64,
    seed: u64,
    antithetic: bool,
}

impl McSpec {
    pub fn new(n_samples: u64, seed: u64, antithetic: bool) -> Result<Self> {
        if antithetic && n_samples < 2 {
            return Err(Error::domain("antithetic sampling needs at least 2 samples"));
        }
        if n_samples < 2 {
            return Err(Error::domain("Monte Carlo needs at least 2 samples for an error estimate"));
        }
        Ok(McSpec {
            n_samples,
            seed,
            antithetic,
        })
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn antithetic(&self) -> bool {
        self.antithetic
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("time t = {t} must be finite and non-negative")))
    }
}

/// Errors unless the pattern's mean emission direction vanishes.
pub fn check_parity(p: &EmissionPattern) -> Result<()> {
    let ratio = p.mean_direction().norm();
    if ratio > PARITY_TOLERANCE {
        Err(Error::ParityViolation {
            ratio,
            tolerance: PARITY_TOLERANCE,
        })
    } else {
        Ok(())
    }
}

/// `hbar Gamma exp(-Gamma t)`: force per unit lab wavevector.
fn recoil_scale(p: &EmissionPattern, t: f64) -> f64 {
    HBAR * p.gamma_total() * (-p.gamma_total() * t).exp()
}

/// Rest-frame recoil `-exp(-Gamma t) integral hbar k gamma(k) d^3k` by quadrature.
pub fn rest_frame_force(p: &EmissionPattern, t: f64, q: QuadratureSpec) -> Result<ForceResult> {
    check_time(t)?;
    let k0 = p.k0();
    let mean_k = p.angular().integrate(q, |n| n.vec() * k0);
    Ok(ForceResult::exact(
        mean_k * -recoil_scale(p, t),
        ForceMethod::QuadratureUnprimed,
        node_count(p, q),
        None,
    ))
}

fn node_count(p: &EmissionPattern, q: QuadratureSpec) -> u64 {
    match p.angular() {
        AngularDensity::Tabulated(t) => (t.n_cos() * t.n_phi() * CELL_RULE_POINTS * CELL_RULE_POINTS) as u64,
        _ => (q.n_cos() * q.n_phi()) as u64,
    }
}

/// Doppler-only force with no aberration, `-(1/3) exp(-Gamma t) (hbar omega0 / c^2) Gamma v`.
///
/// The 1/3 is specific to isotropic emission; other patterns are rejected.
pub fn naive_doppler_force(p: &EmissionPattern, v: Velocity, t: f64) -> Result<ForceResult> {
    check_time(t)?;
    if !p.is_isotropic() {
        return Err(Error::InvalidPattern(format!(
            "the Doppler-only closed form holds for isotropic emission, got {}",
            p.angular().kind()
        )));
    }
    let coeff = (-p.gamma_total() * t).exp() * HBAR * p.omega0() / (C * C) * p.gamma_total();
    Ok(ForceResult::exact(v.vec() * (-coeff / 3.0), ForceMethod::Naive, 0, None))
}

/// Doppler-only force by quadrature: recoil `hbar (omega0/c)(1 + beta cos theta) n`
/// along the rest-frame direction, weighted by the rest-frame pattern.
pub fn naive_doppler_force_quadrature(
    p: &EmissionPattern,
    v: Velocity,
    t: f64,
    q: QuadratureSpec,
) -> Result<ForceResult> {
    check_time(t)?;
    let beta_vec = v.vec() * (1.0 / C);
    let k0 = p.k0();
    let mean_k = p
        .angular()
        .integrate(q, |n| n.vec() * (k0 * (1.0 + n.vec().dot(beta_vec))));
    Ok(ForceResult::exact(
        mean_k * -recoil_scale(p, t),
        ForceMethod::Naive,
        node_count(p, q),
        None,
    ))
}

/// Closed-form friction force `-exp(-Gamma t) (hbar omega0 / c^2) Gamma v`.
///
/// Independent of the angular shape, provided the pattern is parity symmetric;
/// otherwise the rest-frame recoil term would be silently dropped, so this
/// returns [`Error::ParityViolation`].
pub fn friction_force(p: &EmissionPattern, v: Velocity, t: f64) -> Result<ForceResult> {
    check_time(t)?;
    check_parity(p)?;
    let coeff = (-p.gamma_total() * t).exp() * HBAR * p.omega0() / (C * C) * p.gamma_total();
    Ok(ForceResult::exact(v.vec() * -coeff, ForceMethod::ClosedForm, 0, None))
}

/// Force from integrating the lab-frame recoil `-hbar k'(n)` over rest-frame
/// emission directions `n`, weighted by the rest-frame pattern.
pub fn friction_force_quadrature_unprimed(
    p: &EmissionPattern,
    v: Velocity,
    t: f64,
    q: QuadratureSpec,
    tier: Tier,
) -> Result<ForceResult> {
    check_time(t)?;
    let omega0 = p.omega0();
    let k = |n: Direction| WaveVector::from_direction(n, omega0).expect("omega0 validated by pattern");
    // k' = k + (k' - k): the rest-frame term is O(1) and vanishes for symmetric
    // patterns, so it is integrated apart from the O(beta) shift.
    let rest = p.angular().integrate(q, |n| k(n).vec());
    let shift = p.angular().integrate(q, |n| wavevector_shift(k(n), v, tier));
    let mean_k = rest + shift;
    Ok(ForceResult::exact(
        mean_k * -recoil_scale(p, t),
        ForceMethod::QuadratureUnprimed,
        node_count(p, q),
        Some(tier),
    ))
}

/// Same integral over lab-frame angles theta' measured from the velocity:
/// each lab direction is mapped back to its rest-frame direction, the pattern
/// is evaluated there, and the solid-angle Jacobian `dOmega/dOmega'` converts
/// the measure.
///
/// First-order tier: `cos theta = cos theta' - beta sin^2 theta'`, Jacobian
/// `(1 + beta cos theta)^2`, photon momentum `hbar (omega0/c)(1 + beta cos theta)`.
/// Exact tier: exact inverse aberration, Jacobian `gamma^2 (1 + beta cos theta)^2`
/// and the relativistic Doppler factor.
///
/// For a tabulated pattern moving along its own polar axis the lab grid is
/// laid on the images of the cell edges, so each cell is integrated by a
/// smooth rule. In any other direction the lab product rule cuts across
/// cells and converges only algebraically in the node count.
pub fn friction_force_quadrature_primed(
    p: &EmissionPattern,
    v: Velocity,
    t: f64,
    q: QuadratureSpec,
    tier: Tier,
) -> Result<ForceResult> {
    check_time(t)?;
    let axis = v.direction().unwrap_or(Direction::Z);
    let lab = LabMap::new(v.beta(), v.lorentz_factor(), tier);
    let k0 = p.k0();
    let (mean_k, nodes) = match p.angular() {
        AngularDensity::Tabulated(table) if axis.vec().x.hypot(axis.vec().y) < 1e-12 => {
            primed_table_aligned(table, axis.vec().z.signum(), &lab, k0)
        }
        angular => {
            let (e1, e2) = axis.orthonormal_basis();
            let ax = axis.vec();
            let mut acc = Vec3Sum::default();
            for (cos_lab, phi, w) in SphereRule::new(q).nodes() {
                let (cos_rest, weight) = lab.rest_cos_and_weight(cos_lab);
                let (sp, cp) = phi.sin_cos();
                let radial = e1 * cp + e2 * sp;
                let n_rest = Direction::from_unit_unchecked(radial * sin_of(cos_rest) + ax * cos_rest);
                let g = angular.eval(n_rest);
                if g != 0.0 {
                    let n_lab = radial * sin_of(cos_lab) + ax * cos_lab;
                    acc.add(n_lab * (w * weight * g * k0));
                }
            }
            (acc.sum(), (q.n_cos() * q.n_phi()) as u64)
        }
    };
    Ok(ForceResult::exact(
        mean_k * -recoil_scale(p, t),
        ForceMethod::QuadraturePrimed,
        nodes,
        Some(tier),
    ))
}

fn sin_of(cos: f64) -> f64 {
    (1.0 - cos * cos).max(0.0).sqrt()
}

/// Lab-to-rest polar map about the velocity for one tier.
struct LabMap {
    beta: f64,
    gamma: f64,
    tier: Tier,
}

impl LabMap {
    fn new(beta: f64, gamma: f64, tier: Tier) -> Self {
        LabMap { beta, gamma, tier }
    }

    /// Rest-frame cosine for lab cosine `c`, and the Doppler factor times the
    /// solid-angle Jacobian there.
    fn rest_cos_and_weight(&self, c: f64) -> (f64, f64) {
        let b = self.beta;
        match self.tier {
            Tier::FirstOrder => {
                let r = (c - b * (1.0 - c * c)).clamp(-1.0, 1.0);
                let d = 1.0 + b * r;
                (r, d * d * d)
            }
            Tier::Exact => {
                let r = ((c - b) / (1.0 - b * c)).clamp(-1.0, 1.0);
                let d = self.gamma * (1.0 + b * r);
                (r, d * d * d)
            }
        }
    }

    /// Lab cosine whose rest-frame image is `r`; inverse of the map above.
    fn lab_cos(&self, r: f64) -> f64 {
        let b = self.beta;
        match self.tier {
            // root of b c^2 + c - (b + r) = 0 in [-1, 1]
            Tier::FirstOrder => (2.0 * (b + r) / (1.0 + (1.0 + 4.0 * b * (b + r)).sqrt())).clamp(-1.0, 1.0),
            Tier::Exact => ((r + b) / (1.0 + b * r)).clamp(-1.0, 1.0),
        }
    }
}

/// Primed route for a table moving along `+z` (`sign = 1`) or `-z`.
fn primed_table_aligned(table: &TabulatedDensity, sign: f64, lab: &LabMap, k0: f64) -> (Vec3, u64) {
    let gl = GaussLegendre::new(CELL_RULE_POINTS);
    let edges = table.cos_edges();
    let phi_edges = table.phi_edges();
    let mut acc = Vec3Sum::default();
    for i in 0..table.n_cos() {
        // polar cosines about the velocity of this cell's edges, mapped to the lab
        let (a, b) = (lab.lab_cos(sign * edges[i]), lab.lab_cos(sign * edges[i + 1]));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for j in 0..table.n_phi() {
            let g = table.cell_density(i, j);
            if g == 0.0 {
                continue;
            }
            let mut cell = Vec3Sum::default();
            for (cos_lab, wc) in gl.mapped(lo, hi) {
                let (_, weight) = lab.rest_cos_and_weight(cos_lab);
                let s = sin_of(cos_lab);
                for (phi, wp) in gl.mapped(phi_edges[j], phi_edges[j + 1]) {
                    let (sp, cp) = phi.sin_cos();
                    let n_lab = Vec3::new(s * cp, s * sp, sign * cos_lab);
                    cell.add(n_lab * (wc * wp * weight));
                }
            }
            acc.add(cell.sum() * (g * k0));
        }
    }
    (acc.sum(), (table.n_cos() * table.n_phi() * CELL_RULE_POINTS * CELL_RULE_POINTS) as u64)
}

#[derive(Debug, Clone, Default)]
struct ChunkStats {
    sum: [Neumaier; 3],
    spread: [Welford; 3],
}

impl ChunkStats {
    fn push(&mut self, x: Vec3) {
        for (i, xi) in x.to_array().into_iter().enumerate() {
            self.sum[i].add(xi);
            self.spread[i].push(xi);
        }
    }

    fn merge(&mut self, other: &ChunkStats) {
        for i in 0..3 {
            self.sum[i].merge(&other.sum[i]);
            self.spread[i].merge(&other.spread[i]);
        }
    }
}

/// Monte Carlo estimate: photon directions are drawn from the rest-frame
/// pattern, each photon is carried to the lab frame with the tier's
/// wavevector transform, and the recoil `-hbar k' Gamma exp(-Gamma t)` is
/// averaged.
///
/// With antithetic pairing every direction `n` is paired with `-n`; the
/// rest-frame recoil cancels exactly within each pair. Both wavevector
/// transforms are affine in `k`, so the pair mean is the same for every pair
/// and the reported standard error is zero. The standard error is the
/// sample standard deviation of the mean over independent units (pairs
/// when antithetic).
///
/// Draws are split into [`MC_CHUNK`]-sized chunks; chunk `i` uses a ChaCha8
/// generator seeded from `seed` on stream `i`. Chunk results are merged in
/// index order, so the output is bit-identical for any number of workers.
pub fn friction_force_montecarlo(
    p: &EmissionPattern,
    v: Velocity,
    t: f64,
    mc: McSpec,
    tier: Tier,
) -> Result<ForceResult> {
    check_time(t)?;
    let units = if mc.antithetic { mc.n_samples / 2 } else { mc.n_samples };
    let n_chunks = units.div_ceil(MC_CHUNK);
    let omega0 = p.omega0();
    let chunks: Vec<ChunkStats> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(chunk);
            let start = chunk * MC_CHUNK;
            let end = (start + MC_CHUNK).min(units);
            let mut stats = ChunkStats::default();
            for _ in start..end {
                let n = p.sample_direction(&mut rng);
                let k = WaveVector::from_direction(n, omega0).expect("omega0 validated by pattern");
                let value = if mc.antithetic {
                    // k(n) + k(-n) is exactly zero, leaving only the shifts
                    let k_anti = WaveVector::from_direction(-n, omega0).expect("omega0 validated");
                    (wavevector_shift(k, v, tier) + wavevector_shift(k_anti, v, tier)) * 0.5
                } else {
                    transform_wavevector_tier(k, v, tier).vec()
                };
                stats.push(value);
            }
            stats
        })
        .collect();
    let mut total = ChunkStats::default();
    for c in &chunks {
        total.merge(c);
    }
    let m = units as f64;
    let scale = recoil_scale(p, t);
    let mean = Vec3::new(total.sum[0].sum(), total.sum[1].sum(), total.sum[2].sum()) * (1.0 / m);
    let sem = |w: &Welford| (w.sample_variance() / m).sqrt();
    let stderr = Vec3::new(sem(&total.spread[0]), sem(&total.spread[1]), sem(&total.spread[2])) * scale;
    Ok(ForceResult {
        force: mean * -scale,
        method: ForceMethod::MonteCarlo,
        stderr,
        samples: if mc.antithetic { 2 * units } else { units },
        tier: Some(tier),
    })
}

/// [`friction_force_montecarlo`] on a dedicated pool of `workers` threads.
pub fn friction_force_montecarlo_with_workers(
    p: &EmissionPattern,
    v: Velocity,
    t: f64,
    mc: McSpec,
    tier: Tier,
    workers: usize,
) -> Result<ForceResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?;
    pool.install(|| friction_force_montecarlo(p, v, t, mc, tier))
}

/// Total momentum transferred over the whole decay, `-(hbar omega0 / c^2) v`.
pub fn impulse(p: &EmissionPattern, v: Velocity) -> Result<Vec3> {
    check_parity(p)?;
    Ok(v.vec() * -(HBAR * p.omega0() / (C * C)))
}
