//! Emission rate densities: a sharp transition frequency, a total decay rate
//! and a normalized angular density.
//!
//! The frequency part of the rate density is a delta function at `omega0`.
//! It is carried structurally as the stored `omega0`; every frequency
//! integral collapses analytically. The angular rate density per unit solid
//! angle and per unit `omega^2 d omega` is `Gamma g(n) / omega0^2`, which
//! [`EmissionPattern::angular_rate_density`] exposes for bookkeeping.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::Deserialize;

use crate::constants::{C, EPSILON_0, HBAR};
use crate::error::{Error, Result};
use crate::kinematics::{Direction, Vec3};
use crate::quadrature::{GaussLegendre, QuadratureSpec, SphereRule};
use crate::stats::Vec3Sum;

/// Tolerance on the normalization of every constructed density.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
/// Tabulated densities whose integral is off by less than this are rescaled with a warning.
pub const RESCALE_LIMIT: f64 = 1e-3;

const TWO_PI: f64 = 2.0 * PI;
/// Gauss-Legendre points per axis inside each tabulated cell.
pub(crate) const CELL_RULE_POINTS: usize = 4;

/// Transition dipole matrix element magnitude, C m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleMoment(f64);

impl DipoleMoment {
    pub fn new(magnitude: f64) -> Result<Self> {
        if magnitude.is_finite() && magnitude >= 0.0 {
            Ok(DipoleMoment(magnitude))
        } else {
            Err(Error::domain("dipole moment must be finite and non-negative"))
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.0
    }
}

/// Electric-dipole spontaneous emission rate
/// `Gamma = omega0^3 |d|^2 / (3 pi eps0 hbar c^3)`.
pub fn dipole_decay_rate(omega0: f64, d: DipoleMoment) -> Result<f64> {
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::domain("omega0 must be positive"));
    }
    Ok(omega0.powi(3) * d.0 * d.0 / (3.0 * PI * EPSILON_0 * HBAR * C.powi(3)))
}

/// Excited-state population `exp(-Gamma t)` for a state prepared at t = 0.
pub fn survival_probability(gamma_total: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time t = {t} must be non-negative")));
    }
    if !(gamma_total.is_finite() && gamma_total >= 0.0) {
        return Err(Error::domain("decay rate must be finite and non-negative"));
    }
    Ok((-gamma_total * t).exp())
}

/// Dipole radiation pattern `(3 / 8 pi) sin^2 psi` about `axis`.
#[derive(Debug, Clone)]
pub struct DipoleDensity {
    axis: Direction,
    e1: Vec3,
    e2: Vec3,
}

impl DipoleDensity {
    pub fn new(axis: Direction) -> Self {
        let (e1, e2) = axis.orthonormal_basis();
        DipoleDensity { axis, e1, e2 }
    }

    pub fn axis(&self) -> Direction {
        self.axis
    }

    fn eval(&self, n: Direction) -> f64 {
        let c = n.vec().dot(self.axis.vec());
        3.0 / (8.0 * PI) * (1.0 - c * c).max(0.0)
    }
}

/// Inverse CDF of the dipole polar distribution: solves
/// `(3/4)(x - x^3/3) + 1/2 = u` for `x = cos psi` by Newton's method from
/// `x0 = 2u - 1`, safeguarded by bisection on [-1, 1].
pub fn dipole_inverse_cdf(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let f = |x: f64| 0.75 * (x - x * x * x / 3.0) + 0.5 - u;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut x = 2.0 * u - 1.0;
    for _ in 0..100 {
        let fx = f(x);
        if fx.abs() < 1e-14 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = 0.75 * (1.0 - x * x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 {
            break;
        }
    }
    x
}

/// Piecewise-constant density on a (cos theta, phi) grid covering the sphere.
#[derive(Debug, Clone)]
pub struct TabulatedDensity {
    cos_edges: Vec<f64>,
    phi_edges: Vec<f64>,
    /// Per-steradian density, row-major: `[i_cos * n_phi + j_phi]`.
    density: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

#[derive(Debug, Deserialize)]
struct CellRecord {
    cos_theta_lo: f64,
    cos_theta_hi: f64,
    phi_lo: f64,
    phi_hi: f64,
    weight: f64,
}

impl TabulatedDensity {
    /// Builds a density from per-steradian values on the given grid.
    ///
    /// If the integral is within [`RESCALE_LIMIT`] of one the values are
    /// rescaled (with a warning); further off is an error.
    pub fn new(cos_edges: Vec<f64>, phi_edges: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        Self::validate_grid(&cos_edges, &phi_edges)?;
        let n_phi = phi_edges.len() - 1;
        let n_cells = (cos_edges.len() - 1) * n_phi;
        if density.len() != n_cells {
            return Err(Error::InvalidPattern(format!(
                "expected {n_cells} cell values, got {}",
                density.len()
            )));
        }
        if density.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidPattern(
                "cell densities must be finite and non-negative".into(),
            ));
        }
        let masses = cell_masses(&cos_edges, &phi_edges, &density);
        let integral: f64 = masses.iter().sum();
        let mut density = density;
        if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
            if (integral - 1.0).abs() < RESCALE_LIMIT && integral > 0.0 {
                log::warn!("tabulated density integrates to {integral}; rescaling to 1");
                density.iter_mut().for_each(|w| *w /= integral);
            } else {
                return Err(Error::Normalization { integral });
            }
        }
        Self::assemble(cos_edges, phi_edges, density)
    }

    /// Builds a density from relative cell probabilities (any positive scale).
    pub fn from_cell_weights(cos_edges: Vec<f64>, phi_edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::validate_grid(&cos_edges, &phi_edges)?;
        let n_phi = phi_edges.len() - 1;
        if weights.len() != (cos_edges.len() - 1) * n_phi {
            return Err(Error::InvalidPattern("weight count does not match grid".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidPattern("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Normalization { integral: total });
        }
        let density = weights
            .iter()
            .enumerate()
            .map(|(idx, w)| {
                let (i, j) = (idx / n_phi, idx % n_phi);
                let area = (cos_edges[i + 1] - cos_edges[i]) * (phi_edges[j + 1] - phi_edges[j]);
                w / total / area
            })
            .collect();
        Self::assemble(cos_edges, phi_edges, density)
    }

    /// Tabulates a smooth density on a uniform `n_cos x n_phi` grid by cell
    /// averaging, then normalizes.
    pub fn from_function(n_cos: usize, n_phi: usize, f: impl Fn(Direction) -> f64) -> Result<Self> {
        if n_cos == 0 || n_phi == 0 {
            return Err(Error::InvalidPattern("grid needs at least one cell".into()));
        }
        let cos_edges: Vec<f64> = (0..=n_cos).map(|i| -1.0 + 2.0 * i as f64 / n_cos as f64).collect();
        let phi_edges: Vec<f64> = (0..=n_phi).map(|j| TWO_PI * j as f64 / n_phi as f64).collect();
        let gl = GaussLegendre::new(CELL_RULE_POINTS);
        let mut weights = Vec::with_capacity(n_cos * n_phi);
        for i in 0..n_cos {
            for j in 0..n_phi {
                let mut m = 0.0;
                for (c, wc) in gl.mapped(cos_edges[i], cos_edges[i + 1]) {
                    for (p, wp) in gl.mapped(phi_edges[j], phi_edges[j + 1]) {
                        m += wc * wp * f(Direction::from_cos_phi(c, p)?);
                    }
                }
                weights.push(m.max(0.0));
            }
        }
        Self::from_cell_weights(cos_edges, phi_edges, weights)
    }

    /// Loads cells from CSV with header
    /// `cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,weight`.
    ///
    /// Weights are relative cell probabilities and are rescaled to sum to one.
    /// The cells must tile a rectangular grid covering the whole sphere.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: "<csv>".into(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut cells = Vec::new();
        for rec in rdr.deserialize::<CellRecord>() {
            cells.push(rec.map_err(|e| parse_err(e.to_string()))?);
        }
        if cells.is_empty() {
            return Err(parse_err("no cells".into()));
        }
        let edges = |lo: &dyn Fn(&CellRecord) -> f64, hi: &dyn Fn(&CellRecord) -> f64| {
            let mut e: Vec<f64> = cells.iter().flat_map(|c| [lo(c), hi(c)]).collect();
            e.sort_by(f64::total_cmp);
            e.dedup();
            e
        };
        let cos_edges = edges(&|c| c.cos_theta_lo, &|c| c.cos_theta_hi);
        let phi_edges = edges(&|c| c.phi_lo, &|c| c.phi_hi);
        Self::validate_grid(&cos_edges, &phi_edges)?;
        let n_phi = phi_edges.len() - 1;
        let n_cells = (cos_edges.len() - 1) * n_phi;
        let mut weights = vec![f64::NAN; n_cells];
        let index_of = |edges: &[f64], x: f64| edges.iter().position(|&e| e == x);
        for c in &cells {
            let cell = (|| {
                let i = index_of(&cos_edges, c.cos_theta_lo)?;
                let j = index_of(&phi_edges, c.phi_lo)?;
                let ok = cos_edges.get(i + 1) == Some(&c.cos_theta_hi) && phi_edges.get(j + 1) == Some(&c.phi_hi);
                ok.then_some(i * n_phi + j)
            })()
            .ok_or_else(|| {
                parse_err(format!(
                    "cell [{}, {}] x [{}, {}] does not match the grid",
                    c.cos_theta_lo, c.cos_theta_hi, c.phi_lo, c.phi_hi
                ))
            })?;
            if !weights[cell].is_nan() {
                return Err(parse_err(format!("duplicate cell at index {cell}")));
            }
            weights[cell] = c.weight;
        }
        if weights.iter().any(|w| w.is_nan()) {
            return Err(parse_err(format!(
                "{} of {n_cells} grid cells are missing",
                weights.iter().filter(|w| w.is_nan()).count()
            )));
        }
        Self::from_cell_weights(cos_edges, phi_edges, weights)
    }

    /// Writes the cells in the CSV layout read by [`Self::from_csv_reader`].
    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["cos_theta_lo", "cos_theta_hi", "phi_lo", "phi_hi", "weight"])
            .map_err(io)?;
        let masses = cell_masses(&self.cos_edges, &self.phi_edges, &self.density);
        let n_phi = self.n_phi();
        for (idx, m) in masses.iter().enumerate() {
            let (i, j) = (idx / n_phi, idx % n_phi);
            w.write_record([
                format!("{:.17e}", self.cos_edges[i]),
                format!("{:.17e}", self.cos_edges[i + 1]),
                format!("{:.17e}", self.phi_edges[j]),
                format!("{:.17e}", self.phi_edges[j + 1]),
                format!("{:.17e}", m),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    fn validate_grid(cos_edges: &[f64], phi_edges: &[f64]) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPattern(m.into()));
        if cos_edges.len() < 2 || phi_edges.len() < 2 {
            return bad("grid needs at least one cell");
        }
        if cos_edges.windows(2).any(|w| !(w[0] < w[1])) || phi_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("grid edges must be strictly increasing");
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        if !close(cos_edges[0], -1.0) || !close(*cos_edges.last().unwrap(), 1.0) {
            return bad("cos theta edges must span [-1, 1]");
        }
        if !close(phi_edges[0], 0.0) || !close(*phi_edges.last().unwrap(), TWO_PI) {
            return bad("phi edges must span [0, 2 pi]");
        }
        Ok(())
    }

    fn assemble(cos_edges: Vec<f64>, phi_edges: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let masses = cell_masses(&cos_edges, &phi_edges, &density);
        let alias = WeightedAliasIndex::new(masses).map_err(|e| Error::InvalidPattern(e.to_string()))?;
        Ok(TabulatedDensity {
            cos_edges,
            phi_edges,
            density,
            alias,
        })
    }

    pub fn n_cos(&self) -> usize {
        self.cos_edges.len() - 1
    }

    pub fn n_phi(&self) -> usize {
        self.phi_edges.len() - 1
    }

    pub fn cos_edges(&self) -> &[f64] {
        &self.cos_edges
    }

    pub fn phi_edges(&self) -> &[f64] {
        &self.phi_edges
    }

    /// Per-steradian density of cell `(i, j)`.
    pub fn cell_density(&self, i: usize, j: usize) -> f64 {
        self.density[i * self.n_phi() + j]
    }

    fn eval(&self, n: Direction) -> f64 {
        let v = n.vec();
        let c = v.z.clamp(-1.0, 1.0);
        let mut phi = v.y.atan2(v.x);
        if phi < 0.0 {
            phi += TWO_PI;
        }
        let i = locate(&self.cos_edges, c);
        let j = locate(&self.phi_edges, phi);
        self.cell_density(i, j)
    }

    fn integrate<F: FnMut(Direction) -> Vec3>(&self, mut f: F) -> Vec3 {
        let gl = GaussLegendre::new(CELL_RULE_POINTS);
        let mut acc = Vec3Sum::default();
        for i in 0..self.n_cos() {
            for j in 0..self.n_phi() {
                let g = self.cell_density(i, j);
                if g == 0.0 {
                    continue;
                }
                let mut cell = Vec3::ZERO;
                for (c, wc) in gl.mapped(self.cos_edges[i], self.cos_edges[i + 1]) {
                    for (p, wp) in gl.mapped(self.phi_edges[j], self.phi_edges[j + 1]) {
                        cell = cell + f(direction_unchecked(c, p)) * (wc * wp);
                    }
                }
                acc.add(cell * g);
            }
        }
        acc.sum()
    }
}

fn locate(edges: &[f64], x: f64) -> usize {
    let n_cells = edges.len() - 1;
    edges.partition_point(|&e| e <= x).saturating_sub(1).min(n_cells - 1)
}

fn cell_masses(cos_edges: &[f64], phi_edges: &[f64], density: &[f64]) -> Vec<f64> {
    let n_phi = phi_edges.len() - 1;
    density
        .iter()
        .enumerate()
        .map(|(idx, g)| {
            let (i, j) = (idx / n_phi, idx % n_phi);
            g * (cos_edges[i + 1] - cos_edges[i]) * (phi_edges[j + 1] - phi_edges[j])
        })
        .collect()
}

fn direction_unchecked(cos_theta: f64, phi: f64) -> Direction {
    let s = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    Direction::from_unit_unchecked(Vec3::new(s * phi.cos(), s * phi.sin(), cos_theta))
}

/// Normalized angular distribution of emitted photons, per steradian.
#[derive(Debug, Clone)]
pub enum AngularDensity {
    Isotropic,
    Dipole(DipoleDensity),
    Tabulated(TabulatedDensity),
}

impl AngularDensity {
    pub fn dipole(axis: Direction) -> Self {
        AngularDensity::Dipole(DipoleDensity::new(axis))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AngularDensity::Isotropic => "isotropic",
            AngularDensity::Dipole(_) => "dipole",
            AngularDensity::Tabulated(_) => "tabulated",
        }
    }

    /// Density `g(n)` in 1/sr.
    pub fn eval(&self, n: Direction) -> f64 {
        match self {
            AngularDensity::Isotropic => 1.0 / (4.0 * PI),
            AngularDensity::Dipole(d) => d.eval(n),
            AngularDensity::Tabulated(t) => t.eval(n),
        }
    }

    /// `integral f(n) g(n) dOmega`.
    ///
    /// Built-in patterns use the product rule described by `q`. Tabulated
    /// patterns are integrated cell by cell with a fixed 4x4 Gauss-Legendre
    /// rule per cell, so the discontinuities at cell edges never fall inside
    /// a rule; `q` does not apply to them.
    pub fn integrate<F: FnMut(Direction) -> Vec3>(&self, q: QuadratureSpec, mut f: F) -> Vec3 {
        match self {
            AngularDensity::Tabulated(t) => t.integrate(f),
            _ => {
                let rule = SphereRule::new(q);
                let mut acc = Vec3Sum::default();
                for (c, phi, w) in rule.nodes() {
                    let n = direction_unchecked(c, phi);
                    let g = self.eval(n);
                    if g != 0.0 {
                        acc.add(f(n) * (w * g));
                    }
                }
                acc.sum()
            }
        }
    }

    /// `integral g dOmega`, evaluated by this density's own quadrature.
    pub fn total_weight(&self, q: QuadratureSpec) -> f64 {
        self.integrate(q, |_| Vec3::X).x
    }

    /// Mean emission direction `integral n g dOmega`. Zero for parity-symmetric densities.
    pub fn mean_direction(&self, q: QuadratureSpec) -> Vec3 {
        self.integrate(q, |n| n.vec())
    }

    /// Draws a direction distributed with density `g`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Direction {
        match self {
            AngularDensity::Isotropic => {
                let c = 2.0 * rng.random::<f64>() - 1.0;
                let phi = TWO_PI * rng.random::<f64>();
                direction_unchecked(c, phi)
            }
            AngularDensity::Dipole(d) => {
                let x = dipole_inverse_cdf(rng.random::<f64>());
                let phi = TWO_PI * rng.random::<f64>();
                let s = (1.0 - x * x).max(0.0).sqrt();
                let v = d.e1 * (s * phi.cos()) + d.e2 * (s * phi.sin()) + d.axis.vec() * x;
                Direction::from_unit_unchecked(v * (1.0 / v.norm()))
            }
            AngularDensity::Tabulated(t) => {
                let cell = t.alias.sample(rng);
                let (i, j) = (cell / t.n_phi(), cell % t.n_phi());
                let c = t.cos_edges[i] + (t.cos_edges[i + 1] - t.cos_edges[i]) * rng.random::<f64>();
                let phi = t.phi_edges[j] + (t.phi_edges[j + 1] - t.phi_edges[j]) * rng.random::<f64>();
                direction_unchecked(c, phi)
            }
        }
    }
}

/// Emission rate density `Gamma delta(omega - omega0) g(n) / omega0^2`.
#[derive(Debug, Clone)]
pub struct EmissionPattern {
    omega0: f64,
    gamma_total: f64,
    angular: AngularDensity,
    mean_direction: Vec3,
}

impl EmissionPattern {
    /// Validates rates and checks the angular normalization with the
    /// density's own quadrature.
    pub fn new(omega0: f64, gamma_total: f64, angular: AngularDensity) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::domain(format!("omega0 = {omega0} must be positive")));
        }
        if !(gamma_total.is_finite() && gamma_total > 0.0) {
            return Err(Error::domain(format!("Gamma = {gamma_total} must be positive")));
        }
        let q = QuadratureSpec::default();
        let integral = angular.total_weight(q);
        if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization { integral });
        }
        let mean_direction = angular.mean_direction(q);
        Ok(EmissionPattern {
            omega0,
            gamma_total,
            angular,
            mean_direction,
        })
    }

    pub fn isotropic(omega0: f64, gamma_total: f64) -> Result<Self> {
        Self::new(omega0, gamma_total, AngularDensity::Isotropic)
    }

    pub fn dipole(omega0: f64, gamma_total: f64, axis: Direction) -> Result<Self> {
        Self::new(omega0, gamma_total, AngularDensity::dipole(axis))
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_total
    }

    pub fn angular(&self) -> &AngularDensity {
        &self.angular
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.angular, AngularDensity::Isotropic)
    }

    /// Rest-frame photon momentum magnitude over hbar, `omega0 / c`.
    pub fn k0(&self) -> f64 {
        self.omega0 / C
    }

    /// `integral n g dOmega` computed at construction.
    pub fn mean_direction(&self) -> Vec3 {
        self.mean_direction
    }

    /// Same pattern with a different total rate.
    pub fn with_gamma(&self, gamma_total: f64) -> Result<Self> {
        Self::new(self.omega0, gamma_total, self.angular.clone())
    }

    /// Same pattern with a different transition frequency.
    pub fn with_omega0(&self, omega0: f64) -> Result<Self> {
        Self::new(omega0, self.gamma_total, self.angular.clone())
    }

    /// Emission rate into unit solid angle about `n`, `Gamma g(n)`, in 1/(s sr).
    pub fn per_solid_angle_rate(&self, n: Direction) -> f64 {
        self.gamma_total * self.angular.eval(n)
    }

    /// Angular factor of the rate density, `Gamma g(n) / omega0^2`.
    /// Integrating it over solid angle gives `Gamma / omega0^2`.
    pub fn angular_rate_density(&self, n: Direction) -> f64 {
        self.per_solid_angle_rate(n) / (self.omega0 * self.omega0)
    }

    /// `integral Gamma g dOmega`; errors if it is not `Gamma` to 1e-10 relative.
    pub fn total_rate_check(&self) -> Result<f64> {
        self.total_rate_check_with(QuadratureSpec::default())
    }

    pub fn total_rate_check_with(&self, q: QuadratureSpec) -> Result<f64> {
        let total = self.gamma_total * self.angular.total_weight(q);
        let integral = total / self.gamma_total;
        if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization { integral });
        }
        Ok(total)
    }

    pub fn sample_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Direction {
        self.angular.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decay_rate_examples() {
        let zero = DipoleMoment::new(0.0).unwrap();
        assert_eq!(dipole_decay_rate(3.0e15, zero).unwrap(), 0.0);
        let d = DipoleMoment::new(2.081e-29).unwrap();
        let g1 = dipole_decay_rate(2.455e15, d).unwrap();
        let g2 = dipole_decay_rate(2.0 * 2.455e15, d).unwrap();
        assert_relative_eq!(g2 / g1, 8.0, max_relative = 1e-14);
        // independent evaluation (python, CODATA 2018):
        // w**3*d**2/(3*pi*eps0*hbar*c**3) = 2.7023433178e7
        assert_relative_eq!(g1, 2.7023433178e7, max_relative = 1e-10);
        assert!(dipole_decay_rate(0.0, d).is_err());
        assert!(DipoleMoment::new(-1.0).is_err());
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_probability(5.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(survival_probability(1.0, 2f64.ln()).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(survival_probability(3.2e7, 1e-7).unwrap(), (-3.2f64).exp(), max_relative = 1e-15);
        assert!(survival_probability(1.0, -1e-9).is_err());
    }

    #[test]
    fn per_solid_angle_examples() {
        let iso = EmissionPattern::isotropic(1.0, 1.0).unwrap();
        assert_eq!(iso.per_solid_angle_rate(Direction::new(0.2, 0.5, -0.1).unwrap()), 1.0 / (4.0 * PI));
        let dip = EmissionPattern::dipole(1.0, 1.0, Direction::Z).unwrap();
        assert_eq!(dip.per_solid_angle_rate(Direction::Z), 0.0);
        assert_relative_eq!(dip.per_solid_angle_rate(Direction::X), 3.0 / (8.0 * PI), epsilon = 1e-16);
    }

    #[test]
    fn angular_rate_density_integrates_to_gamma_over_omega0_squared() {
        let p = EmissionPattern::dipole(2.0e15, 3.0e7, Direction::Y).unwrap();
        let total = p
            .angular()
            .integrate(QuadratureSpec::default(), |_| Vec3::X)
            .x
            * p.gamma_total()
            / (p.omega0() * p.omega0());
        assert_relative_eq!(total, 3.0e7 / 4.0e30, max_relative = 1e-13);
        let n = Direction::X;
        assert_relative_eq!(
            p.angular_rate_density(n),
            p.gamma_total() * 3.0 / (8.0 * PI) / 4.0e30,
            max_relative = 1e-15
        );
    }

    #[test]
    fn total_rate_examples() {
        let iso = EmissionPattern::isotropic(1.0, 3.2e7).unwrap();
        assert_relative_eq!(iso.total_rate_check().unwrap(), 3.2e7, max_relative = 1e-14);
        let dip = EmissionPattern::dipole(1.0, 1.0, Direction::new(1.0, 2.0, 3.0).unwrap()).unwrap();
        assert!((dip.total_rate_check().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_dipole_copy_normalizes() {
        let dip = AngularDensity::dipole(Direction::Z);
        let tab = TabulatedDensity::from_function(64, 128, |n| dip.eval(n)).unwrap();
        // brute-force cell sum oracle: sum density * area over cells
        let mut s = 0.0;
        for i in 0..tab.n_cos() {
            for j in 0..tab.n_phi() {
                let dc = tab.cos_edges()[i + 1] - tab.cos_edges()[i];
                let dp = tab.phi_edges()[j + 1] - tab.phi_edges()[j];
                s += tab.cell_density(i, j) * dc * dp;
            }
        }
        assert!((s - 1.0).abs() < 1e-6);
        let p = EmissionPattern::new(1.0, 1.0, AngularDensity::Tabulated(tab)).unwrap();
        assert!((p.total_rate_check().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tabulated_rescales_small_errors_and_rejects_large_ones() {
        let cos = vec![-1.0, 0.0, 1.0];
        let phi = vec![0.0, PI, TWO_PI];
        let g = 1.0 / (4.0 * PI);
        let t = TabulatedDensity::new(cos.clone(), phi.clone(), vec![g * 1.0001; 4]).unwrap();
        assert_relative_eq!(t.cell_density(0, 0), g, max_relative = 1e-14);
        let r = TabulatedDensity::new(cos.clone(), phi.clone(), vec![g * 1.1; 4]);
        assert!(matches!(r, Err(Error::Normalization { .. })));
        assert!(TabulatedDensity::new(cos.clone(), phi.clone(), vec![-g, g, g, g]).is_err());
        assert!(TabulatedDensity::new(vec![-1.0, 0.5], phi, vec![g; 2]).is_err());
    }

    #[test]
    fn tabulated_lookup_hits_the_right_cell() {
        let cos = vec![-1.0, 0.0, 1.0];
        let phi = vec![0.0, PI, TWO_PI];
        let t = TabulatedDensity::from_cell_weights(cos, phi, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = AngularDensity::Tabulated(t.clone());
        let area = PI;
        assert_relative_eq!(d.eval(Direction::new(0.0, 1.0, 0.5).unwrap()), 3.0 / 10.0 / area);
        assert_relative_eq!(d.eval(Direction::new(0.0, -1.0, 0.5).unwrap()), 4.0 / 10.0 / area);
        assert_relative_eq!(d.eval(Direction::new(0.0, -1.0, -0.5).unwrap()), 2.0 / 10.0 / area);
        assert_relative_eq!(d.eval(Direction::Z), 3.0 / 10.0 / area);
    }

    #[test]
    fn csv_round_trip() {
        let dip = AngularDensity::dipole(Direction::X);
        let t = TabulatedDensity::from_function(8, 16, |n| dip.eval(n)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = TabulatedDensity::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.n_cos(), 8);
        assert_eq!(back.n_phi(), 16);
        for i in 0..8 {
            for j in 0..16 {
                assert_relative_eq!(back.cell_density(i, j), t.cell_density(i, j), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn csv_rejects_gaps_and_duplicates() {
        let header = "cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,weight\n";
        let gap = format!("{header}-1,0,0,6.283185307179586,1\n");
        assert!(TabulatedDensity::from_csv_reader(gap.as_bytes()).is_err());
        let dup = format!(
            "{header}-1,0,0,6.283185307179586,1\n-1,0,0,6.283185307179586,1\n0,1,0,6.283185307179586,1\n"
        );
        assert!(TabulatedDensity::from_csv_reader(dup.as_bytes()).is_err());
        let ok = format!("{header}-1,0,0,6.283185307179586,1\n0,1,0,6.283185307179586,3\n");
        let t = TabulatedDensity::from_csv_reader(ok.as_bytes()).unwrap();
        assert_relative_eq!(t.cell_density(1, 0), 0.75 / TWO_PI, max_relative = 1e-14);
    }

    #[test]
    fn dipole_inverse_cdf_matches_trigonometric_root() {
        // x^3 - 3x + (4u - 2) = 0 has the root 2 cos((acos(1 - 2u) + 4 pi) / 3) in [-1, 1]
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let oracle = 2.0 * (((1.0 - 2.0 * u).acos() + 4.0 * PI) / 3.0).cos();
            let x = dipole_inverse_cdf(u);
            assert!((x - oracle).abs() < 1e-12, "u={u}: {x} vs {oracle}");
        }
    }

    #[test]
    fn parity_of_builtin_patterns() {
        let dip = AngularDensity::dipole(Direction::new(0.3, -0.4, 0.8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = AngularDensity::Isotropic.sample(&mut rng);
            assert_eq!(dip.eval(n), dip.eval(-n));
            assert_eq!(AngularDensity::Isotropic.eval(n), AngularDensity::Isotropic.eval(-n));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = EmissionPattern::dipole(1.0, 1.0, Direction::Y).unwrap();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..100).map(|_| p.sample_direction(&mut rng).vec()).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn pattern_validation() {
        assert!(EmissionPattern::isotropic(0.0, 1.0).is_err());
        assert!(EmissionPattern::isotropic(1.0, 0.0).is_err());
        assert!(EmissionPattern::isotropic(f64::INFINITY, 1.0).is_err());
    }
}
