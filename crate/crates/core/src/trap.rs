//! Trapped-ion test of the excited-state mass excess.
//!
//! An ion in a harmonic trap of stiffness kappa oscillates at
//! `Omega = sqrt(kappa / m)`. In the excited state its mass is larger by
//! `hbar omega0 / c^2`, so it oscillates at `Omega* = Omega / sqrt(1 + epsilon)`
//! with `epsilon = hbar omega0 / (m c^2)`. Ground and excited motions are
//! first maximally out of phase after `T = pi / (Omega - Omega*)`.
//!
//! Every epsilon-dependent quantity is formed from epsilon directly; forming
//! `Omega - Omega*` by subtraction would lose five of sixteen digits at
//! epsilon ~ 1e-11.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::AMU;
use crate::dynamics::fractional_speed_loss;
use crate::error::{Error, Result};

/// Below this, `Omega - Omega*` is not representable against `Omega`.
pub const MIN_EPSILON: f64 = 1e-15;

/// Mass shift ratio quoted for the 171Yb+ 2F7/2 example.
pub const PUBLISHED_YB_EPSILON: f64 = 1.36e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifetime {
    Finite(f64),
    /// Long enough that it never limits the experiment (years, for 2F7/2).
    EffectivelyInfinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IonSpec {
    pub name: String,
    /// kg
    mass: f64,
    /// nu0 = omega0 / 2 pi, Hz
    transition_frequency: f64,
    lifetime: Lifetime,
    epsilon_override: Option<f64>,
}

impl IonSpec {
    pub fn new(name: impl Into<String>, mass: f64, transition_frequency: f64, lifetime: Lifetime) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain("ion mass must be positive"));
        }
        if !(transition_frequency.is_finite() && transition_frequency > 0.0) {
            return Err(Error::domain("transition frequency must be positive"));
        }
        if let Lifetime::Finite(tau) = lifetime {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::domain("lifetime must be positive"));
            }
        }
        Ok(IonSpec {
            name: name.into(),
            mass,
            transition_frequency,
            lifetime,
            epsilon_override: None,
        })
    }

    pub fn from_amu(name: impl Into<String>, mass_u: f64, transition_frequency: f64, lifetime: Lifetime) -> Result<Self> {
        Self::new(name, mass_u * AMU, transition_frequency, lifetime)
    }

    /// Use a given `epsilon` instead of the one implied by the constants.
    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::domain("epsilon must be finite and non-negative"));
        }
        self.epsilon_override = Some(epsilon);
        Ok(self)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn transition_frequency(&self) -> f64 {
        self.transition_frequency
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.transition_frequency
    }

    pub fn lifetime(&self) -> Lifetime {
        self.lifetime
    }

    pub fn epsilon_is_injected(&self) -> bool {
        self.epsilon_override.is_some()
    }

    /// `hbar omega0 / (m c^2)`, or the injected value.
    pub fn epsilon(&self) -> f64 {
        self.epsilon_override
            .unwrap_or_else(|| fractional_speed_loss(self.omega0(), self.mass).expect("validated"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapSpec {
    /// kappa, N/m
    Stiffness(f64),
    /// Omega / 2 pi for the ground-state ion, Hz
    GroundFrequency(f64),
}

impl TrapSpec {
    pub fn stiffness(kappa: f64) -> Result<Self> {
        if kappa.is_finite() && kappa > 0.0 {
            Ok(TrapSpec::Stiffness(kappa))
        } else {
            Err(Error::domain("trap stiffness must be positive"))
        }
    }

    pub fn ground_frequency(hz: f64) -> Result<Self> {
        if hz.is_finite() && hz > 0.0 {
            Ok(TrapSpec::GroundFrequency(hz))
        } else {
            Err(Error::domain("trap frequency must be positive"))
        }
    }

    /// Ground-state angular frequency `Omega` for an ion of mass `mass`.
    pub fn omega_ground(&self, mass: f64) -> f64 {
        match *self {
            TrapSpec::Stiffness(k) => (k / mass).sqrt(),
            TrapSpec::GroundFrequency(f) => 2.0 * PI * f,
        }
    }

    /// `kappa = m Omega^2`.
    pub fn kappa(&self, mass: f64) -> f64 {
        match *self {
            TrapSpec::Stiffness(k) => k,
            TrapSpec::GroundFrequency(_) => mass * self.omega_ground(mass).powi(2),
        }
    }
}

/// `Omega - Omega* = Omega (1 - (1 + eps)^(-1/2))`, without cancellation.
fn delta_omega_exact(omega: f64, eps: f64) -> f64 {
    -omega * (-0.5 * eps.ln_1p()).exp_m1()
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps >= MIN_EPSILON {
        Ok(())
    } else {
        Err(Error::Degenerate { epsilon: eps })
    }
}

/// Excited-state trap frequency `Omega* = sqrt(kappa / (m + hbar omega0 / c^2))`.
pub fn excited_trap_frequency(trap: TrapSpec, ion: &IonSpec) -> f64 {
    trap.omega_ground(ion.mass) / (1.0 + ion.epsilon()).sqrt()
}

/// First-order form `Omega (1 - epsilon / 2)`.
pub fn excited_trap_frequency_first_order(trap: TrapSpec, ion: &IonSpec) -> f64 {
    trap.omega_ground(ion.mass) * (1.0 - 0.5 * ion.epsilon())
}

/// `T = pi / (Omega - Omega*)`.
pub fn separation_time(trap: TrapSpec, ion: &IonSpec) -> Result<f64> {
    let eps = ion.epsilon();
    check_epsilon(eps)?;
    Ok(PI / delta_omega_exact(trap.omega_ground(ion.mass), eps))
}

/// First-order form `(2 pi / Omega) / epsilon`.
pub fn separation_time_first_order(trap: TrapSpec, ion: &IonSpec) -> Result<f64> {
    let eps = ion.epsilon();
    check_epsilon(eps)?;
    Ok(2.0 * PI / trap.omega_ground(ion.mass) / eps)
}

/// Classical phase difference `(Omega - Omega*) t` between ground- and
/// excited-state motion; reaches pi at the separation time.
pub fn phase_separation(trap: TrapSpec, ion: &IonSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time t = {t} must be non-negative")));
    }
    Ok(delta_omega_exact(trap.omega_ground(ion.mass), ion.epsilon()) * t)
}

/// Exact-form values kept alongside the first-order ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactTrapForms {
    pub omega_excited: f64,
    pub delta_omega: f64,
    pub separation_time: f64,
    pub period_count: f64,
}

/// First-order quantities (the usual back-of-envelope forms) with the exact
/// ones as a cross-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub ion: String,
    pub epsilon: f64,
    pub epsilon_injected: bool,
    /// rad/s
    pub omega_ground: f64,
    /// rad/s
    pub omega_excited: f64,
    /// rad/s
    pub delta_omega: f64,
    /// s
    pub separation_time: f64,
    pub period_count: f64,
    /// lifetime / separation time; `None` for an effectively infinite lifetime.
    pub lifetime_margin: Option<f64>,
    pub feasible: bool,
    pub exact: ExactTrapForms,
}

pub fn feasibility_report(trap: TrapSpec, ion: &IonSpec) -> Result<FeasibilityReport> {
    let eps = ion.epsilon();
    check_epsilon(eps)?;
    let omega = trap.omega_ground(ion.mass);
    let t_first = separation_time_first_order(trap, ion)?;
    let t_exact = separation_time(trap, ion)?;
    let lifetime_margin = match ion.lifetime {
        Lifetime::Finite(tau) => Some(tau / t_first),
        Lifetime::EffectivelyInfinite => None,
    };
    Ok(FeasibilityReport {
        ion: ion.name.clone(),
        epsilon: eps,
        epsilon_injected: ion.epsilon_is_injected(),
        omega_ground: omega,
        omega_excited: excited_trap_frequency_first_order(trap, ion),
        delta_omega: 0.5 * omega * eps,
        separation_time: t_first,
        period_count: t_first * omega / (2.0 * PI),
        feasible: lifetime_margin.is_none_or(|m| m >= 1.0),
        lifetime_margin,
        exact: ExactTrapForms {
            omega_excited: excited_trap_frequency(trap, ion),
            delta_omega: delta_omega_exact(omega, eps),
            separation_time: t_exact,
            period_count: t_exact * omega / (2.0 * PI),
        },
    })
}

/// "15.7 hours", "3.2 days", "45 s" style rendering.
pub fn human_duration(seconds: f64) -> String {
    const MIN: f64 = 60.0;
    const HOUR: f64 = 3600.0;
    const DAY: f64 = 86_400.0;
    const YEAR: f64 = 365.25 * DAY;
    if !seconds.is_finite() {
        return "effectively infinite".into();
    }
    let (value, unit) = match seconds.abs() {
        s if s < MIN => (seconds, "s"),
        s if s < HOUR => (seconds / MIN, "minutes"),
        s if s < 2.0 * DAY => (seconds / HOUR, "hours"),
        s if s < YEAR => (seconds / DAY, "days"),
        _ => (seconds / YEAR, "years"),
    };
    format!("{value:.3} {unit}")
}

#[derive(Debug, Deserialize)]
struct IonRecord {
    name: String,
    mass_u: f64,
    transition_thz: f64,
    lifetime_s_or_inf: String,
}

/// Ion species table, CSV header `name,mass_u,transition_thz,lifetime_s_or_inf`.
#[derive(Debug, Clone)]
pub struct IonCatalog {
    ions: Vec<IonSpec>,
}

const BUILTIN_CATALOG: &str = include_str!("../data/ions.csv");

impl IonCatalog {
    pub fn builtin() -> Self {
        Self::from_csv_reader(BUILTIN_CATALOG.as_bytes(), "<builtin>").expect("builtin catalog parses")
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(f, &path.display().to_string())
    }

    pub fn from_csv_reader(reader: impl std::io::Read, origin: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut ions = Vec::new();
        for rec in rdr.deserialize::<IonRecord>() {
            let r = rec.map_err(|e| parse_err(e.to_string()))?;
            let lifetime = match r.lifetime_s_or_inf.to_ascii_lowercase().as_str() {
                "inf" | "infinite" => Lifetime::EffectivelyInfinite,
                s => Lifetime::Finite(
                    s.parse::<f64>()
                        .map_err(|e| parse_err(format!("lifetime '{s}' for {}: {e}", r.name)))?,
                ),
            };
            ions.push(IonSpec::from_amu(r.name, r.mass_u, r.transition_thz * 1e12, lifetime)?);
        }
        Ok(IonCatalog { ions })
    }

    pub fn names(&self) -> Vec<String> {
        self.ions.iter().map(|i| i.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Result<IonSpec> {
        self.ions
            .iter()
            .find(|i| i.name.eq_ignore_ascii_case(name))
            .cloned()
            .ok_or_else(|| Error::UnknownIon {
                name: name.to_string(),
                available: self.names(),
            })
    }
}
