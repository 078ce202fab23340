//! Recoil of a decaying atom through the Doppler asymmetry of its own
//! emission, and the mass bookkeeping that goes with it.
//!
//! The friction force on an excited atom moving at `v` is
//! `F = -exp(-Gamma t) (hbar omega0 / c^2) Gamma v`: the atom loses momentum
//! at constant velocity because it loses mass. [`force`] evaluates it by
//! closed form, quadrature and Monte Carlo; [`dynamics`] integrates the two
//! branches (constant mass, constant velocity); [`trap`] turns the mass
//! excess into a trap-frequency shift.

// `!(x > 0.0)` is used on purpose: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod force;
pub mod kinematics;
pub mod pattern;
pub mod quadrature;
pub mod stats;
pub mod trap;
pub mod validation;

pub use dynamics::{Branch, DecayScenario, Trajectory};
pub use error::{Error, Result};
pub use force::{ForceMethod, ForceResult, McSpec};
pub use kinematics::{Direction, Tier, Vec3, Velocity, WaveVector};
pub use pattern::{AngularDensity, EmissionPattern, TabulatedDensity};
pub use quadrature::QuadratureSpec;
pub use trap::{FeasibilityReport, IonCatalog, IonSpec, TrapSpec};
