//! CODATA 2018 values in SI units.

/// Speed of light in vacuum, m/s (exact by definition of the metre).
pub const C: f64 = 299_792_458.0;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// The constant set used by the physics routines.
///
/// Library code always uses [`PhysicalConstants::CODATA_2018`]. A different
/// set can only be built through [`PhysicalConstants::for_testing`], and even
/// then `c` stays at its defined value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    c: f64,
    hbar: f64,
    eps0: f64,
    amu: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        c: C,
        hbar: HBAR,
        eps0: EPSILON_0,
        amu: AMU,
    };

    /// Override everything except `c`. Returns `None` unless all values are
    /// finite and strictly positive.
    #[doc(hidden)]
    pub fn for_testing(hbar: f64, eps0: f64, amu: f64) -> Option<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        (ok(hbar) && ok(eps0) && ok(amu)).then_some(PhysicalConstants {
            c: C,
            hbar,
            eps0,
            amu,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn amu(&self) -> f64 {
        self.amu
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}
