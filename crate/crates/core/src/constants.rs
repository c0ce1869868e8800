//! Physical constants used across the crate.
//!
//! Atomic constants are the standard values for the ⁸⁷Rb D₂ line; they are
//! stored here as defaults and can be overridden through
//! [`crate::atomics::AtomicLine`].

/// Boltzmann constant (J/K), exact by SI definition.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Mass of a ⁸⁷Rb atom (kg).
pub const RB87_MASS: f64 = 1.443_160_65e-25;

/// Vacuum wavelength of the ⁸⁷Rb D₂ transition (m).
pub const RB87_D2_WAVELENGTH: f64 = 780.241e-9;

/// Half the spontaneous decay rate of the D₂ excited state, in ordinary
/// frequency (Hz). The full natural linewidth is Γ/2π = 6.066 MHz.
pub const RB87_D2_GAMMA: f64 = 3.033e6;

/// Bohr magneton divided by Planck's constant (Hz/T).
pub const BOHR_MAGNETON_HZ_PER_TESLA: f64 = 13.996e9;

/// Landé g-factor of the F=2 ground manifold.
pub const G_F_GROUND: f64 = 0.5;

/// Landé g-factor of the F'=3 excited manifold.
pub const G_F_EXCITED: f64 = 2.0 / 3.0;
