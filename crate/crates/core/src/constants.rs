//! Physical constants in SI units.

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Atomic mass unit as used by the chirality formulas, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.66e-27;

/// Conversion of a tabulated specific rotation (degrees) to m²/kg.
pub const SPECIFIC_ROTATION_UNIT: f64 = 0.01;
