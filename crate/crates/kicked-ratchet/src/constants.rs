//! Physical constants in SI units.
//!
//! All values from CODATA 2018 / AME 2020. Every conversion in this crate
//! pulls constants from this one table so results are reproducible
//! bit-for-bit across engines.

use std::f64::consts::PI;

/// Planck constant (J s), exact by SI definition.
pub const PLANCK_H: f64 = 6.62607015e-34;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK_H / (2.0 * PI);

/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.66053906660e-27;

/// Cesium-133 atomic mass (u).
pub const CS133_MASS_U: f64 = 132.905451961;

/// Cesium-133 atomic mass (kg).
pub const CS133_MASS: f64 = CS133_MASS_U * ATOMIC_MASS_UNIT;

/// Cesium D2 transition wavelength (m).
pub const CS_D2_WAVELENGTH: f64 = 852.34727582e-9;
