//! Physical constants and unit conversion helpers.
//!
//! Internal units: energies in eV, times in s, fields in T, frequencies in Hz,
//! lengths in m, currents in A, powers in W.

use serde::Serialize;

/// CODATA 2018 values expressed in the simulator's internal unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Bohr magneton (eV/T).
    pub mu_b: f64,
    /// Boltzmann constant (eV/K).
    pub k_b: f64,
    /// Planck constant (eV·s).
    pub h: f64,
    /// Vacuum permeability (T·m/A).
    pub mu_0: f64,
    /// Speed of light in vacuum (m/s).
    pub c: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        mu_b: 5.788_381_806_0e-5,
        k_b: 8.617_333_262e-5,
        h: 4.135_667_696e-15,
        mu_0: 1.256_637_062_12e-6,
        c: 299_792_458.0,
    };

    /// Reduced Planck constant (eV·s).
    pub fn hbar(&self) -> f64 {
        self.h / (2.0 * std::f64::consts::PI)
    }

    /// Bohr magneton over Planck constant (Hz/T).
    pub fn mu_b_over_h(&self) -> f64 {
        self.mu_b / self.h
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// The constant set used throughout the crate.
pub const CONSTANTS: PhysicalConstants = PhysicalConstants::CODATA_2018;

pub const MICRO_EV: f64 = 1e-6;
pub const MILLI_EV: f64 = 1e-3;

/// Energy (eV) to frequency (Hz) via E = h f.
pub fn energy_to_frequency(energy_ev: f64) -> f64 {
    energy_ev / CONSTANTS.h
}

/// Frequency (Hz) to energy (eV).
pub fn frequency_to_energy(frequency_hz: f64) -> f64 {
    frequency_hz * CONSTANTS.h
}

/// Temperature (K) to thermal energy k_B T (eV).
pub fn thermal_energy(temperature_k: f64) -> f64 {
    CONSTANTS.k_b * temperature_k
}

/// Energy (eV) to the equivalent temperature (K).
pub fn energy_to_temperature(energy_ev: f64) -> f64 {
    energy_ev / CONSTANTS.k_b
}
