//! Calculators for delivering the ESR drive field with an on-chip wire.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::CONSTANTS;
use crate::error::{require_non_negative, require_positive, Error, Result};

/// Series resistance reproducing ~10 μW of ohmic loss at 1 mA amplitude.
pub const CALIBRATED_WIRE_RESISTANCE: f64 = 20.0;
/// Metallic-cavity dissipation at B1 = 1 mT, 30 GHz (W).
pub const CAVITY_POWER_AT_1MT: f64 = 1.0;
/// Dielectric plus radiation loss relative to ohmic loss.
pub const DEFAULT_LOSS_OVERHEAD: f64 = 2.0;
/// Effective permittivity at a GaAs surface, `(12.9 + 1) / 2`.
pub const GAAS_SURFACE_PERMITTIVITY: f64 = 6.9;
/// Largest `r / λ` still counted as "well within" the near field.
pub const DEFAULT_NEAR_FIELD_RATIO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireGeometry {
    /// Distance from the wire axis to the dot (m).
    pub distance_to_dot: f64,
    #[serde(default = "one")]
    pub relative_permeability: f64,
    /// Effective series resistance at the drive frequency (Ω).
    #[serde(default)]
    pub resistance: f64,
}

fn one() -> f64 {
    1.0
}

impl WireGeometry {
    pub fn new(distance_to_dot: f64, resistance: f64) -> Result<Self> {
        let g = WireGeometry {
            distance_to_dot,
            relative_permeability: 1.0,
            resistance,
        };
        g.validate()?;
        Ok(g)
    }

    /// On-chip wire 200 nm from the dot with the calibrated 20 Ω.
    pub fn on_chip() -> Self {
        WireGeometry {
            distance_to_dot: 200e-9,
            relative_permeability: 1.0,
            resistance: CALIBRATED_WIRE_RESISTANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("distance_to_dot", self.distance_to_dot)?;
        require_positive("relative_permeability", self.relative_permeability)?;
        require_non_negative("resistance", self.resistance)
    }

    fn permeability(&self) -> f64 {
        self.relative_permeability * CONSTANTS.mu_0
    }
}

/// Near-field magnitude `μ I / (2π r)` (T).
pub fn wire_field(current: f64, geometry: &WireGeometry) -> Result<f64> {
    require_non_negative("current", current)?;
    geometry.validate()?;
    Ok(geometry.permeability() * current / (2.0 * PI * geometry.distance_to_dot))
}

/// Current amplitude needed for drive field `b1` (A).
pub fn required_current(b1: f64, geometry: &WireGeometry) -> Result<f64> {
    require_non_negative("b1", b1)?;
    geometry.validate()?;
    Ok(b1 * 2.0 * PI * geometry.distance_to_dot / geometry.permeability())
}

/// Time-averaged ohmic loss `I² R / 2` for a sinusoidal amplitude `I` (W).
pub fn ohmic_power(current_amplitude: f64, geometry: &WireGeometry) -> Result<f64> {
    require_non_negative("current_amplitude", current_amplitude)?;
    geometry.validate()?;
    Ok(0.5 * current_amplitude * current_amplitude * geometry.resistance)
}

/// Ohmic loss times the dielectric/radiation overhead factor.
pub fn total_wire_power(current_amplitude: f64, geometry: &WireGeometry, overhead: f64) -> Result<f64> {
    require_positive("overhead", overhead)?;
    Ok(ohmic_power(current_amplitude, geometry)? * overhead)
}

/// Order-of-magnitude dissipation in a metallic cavity: `1 W × (B1 / 1 mT)²`.
pub fn cavity_power_estimate(b1: f64) -> Result<f64> {
    require_non_negative("b1", b1)?;
    Ok(CAVITY_POWER_AT_1MT * (b1 / 1e-3).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFieldReport {
    pub wavelength: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub fn near_field_check(geometry: &WireGeometry, frequency: f64, effective_permittivity: f64) -> Result<NearFieldReport> {
    near_field_check_with(geometry, frequency, effective_permittivity, DEFAULT_NEAR_FIELD_RATIO)
}

/// Guided wavelength `c / (f √ε)` and whether `r / λ` is below `threshold`.
pub fn near_field_check_with(
    geometry: &WireGeometry,
    frequency: f64,
    effective_permittivity: f64,
    threshold: f64,
) -> Result<NearFieldReport> {
    require_positive("frequency", frequency)?;
    geometry.validate()?;
    if !(effective_permittivity >= 1.0) {
        return Err(Error::param("effective_permittivity", format!("must be >= 1, got {effective_permittivity}")));
    }
    require_positive("threshold", threshold)?;
    let wavelength = CONSTANTS.c / (frequency * effective_permittivity.sqrt());
    let ratio = geometry.distance_to_dot / wavelength;
    Ok(NearFieldReport {
        wavelength,
        ratio,
        threshold,
        passed: ratio < threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalBudget {
    /// Cooling power at the mixing chamber (W).
    pub available_power: f64,
    pub duty_cycle: f64,
}

impl ThermalBudget {
    pub fn new(available_power: f64, duty_cycle: f64) -> Result<Self> {
        require_positive("available_power", available_power)?;
        if !(0.0..=1.0).contains(&duty_cycle) {
            return Err(Error::param("duty_cycle", format!("must lie in [0, 1], got {duty_cycle}")));
        }
        Ok(ThermalBudget {
            available_power,
            duty_cycle,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub effective_power: f64,
    pub available_power: f64,
    pub passed: bool,
    /// `available / effective`; infinite at zero dissipation.
    pub margin: f64,
}

pub fn thermal_budget_check(power: f64, budget: &ThermalBudget) -> Result<BudgetReport> {
    require_non_negative("power", power)?;
    let budget = ThermalBudget::new(budget.available_power, budget.duty_cycle)?;
    let effective = power * budget.duty_cycle;
    Ok(BudgetReport {
        effective_power: effective,
        available_power: budget.available_power,
        passed: effective < budget.available_power,
        margin: if effective > 0.0 {
            budget.available_power / effective
        } else {
            f64::INFINITY
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn wire_field_anchors() {
        let far = WireGeometry::new(200e-6, 0.0).unwrap();
        let near = WireGeometry::new(200e-9, 0.0).unwrap();
        assert!(rel(wire_field(1.0, &far).unwrap(), 1e-3) < 1e-6);
        assert!(rel(wire_field(1e-3, &near).unwrap(), 1e-3) < 1e-6);
        assert_eq!(wire_field(0.0, &near).unwrap(), 0.0);
        assert!(wire_field(-1.0, &near).is_err());
        assert!(WireGeometry::new(0.0, 1.0).is_err());
    }

    #[test]
    fn required_current_anchors() {
        let far = WireGeometry::new(200e-6, 0.0).unwrap();
        let near = WireGeometry::new(200e-9, 0.0).unwrap();
        assert!(rel(required_current(1e-5, &far).unwrap(), 10e-3) < 1e-6);
        assert!(rel(required_current(1e-5, &near).unwrap(), 10e-6) < 1e-6);
        assert_eq!(required_current(0.0, &near).unwrap(), 0.0);
    }

    #[test]
    fn ohmic_power_examples() {
        let g = WireGeometry::on_chip();
        assert!(rel(ohmic_power(1e-3, &g).unwrap(), 10e-6) < 1e-12);
        assert_eq!(ohmic_power(0.0, &g).unwrap(), 0.0);
        assert!(rel(ohmic_power(2e-3, &g).unwrap(), 40e-6) < 1e-12);
        assert!(rel(total_wire_power(1e-3, &g, DEFAULT_LOSS_OVERHEAD).unwrap(), 20e-6) < 1e-12);
    }

    #[test]
    fn cavity_anchors_follow_from_one_calibration() {
        assert!(rel(cavity_power_estimate(1e-3).unwrap(), 1.0) < 1e-12);
        assert!(rel(cavity_power_estimate(1e-5).unwrap(), 100e-6) < 0.01);
        assert_eq!(cavity_power_estimate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn near_field_examples() {
        let g = WireGeometry::on_chip();
        let r = near_field_check(&g, 30e9, GAAS_SURFACE_PERMITTIVITY).unwrap();
        assert!((r.wavelength - 3.807e-3).abs() < 0.01e-3, "{}", r.wavelength);
        assert!((r.ratio - 5.25e-5).abs() < 0.05e-5, "{}", r.ratio);
        assert!(r.passed);
        let slow = near_field_check(&g, 3e9, GAAS_SURFACE_PERMITTIVITY).unwrap();
        assert!(rel(slow.wavelength, 10.0 * r.wavelength) < 1e-12);
        assert!(near_field_check(&g, 30e9, 0.5).is_err());
        let far = WireGeometry::new(1e-3, 0.0).unwrap();
        assert!(!near_field_check(&far, 30e9, GAAS_SURFACE_PERMITTIVITY).unwrap().passed);
    }

    #[test]
    fn thermal_budget_examples() {
        let continuous = ThermalBudget::new(300e-6, 1.0).unwrap();
        let r = thermal_budget_check(10e-6, &continuous).unwrap();
        assert!(r.passed && rel(r.margin, 30.0) < 1e-12);
        let pulsed = ThermalBudget::new(300e-6, 1e-4).unwrap();
        let r = thermal_budget_check(1.0, &pulsed).unwrap();
        assert!(r.passed && rel(r.effective_power, 100e-6) < 1e-12);
        let idle = ThermalBudget::new(1e-9, 0.0).unwrap();
        assert!(thermal_budget_check(1e3, &idle).unwrap().passed);
        assert!(ThermalBudget::new(1.0, 1.5).is_err());
    }

    #[test]
    fn wire_beats_cavity_by_four_orders() {
        let g = WireGeometry::on_chip();
        let i = required_current(1e-5, &g).unwrap();
        let p = ohmic_power(i, &g).unwrap();
        assert!(p <= 1e-9, "{p}");
        assert!(cavity_power_estimate(1e-5).unwrap() / p >= 1e4);
    }

    proptest! {
        #[test]
        fn field_and_current_are_inverse(i in 0.0f64..10.0, r in 1e-9f64..1e-2, mu in 1.0f64..5.0) {
            let g = WireGeometry { distance_to_dot: r, relative_permeability: mu, resistance: 1.0 };
            let b = wire_field(i, &g).unwrap();
            let back = required_current(b, &g).unwrap();
            prop_assert!((back - i).abs() <= 1e-12 * i.max(1e-300));
        }

        #[test]
        fn field_scaling(i in 1e-6f64..1.0, r in 1e-9f64..1e-3, k in 1.0f64..100.0) {
            let g = WireGeometry::new(r, 0.0).unwrap();
            let gk = WireGeometry::new(k * r, 0.0).unwrap();
            let b = wire_field(i, &g).unwrap();
            prop_assert!(rel(wire_field(k * i, &g).unwrap(), k * b) < 1e-12);
            prop_assert!(rel(wire_field(i, &gk).unwrap(), b / k) < 1e-12);
        }
    }
}
