//! Dot and lead parameter sets plus the static energetics derived from them.

use serde::{Deserialize, Serialize};

use crate::constants::{thermal_energy, CONSTANTS};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::units::serde_quantity;

/// Parameters of a single gated quantum dot holding one electron.
///
/// g-factors are stored as magnitudes; the spin ground state is always `|↑⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DotParams {
    pub g_d: f64,
    #[serde(rename = "B0", deserialize_with = "serde_quantity::field::deserialize")]
    pub b0: f64,
    #[serde(deserialize_with = "serde_quantity::temperature::deserialize")]
    pub temperature: f64,
    /// Spin relaxation time (s). May be infinite.
    #[serde(rename = "T1", deserialize_with = "serde_quantity::time::deserialize")]
    pub t1: f64,
    /// Phase randomization time (s). May be infinite.
    #[serde(rename = "T2", deserialize_with = "serde_quantity::time::deserialize")]
    pub t2: f64,
    #[serde(deserialize_with = "serde_quantity::energy::deserialize")]
    pub charging_energy: f64,
    #[serde(deserialize_with = "serde_quantity::energy::deserialize")]
    pub level_spacing: f64,
}

impl DotParams {
    /// Reference GaAs dot at 5 T and 100 mK.
    ///
    /// T1 is 100 μs, the conservative value used by the readout timing budget.
    pub fn reference_device() -> Self {
        DotParams {
            g_d: 0.44,
            b0: 5.0,
            temperature: 0.1,
            t1: 100e-6,
            t2: 100e-9,
            charging_energy: 2e-3,
            level_spacing: 0.5e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("g_d", self.g_d)?;
        require_positive("B0", self.b0)?;
        require_positive("temperature", self.temperature)?;
        require_positive("T1", self.t1)?;
        require_positive("T2", self.t2)?;
        require_positive("charging_energy", self.charging_energy)?;
        require_positive("level_spacing", self.level_spacing)?;
        if self.t2 > 2.0 * self.t1 {
            return Err(Error::param(
                "T2",
                format!("T2 = {} s exceeds the physical bound 2*T1 = {} s", self.t2, 2.0 * self.t1),
            ));
        }
        Ok(())
    }

    /// Soft checks for the single-electron, orbital-ground-state regime.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let ez = self.zeeman_splitting();
        if self.charging_energy <= self.level_spacing {
            warnings.push(format!(
                "charging energy {:.3e} eV does not exceed level spacing {:.3e} eV",
                self.charging_energy, self.level_spacing
            ));
        }
        if self.level_spacing <= ez {
            warnings.push(format!(
                "level spacing {:.3e} eV does not exceed Zeeman splitting {:.3e} eV",
                self.level_spacing, ez
            ));
        }
        warnings
    }

    pub fn zeeman_splitting(&self) -> f64 {
        self.g_d * CONSTANTS.mu_b * self.b0
    }

    pub fn larmor_frequency(&self) -> f64 {
        self.zeeman_splitting() / CONSTANTS.h
    }

    pub fn thermal_up_probability(&self) -> f64 {
        boltzmann_up(self.zeeman_splitting(), self.temperature)
    }

    /// Equilibrium longitudinal magnetization `2 p_up - 1`.
    pub fn equilibrium_magnetization(&self) -> f64 {
        let x = self.zeeman_splitting() / thermal_energy(self.temperature);
        (0.5 * x).tanh()
    }
}

impl Default for DotParams {
    fn default() -> Self {
        Self::reference_device()
    }
}

/// Parameters of the two-dimensional electron gas leads next to the dot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeadParams {
    pub g_l: f64,
    pub g_l_eff: f64,
    pub filling_factor: u32,
    /// Fermi level relative to the dot `|↑⟩` level (eV, signed).
    #[serde(deserialize_with = "serde_quantity::energy::deserialize")]
    pub fermi_level_offset: f64,
}

impl LeadParams {
    /// ν = 1 leads with an exchange-enhanced g-factor of 5.
    pub fn reference_leads() -> Self {
        LeadParams {
            g_l: 0.5,
            g_l_eff: 5.0,
            filling_factor: 1,
            fermi_level_offset: -0.5e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("g_l", self.g_l)?;
        if self.g_l_eff < self.g_l {
            return Err(Error::param("g_l_eff", "must be >= g_l"));
        }
        if self.g_l_eff > 10.0 * self.g_l {
            return Err(Error::param("g_l_eff", "must be <= 10 * g_l"));
        }
        Ok(())
    }

    /// Probability that a lead electron at the Fermi level is `|↑⟩`.
    pub fn polarization(&self, b0: f64, temperature: f64) -> f64 {
        boltzmann_up(self.g_l_eff * CONSTANTS.mu_b * b0, temperature)
    }
}

impl Default for LeadParams {
    fn default() -> Self {
        Self::reference_leads()
    }
}

fn boltzmann_up(splitting: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + (-splitting / thermal_energy(temperature)).exp())
}

/// Zeeman splitting `g μ_B B0` (eV).
pub fn zeeman_splitting(g: f64, b0: f64) -> Result<f64> {
    require_non_negative("B0", b0)?;
    Ok(g * CONSTANTS.mu_b * b0)
}

/// Spin precession frequency `g μ_B B0 / h` (Hz).
pub fn larmor_frequency(g: f64, b0: f64) -> Result<f64> {
    Ok(zeeman_splitting(g, b0)? / CONSTANTS.h)
}

/// Boltzmann occupation of `|↑⟩` for a two-level spin.
pub fn thermal_up_probability(g: f64, b0: f64, temperature: f64) -> Result<f64> {
    require_positive("temperature", temperature)?;
    Ok(boltzmann_up(zeeman_splitting(g, b0)?, temperature))
}

pub fn thermal_down_probability(g: f64, b0: f64, temperature: f64) -> Result<f64> {
    require_positive("temperature", temperature)?;
    let ez = zeeman_splitting(g, b0)?;
    Ok(1.0 / (1.0 + (ez / thermal_energy(temperature)).exp()))
}

/// Strict polarization criterion `g μ_B B0 > 5 k_B T`.
///
/// Applies to the dot (with `g_d`) and to the leads (with `g_l_eff`).
pub fn polarization_condition_met(g: f64, b0: f64, temperature: f64) -> Result<bool> {
    require_positive("temperature", temperature)?;
    Ok(zeeman_splitting(g, b0)? > 5.0 * thermal_energy(temperature))
}
