//! Spin initialization: thermal equilibration on the dot and tunneling from
//! (partially) polarized leads.

use serde::{Deserialize, Serialize};

use crate::device::{polarization_condition_met, DotParams, LeadParams};
use crate::constants::{thermal_energy, CONSTANTS};
use crate::error::{require_non_negative, require_positive, require_probability, Error, Result};
use crate::state::{BlochMap, Qubit, SpinState};
use crate::units::serde_quantity;

/// Default time for an electron to tunnel onto the empty dot.
pub const DEFAULT_TUNNEL_TIME: f64 = 0.1e-6;

fn default_tunnel_time() -> f64 {
    DEFAULT_TUNNEL_TIME
}

/// How a qubit is brought into a known state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method", deny_unknown_fields)]
pub enum InitMethod {
    /// Wait for the spin to relax to its Boltzmann distribution.
    ThermalEquilibration {
        #[serde(deserialize_with = "serde_quantity::time::deserialize")]
        wait_time: f64,
    },
    /// Load an electron from ν = 1 spin-polarized leads.
    TunnelFromPolarizedLeads {
        #[serde(
            default = "default_tunnel_time",
            deserialize_with = "serde_quantity::time::deserialize"
        )]
        tunnel_time: f64,
    },
    /// Load from leads whose polarization has been tuned to `lead_polarization`.
    TunnelFromPartiallyPolarizedLeads {
        lead_polarization: f64,
        #[serde(
            default = "default_tunnel_time",
            deserialize_with = "serde_quantity::time::deserialize"
        )]
        tunnel_time: f64,
    },
}

impl InitMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitMethod::ThermalEquilibration { wait_time } => require_non_negative("wait_time", wait_time),
            InitMethod::TunnelFromPolarizedLeads { tunnel_time } => require_positive("tunnel_time", tunnel_time),
            InitMethod::TunnelFromPartiallyPolarizedLeads {
                lead_polarization,
                tunnel_time,
            } => {
                require_probability("lead_polarization", lead_polarization)?;
                require_positive("tunnel_time", tunnel_time)
            }
        }
    }
}

/// Options shared by the tunnel-loading procedures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelOptions {
    #[serde(default = "default_tunnel_time")]
    pub tunnel_time: f64,
    /// Probability that the spin flips while tunneling. Zero for spin-conserving tunneling.
    #[serde(default)]
    pub spin_flip_probability: f64,
}

impl Default for TunnelOptions {
    fn default() -> Self {
        TunnelOptions {
            tunnel_time: DEFAULT_TUNNEL_TIME,
            spin_flip_probability: 0.0,
        }
    }
}

impl TunnelOptions {
    fn validate(&self) -> Result<()> {
        require_positive("tunnel_time", self.tunnel_time)?;
        require_probability("spin_flip_probability", self.spin_flip_probability)
    }

    fn flip(&self, p_up: f64) -> f64 {
        let q = self.spin_flip_probability;
        p_up * (1.0 - q) + (1.0 - p_up) * q
    }
}

/// Free relaxation channel over `duration`: populations approach the thermal
/// value with time constant T1, coherences decay with T2.
pub fn relaxation_map(dot: &DotParams, duration: f64) -> Result<BlochMap> {
    require_non_negative("duration", duration)?;
    let m_eq = dot.equilibrium_magnetization();
    let longitudinal = decay(duration, dot.t1);
    let transverse = decay(duration, dot.t2);
    Ok(BlochMap {
        linear: [
            [transverse, 0.0, 0.0],
            [0.0, transverse, 0.0],
            [0.0, 0.0, longitudinal],
        ],
        offset: [0.0, 0.0, m_eq * (1.0 - longitudinal)],
    })
}

fn decay(t: f64, tau: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (-t / tau).exp()
    }
}

/// Let a single spin relax toward thermal equilibrium for `wait_time`.
pub fn thermal_init(dot: &DotParams, initial: &SpinState, wait_time: f64) -> Result<(SpinState, f64)> {
    require_non_negative("wait_time", wait_time)?;
    initial.single_matrix()?;
    if wait_time == 0.0 {
        return Ok((initial.clone(), 0.0));
    }
    let map = relaxation_map(dot, wait_time)?;
    Ok((initial.apply_bloch_map(&map, Qubit::First)?, wait_time))
}

/// Load an electron from fully polarized ν = 1 leads.
pub fn polarized_lead_init(dot: &DotParams, leads: &LeadParams) -> Result<(SpinState, f64)> {
    polarized_lead_init_with(dot, leads, &TunnelOptions::default())
}

pub fn polarized_lead_init_with(
    dot: &DotParams,
    leads: &LeadParams,
    options: &TunnelOptions,
) -> Result<(SpinState, f64)> {
    options.validate()?;
    if leads.filling_factor != 1 {
        return Err(Error::param(
            "filling_factor",
            format!("polarized-lead loading needs ν = 1, got {}", leads.filling_factor),
        ));
    }
    if !polarization_condition_met(leads.g_l_eff, dot.b0, dot.temperature)? {
        return Err(Error::UnpolarizedLeads {
            zeeman_ev: leads.g_l_eff * CONSTANTS.mu_b * dot.b0,
            thermal_ev: 5.0 * thermal_energy(dot.temperature),
        });
    }
    let p_up = options.flip(leads.polarization(dot.b0, dot.temperature));
    Ok((SpinState::mixed(p_up)?, options.tunnel_time))
}

/// Load an electron from leads whose polarization was tuned so that the dot
/// ends up `|↑⟩` with probability `p_up_target`.
pub fn mixed_lead_init(_dot: &DotParams, _leads: &LeadParams, p_up_target: f64) -> Result<(SpinState, f64)> {
    mixed_lead_init_with(p_up_target, &TunnelOptions::default())
}

pub fn mixed_lead_init_with(p_up_target: f64, options: &TunnelOptions) -> Result<(SpinState, f64)> {
    require_probability("p_up_target", p_up_target)?;
    options.validate()?;
    Ok((SpinState::mixed(options.flip(p_up_target))?, options.tunnel_time))
}

/// Run any [`InitMethod`] on a single spin. `current` is only used by
/// thermal equilibration.
pub fn initialize(
    method: &InitMethod,
    dot: &DotParams,
    leads: &LeadParams,
    current: &SpinState,
    spin_flip_probability: f64,
) -> Result<(SpinState, f64)> {
    method.validate()?;
    match *method {
        InitMethod::ThermalEquilibration { wait_time } => thermal_init(dot, current, wait_time),
        InitMethod::TunnelFromPolarizedLeads { tunnel_time } => polarized_lead_init_with(
            dot,
            leads,
            &TunnelOptions {
                tunnel_time,
                spin_flip_probability,
            },
        ),
        InitMethod::TunnelFromPartiallyPolarizedLeads {
            lead_polarization,
            tunnel_time,
        } => mixed_lead_init_with(
            lead_polarization,
            &TunnelOptions {
                tunnel_time,
                spin_flip_probability,
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::BlochVector;
    use proptest::prelude::*;

    fn warm_dot() -> DotParams {
        DotParams {
            temperature: 0.3,
            ..DotParams::reference_device()
        }
    }

    #[test]
    fn five_t1_leaves_one_percent_residual() {
        let dot = warm_dot();
        let p_eq = dot.thermal_up_probability();
        let (s, elapsed) = thermal_init(&dot, &SpinState::pure_down(), 5.0 * dot.t1).unwrap();
        assert_eq!(elapsed, 5.0 * dot.t1);
        let p = s.probability_up(Qubit::First);
        let expected = p_eq - p_eq * (-5.0f64).exp();
        assert!((p - expected).abs() < 1e-12, "{p} vs {expected}");
        assert!((p - 0.9861).abs() < 1e-4);
        assert!((p_eq - p) / p_eq < 0.007);
    }

    #[test]
    fn zero_wait_is_identity() {
        let s = SpinState::from_bloch(BlochVector::new(0.3, -0.2, 0.1)).unwrap();
        let (out, elapsed) = thermal_init(&warm_dot(), &s, 0.0).unwrap();
        assert_eq!(out, s);
        assert_eq!(elapsed, 0.0);
        assert!(thermal_init(&warm_dot(), &s, -1.0).is_err());
    }

    #[test]
    fn twenty_t1_reaches_equilibrium() {
        let dot = warm_dot();
        let s = SpinState::from_bloch(BlochVector::new(0.5, 0.5, -0.7)).unwrap();
        let (out, _) = thermal_init(&dot, &s, 20.0 * dot.t1).unwrap();
        let eq = SpinState::mixed(dot.thermal_up_probability()).unwrap();
        assert!(out.max_abs_diff(&eq) < 1e-8);
    }

    #[test]
    fn polarized_leads_at_reference_point() {
        let (s, elapsed) = polarized_lead_init(&DotParams::reference_device(), &LeadParams::reference_leads()).unwrap();
        assert_eq!(s.probability_up(Qubit::First), 1.0);
        assert_eq!(elapsed, 0.1e-6);
    }

    #[test]
    fn polarized_leads_fail_below_condition() {
        let dot = DotParams::reference_device();
        let leads = LeadParams::reference_leads();
        // Field at which g_l_eff μ_B B0 = 5 k_B T exactly: the strict inequality fails.
        let b0 = 5.0 * CONSTANTS.k_b * dot.temperature / (leads.g_l_eff * CONSTANTS.mu_b);
        let dot = DotParams { b0, ..dot };
        assert!(matches!(
            polarized_lead_init(&dot, &leads),
            Err(Error::UnpolarizedLeads { .. })
        ));
        let nu2 = LeadParams {
            filling_factor: 2,
            ..leads
        };
        assert!(polarized_lead_init(&DotParams::reference_device(), &nu2).is_err());
    }

    #[test]
    fn mixed_lead_examples() {
        let dot = DotParams::reference_device();
        let leads = LeadParams::reference_leads();
        let (s, _) = mixed_lead_init(&dot, &leads, 0.5).unwrap();
        assert_eq!(s, SpinState::maximally_mixed());
        let (s, _) = mixed_lead_init(&dot, &leads, 1.0).unwrap();
        assert_eq!(s, SpinState::pure_up());
        let (s, _) = mixed_lead_init(&dot, &leads, 0.7).unwrap();
        assert_eq!(s, SpinState::mixed(0.7).unwrap());
        assert!(mixed_lead_init(&dot, &leads, 1.5).is_err());
    }

    #[test]
    fn spin_flip_probability_mixes_the_loaded_state() {
        let opts = TunnelOptions {
            spin_flip_probability: 0.1,
            ..TunnelOptions::default()
        };
        let (s, _) = mixed_lead_init_with(1.0, &opts).unwrap();
        assert!((s.probability_up(Qubit::First) - 0.9).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn relaxation_is_a_semigroup(
            t1 in 0.0f64..5e-4, t2 in 0.0f64..5e-4,
            mx in -0.5f64..0.5, my in -0.5f64..0.5, mz in -0.7f64..0.7,
        ) {
            let dot = warm_dot();
            let s = SpinState::from_bloch(BlochVector::new(mx, my, mz)).unwrap();
            let (a, _) = thermal_init(&dot, &s, t1).unwrap();
            let (a, _) = thermal_init(&dot, &a, t2).unwrap();
            let (b, _) = thermal_init(&dot, &s, t1 + t2).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-12);
            a.check_invariants().unwrap();
        }

        #[test]
        fn polarized_init_exceeds_99_percent(b0 in 0.1f64..10.0, t in 0.02f64..2.0, g_eff in 0.5f64..5.0) {
            let dot = DotParams { b0, temperature: t, ..DotParams::reference_device() };
            let leads = LeadParams { g_l_eff: g_eff, ..LeadParams::reference_leads() };
            if let Ok((s, _)) = polarized_lead_init(&dot, &leads) {
                prop_assert!(s.probability_up(Qubit::First) > 0.99);
                s.check_invariants().unwrap();
            }
        }
    }
}
