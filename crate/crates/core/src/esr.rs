//! Driven, damped single-spin dynamics (Bloch equations) and the closed-form
//! ESR results they are checked against.
//!
//! Convention: `b1_amplitude` is the rotating-frame drive amplitude, so the
//! Rabi frequency is `f1 = g μ_B B1 / h`. A linearly polarized lab-frame drive
//! therefore has amplitude `2 B1`. Evolved states are always reported in the
//! frame rotating at the carrier frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::CONSTANTS;
use crate::device::DotParams;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::state::{BlochMap, BlochVector, Qubit, SpinState};
use crate::units::serde_quantity;

/// Rectangular microwave burst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsrPulse {
    #[serde(deserialize_with = "serde_quantity::frequency::deserialize")]
    pub carrier_frequency: f64,
    #[serde(deserialize_with = "serde_quantity::field::deserialize")]
    pub b1_amplitude: f64,
    #[serde(deserialize_with = "serde_quantity::time::deserialize")]
    pub duration: f64,
    #[serde(default)]
    pub phase: f64,
}

impl EsrPulse {
    /// A burst exactly on resonance with `dot`.
    pub fn resonant(dot: &DotParams, b1_amplitude: f64, duration: f64) -> Self {
        EsrPulse {
            carrier_frequency: dot.larmor_frequency(),
            b1_amplitude,
            duration,
            phase: 0.0,
        }
    }

    pub fn with_phase(self, phase: f64) -> Self {
        EsrPulse { phase, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("duration", self.duration)?;
        require_non_negative("b1_amplitude", self.b1_amplitude)?;
        require_non_negative("carrier_frequency", self.carrier_frequency)?;
        if !self.phase.is_finite() {
            return Err(Error::param("phase", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Rotating,
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochSettings {
    pub integrator_step: f64,
    pub frame: Frame,
    pub rwa_enabled: bool,
}

impl BlochSettings {
    pub fn rotating(step: f64) -> Self {
        BlochSettings {
            integrator_step: step,
            frame: Frame::Rotating,
            rwa_enabled: true,
        }
    }

    /// Rotating-frame settings with a step ten times finer than the drive
    /// bound that also resolves the T1/T2 decay.
    pub fn auto(pulse: &EsrPulse, dot: &DotParams) -> Self {
        let bound = max_step(pulse, dot, Frame::Rotating, true) / 10.0;
        let step = bound.min(dot.t2 / 40.0).min(dot.t1 / 40.0);
        let step = if step.is_finite() && step > 0.0 {
            step
        } else if pulse.duration > 0.0 {
            pulse.duration
        } else {
            1.0
        };
        BlochSettings::rotating(step)
    }

    fn validate(&self, pulse: &EsrPulse, dot: &DotParams) -> Result<()> {
        require_positive("integrator_step", self.integrator_step)?;
        let bound = max_step(pulse, dot, self.frame, self.rwa_enabled);
        if self.integrator_step > bound * (1.0 + 1e-12) {
            return Err(Error::param(
                "integrator_step",
                format!("{:e} s exceeds the stability bound {:e} s", self.integrator_step, bound),
            ));
        }
        Ok(())
    }
}

fn max_step(pulse: &EsrPulse, dot: &DotParams, frame: Frame, rwa: bool) -> f64 {
    let f1 = rabi_frequency_unchecked(dot.g_d, pulse.b1_amplitude);
    let detuning = (dot.larmor_frequency() - pulse.carrier_frequency).abs();
    let fastest = match (frame, rwa) {
        (Frame::Rotating, true) => f1.max(detuning),
        (Frame::Rotating, false) => f1.max(detuning).max(if f1 > 0.0 { 2.0 * pulse.carrier_frequency } else { 0.0 }),
        (Frame::Lab, _) => f1.max(dot.larmor_frequency()).max(pulse.carrier_frequency),
    };
    if fastest > 0.0 {
        1.0 / (20.0 * fastest)
    } else {
        f64::INFINITY
    }
}

fn rabi_frequency_unchecked(g: f64, b1: f64) -> f64 {
    g * CONSTANTS.mu_b * b1 / CONSTANTS.h
}

/// Rabi frequency `f1 = g μ_B B1 / h` for rotating-frame amplitude `b1`.
pub fn rabi_frequency(g: f64, b1: f64) -> Result<f64> {
    require_non_negative("b1", b1)?;
    Ok(rabi_frequency_unchecked(g, b1))
}

/// The right-hand side of the Bloch equations for one pulse.
struct BlochSystem {
    frame: Frame,
    rwa: bool,
    f1: f64,
    phase: f64,
    carrier: f64,
    larmor: f64,
    inv_t1: f64,
    inv_t2: f64,
    m_eq: f64,
}

impl BlochSystem {
    fn new(pulse: &EsrPulse, dot: &DotParams, settings: &BlochSettings) -> Self {
        BlochSystem {
            frame: settings.frame,
            rwa: settings.rwa_enabled,
            f1: rabi_frequency_unchecked(dot.g_d, pulse.b1_amplitude),
            phase: pulse.phase,
            carrier: pulse.carrier_frequency,
            larmor: dot.larmor_frequency(),
            inv_t1: 1.0 / dot.t1,
            inv_t2: 1.0 / dot.t2,
            m_eq: dot.equilibrium_magnetization(),
        }
    }

    /// Angular precession vector at time `t`.
    fn omega(&self, t: f64) -> [f64; 3] {
        let two_pi = 2.0 * PI;
        let (x, y, z) = match (self.frame, self.rwa) {
            (Frame::Rotating, true) => (
                self.f1 * self.phase.cos(),
                self.f1 * self.phase.sin(),
                self.larmor - self.carrier,
            ),
            (Frame::Rotating, false) => {
                let a = 2.0 * two_pi * self.carrier * t + self.phase;
                (
                    self.f1 * (self.phase.cos() + a.cos()),
                    self.f1 * (self.phase.sin() - a.sin()),
                    self.larmor - self.carrier,
                )
            }
            (Frame::Lab, true) => {
                let a = two_pi * self.carrier * t + self.phase;
                (self.f1 * a.cos(), self.f1 * a.sin(), self.larmor)
            }
            (Frame::Lab, false) => {
                let a = two_pi * self.carrier * t + self.phase;
                (2.0 * self.f1 * a.cos(), 0.0, self.larmor)
            }
        };
        [two_pi * x, two_pi * y, two_pi * z]
    }

    fn derivative(&self, t: f64, m: [f64; 3]) -> [f64; 3] {
        let w = self.omega(t);
        [
            w[1] * m[2] - w[2] * m[1] - m[0] * self.inv_t2,
            w[2] * m[0] - w[0] * m[2] - m[1] * self.inv_t2,
            w[0] * m[1] - w[1] * m[0] - (m[2] - self.m_eq) * self.inv_t1,
        ]
    }

    fn integrate(&self, m0: [f64; 3], duration: f64, step: f64) -> [f64; 3] {
        if duration == 0.0 {
            return m0;
        }
        let n = (duration / step - 1e-9).ceil().max(1.0) as u64;
        let h = duration / n as f64;
        let mut m = m0;
        for i in 0..n {
            let t = i as f64 * h;
            m = rk4_step(|t, m| self.derivative(t, m), t, m, h);
        }
        if self.frame == Frame::Lab {
            // Back into the frame rotating at the carrier.
            let theta = -2.0 * PI * self.carrier * duration;
            let (s, c) = theta.sin_cos();
            m = [c * m[0] - s * m[1], s * m[0] + c * m[1], m[2]];
        }
        m
    }
}

fn rk4_step(f: impl Fn(f64, [f64; 3]) -> [f64; 3], t: f64, m: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = f(t, m);
    let k2 = f(t + 0.5 * h, add(m, k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, add(m, k2, 0.5 * h));
    let k4 = f(t + h, add(m, k3, h));
    let mut out = m;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrate the Bloch equations for one pulse, starting from `state`.
pub fn evolve_bloch(
    state: &SpinState,
    pulse: &EsrPulse,
    dot: &DotParams,
    settings: &BlochSettings,
) -> Result<SpinState> {
    let m0 = state.to_bloch()?;
    let m = evolve_bloch_vector(m0, pulse, dot, settings)?;
    let norm = m.norm();
    if !norm.is_finite() || norm > 1.0 + 1e-9 {
        return Err(Error::Numeric(format!(
            "Bloch vector norm grew to {norm}; integrator step too coarse"
        )));
    }
    let m = if norm > 1.0 {
        BlochVector::new(m.mx / norm, m.my / norm, m.mz / norm)
    } else {
        m
    };
    SpinState::from_bloch(m)
}

/// Like [`evolve_bloch`] but on a bare vector, without normalization checks.
pub fn evolve_bloch_vector(
    m0: BlochVector,
    pulse: &EsrPulse,
    dot: &DotParams,
    settings: &BlochSettings,
) -> Result<BlochVector> {
    pulse.validate()?;
    settings.validate(pulse, dot)?;
    let system = BlochSystem::new(pulse, dot, settings);
    Ok(BlochVector::from_array(system.integrate(
        m0.as_array(),
        pulse.duration,
        settings.integrator_step,
    )))
}

/// The pulse as a single-spin channel, for use on one half of a two-spin state.
pub fn esr_map(pulse: &EsrPulse, dot: &DotParams, settings: &BlochSettings) -> Result<BlochMap> {
    let offset = evolve_bloch_vector(BlochVector::ZERO, pulse, dot, settings)?.as_array();
    let mut linear = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut e = [0.0; 3];
        e[j] = 1.0;
        let col = evolve_bloch_vector(BlochVector::from_array(e), pulse, dot, settings)?.as_array();
        for i in 0..3 {
            linear[i][j] = col[i] - offset[i];
        }
    }
    Ok(BlochMap { linear, offset })
}

/// Apply a pulse to `target` of a one- or two-spin state.
pub fn apply_pulse(
    state: &SpinState,
    target: Qubit,
    pulse: &EsrPulse,
    dot: &DotParams,
    settings: &BlochSettings,
) -> Result<SpinState> {
    match state {
        SpinState::Single(_) => evolve_bloch(state, pulse, dot, settings),
        SpinState::Pair(_) => state.apply_bloch_map(&esr_map(pulse, dot, settings)?, target),
    }
}

/// Steady-state `Pr[↑]` under resonant continuous-wave driving:
/// `[1 + 1/(1 + (2π f1)² T1 T2)] / 2`.
pub fn cw_saturation_probability(f1: f64, t1: f64, t2: f64) -> Result<f64> {
    require_positive("f1", f1)?;
    require_positive("T1", t1)?;
    require_positive("T2", t2)?;
    Ok(cw_steady_state_up(f1, t1, t2, 1.0))
}

/// Resonant steady state for a finite equilibrium magnetization `m_eq`.
pub fn cw_steady_state_up(f1: f64, t1: f64, t2: f64, m_eq: f64) -> f64 {
    let s = (2.0 * PI * f1).powi(2) * t1 * t2;
    if s.is_infinite() {
        return 0.5;
    }
    0.5 * (1.0 + m_eq / (1.0 + s))
}

/// Smallest Rabi frequency whose CW drive visibly lowers `Pr[↑]`:
/// `1 / (2π √(T1 T2))`.
pub fn min_observable_f1(t1: f64, t2: f64) -> Result<f64> {
    require_positive("T1", t1)?;
    require_positive("T2", t2)?;
    Ok(1.0 / (2.0 * PI * (t1 * t2).sqrt()))
}

/// How g-factors enter [`detuning_for_addressing_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddressingMode {
    /// `||g_base| - |g_shifted||`.
    Magnitude,
    /// `|g_base - g_shifted|` with the signs as given.
    Signed,
}

/// Detuning `|g_base - g_shifted| μ_B B0 / h` available by shifting one
/// qubit's g-factor. Signs are taken as given (signed mode).
pub fn detuning_for_addressing(g_base: f64, g_shifted: f64, b0: f64) -> Result<f64> {
    detuning_for_addressing_with(g_base, g_shifted, b0, AddressingMode::Signed)
}

pub fn detuning_for_addressing_with(g_base: f64, g_shifted: f64, b0: f64, mode: AddressingMode) -> Result<f64> {
    require_non_negative("B0", b0)?;
    let dg = match mode {
        AddressingMode::Magnitude => (g_base.abs() - g_shifted.abs()).abs(),
        AddressingMode::Signed => (g_base - g_shifted).abs(),
    };
    Ok(dg * CONSTANTS.mu_b * b0 / CONSTANTS.h)
}
