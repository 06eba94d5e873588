//! Protocol steps, validation, and per-shot execution.

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::{DotParams, LeadParams};
use crate::error::{require_probability, Error, Result};
use crate::esr::{esr_map, BlochSettings, EsrPulse};
use crate::exchange::{propagator, ExchangePulse};
use crate::init::{initialize, relaxation_map, InitMethod};
use crate::readout::{simulate_shot, DetectorModel, ReadoutConfig, ReadoutRecord, ReadoutScheme};
use crate::state::{BlochMap, Qubit, Spin, SpinState};

/// Everything static about the (one or two) dots, their leads and the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    /// One entry per dot. A second qubit without its own entry reuses the first.
    pub qubits: Vec<DotParams>,
    pub leads: LeadParams,
    pub detector: DetectorModel,
    /// Probability that a spin flips while tunneling onto the dot.
    pub spin_flip_probability: f64,
}

impl DeviceParams {
    /// Preset matching the device discussed throughout: g = 0.44, 5 T, 100 mK,
    /// T1 = 100 μs, T2 = 100 ns.
    pub fn reference_device() -> Self {
        DeviceParams {
            qubits: vec![DotParams::reference_device()],
            leads: LeadParams::reference_leads(),
            detector: DetectorModel::noiseless(),
            spin_flip_probability: 0.0,
        }
    }

    pub fn dot(&self, qubit: Qubit) -> &DotParams {
        self.qubits.get(qubit.index()).unwrap_or(&self.qubits[0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() || self.qubits.len() > 2 {
            return Err(Error::Config(format!("device needs 1 or 2 qubits, got {}", self.qubits.len())));
        }
        for dot in &self.qubits {
            dot.validate()?;
        }
        self.leads.validate()?;
        self.detector.validate()?;
        require_probability("spin_flip_probability", self.spin_flip_probability)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.qubits
            .iter()
            .enumerate()
            .flat_map(|(i, d)| d.regime_warnings().into_iter().map(move |w| format!("qubit {}: {w}", i + 1)))
            .collect()
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::reference_device()
    }
}

/// One step of an initialize → manipulate → read out experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolStep {
    Init { qubit: Qubit, method: InitMethod },
    /// Free evolution of every qubit (relaxation and dephasing).
    Wait { duration: f64 },
    EsrBurst {
        qubit: Qubit,
        pulse: EsrPulse,
        settings: Option<BlochSettings>,
    },
    ExchangePulse(ExchangePulse),
    Measure { qubit: Qubit, readout: ReadoutConfig },
}

impl ProtocolStep {
    /// Load `qubit` in `|↑⟩` with probability `p_up`.
    pub fn init_mixed(qubit: Qubit, p_up: f64) -> Self {
        ProtocolStep::Init {
            qubit,
            method: InitMethod::TunnelFromPartiallyPolarizedLeads {
                lead_polarization: p_up,
                tunnel_time: crate::init::DEFAULT_TUNNEL_TIME,
            },
        }
    }

    pub fn init_up(qubit: Qubit) -> Self {
        Self::init_mixed(qubit, 1.0)
    }

    pub fn measure_ideal(qubit: Qubit) -> Self {
        ProtocolStep::Measure {
            qubit,
            readout: ReadoutConfig::ideal(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ProtocolStep::Init { .. } => "init",
            ProtocolStep::Wait { .. } => "wait",
            ProtocolStep::EsrBurst { .. } => "esr_burst",
            ProtocolStep::ExchangePulse(_) => "exchange_pulse",
            ProtocolStep::Measure { .. } => "measure",
        }
    }
}

fn step_error(index: usize, step: &ProtocolStep, err: Error) -> Error {
    Error::Config(format!("step {index} ({}): {err}", step.name()))
}

/// Number of qubits the protocol touches.
pub fn qubit_count(steps: &[ProtocolStep]) -> usize {
    let uses_second = steps.iter().any(|s| match s {
        ProtocolStep::Init { qubit, .. } | ProtocolStep::EsrBurst { qubit, .. } | ProtocolStep::Measure { qubit, .. } => {
            *qubit == Qubit::Second
        }
        ProtocolStep::ExchangePulse(_) => true,
        ProtocolStep::Wait { .. } => false,
    });
    if uses_second {
        2
    } else {
        1
    }
}

/// Check ordering rules: every qubit is initialized before use, and a
/// measured qubit is re-initialized before it is used again.
pub fn validate_protocol(steps: &[ProtocolStep], device: &DeviceParams) -> Result<()> {
    if steps.is_empty() {
        return Err(Error::Config("protocol has no steps".into()));
    }
    device.validate()?;
    let mut live = [false, false];
    let require = |live: &[bool; 2], q: Qubit, i: usize, step: &ProtocolStep| -> Result<()> {
        if live[q.index()] {
            Ok(())
        } else {
            Err(step_error(
                i,
                step,
                Error::Config(format!("qubit {} is not initialized at this point", q.label())),
            ))
        }
    };
    for (i, step) in steps.iter().enumerate() {
        match step {
            ProtocolStep::Init { qubit, method } => {
                method.validate().map_err(|e| step_error(i, step, e))?;
                live[qubit.index()] = true;
            }
            ProtocolStep::Wait { duration } => {
                crate::error::require_non_negative("duration", *duration).map_err(|e| step_error(i, step, e))?;
            }
            ProtocolStep::EsrBurst { qubit, pulse, .. } => {
                require(&live, *qubit, i, step)?;
                pulse.validate().map_err(|e| step_error(i, step, e))?;
            }
            ProtocolStep::ExchangePulse(pulse) => {
                require(&live, Qubit::First, i, step)?;
                require(&live, Qubit::Second, i, step)?;
                pulse.validate().map_err(|e| step_error(i, step, e))?;
                if device.dot(Qubit::First).b0 != device.dot(Qubit::Second).b0 {
                    return Err(step_error(i, step, Error::Config("both dots must share B0".into())));
                }
            }
            ProtocolStep::Measure { qubit, readout } => {
                require(&live, *qubit, i, step)?;
                readout.validate().map_err(|e| step_error(i, step, e))?;
                if readout.scheme != ReadoutScheme::Off {
                    live[qubit.index()] = false;
                }
            }
        }
    }
    if !steps.iter().any(|s| matches!(s, ProtocolStep::Measure { .. })) {
        return Err(Error::Config("protocol never measures a qubit".into()));
    }
    Ok(())
}

/// Deterministic form of a step, with channels and unitaries precomputed.
#[derive(Debug, Clone)]
enum CompiledStep {
    Reset { qubit: Qubit, fresh: SpinState },
    Channel { qubit: Qubit, map: BlochMap },
    Unitary(Matrix4<Complex64>),
    Measure { qubit: Qubit, readout: ReadoutConfig },
}

/// A validated protocol ready for repeated shots.
#[derive(Debug, Clone)]
pub struct CompiledProtocol {
    steps: Vec<(usize, CompiledStep)>,
    detector: DetectorModel,
    /// State after the deterministic prefix (before the first measurement).
    prefix_state: SpinState,
    prefix_len: usize,
    measurements: Vec<(usize, Qubit)>,
}

impl CompiledProtocol {
    pub fn new(steps: &[ProtocolStep], device: &DeviceParams) -> Result<Self> {
        validate_protocol(steps, device)?;
        let n_qubits = qubit_count(steps);
        let qubits: Vec<Qubit> = [Qubit::First, Qubit::Second][..n_qubits].to_vec();
        let mut compiled = Vec::new();
        for (i, step) in steps.iter().enumerate() {
            let wrap = |e: Error| step_error(i, step, e);
            match step {
                ProtocolStep::Init { qubit, method } => {
                    let dot = device.dot(*qubit);
                    let c = match method {
                        InitMethod::ThermalEquilibration { wait_time } => CompiledStep::Channel {
                            qubit: *qubit,
                            map: relaxation_map(dot, *wait_time).map_err(wrap)?,
                        },
                        _ => {
                            let (fresh, _) = initialize(
                                method,
                                dot,
                                &device.leads,
                                &SpinState::maximally_mixed(),
                                device.spin_flip_probability,
                            )
                            .map_err(wrap)?;
                            CompiledStep::Reset { qubit: *qubit, fresh }
                        }
                    };
                    compiled.push((i, c));
                }
                ProtocolStep::Wait { duration } => {
                    for &q in &qubits {
                        let map = relaxation_map(device.dot(q), *duration).map_err(wrap)?;
                        compiled.push((i, CompiledStep::Channel { qubit: q, map }));
                    }
                }
                ProtocolStep::EsrBurst { qubit, pulse, settings } => {
                    let dot = device.dot(*qubit);
                    let settings = settings.unwrap_or_else(|| BlochSettings::auto(pulse, dot));
                    let map = esr_map(pulse, dot, &settings).map_err(wrap)?;
                    compiled.push((i, CompiledStep::Channel { qubit: *qubit, map }));
                }
                ProtocolStep::ExchangePulse(pulse) => {
                    let d1 = device.dot(Qubit::First);
                    let d2 = device.dot(Qubit::Second);
                    let u = propagator(pulse, d1.g_d, d2.g_d, d1.b0).map_err(wrap)?;
                    compiled.push((i, CompiledStep::Unitary(u)));
                }
                ProtocolStep::Measure { qubit, readout } => {
                    compiled.push((
                        i,
                        CompiledStep::Measure {
                            qubit: *qubit,
                            readout: *readout,
                        },
                    ));
                }
            }
        }
        let initial = if n_qubits == 2 {
            SpinState::tensor(&SpinState::maximally_mixed(), &SpinState::maximally_mixed())?
        } else {
            SpinState::maximally_mixed()
        };
        let prefix_len = compiled
            .iter()
            .position(|(_, c)| matches!(c, CompiledStep::Measure { .. }))
            .unwrap_or(compiled.len());
        let mut prefix_state = initial;
        for (i, step) in &compiled[..prefix_len] {
            prefix_state = apply_deterministic(&prefix_state, step).map_err(|e| Error::Numeric(format!("step {i}: {e}")))?;
        }
        let measurements = steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                ProtocolStep::Measure { qubit, .. } => Some((i, *qubit)),
                _ => None,
            })
            .collect();
        Ok(CompiledProtocol {
            steps: compiled,
            detector: device.detector,
            prefix_state,
            prefix_len,
            measurements,
        })
    }

    /// `(protocol step index, qubit)` of every measurement, in order.
    pub fn measurements(&self) -> &[(usize, Qubit)] {
        &self.measurements
    }

    /// Run one shot. `stream(step)` must return the random source for that
    /// protocol step of this shot.
    pub fn run_shot<R, F>(&self, mut stream: F) -> Result<ShotOutcome>
    where
        R: Rng,
        F: FnMut(u64) -> R,
    {
        let mut state = self.prefix_state.clone();
        let mut outcome = ShotOutcome::default();
        for (i, step) in &self.steps[self.prefix_len..] {
            match step {
                CompiledStep::Measure { qubit, readout } => {
                    let p_up = state.probability_up(*qubit).clamp(0.0, 1.0);
                    let mut rng = stream(*i as u64);
                    let record = simulate_shot(p_up, readout, &self.detector, &mut rng)?;
                    if record.declared.is_some() {
                        let (_, post) = state.project(*qubit, record.true_spin)?;
                        state = post.ok_or_else(|| Error::Numeric("sampled an impossible outcome".into()))?;
                    }
                    outcome.declared.push(record.declared);
                    outcome.records.push(record);
                }
                other => state = apply_deterministic(&state, other)?,
            }
        }
        outcome.final_state = Some(state);
        Ok(outcome)
    }
}

fn apply_deterministic(state: &SpinState, step: &CompiledStep) -> Result<SpinState> {
    match step {
        CompiledStep::Reset { qubit, fresh } => state.replace_qubit(*qubit, fresh),
        CompiledStep::Channel { qubit, map } => state.apply_bloch_map(map, *qubit),
        CompiledStep::Unitary(u) => crate::exchange::apply_unitary(state, u),
        CompiledStep::Measure { .. } => unreachable!("measurements are stochastic"),
    }
}

/// Result of one shot.
#[derive(Debug, Clone, Default)]
pub struct ShotOutcome {
    /// Declared outcome of each measurement step, in protocol order.
    pub declared: Vec<Option<Spin>>,
    pub records: Vec<ReadoutRecord>,
    /// Quantum state after the last step (post-measurement conditioning applied).
    pub final_state: Option<SpinState>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    #[test]
    fn rejects_use_before_init() {
        let device = DeviceParams::reference_device();
        let steps = [ProtocolStep::measure_ideal(Qubit::First)];
        let err = validate_protocol(&steps, &device).unwrap_err();
        assert!(err.to_string().contains("step 0"), "{err}");
        let steps = [
            ProtocolStep::init_up(Qubit::First),
            ProtocolStep::ExchangePulse(ExchangePulse::new(1e-5, 1e-12).unwrap()),
            ProtocolStep::measure_ideal(Qubit::First),
        ];
        assert!(validate_protocol(&steps, &device).unwrap_err().to_string().contains("step 1"));
    }

    #[test]
    fn measured_qubit_must_be_reinitialized() {
        let device = DeviceParams::reference_device();
        let steps = [
            ProtocolStep::init_up(Qubit::First),
            ProtocolStep::measure_ideal(Qubit::First),
            ProtocolStep::measure_ideal(Qubit::First),
        ];
        assert!(validate_protocol(&steps, &device).is_err());
        let steps = [
            ProtocolStep::init_up(Qubit::First),
            ProtocolStep::measure_ideal(Qubit::First),
            ProtocolStep::init_up(Qubit::First),
            ProtocolStep::measure_ideal(Qubit::First),
        ];
        assert!(validate_protocol(&steps, &device).is_ok());
    }

    #[test]
    fn off_measurement_leaves_state_untouched() {
        let device = DeviceParams::reference_device();
        let steps = [
            ProtocolStep::init_mixed(Qubit::First, 0.3),
            ProtocolStep::Measure {
                qubit: Qubit::First,
                readout: ReadoutConfig::off(5e-6),
            },
        ];
        let compiled = CompiledProtocol::new(&steps, &device).unwrap();
        let f = StreamFactory::new(1);
        for shot in 0..50 {
            let out = compiled.run_shot(|step| f.stream(shot, step)).unwrap();
            assert_eq!(out.declared, vec![None]);
            assert_eq!(out.final_state.unwrap(), SpinState::mixed(0.3).unwrap());
        }
    }

    #[test]
    fn thermal_init_from_unknown_state_reaches_equilibrium() {
        let device = DeviceParams::reference_device();
        let dot = device.dot(Qubit::First);
        let steps = [
            ProtocolStep::Init {
                qubit: Qubit::First,
                method: InitMethod::ThermalEquilibration { wait_time: 20.0 * dot.t1 },
            },
            ProtocolStep::measure_ideal(Qubit::First),
        ];
        let compiled = CompiledProtocol::new(&steps, &device).unwrap();
        let p = compiled.prefix_state.probability_up(Qubit::First);
        assert!((p - dot.thermal_up_probability()).abs() < 1e-8);
    }
}
