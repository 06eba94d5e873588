//! The JSON experiment document: device, protocol, run settings and an
//! optional sweep.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "device": { "qubits": [{ "g_d": 0.44, "B0": "5T", "T1": "100us", "T2": "100ns" }] },
//!   "protocol": [
//!     { "init": { "qubit": 1, "method": "tunnel_from_polarized_leads" } },
//!     { "esr_burst": { "qubit": 1, "b1_amplitude": "1mT", "duration": "81ns" } },
//!     { "measure": { "qubit": 1, "readout": "reference" } }
//!   ],
//!   "run": { "shots": 10000, "seed": 7 }
//! }
//! ```
//!
//! Quantities are bare SI numbers or strings such as `"5T"`, `"100us"`,
//! `"0.01mT"`, `"20GHz"`. An exchange `J` may be given as an energy or as a
//! frequency (`J/h`).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::protocol::{DeviceParams, ProtocolStep};
use super::sweep::SweepSpec;
use crate::error::{Error, Result};
use crate::esr::{BlochSettings, EsrPulse, Frame};
use crate::exchange::ExchangePulse;
use crate::init::InitMethod;
use crate::readout::ReadoutConfig;
use crate::state::Qubit;
use crate::units::serde_quantity;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub device: DeviceParams,
    pub protocol: Vec<StepSpec>,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_shots() -> u64 {
    10_000
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            shots: default_shots(),
            seed: None,
            workers: None,
        }
    }
}

/// One protocol entry, written as a single-key object such as `{"wait": {...}}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    Init(InitSpec),
    Wait(WaitSpec),
    EsrBurst(EsrBurstSpec),
    ExchangePulse(ExchangeSpec),
    Measure(MeasureSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub qubit: Qubit,
    pub method: InitMethod,
}

impl<'de> Deserialize<'de> for InitSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut map = serde_json::Map::deserialize(d)?;
        let qubit = map.remove("qubit").ok_or_else(|| D::Error::missing_field("qubit"))?;
        let qubit: Qubit = serde_json::from_value(qubit).map_err(D::Error::custom)?;
        let method = InitMethod::deserialize(Value::Object(map)).map_err(D::Error::custom)?;
        Ok(InitSpec { qubit, method })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaitSpec {
    #[serde(deserialize_with = "serde_quantity::time::deserialize")]
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsrBurstSpec {
    pub qubit: Qubit,
    #[serde(deserialize_with = "serde_quantity::field::deserialize")]
    pub b1_amplitude: f64,
    #[serde(deserialize_with = "serde_quantity::time::deserialize")]
    pub duration: f64,
    /// Defaults to the target dot's Larmor frequency plus `detuning`.
    #[serde(default, deserialize_with = "serde_quantity::frequency::option::deserialize")]
    pub carrier_frequency: Option<f64>,
    #[serde(default, deserialize_with = "serde_quantity::frequency::option::deserialize")]
    pub detuning: Option<f64>,
    #[serde(default)]
    pub phase: f64,
    #[serde(default, deserialize_with = "serde_quantity::time::option::deserialize")]
    pub integrator_step: Option<f64>,
    #[serde(default)]
    pub frame: Option<Frame>,
    #[serde(default)]
    pub rwa_enabled: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateName {
    Swap,
    SqrtSwap,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeSpec {
    #[serde(rename = "J", deserialize_with = "serde_quantity::energy_or_frequency::deserialize")]
    pub j: f64,
    /// Either an explicit duration or a named gate that fixes it.
    #[serde(default, deserialize_with = "serde_quantity::time::option::deserialize")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub gate: Option<GateName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub qubit: Qubit,
    #[serde(default = "default_readout")]
    pub readout: ReadoutSpec,
}

fn default_readout() -> ReadoutSpec {
    ReadoutSpec::Preset(ReadoutPreset::Ideal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutPreset {
    /// Instantaneous, error-free spin-to-charge conversion.
    Ideal,
    /// Rate-selective readout with T_t = 0.1 μs, T_m = 5 μs, T_nt = 10 ms.
    Reference,
    /// Coulomb-blockaded dot; no measurement takes place.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ReadoutSpec {
    Preset(ReadoutPreset),
    Full(ReadoutConfig),
}

impl ReadoutSpec {
    pub fn resolve(&self) -> ReadoutConfig {
        match *self {
            ReadoutSpec::Preset(ReadoutPreset::Ideal) => ReadoutConfig::ideal(),
            ReadoutSpec::Preset(ReadoutPreset::Reference) => ReadoutConfig::reference_rate_selective(),
            ReadoutSpec::Preset(ReadoutPreset::Off) => ReadoutConfig::off(ReadoutConfig::ideal().measurement_window),
            ReadoutSpec::Full(c) => c,
        }
    }
}

impl StepSpec {
    pub fn to_step(&self, device: &DeviceParams) -> Result<ProtocolStep> {
        Ok(match *self {
            StepSpec::Init(InitSpec { qubit, method }) => ProtocolStep::Init { qubit, method },
            StepSpec::Wait(WaitSpec { duration }) => ProtocolStep::Wait { duration },
            StepSpec::EsrBurst(ref s) => {
                let dot = device.dot(s.qubit);
                if s.carrier_frequency.is_some() && s.detuning.is_some() {
                    return Err(Error::Config("esr_burst: give carrier_frequency or detuning, not both".into()));
                }
                let carrier = s
                    .carrier_frequency
                    .unwrap_or_else(|| dot.larmor_frequency() + s.detuning.unwrap_or(0.0));
                let pulse = EsrPulse {
                    carrier_frequency: carrier,
                    b1_amplitude: s.b1_amplitude,
                    duration: s.duration,
                    phase: s.phase,
                };
                let settings = if s.integrator_step.is_some() || s.frame.is_some() || s.rwa_enabled.is_some() {
                    let auto = BlochSettings::auto(&pulse, dot);
                    Some(BlochSettings {
                        integrator_step: s.integrator_step.unwrap_or(auto.integrator_step),
                        frame: s.frame.unwrap_or(Frame::Rotating),
                        rwa_enabled: s.rwa_enabled.unwrap_or(true),
                    })
                } else {
                    None
                };
                ProtocolStep::EsrBurst {
                    qubit: s.qubit,
                    pulse,
                    settings,
                }
            }
            StepSpec::ExchangePulse(s) => {
                let pulse = match (s.duration, s.gate) {
                    (Some(d), None) => ExchangePulse::new(s.j, d)?,
                    (None, Some(GateName::Swap)) => ExchangePulse::swap(s.j)?,
                    (None, Some(GateName::SqrtSwap)) => ExchangePulse::sqrt_swap(s.j)?,
                    _ => {
                        return Err(Error::Config(
                            "exchange_pulse: give exactly one of duration or gate".into(),
                        ))
                    }
                };
                ProtocolStep::ExchangePulse(pulse)
            }
            StepSpec::Measure(MeasureSpec { qubit, readout }) => ProtocolStep::Measure {
                qubit,
                readout: readout.resolve(),
            },
        })
    }
}

impl ExperimentConfig {
    /// Parse and check the schema version. Semantic checks are in [`Self::validate`].
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        match value.get("schema_version") {
            None => return Err(Error::Config("missing schema_version".into())),
            Some(v) if v.as_u64() != Some(SCHEMA_VERSION as u64) => {
                return Err(Error::Config(format!(
                    "unsupported schema_version {v}; this build reads version {SCHEMA_VERSION}"
                )))
            }
            _ => {}
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn steps(&self) -> Result<Vec<ProtocolStep>> {
        self.protocol
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_step(&self.device).map_err(|e| Error::Config(format!("step {i}: {e}"))))
            .collect()
    }

    /// Device and protocol checks that do not require running anything.
    pub fn validate(&self) -> Result<Vec<ProtocolStep>> {
        if self.run.shots == 0 {
            return Err(Error::Config("run.shots must be >= 1".into()));
        }
        if self.run.workers == Some(0) {
            return Err(Error::Config("run.workers must be >= 1".into()));
        }
        let steps = self.steps()?;
        super::protocol::validate_protocol(&steps, &self.device)?;
        Ok(steps)
    }
}
