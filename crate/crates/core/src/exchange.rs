//! Two-spin evolution under Zeeman terms plus the Heisenberg exchange
//! coupling `J S₁·S₂`, and the SWAP / √SWAP gates it generates.
//!
//! Spin operators are dimensionless with eigenvalues ±½. A full SWAP therefore
//! needs `∫J dt = h/2`, √SWAP needs `h/4`. Zeeman terms are written as
//! `-g μ_B B0 S_z` so that `|↑⟩` is the single-spin ground state.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::CONSTANTS;
use crate::error::{require_non_negative, require_positive, require_probability, Result};
use crate::harness::{run_protocol_with, DeviceParams, ProtocolStep, RunOptions, RunResult};
use crate::readout::ReadoutConfig;
use crate::rng::StreamFactory;
use crate::state::{Qubit, SpinState, C0, C1, CI};
use crate::units::serde_quantity;

/// Constant exchange coupling held for `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangePulse {
    /// Exchange energy (eV); configuration accepts `GHz` as J/h.
    #[serde(rename = "J", deserialize_with = "serde_quantity::energy_or_frequency::deserialize")]
    pub j: f64,
    #[serde(deserialize_with = "serde_quantity::time::deserialize")]
    pub duration: f64,
}

impl ExchangePulse {
    pub fn new(j: f64, duration: f64) -> Result<Self> {
        let p = ExchangePulse { j, duration };
        p.validate()?;
        Ok(p)
    }

    /// Pulse with `J/h = j_frequency` (Hz).
    pub fn from_frequency(j_frequency: f64, duration: f64) -> Result<Self> {
        Self::new(j_frequency * CONSTANTS.h, duration)
    }

    /// Full SWAP at coupling `j` (eV).
    pub fn swap(j: f64) -> Result<Self> {
        Self::new(j, swap_time(j)?)
    }

    pub fn sqrt_swap(j: f64) -> Result<Self> {
        Self::new(j, swap_time(j)? / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("J", self.j)?;
        require_non_negative("duration", self.duration)
    }

    /// Accumulated exchange phase `J t / ħ`.
    pub fn phase(&self) -> f64 {
        self.j * self.duration / CONSTANTS.hbar()
    }
}

/// Duration of a full SWAP, `h / (2J)`.
pub fn swap_time(j: f64) -> Result<f64> {
    require_positive("J", j)?;
    Ok(CONSTANTS.h / (2.0 * j))
}

/// Exponential dependence of J on the barrier gate voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierModel {
    /// J at the reference voltage (eV).
    #[serde(rename = "J0", deserialize_with = "serde_quantity::energy_or_frequency::deserialize")]
    pub j0: f64,
    #[serde(rename = "V0", deserialize_with = "serde_quantity::voltage::deserialize")]
    pub v0: f64,
    #[serde(deserialize_with = "serde_quantity::voltage::deserialize")]
    pub v_ref: f64,
}

impl BarrierModel {
    pub fn new(j0: f64, v0: f64, v_ref: f64) -> Result<Self> {
        require_positive("J0", j0)?;
        require_positive("V0", v0)?;
        Ok(BarrierModel { j0, v0, v_ref })
    }

    /// Gate voltage giving exchange `j`.
    pub fn voltage_for(&self, j: f64) -> Result<f64> {
        require_positive("J", j)?;
        Ok(self.v_ref - self.v0 * (j / self.j0).ln())
    }
}

/// `J(v) = J0 exp(-(v - v_ref)/V0)`.
pub fn j_from_voltage(model: &BarrierModel, v: f64) -> f64 {
    model.j0 * (-(v - model.v_ref) / model.v0).exp()
}

/// Two-spin Hamiltonian (eV) in the `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` basis.
pub fn hamiltonian(j: f64, g1: f64, g2: f64, b0: f64) -> Matrix4<Complex64> {
    let e1 = g1 * CONSTANTS.mu_b * b0;
    let e2 = g2 * CONSTANTS.mu_b * b0;
    let r = |x: f64| Complex64::from(x);
    // S1·S2 = ¼ on |↑↑⟩,|↓↓⟩; -¼ on |↑↓⟩,|↓↑⟩ with ½ flip-flop coupling.
    Matrix4::new(
        r(-0.5 * (e1 + e2) + 0.25 * j), C0, C0, C0,
        C0, r(-0.5 * (e1 - e2) - 0.25 * j), r(0.5 * j), C0,
        C0, r(0.5 * j), r(0.5 * (e1 - e2) - 0.25 * j), C0,
        C0, C0, C0, r(0.5 * (e1 + e2) + 0.25 * j),
    )
}

/// Time-evolution operator `exp(-i H t / ħ)` for one pulse.
pub fn propagator(pulse: &ExchangePulse, g1: f64, g2: f64, b0: f64) -> Result<Matrix4<Complex64>> {
    pulse.validate()?;
    require_non_negative("B0", b0)?;
    let h = hamiltonian(pulse.j, g1, g2, b0);
    let eig = h.symmetric_eigen();
    let hbar = CONSTANTS.hbar();
    let mut u = Matrix4::zeros();
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let phase = Complex64::from_polar(1.0, -e * pulse.duration / hbar);
        u += v * v.adjoint() * phase;
    }
    Ok(u)
}

/// Evolve a two-spin state through one exchange pulse.
pub fn exchange_evolve(state: &SpinState, pulse: &ExchangePulse, g1: f64, g2: f64, b0: f64) -> Result<SpinState> {
    let rho = state.pair_matrix()?;
    let u = propagator(pulse, g1, g2, b0)?;
    SpinState::from_pair_matrix(u * rho * u.adjoint())
}

/// Apply a fixed unitary to a two-spin state.
pub fn apply_unitary(state: &SpinState, u: &Matrix4<Complex64>) -> Result<SpinState> {
    let rho = state.pair_matrix()?;
    SpinState::from_pair_matrix(u * rho * u.adjoint())
}

/// Textbook SWAP. Exchange produces this times the global phase `e^{-iπ/4}`.
pub fn swap_gate() -> Matrix4<Complex64> {
    Matrix4::new(
        C1, C0, C0, C0,
        C0, C0, C1, C0,
        C0, C1, C0, C0,
        C0, C0, C0, C1,
    )
}

/// √SWAP: identity on the triplet, phase `i` on the singlet.
pub fn sqrt_swap_gate() -> Matrix4<Complex64> {
    let a = (C1 + CI) * 0.5;
    let b = (C1 - CI) * 0.5;
    Matrix4::new(
        C1, C0, C0, C0,
        C0, a, b, C0,
        C0, b, a, C0,
        C0, C0, C0, C1,
    )
}

/// Spectral norm of `a - e^{iφ} b` minimized over the global phase φ.
pub fn distance_up_to_phase(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C1
    };
    operator_norm(&(a - b * phase))
}

/// Largest singular value.
pub fn operator_norm(m: &Matrix4<Complex64>) -> f64 {
    let gram = m.adjoint() * m;
    gram.symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l))
        .max(0.0)
        .sqrt()
}

/// Marginals of the SWAP demonstration without and with the exchange pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapDemo {
    pub before: RunResult,
    pub after: RunResult,
}

impl SwapDemo {
    /// `[[q1, q2] before, [q1, q2] after]` fractions declared `|↑⟩`.
    pub fn up_fractions(&self) -> [[f64; 2]; 2] {
        let pick = |r: &RunResult| [r.up_fraction(Qubit::First), r.up_fraction(Qubit::Second)];
        [pick(&self.before), pick(&self.after)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapDemoOptions {
    /// Exchange energy (eV).
    pub j: f64,
    /// Number of consecutive SWAP pulses.
    pub n_swaps: u32,
    pub device: DeviceParams,
    pub run: RunOptions,
}

impl Default for SwapDemoOptions {
    fn default() -> Self {
        SwapDemoOptions {
            j: CONSTANTS.h * 20e9,
            n_swaps: 1,
            device: DeviceParams::reference_device(),
            run: RunOptions::default(),
        }
    }
}

/// Qubit 1 starts in `|↑⟩`, qubit 2 in a mixture with `Pr[↑] = p_up_q2`;
/// both are read out with `readout`, once directly and once after SWAP.
pub fn swap_demo_experiment(p_up_q2: f64, shots: u64, readout: ReadoutConfig, seed: u64) -> Result<SwapDemo> {
    swap_demo_experiment_with(p_up_q2, shots, readout, seed, &SwapDemoOptions::default())
}

pub fn swap_demo_experiment_with(
    p_up_q2: f64,
    shots: u64,
    readout: ReadoutConfig,
    seed: u64,
    options: &SwapDemoOptions,
) -> Result<SwapDemo> {
    require_probability("p_up_q2", p_up_q2)?;
    readout.validate()?;
    let swap = ExchangePulse::swap(options.j)?;
    let prepare = [ProtocolStep::init_up(Qubit::First), ProtocolStep::init_mixed(Qubit::Second, p_up_q2)];
    let measure = [
        ProtocolStep::Measure {
            qubit: Qubit::First,
            readout,
        },
        ProtocolStep::Measure {
            qubit: Qubit::Second,
            readout,
        },
    ];
    let before: Vec<_> = prepare.iter().chain(&measure).cloned().collect();
    let after: Vec<_> = prepare
        .iter()
        .cloned()
        .chain(std::iter::repeat_n(ProtocolStep::ExchangePulse(swap), options.n_swaps as usize))
        .chain(measure.iter().cloned())
        .collect();
    let seeds = StreamFactory::new(seed);
    let run = |steps: &[ProtocolStep], i| run_protocol_with(steps, &options.device, shots, seeds.derived_seed(i), &options.run);
    Ok(SwapDemo {
        before: run(&before, 0)?.0,
        after: run(&after, 1)?.0,
    })
}
