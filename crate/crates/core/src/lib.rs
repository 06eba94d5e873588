//! Simulation and engineering calculators for single-electron spin qubits
//! held in gated quantum dots: initialization, ESR control, spin-to-charge
//! readout, exchange gates and on-chip microwave delivery.

pub mod constants;
pub mod device;
pub mod error;
pub mod esr;
pub mod exchange;
pub mod harness;
pub mod init;
pub mod microwave;
pub mod readout;
pub mod rng;
pub mod state;
pub mod units;

pub use error::{Error, Result};
pub use state::{Qubit, Spin, SpinState};
