//! Simulation toolkit for GHZ-state magnetometry with a controllable spin
//! coupled to `N` memory spins under unknown static detuning.
//!
//! * [`qstate`]: branch-product state representation and readout.
//! * [`pulses`]: selective pulses, exposure and their unitaries.
//! * [`protocols`]: conventional, composite and variable-strength protocols
//!   under a fixed time budget.
//! * [`estimator`]: bias, spread and RSD of the field estimator.
//! * [`oracles`]: dense and non-RWA reference simulators.
//! * [`sweep`]: detuning models, N-sweeps and figure tables.

// Validation uses `!(x >= lo)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod mat2;
pub mod oracles;
pub mod protocols;
pub mod pulses;
pub mod qstate;
pub mod sweep;

pub use error::{Error, Result};
pub use estimator::{estimator_stats, monte_carlo_estimate, reference_curves, EstimatorStats};
pub use protocols::{build_protocol, run_protocol, ProtocolKind, ProtocolSpec, Readout};
pub use pulses::{Branch, PulseStep, SpinEnvironment};
pub use qstate::{BranchProductState, SpinVector};
pub use sweep::{run_sweep, DetuningModel, OutputFormat, SweepConfig, SweepRow};
