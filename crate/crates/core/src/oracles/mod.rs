//! Independent verification paths for the branch-product simulator.
//!
//! * [`dense`]: full `2^(N+1)` statevector with explicitly controlled
//!   single-spin gates, built from a series matrix exponential.
//! * [`labframe`]: fourth-order integration of the rotating-frame
//!   Hamiltonian with the counter-rotating terms kept.
//! * [`probability_slope`]: central-difference `dP/dδ` at zero detuning.

pub mod dense;
pub mod labframe;

pub use dense::{dense_rwa_run, DenseSimulator, MAX_DENSE_ORACLE_SPINS};
pub use labframe::{lab_frame_run, lab_frame_state, LabFrameParams, MAX_LAB_FRAME_SPINS};

use crate::error::{invalid, Result};
use crate::protocols::{run_protocol, ProtocolSpec};
use crate::pulses::SpinEnvironment;

/// `(P(+h) − P(−h)) / 2h` with every spin detuned by `±h`.
pub fn probability_slope<F>(builder: F, tau: f64, n_spins: usize, omega: f64, h: f64) -> Result<f64>
where
    F: Fn(f64, usize) -> Result<ProtocolSpec>,
{
    if !(1e-9..=1e-4).contains(&h) {
        return Err(invalid(format!("difference step {h} outside [1e-9, 1e-4]")));
    }
    let spec = builder(tau, n_spins)?;
    let p = |d: f64| run_protocol(&spec, &SpinEnvironment::uniform(n_spins, d, omega));
    Ok((p(h)? - p(-h)?) / (2.0 * h))
}
