//! Rotating-frame integration without the rotating-wave approximation.
//!
//! In the frame that removes the spin frequencies and the coupling, a pulse
//! with carrier `ω`, phase `φ` and strength `λ` acts on memory spin `k` of
//! branch `b` as
//!
//! ```text
//! (λ/2)(σ_x cos ω_b t + σ_y sin ω_b t) cos(ω t − φ) + (δ_k/2) σ_z
//! ```
//!
//! with `ω_g = ω_m − g/2` and `ω_e = ω_m + g/2`. Averaging the resonant
//! product reproduces the RWA generator `(λ/4)(σ_x cos φ + σ_y sin φ)`; the
//! remaining terms oscillate at `g`, `2ω_m ± g/2`, … and are kept here.
//! Time is measured from the start of the preparation sequence.

use num_complex::Complex64 as C64;

use super::dense::DenseSimulator;
use crate::error::{invalid, Error, Result};
use crate::protocols::{ProtocolSpec, Readout};
use crate::pulses::{Branch, PulseStep, SpinEnvironment};

pub const MAX_LAB_FRAME_SPINS: usize = 3;

/// Largest admissible step is `STEP_FACTOR / (ω_m + g)`.
pub const STEP_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabFrameParams {
    pub omega_m: f64,
    /// Controllable-spin frequency. Its rotations are ideal, so it never
    /// enters the dynamics.
    pub omega_c: f64,
    pub coupling: f64,
    pub step: f64,
}

impl LabFrameParams {
    pub fn new(omega_m: f64, omega_c: f64, coupling: f64, step: f64) -> Result<Self> {
        if !(coupling >= 10.0) {
            return Err(invalid(format!(
                "coupling g = {coupling} must be at least 10"
            )));
        }
        if !(omega_m >= 10.0 * coupling) {
            return Err(invalid(format!(
                "memory frequency {omega_m} must be at least 10·g = {}",
                10.0 * coupling
            )));
        }
        let max_step = Self::max_step(omega_m, coupling);
        if !(step > 0.0 && step <= max_step * (1.0 + 1e-12)) {
            return Err(invalid(format!(
                "integrator step {step} outside (0, {max_step:e}]"
            )));
        }
        Ok(LabFrameParams {
            omega_m,
            omega_c,
            coupling,
            step,
        })
    }

    /// Parameters at the largest admissible step.
    pub fn with_max_step(omega_m: f64, omega_c: f64, coupling: f64) -> Result<Self> {
        Self::new(
            omega_m,
            omega_c,
            coupling,
            Self::max_step(omega_m, coupling),
        )
    }

    pub fn max_step(omega_m: f64, coupling: f64) -> f64 {
        STEP_FACTOR / (omega_m + coupling)
    }

    fn branch_frequency(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.omega_m + self.coupling / 2.0,
            Branch::Minus => self.omega_m - self.coupling / 2.0,
        }
    }
}

struct Drive {
    amplitude: f64,
    carrier: f64,
    phase: f64,
    omega_g: f64,
    omega_e: f64,
}

impl Drive {
    /// `out = −i H(t) ψ`.
    fn derivative(&self, t: f64, detunings: &[f64], psi: &[C64], out: &mut [C64]) {
        let n = detunings.len();
        let control = 1usize << n;
        let envelope = self.amplitude * (self.carrier * t - self.phase).cos();
        let (sin_g, cos_g) = (self.omega_g * t).sin_cos();
        let (sin_e, cos_e) = (self.omega_e * t).sin_cos();
        // σ_x cos θ + σ_y sin θ = [[0, e^{−iθ}], [e^{iθ}, 0]]
        let lower_g = C64::new(cos_g, sin_g) * envelope;
        let lower_e = C64::new(cos_e, sin_e) * envelope;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (k, &d) in detunings.iter().enumerate() {
            let target = 1usize << (n - 1 - k);
            let half_delta = d / 2.0;
            for idx in 0..psi.len() {
                if idx & target != 0 {
                    continue;
                }
                let partner = idx | target;
                let lower = if idx & control == 0 { lower_g } else { lower_e };
                let (a, b) = (psi[idx], psi[partner]);
                // σ_z = diag(−1, 1)
                out[idx] += lower.conj() * b - a * half_delta;
                out[partner] += lower * a + b * half_delta;
            }
        }
        let minus_i = C64::new(0.0, -1.0);
        out.iter_mut().for_each(|z| *z *= minus_i);
    }
}

fn integrate_pulse(
    amps: &mut [C64],
    step: &PulseStep,
    detunings: &[f64],
    params: &LabFrameParams,
    t0: f64,
) {
    let drive = Drive {
        amplitude: step.strength / 2.0,
        carrier: params.branch_frequency(step.branch),
        phase: step.phase,
        omega_g: params.branch_frequency(Branch::Minus),
        omega_e: params.branch_frequency(Branch::Plus),
    };
    let n_steps = (step.duration / params.step).ceil().max(1.0) as usize;
    let h = step.duration / n_steps as f64;
    let dim = amps.len();
    let mut k1 = vec![C64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        drive.derivative(t, detunings, amps, &mut k1);
        for j in 0..dim {
            tmp[j] = amps[j] + k1[j] * (h / 2.0);
        }
        drive.derivative(t + h / 2.0, detunings, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = amps[j] + k2[j] * (h / 2.0);
        }
        drive.derivative(t + h / 2.0, detunings, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = amps[j] + k3[j] * h;
        }
        drive.derivative(t + h, detunings, &tmp, &mut k4);
        for j in 0..dim {
            amps[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0);
        }
    }
}

/// Final dense state of `spec` under the non-RWA dynamics, before measurement.
pub fn lab_frame_state(
    spec: &ProtocolSpec,
    env: &SpinEnvironment,
    params: &LabFrameParams,
) -> Result<DenseSimulator> {
    if spec.n_spins > MAX_LAB_FRAME_SPINS {
        return Err(Error::Capacity {
            what: "n_spins",
            got: spec.n_spins,
            limit: MAX_LAB_FRAME_SPINS,
        });
    }
    if env.n_spins() != spec.n_spins {
        return Err(invalid(format!(
            "environment has {} detunings for a {}-spin protocol",
            env.n_spins(),
            spec.n_spins
        )));
    }
    // Re-validate in case the struct was built by hand.
    let params = LabFrameParams::new(params.omega_m, params.omega_c, params.coupling, params.step)?;
    let mut sim = DenseSimulator::new(spec.n_spins)?;
    let mut clock = 0.0;
    for step in &spec.prep {
        integrate_pulse(sim.amplitudes_mut(), step, &env.detunings, &params, clock);
        clock += step.duration;
    }
    sim.apply_exposure(spec.exposure_time, env.field, &env.detunings);
    clock += spec.exposure_time;
    for step in &spec.readout {
        integrate_pulse(sim.amplitudes_mut(), step, &env.detunings, &params, clock);
        clock += step.duration;
    }
    Ok(sim)
}

/// Probability of the outcome labelled "1" under the non-RWA dynamics.
pub fn lab_frame_run(
    spec: &ProtocolSpec,
    env: &SpinEnvironment,
    params: &LabFrameParams,
) -> Result<f64> {
    let p = lab_frame_state(spec, env, params)?.p_plus_y();
    Ok(match spec.basis {
        Readout::PlusY => p,
        Readout::MinusY => 1.0 - p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::dense_rwa_run;
    use crate::protocols::{conventional_protocol, ProtocolKind};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn prep_only(n: usize) -> ProtocolSpec {
        let pi = PulseStep::new(Branch::Plus, -FRAC_PI_2, 1.0, 2.0 * PI).unwrap();
        ProtocolSpec::custom(ProtocolKind::Conventional, n, vec![pi], 0.0, vec![]).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(LabFrameParams::with_max_step(500.0, 0.0, 50.0).is_ok());
        assert!(LabFrameParams::with_max_step(400.0, 0.0, 50.0).is_err());
        assert!(LabFrameParams::with_max_step(500.0, 0.0, 5.0).is_err());
        assert!(LabFrameParams::new(500.0, 0.0, 50.0, 1e-4).is_err());
        assert!(LabFrameParams::new(500.0, 0.0, 50.0, 0.0).is_err());
    }

    #[test]
    fn capacity_guard() {
        let params = LabFrameParams::with_max_step(500.0, 0.0, 50.0).unwrap();
        let spec = prep_only(4);
        let env = SpinEnvironment::uniform(4, 0.0, 0.0);
        assert!(matches!(
            lab_frame_run(&spec, &env, &params),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn empty_protocol_is_one_half() {
        let params = LabFrameParams::with_max_step(500.0, 0.0, 50.0).unwrap();
        let spec =
            ProtocolSpec::custom(ProtocolKind::Conventional, 2, vec![], 0.0, vec![]).unwrap();
        let p = lab_frame_run(&spec, &SpinEnvironment::uniform(2, 0.0, 0.0), &params).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pi_pulse_flips_resonant_branch() {
        let params = LabFrameParams::with_max_step(500.0, 0.0, 50.0).unwrap();
        let sim = lab_frame_state(
            &prep_only(1),
            &SpinEnvironment::uniform(1, 0.0, 0.0),
            &params,
        )
        .unwrap();
        let amps = sim.amplitudes();
        // |e⟩_c|e⟩ is index 0b11; its branch weight is ½.
        let excited = 2.0 * amps[3].norm_sqr();
        assert!((1.0 - excited).abs() < 1e-2, "excited population {excited}");
        assert!((sim.norm_sqr() - 1.0).abs() < 1e-9);
        let idle = 2.0 * amps[0].norm_sqr();
        assert!((1.0 - idle).abs() < 1e-2, "off-resonant branch {idle}");
    }

    #[test]
    fn norm_drift_over_one_pulse() {
        let params = LabFrameParams::with_max_step(1000.0, 0.0, 100.0).unwrap();
        let sim = lab_frame_state(
            &prep_only(2),
            &SpinEnvironment::new(vec![1e-3, -2e-3], 0.0),
            &params,
        )
        .unwrap();
        assert!((sim.norm_sqr().sqrt() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rwa_error_shrinks_with_coupling() {
        let spec = conventional_protocol(100.0 * PI, 1).unwrap();
        let env = SpinEnvironment::uniform(1, 0.0, 1e-5);
        let rwa = dense_rwa_run(&spec, &env).unwrap();
        let err = |g: f64| {
            let params = LabFrameParams::with_max_step(10.0 * g, 0.0, g).unwrap();
            (lab_frame_run(&spec, &env, &params).unwrap() - rwa).abs()
        };
        let (e50, e100) = (err(50.0), err(100.0));
        assert!(e50 <= 5.0 / 50.0 && e100 <= 5.0 / 100.0, "{e50} {e100}");
        assert!(e100 <= e50, "{e50} {e100}");
    }

    #[test]
    fn step_convergence() {
        let spec = conventional_protocol(100.0 * PI, 1).unwrap();
        let env = SpinEnvironment::uniform(1, 1e-4, 1e-5);
        let full = LabFrameParams::with_max_step(500.0, 0.0, 50.0).unwrap();
        let half = LabFrameParams::new(500.0, 0.0, 50.0, full.step / 2.0).unwrap();
        let a = lab_frame_run(&spec, &env, &full).unwrap();
        let b = lab_frame_run(&spec, &env, &half).unwrap();
        assert!((a - b).abs() <= 1e-8, "{}", (a - b).abs());
    }
}
