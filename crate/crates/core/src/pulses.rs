//! Frequency-selective pulses on the memory spins and the exposure step,
//! within the rotating-wave approximation.
//!
//! All strengths and times are in units of the maximum pulse strength
//! `λ_max = 1`. A pulse tuned to `ω₊` resonantly drives the memory spins of
//! the `|e⟩_c` branch with generator `(λ/4)(σ_x cos φ + σ_y sin φ) + (δ/2)σ_z`
//! while the `|g⟩_c` branch only precesses under `(δ/2)σ_z`; `ω₋` swaps the
//! roles.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::mat2::Mat2;
use crate::qstate::BranchProductState;

/// Which conditional transition frequency a pulse is tuned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `ω₊ = ω_m + g/2`, resonant with the `|e⟩_c` branch.
    Plus,
    /// `ω₋ = ω_m − g/2`, resonant with the `|g⟩_c` branch.
    Minus,
}

impl Branch {
    pub fn opposite(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// One rectangular pulse.
///
/// `duration` is the physical duration in `1/λ_max` units, so a pulse of
/// strength `λ` rotates its resonant spins by `λ·duration/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseStep {
    pub branch: Branch,
    pub phase: f64,
    pub strength: f64,
    pub duration: f64,
}

impl PulseStep {
    pub fn new(branch: Branch, phase: f64, strength: f64, duration: f64) -> Result<Self> {
        if !(strength > 0.0 && strength <= 1.0) {
            return Err(invalid(format!("pulse strength {strength} outside (0, 1]")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid(format!(
                "pulse duration {duration} must be positive"
            )));
        }
        if !phase.is_finite() {
            return Err(invalid("pulse phase must be finite"));
        }
        Ok(PulseStep {
            branch,
            phase,
            strength,
            duration,
        })
    }

    /// Rotation angle imparted to resonant spins at zero detuning.
    pub fn rotation_angle(&self) -> f64 {
        self.strength * self.duration / 2.0
    }
}

/// Per-spin detunings and the target field, fixed for a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinEnvironment {
    pub detunings: Vec<f64>,
    pub field: f64,
}

impl SpinEnvironment {
    pub fn new(detunings: Vec<f64>, field: f64) -> Self {
        SpinEnvironment { detunings, field }
    }

    pub fn uniform(n_spins: usize, delta: f64, field: f64) -> Self {
        SpinEnvironment {
            detunings: vec![delta; n_spins],
            field,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.detunings.len()
    }

    /// `Δ = Σ δᵢ`.
    pub fn total_detuning(&self) -> f64 {
        self.detunings.iter().sum()
    }
}

/// `exp(−i s (n_x σ_x + n_y σ_y + n_z σ_z))` in closed form.
pub fn su2_exp(n_x: f64, n_y: f64, n_z: f64, s: f64) -> Mat2 {
    let r = (n_x * n_x + n_y * n_y + n_z * n_z).sqrt();
    if r == 0.0 {
        return Mat2::IDENTITY;
    }
    let (sin, cos) = (r * s).sin_cos();
    let k = sin / r;
    // cos·I − i·k·(n·σ) with σ_z = diag(−1, 1)
    Mat2::new(
        C64::new(cos, k * n_z),
        C64::new(-k * n_y, -k * n_x),
        C64::new(k * n_y, -k * n_x),
        C64::new(cos, -k * n_z),
    )
}

/// Unitaries for one spin of detuning `delta` during `step`: the resonant
/// branch's and the off-resonant branch's.
pub fn pulse_unitaries(step: &PulseStep, delta: f64) -> (Mat2, Mat2) {
    let drive = step.strength / 4.0;
    let resonant = su2_exp(
        drive * step.phase.cos(),
        drive * step.phase.sin(),
        delta / 2.0,
        step.duration,
    );
    let off_resonant = su2_exp(0.0, 0.0, delta / 2.0, step.duration);
    (resonant, off_resonant)
}

/// Free precession of one memory spin under the target field plus its
/// detuning: `exp(−i t (Ω + δ)/2 σ_z)`.
pub fn exposure_unitary(t: f64, field: f64, delta: f64) -> Result<Mat2> {
    if !(t >= 0.0) {
        return Err(invalid(format!("exposure time {t} must be non-negative")));
    }
    Ok(su2_exp(0.0, 0.0, (field + delta) / 2.0, t))
}

/// Applies `step` to every memory spin in both branches.
pub fn apply_pulse(
    state: &BranchProductState,
    step: &PulseStep,
    env: &SpinEnvironment,
) -> Result<BranchProductState> {
    check_len(state, env)?;
    let (resonant, off_resonant) = branch_matrices(&env.detunings, |d| pulse_unitaries(step, d));
    match step.branch {
        Branch::Plus => state.apply_branch_unitaries(&off_resonant, &resonant),
        Branch::Minus => state.apply_branch_unitaries(&resonant, &off_resonant),
    }
}

/// Applies the exposure step of length `t` to both branches.
pub fn apply_exposure(
    state: &BranchProductState,
    t: f64,
    env: &SpinEnvironment,
) -> Result<BranchProductState> {
    check_len(state, env)?;
    let mut us = Vec::with_capacity(env.n_spins());
    let mut last: Option<(f64, Mat2)> = None;
    for &d in &env.detunings {
        let u = match last {
            Some((prev, u)) if prev.to_bits() == d.to_bits() => u,
            _ => exposure_unitary(t, env.field, d)?,
        };
        last = Some((d, u));
        us.push(u);
    }
    state.apply_branch_unitaries(&us, &us)
}

fn check_len(state: &BranchProductState, env: &SpinEnvironment) -> Result<()> {
    if state.n_spins() != env.n_spins() {
        return Err(invalid(format!(
            "environment has {} detunings for {} spins",
            env.n_spins(),
            state.n_spins()
        )));
    }
    Ok(())
}

/// Evaluates `f` per detuning, reusing the previous pair when consecutive
/// detunings are bitwise equal (the uniform case costs one evaluation).
fn branch_matrices(detunings: &[f64], f: impl Fn(f64) -> (Mat2, Mat2)) -> (Vec<Mat2>, Vec<Mat2>) {
    let mut a = Vec::with_capacity(detunings.len());
    let mut b = Vec::with_capacity(detunings.len());
    let mut last: Option<(f64, (Mat2, Mat2))> = None;
    for &d in detunings {
        let pair = match last {
            Some((prev, pair)) if prev.to_bits() == d.to_bits() => pair,
            _ => f(d),
        };
        last = Some((d, pair));
        a.push(pair.0);
        b.push(pair.1);
    }
    (a, b)
}
