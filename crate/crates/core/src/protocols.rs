//! Protocol builders for a fixed single-trial time budget `τ`, and the
//! branch-product runner.
//!
//! Three protocols are provided:
//!
//! * conventional: one `ω₊` π-pulse, exposure, one `ω₋` π-pulse, all at
//!   `λ_max`;
//! * composite: the 7-step sequences that sandwich the π-pulse between two
//!   `R(φ₁, a)·R(φ₁+π, 2a)·R(φ₁, a)` identity composites on the opposite
//!   branch, run at a reduced strength `λ_CP` so that preparation, exposure
//!   and readout fill `τ`;
//! * appendix: three π-pulses per side with a variable strength
//!   `λ = 4π/(t_ex + 2π)`.
//!
//! Steps store physical durations. The controllable spin's own rotations are
//! ideal and instantaneous and are not charged to `τ`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::pulses::{apply_exposure, apply_pulse, Branch, PulseStep, SpinEnvironment};
use crate::qstate::BranchProductState;

/// Largest normalized exposure time the composite sequence supports, `2(8 − π)`.
pub const MAX_COMPOSITE_EXPOSURE: f64 = 2.0 * (8.0 - PI);

const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Conventional,
    Composite,
    Appendix,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [
        ProtocolKind::Conventional,
        ProtocolKind::Composite,
        ProtocolKind::Appendix,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::Conventional => "conventional",
            ProtocolKind::Composite => "composite",
            ProtocolKind::Appendix => "appendix",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conventional" => Ok(ProtocolKind::Conventional),
            "composite" => Ok(ProtocolKind::Composite),
            "appendix" => Ok(ProtocolKind::Appendix),
            other => Err(invalid(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Which controllable-spin outcome is reported as "1".
///
/// Every π-pulse is an SU(2) rotation, so a spin that goes `|g⟩ → |e⟩ → |g⟩`
/// picks up a factor −1. When the two branches see a different number of
/// such round trips the ideal signal appears with the opposite sign on
/// `|+y⟩`; the builders detect this from a noiseless dry run and read out
/// `|−y⟩` instead, so the reported probability is always
/// `½ + sin(NΩt_ex)/2` in the ideal limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    PlusY,
    MinusY,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub n_spins: usize,
    pub prep: Vec<PulseStep>,
    pub exposure_time: f64,
    pub readout: Vec<PulseStep>,
    pub basis: Readout,
}

impl ProtocolSpec {
    /// Assembles a spec from explicit steps. The readout basis is calibrated
    /// from a noiseless single-spin run.
    pub fn custom(
        kind: ProtocolKind,
        n_spins: usize,
        prep: Vec<PulseStep>,
        exposure_time: f64,
        readout: Vec<PulseStep>,
    ) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("n_spins must be at least 1"));
        }
        if !(exposure_time >= 0.0 && exposure_time.is_finite()) {
            return Err(invalid(format!(
                "exposure time {exposure_time} must be non-negative"
            )));
        }
        let mut spec = ProtocolSpec {
            kind,
            n_spins,
            prep,
            exposure_time,
            readout,
            basis: Readout::PlusY,
        };
        spec.basis = spec.calibrated_basis()?;
        Ok(spec)
    }

    /// Sum of all physical step durations plus the exposure time.
    pub fn total_duration(&self) -> f64 {
        let pulses: f64 = self
            .prep
            .iter()
            .chain(&self.readout)
            .map(|s| s.duration)
            .sum();
        pulses + self.exposure_time
    }

    /// Weakest pulse strength used by the protocol (1 if it has no pulses).
    pub fn pulse_strength(&self) -> f64 {
        self.prep
            .iter()
            .chain(&self.readout)
            .map(|s| s.strength)
            .fold(1.0, f64::min)
    }

    pub fn steps(&self) -> impl Iterator<Item = &PulseStep> {
        self.prep.iter().chain(&self.readout)
    }

    fn calibrated_basis(&self) -> Result<Readout> {
        let env = SpinEnvironment::uniform(1, 0.0, 0.0);
        let single = ProtocolSpec {
            n_spins: 1,
            basis: Readout::PlusY,
            ..self.clone()
        };
        let state = evolve(&single, &env)?;
        let overlap = state.branch_overlap();
        // Only sequences that return both branches to the same pole carry a
        // definite sign; anything else keeps the default basis.
        if (overlap.norm() - 1.0).abs() > 1e-9 || overlap.re.abs() < 0.5 {
            return Ok(Readout::PlusY);
        }
        let negative = overlap.re < 0.0 && self.n_spins % 2 == 1;
        Ok(if negative {
            Readout::MinusY
        } else {
            Readout::PlusY
        })
    }
}

fn pi_pulse(branch: Branch, strength: f64) -> Result<PulseStep> {
    PulseStep::new(branch, -FRAC_PI_2, strength, 2.0 * PI / strength)
}

/// Conventional protocol: `t_ex = τ − 4π`.
pub fn conventional_protocol(tau: f64, n_spins: usize) -> Result<ProtocolSpec> {
    let minimum = 4.0 * PI;
    if !(tau > minimum) {
        return Err(Error::InfeasibleBudget {
            protocol: "conventional",
            tau,
            minimum,
        });
    }
    ProtocolSpec::custom(
        ProtocolKind::Conventional,
        n_spins,
        vec![pi_pulse(Branch::Plus, 1.0)?],
        tau - minimum,
        vec![pi_pulse(Branch::Minus, 1.0)?],
    )
}

/// Half rotation angle `a = arcsin((π + t/2)/8)` of the composite sequence.
pub fn composite_angle(t_norm: f64) -> Result<f64> {
    if !(t_norm >= 0.0) || t_norm > MAX_COMPOSITE_EXPOSURE + BOUNDARY_SLACK {
        return Err(Error::Domain(format!(
            "normalized exposure time {t_norm} outside [0, 2(8 − π)]"
        )));
    }
    let arg = ((PI + t_norm / 2.0) / 8.0).min(1.0);
    Ok(arg.asin())
}

/// The 7-step composite sequence at full strength, with `branch` carrying
/// the central π-pulse and the opposite branch the two identity composites.
/// Durations are normalized (`λ = 1`).
pub fn composite_sequence(t_norm: f64, phi1: f64, branch: Branch) -> Result<Vec<PulseStep>> {
    let a = composite_angle(t_norm)?;
    let other = branch.opposite();
    let triple = |steps: &mut Vec<PulseStep>| -> Result<()> {
        steps.push(PulseStep::new(other, phi1, 1.0, 2.0 * a)?);
        steps.push(PulseStep::new(other, phi1 + PI, 1.0, 4.0 * a)?);
        steps.push(PulseStep::new(other, phi1, 1.0, 2.0 * a)?);
        Ok(())
    };
    let mut steps = Vec::with_capacity(7);
    triple(&mut steps)?;
    steps.push(pi_pulse(branch, 1.0)?);
    triple(&mut steps)?;
    Ok(steps)
}

/// Composite protocol at the maximal normalized exposure `2(8 − π)`.
pub fn composite_protocol(tau: f64, n_spins: usize, phi1: f64) -> Result<ProtocolSpec> {
    composite_protocol_with_exposure(tau, n_spins, phi1, MAX_COMPOSITE_EXPOSURE)
}

/// Composite protocol for an arbitrary normalized exposure `t_norm`. All
/// fourteen pulses run at `λ = (32a + 4π + t_norm)/τ`, which must not exceed 1.
pub fn composite_protocol_with_exposure(
    tau: f64,
    n_spins: usize,
    phi1: f64,
    t_norm: f64,
) -> Result<ProtocolSpec> {
    let a = composite_angle(t_norm)?;
    let minimum = 32.0 * a + 4.0 * PI + t_norm;
    let strength = minimum / tau;
    if !(tau > 0.0) || strength > 1.0 + BOUNDARY_SLACK {
        return Err(Error::InfeasibleBudget {
            protocol: "composite",
            tau,
            minimum,
        });
    }
    let strength = strength.min(1.0);
    let rescale = |steps: Vec<PulseStep>| -> Result<Vec<PulseStep>> {
        steps
            .into_iter()
            .map(|s| PulseStep::new(s.branch, s.phase, strength, s.duration / strength))
            .collect()
    };
    ProtocolSpec::custom(
        ProtocolKind::Composite,
        n_spins,
        rescale(composite_sequence(t_norm, phi1, Branch::Plus)?)?,
        t_norm / strength,
        rescale(composite_sequence(t_norm, phi1, Branch::Minus)?)?,
    )
}

/// Variable-strength protocol: `t_ex = (τ − 8π)/3` with weak pulses of
/// strength `4π/(t_ex + 2π)`. The weak strength reaches `λ_max` at `τ = 14π`,
/// below which the budget is infeasible.
pub fn appendix_protocol(tau: f64, n_spins: usize) -> Result<ProtocolSpec> {
    let minimum = 14.0 * PI;
    if !(tau >= minimum) {
        return Err(Error::InfeasibleBudget {
            protocol: "appendix",
            tau,
            minimum,
        });
    }
    let t_ex = (tau - 8.0 * PI) / 3.0;
    let weak = (4.0 * PI / (t_ex + 2.0 * PI)).min(1.0);
    ProtocolSpec::custom(
        ProtocolKind::Appendix,
        n_spins,
        vec![
            pi_pulse(Branch::Minus, weak)?,
            pi_pulse(Branch::Plus, weak)?,
            pi_pulse(Branch::Minus, 1.0)?,
        ],
        t_ex,
        vec![
            pi_pulse(Branch::Minus, 1.0)?,
            pi_pulse(Branch::Plus, weak)?,
            pi_pulse(Branch::Minus, weak)?,
        ],
    )
}

/// Builds the named protocol with its default settings.
pub fn build_protocol(
    kind: ProtocolKind,
    tau: f64,
    n_spins: usize,
    phi1: f64,
) -> Result<ProtocolSpec> {
    match kind {
        ProtocolKind::Conventional => conventional_protocol(tau, n_spins),
        ProtocolKind::Composite => composite_protocol(tau, n_spins, phi1),
        ProtocolKind::Appendix => appendix_protocol(tau, n_spins),
    }
}

/// Final state before measurement: preparation, exposure, readout.
pub fn evolve(spec: &ProtocolSpec, env: &SpinEnvironment) -> Result<BranchProductState> {
    if env.n_spins() != spec.n_spins {
        return Err(invalid(format!(
            "environment has {} detunings for a {}-spin protocol",
            env.n_spins(),
            spec.n_spins
        )));
    }
    let mut state = BranchProductState::initial(spec.n_spins)?;
    // The target field only acts during exposure.
    let pulse_env = SpinEnvironment::new(env.detunings.clone(), 0.0);
    for step in &spec.prep {
        state = apply_pulse(&state, step, &pulse_env)?;
    }
    state = apply_exposure(&state, spec.exposure_time, env)?;
    for step in &spec.readout {
        state = apply_pulse(&state, step, &pulse_env)?;
    }
    Ok(state)
}

/// Probability of the outcome labelled "1" under the protocol's readout basis.
pub fn run_protocol(spec: &ProtocolSpec, env: &SpinEnvironment) -> Result<f64> {
    let p = evolve(spec, env)?.measure_plus_y();
    Ok(match spec.basis {
        Readout::PlusY => p,
        Readout::MinusY => 1.0 - p,
    })
}
