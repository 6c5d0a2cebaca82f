//! Dense statevector oracle.
//!
//! Amplitude index layout matches [`BranchProductState::to_dense`]: the
//! controllable spin is bit `N`, memory spin `k` (1-based) is bit `N − k`,
//! and `|g⟩` is bit value 0.
//!
//! [`BranchProductState::to_dense`]: crate::qstate::BranchProductState::to_dense

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::mat2::Mat2;
use crate::protocols::{ProtocolSpec, Readout};
use crate::pulses::{Branch, PulseStep, SpinEnvironment};

pub const MAX_DENSE_ORACLE_SPINS: usize = 12;

/// `exp(−i t H)` by scaling and squaring a truncated Taylor series.
pub(crate) fn expm(h: &Mat2, t: f64) -> Mat2 {
    let a = h.scale(C64::new(0.0, -t));
    let mut squarings = 0;
    let mut scaled = a;
    while scaled.norm() > 0.25 {
        scaled = scaled.scale(C64::new(0.5, 0.0));
        squarings += 1;
    }
    let mut term = Mat2::IDENTITY;
    let mut sum = Mat2::IDENTITY;
    for k in 1..=18 {
        term = (term * scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

fn generator(drive: Option<(f64, f64)>, delta: f64) -> Mat2 {
    let mut h = Mat2::SIGMA_Z.scale(C64::new(delta / 2.0, 0.0));
    if let Some((strength, phase)) = drive {
        let k = strength / 4.0;
        h = h
            .add(&Mat2::SIGMA_X.scale(C64::new(k * phase.cos(), 0.0)))
            .add(&Mat2::SIGMA_Y.scale(C64::new(k * phase.sin(), 0.0)));
    }
    h
}

/// Full `2^(N+1)` statevector of the controllable spin and `N` memory spins.
#[derive(Debug, Clone)]
pub struct DenseSimulator {
    n_spins: usize,
    amps: Vec<C64>,
}

impl DenseSimulator {
    /// `(|g⟩_c + |e⟩_c)/√2 ⊗ |g…g⟩`.
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("n_spins must be at least 1"));
        }
        if n_spins > MAX_DENSE_ORACLE_SPINS {
            return Err(Error::Capacity {
                what: "n_spins",
                got: n_spins,
                limit: MAX_DENSE_ORACLE_SPINS,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 2 << n_spins];
        amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[1 << n_spins] = C64::new(FRAC_1_SQRT_2, 0.0);
        Ok(DenseSimulator { n_spins, amps })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `when_g` to memory spin `spin` (0-based) if the controllable
    /// spin is `|g⟩` and `when_e` if it is `|e⟩`.
    pub fn apply_controlled(&mut self, spin: usize, when_g: &Mat2, when_e: &Mat2) {
        let n = self.n_spins;
        let control = 1usize << n;
        let target = 1usize << (n - 1 - spin);
        for idx in 0..self.amps.len() {
            if idx & target != 0 {
                continue;
            }
            let partner = idx | target;
            let u = if idx & control == 0 { when_g } else { when_e };
            let [a0, a1] = u.apply([self.amps[idx], self.amps[partner]]);
            self.amps[idx] = a0;
            self.amps[partner] = a1;
        }
    }

    pub fn apply_pulse(&mut self, step: &PulseStep, detunings: &[f64]) {
        for (k, &d) in detunings.iter().enumerate() {
            let on = expm(
                &generator(Some((step.strength, step.phase)), d),
                step.duration,
            );
            let off = expm(&generator(None, d), step.duration);
            match step.branch {
                Branch::Plus => self.apply_controlled(k, &off, &on),
                Branch::Minus => self.apply_controlled(k, &on, &off),
            }
        }
    }

    /// Diagonal phases `e^{±i(Ω + δ_k)t/2}` on `|g⟩` / `|e⟩` of each memory spin.
    pub fn apply_exposure(&mut self, t: f64, field: f64, detunings: &[f64]) {
        let n = self.n_spins;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let mut phase = 0.0;
            for (k, &d) in detunings.iter().enumerate() {
                let excited = (idx >> (n - 1 - k)) & 1 == 1;
                let half = (field + d) * t / 2.0;
                phase += if excited { -half } else { half };
            }
            *amp *= C64::from_polar(1.0, phase);
        }
    }

    /// Projection of the controllable spin onto `|+y⟩ = (|e⟩ + i|g⟩)/√2`.
    pub fn p_plus_y(&self) -> f64 {
        let half = 1usize << self.n_spins;
        (0..half)
            .map(|m| {
                let proj = self.amps[half + m] - C64::new(0.0, 1.0) * self.amps[m];
                proj.norm_sqr() / 2.0
            })
            .sum()
    }
}

/// Runs `spec` on the dense simulator and returns the probability of the
/// outcome labelled "1".
pub fn dense_rwa_run(spec: &ProtocolSpec, env: &SpinEnvironment) -> Result<f64> {
    if env.n_spins() != spec.n_spins {
        return Err(invalid(format!(
            "environment has {} detunings for a {}-spin protocol",
            env.n_spins(),
            spec.n_spins
        )));
    }
    let mut sim = DenseSimulator::new(spec.n_spins)?;
    for step in &spec.prep {
        sim.apply_pulse(step, &env.detunings);
    }
    sim.apply_exposure(spec.exposure_time, env.field, &env.detunings);
    for step in &spec.readout {
        sim.apply_pulse(step, &env.detunings);
    }
    let p = sim.p_plus_y();
    Ok(match spec.basis {
        Readout::PlusY => p,
        Readout::MinusY => 1.0 - p,
    })
}
