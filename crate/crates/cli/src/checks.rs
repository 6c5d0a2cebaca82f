//! Oracle suites run by `ghzsim check`.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ghzsim_core::estimator::{estimator_stats, monte_carlo_estimate};
use ghzsim_core::oracles::{dense_rwa_run, lab_frame_run, probability_slope, LabFrameParams};
use ghzsim_core::protocols::{
    appendix_protocol, build_protocol, composite_protocol, conventional_protocol, run_protocol,
    ProtocolKind, ProtocolSpec, MAX_COMPOSITE_EXPOSURE,
};
use ghzsim_core::pulses::{Branch, PulseStep, SpinEnvironment};
use ghzsim_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Oracle {
    /// Branch-product path against the dense statevector.
    Dense,
    /// RWA against integration with counter-rotating terms.
    Labframe,
    /// Finite-difference dP/dδ against first-order predictions.
    Slope,
    /// Sampled estimator against the analytic mean and spread.
    Montecarlo,
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub label: String,
    pub error: f64,
    pub tolerance: f64,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub oracle: Oracle,
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(CheckLine::passed)
    }

    pub fn worst(&self) -> Option<&CheckLine> {
        self.lines
            .iter()
            .max_by(|a, b| (a.error / a.tolerance).total_cmp(&(b.error / b.tolerance)))
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.lines.iter().filter(|l| !l.passed()).count();
        writeln!(
            f,
            "{:?}: {} comparisons, {} failed",
            self.oracle,
            self.lines.len(),
            failed
        )?;
        for line in self.lines.iter().filter(|l| !l.passed()) {
            writeln!(
                f,
                "  FAIL {}: error {:e} > {:e}",
                line.label, line.error, line.tolerance
            )?;
        }
        if let Some(w) = self.worst() {
            writeln!(
                f,
                "  worst: {} (error {:e}, tolerance {:e})",
                w.label, w.error, w.tolerance
            )?;
        }
        Ok(())
    }
}

pub fn run_check(oracle: Oracle, cases: usize, seed: u64) -> Result<CheckReport> {
    let lines = match oracle {
        Oracle::Dense => dense_cases(cases, seed)?,
        Oracle::Labframe => labframe_cases()?,
        Oracle::Slope => slope_cases()?,
        Oracle::Montecarlo => montecarlo_cases(seed)?,
    };
    Ok(CheckReport { oracle, lines })
}

fn random_custom_spec(rng: &mut ChaCha8Rng, n: usize) -> Result<ProtocolSpec> {
    let steps = |rng: &mut ChaCha8Rng| -> Result<Vec<PulseStep>> {
        let count = rng.random_range(0..6);
        (0..count)
            .map(|_| {
                let branch = if rng.random_bool(0.5) {
                    Branch::Plus
                } else {
                    Branch::Minus
                };
                PulseStep::new(
                    branch,
                    rng.random_range(-PI..PI),
                    rng.random_range(0.05..=1.0),
                    rng.random_range(0.1..20.0),
                )
            })
            .collect()
    };
    let prep = steps(rng)?;
    let readout = steps(rng)?;
    let t_ex = rng.random_range(0.0..500.0);
    ProtocolSpec::custom(ProtocolKind::Conventional, n, prep, t_ex, readout)
}

/// Random builder and free-form protocols with `N ≤ 8`, tolerance 1e-10.
pub fn dense_cases(cases: usize, seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(cases);
    for case in 0..cases {
        let n = rng.random_range(1..=8);
        let choice = rng.random_range(0..4);
        let spec = if choice < 3 {
            // Above every builder's minimum budget.
            let tau = rng.random_range(24.0 * PI..200.0 * PI);
            build_protocol(ProtocolKind::ALL[choice], tau, n, rng.random_range(-PI..PI))?
        } else {
            random_custom_spec(&mut rng, n)?
        };
        let scale = 10f64.powf(rng.random_range(-6.0..-2.0));
        let detunings = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        let env = SpinEnvironment::new(detunings, rng.random_range(-1e-3..1e-3));
        let fast = run_protocol(&spec, &env)?;
        let dense = dense_rwa_run(&spec, &env)?;
        lines.push(CheckLine {
            label: format!("case {case}: {} N={n}", spec.kind),
            error: (fast - dense).abs(),
            tolerance: 1e-10,
        });
    }
    Ok(lines)
}

/// Conventional protocol at `τ = 100π`, `N ∈ {1, 2}`, `g ∈ {50, 100}`,
/// `ω_m = 10g`: the RWA error must stay below `5/g` and shrink as `g` doubles.
pub fn labframe_cases() -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for n in [1, 2] {
        let spec = conventional_protocol(100.0 * PI, n)?;
        let env = SpinEnvironment::uniform(n, 0.0, 1e-5);
        let rwa = run_protocol(&spec, &env)?;
        let mut errors = Vec::new();
        for g in [50.0, 100.0] {
            let params = LabFrameParams::with_max_step(10.0 * g, 10.0 * g, g)?;
            let err = (lab_frame_run(&spec, &env, &params)? - rwa).abs();
            lines.push(CheckLine {
                label: format!("N={n} g={g} |P_lab − P_rwa|"),
                error: err,
                tolerance: 5.0 / g,
            });
            errors.push(err);
        }
        lines.push(CheckLine {
            label: format!("N={n} error ratio g=100 / g=50"),
            error: errors[1] / errors[0],
            tolerance: 1.0,
        });
    }
    Ok(lines)
}

/// Central differences at `Ω = 0` against the first-order predictions:
/// `N(2π + t_ex)/2` (conventional), `N(2π + t_norm)/λ` (composite) and 0
/// (variable strength).
pub fn slope_cases() -> Result<Vec<CheckLine>> {
    let tau = 100.0 * PI;
    let h = 1e-7;
    let mut lines = Vec::new();
    for n in [1, 5, 20, 50] {
        let nf = n as f64;
        let conv = conventional_protocol(tau, n)?;
        let expected = nf * (2.0 * PI + conv.exposure_time) / 2.0;
        let got = probability_slope(conventional_protocol, tau, n, 0.0, h)?;
        lines.push(CheckLine {
            label: format!("conventional N={n} relative"),
            error: (got / expected - 1.0).abs(),
            tolerance: 1e-3,
        });

        let comp = composite_protocol(tau, n, 0.0)?;
        let expected = nf * (2.0 * PI + MAX_COMPOSITE_EXPOSURE) / comp.pulse_strength();
        let got = probability_slope(|t, n| composite_protocol(t, n, 0.0), tau, n, 0.0, h)?;
        lines.push(CheckLine {
            label: format!("composite N={n} relative"),
            error: (got / expected - 1.0).abs(),
            tolerance: 1e-3,
        });

        let got = probability_slope(appendix_protocol, tau, n, 0.0, h)?;
        lines.push(CheckLine {
            label: format!("appendix N={n} absolute"),
            error: got.abs(),
            tolerance: 1e-5 * nf,
        });
    }
    Ok(lines)
}

/// 400 sampled estimates per setting; mean within 4 standard errors and
/// sample spread within 15% of the analytic value.
pub fn montecarlo_cases(seed: u64) -> Result<Vec<CheckLine>> {
    let samples = 400;
    let mut lines = Vec::new();
    for (i, &(p, n, t, m)) in [
        (0.515, 10usize, 96.0 * PI, 1_000_000u64),
        (0.3, 3, 50.0, 500),
        (0.9, 1, 10.0, 20_000),
    ]
    .iter()
    .enumerate()
    {
        let stats = estimator_stats(p, 0.0, n, t, m)?;
        let draws = (0..samples)
            .map(|k| monte_carlo_estimate(p, n, t, m, seed.wrapping_add((i * samples + k) as u64)))
            .collect::<Result<Vec<_>>>()?;
        let mean = draws.iter().sum::<f64>() / samples as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        lines.push(CheckLine {
            label: format!("p={p} M={m} mean (standard errors)"),
            error: (mean - stats.mean).abs() / (stats.std / (samples as f64).sqrt()),
            tolerance: 4.0,
        });
        lines.push(CheckLine {
            label: format!("p={p} M={m} std relative"),
            error: (var.sqrt() / stats.std - 1.0).abs(),
            tolerance: 0.15,
        });
    }
    Ok(lines)
}
