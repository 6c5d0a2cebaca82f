use std::f64::consts::PI;

use ghzsim_core::oracles::{dense_rwa_run, DenseSimulator};
use ghzsim_core::protocols::{build_protocol, evolve, run_protocol, ProtocolKind, ProtocolSpec};
use ghzsim_core::pulses::{Branch, PulseStep, SpinEnvironment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_step(rng: &mut ChaCha8Rng) -> PulseStep {
    let branch = if rng.random_bool(0.5) {
        Branch::Plus
    } else {
        Branch::Minus
    };
    PulseStep::new(
        branch,
        rng.random_range(-PI..PI),
        rng.random_range(0.05..=1.0),
        rng.random_range(0.1..30.0),
    )
    .unwrap()
}

fn random_case(rng: &mut ChaCha8Rng) -> (ProtocolSpec, SpinEnvironment) {
    let n = rng.random_range(1..=8);
    let spec = match rng.random_range(0..4) {
        k @ 0..=2 => build_protocol(
            ProtocolKind::ALL[k],
            rng.random_range(24.0 * PI..300.0 * PI),
            n,
            rng.random_range(-PI..PI),
        )
        .unwrap(),
        _ => {
            let prep = (0..rng.random_range(0..8))
                .map(|_| random_step(rng))
                .collect();
            let readout = (0..rng.random_range(0..8))
                .map(|_| random_step(rng))
                .collect();
            let t = rng.random_range(0.0..400.0);
            ProtocolSpec::custom(ProtocolKind::Conventional, n, prep, t, readout).unwrap()
        }
    };
    let scale = 10f64.powf(rng.random_range(-7.0..-1.0));
    let detunings = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
    (
        spec,
        SpinEnvironment::new(detunings, rng.random_range(-1e-2..1e-2)),
    )
}

#[test]
fn branch_product_matches_dense_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (spec, env) = random_case(&mut rng);
        let fast = run_protocol(&spec, &env).unwrap();
        let dense = dense_rwa_run(&spec, &env).unwrap();
        worst = worst.max((fast - dense).abs());
    }
    assert!(worst <= 1e-10, "max |ΔP| = {worst:e}");
}

#[test]
fn final_states_agree_amplitude_by_amplitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..30 {
        let (spec, env) = random_case(&mut rng);
        let mut sim = DenseSimulator::new(spec.n_spins).unwrap();
        for step in &spec.prep {
            sim.apply_pulse(step, &env.detunings);
        }
        sim.apply_exposure(spec.exposure_time, env.field, &env.detunings);
        for step in &spec.readout {
            sim.apply_pulse(step, &env.detunings);
        }
        let expanded = evolve(&spec, &env).unwrap().to_dense().unwrap();
        for (a, b) in sim.amplitudes().iter().zip(&expanded) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn equivalence_holds_for_large_detuning() {
    // Far outside the perturbative regime the two paths must still agree.
    for kind in ProtocolKind::ALL {
        let spec = build_protocol(kind, 100.0 * PI, 6, 1.1).unwrap();
        let env = SpinEnvironment::new(vec![0.3, -0.2, 0.05, 0.0, 0.11, -0.4], 0.07);
        let diff = (run_protocol(&spec, &env).unwrap() - dense_rwa_run(&spec, &env).unwrap()).abs();
        assert!(diff <= 1e-10, "{kind}: {diff:e}");
    }
}
