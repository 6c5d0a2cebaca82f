//! Field estimator statistics.
//!
//! After `M` trials with outcome probability `p`, the estimator is
//! `Ω̃ = (2S − 1)/(N t_ex)` where `S` is the fraction of "1" outcomes. Its
//! mean, spread and root-mean-square error are available in closed form;
//! [`monte_carlo_estimate`] samples it for validation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

/// Trial counts up to this use exact inverse-CDF binomial sampling; above
/// it a rounded normal approximation.
pub const INVERSE_CDF_MAX_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorStats {
    pub mean: f64,
    pub bias: f64,
    pub std: f64,
    pub rmse: f64,
    /// `rmse / |Ω|`; infinite when `Ω = 0` and the estimator has any error.
    pub rsd: f64,
}

impl EstimatorStats {
    fn from_parts(mean: f64, omega: f64, std: f64) -> Self {
        let bias = mean - omega;
        let rmse = std.hypot(bias);
        EstimatorStats {
            mean,
            bias,
            std,
            rmse,
            rsd: rmse / omega.abs(),
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{what} {p} outside [0, 1]")))
    }
}

fn check_scale(n_spins: usize, t_ex: f64) -> Result<f64> {
    let scale = n_spins as f64 * t_ex;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid(format!(
            "N·t_ex must be positive (N = {n_spins}, t_ex = {t_ex})"
        )));
    }
    Ok(scale)
}

/// Analytic statistics of `Ω̃` when outcomes occur with probability `p_actual`.
pub fn estimator_stats(
    p_actual: f64,
    omega_true: f64,
    n_spins: usize,
    t_ex: f64,
    trials: u64,
) -> Result<EstimatorStats> {
    check_probability(p_actual, "outcome probability")?;
    let scale = check_scale(n_spins, t_ex)?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let mean = (2.0 * p_actual - 1.0) / scale;
    let std = 2.0 / scale * (p_actual * (1.0 - p_actual) / trials as f64).sqrt();
    Ok(EstimatorStats::from_parts(mean, omega_true, std))
}

/// One sampled estimate `Ω̃` from `trials` simulated outcomes.
pub fn monte_carlo_estimate(
    p_actual: f64,
    n_spins: usize,
    t_ex: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    check_probability(p_actual, "outcome probability")?;
    let scale = check_scale(n_spins, t_ex)?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = sample_binomial(&mut rng, trials, p_actual);
    Ok((2.0 * k / trials as f64 - 1.0) / scale)
}

/// Draws a binomial count, returned as `f64` so very large `trials` are fine.
pub(crate) fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: f64) -> f64 {
    let m = trials as f64;
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return m;
    }
    if trials <= INVERSE_CDF_MAX_TRIALS {
        // Sequential search with the pmf recurrence kept in log space so the
        // (1 − p)^M starting term cannot underflow the whole sum.
        let u: f64 = rng.random();
        let log_odds = (p / (1.0 - p)).ln();
        let mut log_pmf = m * (-p).ln_1p();
        let mut cdf = 0.0;
        for k in 0..trials {
            cdf += log_pmf.exp();
            if cdf >= u {
                return k as f64;
            }
            let kf = k as f64;
            log_pmf += ((m - kf) / (kf + 1.0)).ln() + log_odds;
        }
        m
    } else {
        let z: f64 = rng.sample(StandardNormal);
        let k = (m * p + (m * p * (1.0 - p)).sqrt() * z).round();
        k.clamp(0.0, m)
    }
}

/// Statistics of the linear-model estimator under a mis-specified model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedLinearStats {
    pub stats: EstimatorStats,
    /// `lim_{M→∞} rmse = |ΩΔy + Δx| / |y|`.
    pub asymptotic_rmse: f64,
}

/// The estimator assumes `P₁ = x + yΩ` while outcomes follow
/// `P₁' = x' + y'Ω`.
pub fn biased_linear_model(
    x: f64,
    y: f64,
    x_actual: f64,
    y_actual: f64,
    omega: f64,
    trials: u64,
) -> Result<BiasedLinearStats> {
    if y == 0.0 || !y.is_finite() {
        return Err(invalid("model slope y must be non-zero"));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let p_actual = x_actual + y_actual * omega;
    if !(0.0..=1.0).contains(&p_actual) {
        return Err(Error::ModelDomain(format!(
            "actual probability x' + y'Ω = {p_actual} outside [0, 1]"
        )));
    }
    let mean = (y_actual * omega + x_actual - x) / y;
    let std = (p_actual * (1.0 - p_actual) / trials as f64).sqrt() / y.abs();
    let dx = x_actual - x;
    let dy = y_actual - y;
    Ok(BiasedLinearStats {
        stats: EstimatorStats::from_parts(mean, omega, std),
        asymptotic_rmse: (omega * dy + dx).abs() / y.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCurves {
    /// Ideal GHZ probe at `P = ½`: `1/(√M N t_ex Ω)`.
    pub heisenberg_rsd: f64,
    /// `N` independent spins folded into `N·M` single-spin trials:
    /// `1/(√(MN) t_ex Ω)`.
    pub sql_rsd: f64,
}

pub fn reference_curves(n_spins: usize, omega: f64, t_ex: f64, trials: u64) -> ReferenceCurves {
    let n = n_spins as f64;
    let m = trials as f64;
    let denom = t_ex * omega.abs();
    ReferenceCurves {
        heisenberg_rsd: 1.0 / (m.sqrt() * n * denom),
        sql_rsd: 1.0 / ((m * n).sqrt() * denom),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn unbiased_half() {
        let s = estimator_stats(0.5, 0.0, 3, 10.0, 100).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.bias, 0.0);
        let s = estimator_stats(0.5, 1e-3, 1, 1.0, 1_000_000).unwrap();
        assert_abs_diff_eq!(s.std, 1e-3, epsilon = 1e-18);
    }

    #[test]
    fn ghz_operating_point() {
        let s = estimator_stats(0.515077359, 1e-5, 10, 96.0 * PI, 1_000_000).unwrap();
        assert_relative_eq!(s.mean, 9.99848e-6, max_relative = 1e-5);
        assert_relative_eq!(s.std, 3.3142e-7, max_relative = 1e-4);
        assert_relative_eq!(s.rsd, 0.033142, max_relative = 1e-4);
        assert_relative_eq!(
            s.rmse * s.rmse,
            s.std * s.std + s.bias * s.bias,
            max_relative = 1e-12
        );
    }

    #[test]
    fn infinite_trials_leave_bias() {
        let s = estimator_stats(0.53, 1e-5, 10, 96.0 * PI, 1_000_000_000_000_000_000).unwrap();
        assert_relative_eq!(s.rsd, s.bias.abs() / 1e-5, max_relative = 1e-3);
    }

    #[test]
    fn argument_errors() {
        assert!(estimator_stats(0.5, 1.0, 1, 0.0, 1).is_err());
        assert!(estimator_stats(1.2, 1.0, 1, 1.0, 1).is_err());
        assert!(estimator_stats(0.5, 1.0, 1, 1.0, 0).is_err());
        assert!(monte_carlo_estimate(-0.1, 1, 1.0, 1, 0).is_err());
    }

    #[test]
    fn monte_carlo_extremes() {
        let (n, t) = (4, 2.5);
        assert_eq!(
            monte_carlo_estimate(1.0, n, t, 1000, 1).unwrap(),
            1.0 / (n as f64 * t)
        );
        assert_eq!(
            monte_carlo_estimate(0.0, n, t, 1000, 1).unwrap(),
            -1.0 / (n as f64 * t)
        );
        assert_eq!(
            monte_carlo_estimate(1.0, n, t, 10_000_000, 1).unwrap(),
            1.0 / (n as f64 * t)
        );
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let a = monte_carlo_estimate(0.4, 3, 5.0, 500, 77).unwrap();
        let b = monte_carlo_estimate(0.4, 3, 5.0, 500, 77).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn monte_carlo_mean_matches_analytic() {
        let (p, n, t, m) = (0.515077359, 10, 96.0 * PI, 1_000_000);
        let seeds = 10_000u64;
        let samples: Vec<f64> = (0..seeds)
            .map(|s| monte_carlo_estimate(p, n, t, m, s).unwrap())
            .collect();
        let mean = samples.iter().sum::<f64>() / seeds as f64;
        let analytic = estimator_stats(p, 1e-5, n, t, m).unwrap();
        let stderr = analytic.std / (seeds as f64).sqrt();
        assert!((mean - analytic.mean).abs() < 3.0 * stderr);
    }

    #[test]
    fn monte_carlo_rmse_matches_analytic() {
        let (n, t) = (2, 50.0);
        let omega = 2e-3;
        let seeds = 10_000u64;
        for &p in &[0.3, 0.5, 0.7] {
            for &m in &[200u64, 100_000] {
                let analytic = estimator_stats(p, omega, n, t, m).unwrap();
                let mse = (0..seeds)
                    .map(|s| {
                        let e = monte_carlo_estimate(p, n, t, m, s).unwrap() - omega;
                        e * e
                    })
                    .sum::<f64>()
                    / seeds as f64;
                let rel = mse.sqrt() / analytic.rmse - 1.0;
                assert!(rel.abs() < 0.05, "p={p} M={m}: rel {rel}");
            }
        }
    }

    #[test]
    fn inverse_cdf_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, p) = (10_000u64, 0.5);
        let draws: Vec<f64> = (0..4000).map(|_| sample_binomial(&mut rng, m, p)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((mean - 5000.0).abs() < 4.0 * (2500.0f64 / 4000.0).sqrt());
        assert!((var / 2500.0 - 1.0).abs() < 0.1);
    }

    #[test]
    fn biased_model_unbiased_case() {
        let r = biased_linear_model(0.5, 0.3, 0.5, 0.3, 0.1, 100).unwrap();
        assert_abs_diff_eq!(r.stats.bias, 0.0, epsilon = 1e-15);
        assert_eq!(r.asymptotic_rmse, 0.0);
    }

    #[test]
    fn biased_model_offset() {
        let r = biased_linear_model(0.4, 0.5, 0.41, 0.5, 0.2, 1_000_000_000_000_000_000).unwrap();
        assert_abs_diff_eq!(r.asymptotic_rmse, 0.02, epsilon = 1e-12);
        assert_relative_eq!(r.stats.rmse, 0.02, max_relative = 1e-6);
    }

    #[test]
    fn biased_model_conventional_mapping() {
        let (n, t, delta, omega) = (7usize, 96.0 * PI, 1e-5, 1e-5);
        let y = n as f64 * t / 2.0;
        let dx = (2.0 * PI + t) * n as f64 * delta / 2.0;
        let r = biased_linear_model(0.5, y, 0.5 + dx, y, omega, 1_000_000).unwrap();
        assert_relative_eq!(
            r.stats.bias,
            (2.0 * PI / t + 1.0) * delta,
            max_relative = 1e-9
        );
        assert_relative_eq!(r.stats.bias, 1.0208333e-5, max_relative = 1e-7);
    }

    #[test]
    fn biased_model_errors() {
        assert!(matches!(
            biased_linear_model(0.5, 0.0, 0.5, 0.1, 1.0, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            biased_linear_model(0.5, 1.0, 0.9, 1.0, 0.5, 1),
            Err(Error::ModelDomain(_))
        ));
    }

    #[test]
    fn biased_model_reduces_to_estimator_stats() {
        let (n, t, omega, m) = (6usize, 30.0, 1e-3, 5000u64);
        let y = n as f64 * t / 2.0;
        let r = biased_linear_model(0.5, y, 0.5, y, omega, m).unwrap();
        let s = estimator_stats(0.5 + y * omega, omega, n, t, m).unwrap();
        assert_relative_eq!(r.stats.mean, s.mean, max_relative = 1e-12);
        assert_relative_eq!(r.stats.std, s.std, max_relative = 1e-12);
    }

    #[test]
    fn reference_values() {
        let r = reference_curves(10, 1e-5, 96.0 * PI, 1_000_000);
        assert_relative_eq!(r.heisenberg_rsd, 0.033158, max_relative = 1e-4);
        let one = reference_curves(1, 1e-5, 96.0 * PI, 1_000_000);
        assert_relative_eq!(one.heisenberg_rsd, one.sql_rsd, max_relative = 1e-15);
        let scaled: Vec<f64> = [1usize, 10, 100, 1000]
            .iter()
            .map(|&n| reference_curves(n, 1e-5, 96.0 * PI, 1_000_000).heisenberg_rsd * n as f64)
            .collect();
        for v in &scaled {
            assert_relative_eq!(*v, scaled[0], max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn bias_antisymmetric(p in 0.0f64..=1.0, omega in -1.0f64..1.0, n in 1usize..50, t in 0.1f64..100.0) {
            let a = estimator_stats(p, omega, n, t, 1000).unwrap();
            let b = estimator_stats(1.0 - p, -omega, n, t, 1000).unwrap();
            prop_assert!((a.bias + b.bias).abs() <= 1e-12 * (1.0 + a.bias.abs()));
            prop_assert!((a.std - b.std).abs() <= 1e-12 * a.std.max(1e-300));
        }

        #[test]
        fn rmse_decomposition(p in 0.0f64..=1.0, omega in 1e-6f64..1.0, m in 1u64..1_000_000_000) {
            let s = estimator_stats(p, omega, 3, 7.0, m).unwrap();
            let lhs = s.rmse * s.rmse;
            let rhs = s.std * s.std + s.bias * s.bias;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            prop_assert!((s.rsd - s.rmse / omega).abs() <= 1e-15 * s.rsd.max(1e-300));
        }
    }
}
