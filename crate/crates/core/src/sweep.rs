//! Detuning models, N-sweeps and the figure pipelines.
//!
//! Every `(protocol, N)` pair is an independent work item. Random detunings
//! come from a ChaCha8 stream selected by `(master_seed, N)`, so rows do not
//! depend on execution order and all protocols at a given `N` see the same
//! realization.

use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::estimator::{estimator_stats, reference_curves};
use crate::protocols::{build_protocol, run_protocol, ProtocolKind};
use crate::pulses::SpinEnvironment;

/// Column order of every emitted table.
pub const CSV_HEADER: [&str; 15] = [
    "protocol",
    "N",
    "tau",
    "omega",
    "M",
    "t_ex",
    "lambda",
    "p_plus_y",
    "est_mean",
    "est_bias",
    "est_std",
    "rsd",
    "heisenberg_ref",
    "delta_sum",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DetuningModel {
    /// Every spin detuned by the same amount.
    Uniform(f64),
    /// Independent draws from `[lo, hi)`; `lo == hi` gives a constant list.
    IidUniform { lo: f64, hi: f64 },
    /// Verbatim per-spin values; the length must equal `N`.
    Explicit(Vec<f64>),
}

impl DetuningModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DetuningModel::Uniform(d) if !d.is_finite() => {
                Err(invalid(format!("detuning {d} is not finite")))
            }
            DetuningModel::IidUniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) {
                    Err(invalid(format!(
                        "detuning interval [{lo}, {hi}) is not finite"
                    )))
                } else if lo > hi {
                    Err(invalid(format!(
                        "detuning interval has lo = {lo} > hi = {hi}"
                    )))
                } else {
                    Ok(())
                }
            }
            DetuningModel::Explicit(values) if values.iter().any(|d| !d.is_finite()) => {
                Err(invalid("explicit detunings must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Seed of the detuning stream for `n_spins` spins under `master_seed`.
pub fn row_seed(master_seed: u64, n_spins: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(n_spins as u64);
    rng.next_u64()
}

pub fn realize_detunings(
    model: &DetuningModel,
    n_spins: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    model.validate()?;
    match model {
        DetuningModel::Uniform(d) => Ok(vec![*d; n_spins]),
        DetuningModel::IidUniform { lo, hi } => {
            if lo == hi {
                return Ok(vec![*lo; n_spins]);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(row_seed(master_seed, n_spins));
            Ok((0..n_spins).map(|_| rng.random_range(*lo..*hi)).collect())
        }
        DetuningModel::Explicit(values) => {
            if values.len() != n_spins {
                return Err(invalid(format!(
                    "explicit detuning list has {} entries for N = {n_spins}",
                    values.len()
                )));
            }
            Ok(values.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub protocols: Vec<ProtocolKind>,
    pub n_values: Vec<usize>,
    pub tau: f64,
    pub omega: f64,
    pub trials: u64,
    pub detuning: DetuningModel,
    pub master_seed: u64,
    pub phi1: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            protocols: ProtocolKind::ALL.to_vec(),
            n_values: (1..=100).collect(),
            tau: 100.0 * PI,
            omega: 1e-5,
            trials: 1_000_000,
            detuning: DetuningModel::Uniform(0.0),
            master_seed: 42,
            phi1: 0.0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.protocols.is_empty() {
            return Err(invalid("no protocols selected"));
        }
        if self.n_values.is_empty() || self.n_values[0] == 0 {
            return Err(invalid("n_values must be non-empty positive integers"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_values must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(self.tau.is_finite() && self.omega.is_finite() && self.phi1.is_finite()) {
            return Err(invalid("tau, omega and phi1 must be finite"));
        }
        self.detuning.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub protocol: ProtocolKind,
    pub n_spins: usize,
    pub tau: f64,
    pub omega: f64,
    pub trials: u64,
    pub t_ex: f64,
    pub lambda: f64,
    pub p_plus_y: f64,
    pub est_mean: f64,
    pub est_bias: f64,
    pub est_std: f64,
    pub rsd: f64,
    pub heisenberg_ref: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_sum: f64,
    pub seed: u64,
}

impl SweepRow {
    fn csv_record(&self) -> [String; 15] {
        [
            self.protocol.label().to_string(),
            self.n_spins.to_string(),
            self.tau.to_string(),
            self.omega.to_string(),
            self.trials.to_string(),
            self.t_ex.to_string(),
            self.lambda.to_string(),
            self.p_plus_y.to_string(),
            self.est_mean.to_string(),
            self.est_bias.to_string(),
            self.est_std.to_string(),
            self.rsd.to_string(),
            self.heisenberg_ref.to_string(),
            self.delta_sum.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// A protocol that could not be run, e.g. because `τ` is too short for it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub protocol: ProtocolKind,
    pub n_spins: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    /// Ordered by protocol (in config order), then `N`.
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// Evaluates a single `(protocol, N)` item.
pub fn sweep_row(config: &SweepConfig, protocol: ProtocolKind, n_spins: usize) -> Result<SweepRow> {
    let spec = build_protocol(protocol, config.tau, n_spins, config.phi1)?;
    let detunings = realize_detunings(&config.detuning, n_spins, config.master_seed)?;
    let (delta_min, delta_max) = detunings
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let env = SpinEnvironment::new(detunings, config.omega);
    let p = run_protocol(&spec, &env)?;
    let stats = estimator_stats(p, config.omega, n_spins, spec.exposure_time, config.trials)?;
    let refs = reference_curves(n_spins, config.omega, spec.exposure_time, config.trials);
    Ok(SweepRow {
        protocol,
        n_spins,
        tau: config.tau,
        omega: config.omega,
        trials: config.trials,
        t_ex: spec.exposure_time,
        lambda: spec.pulse_strength(),
        p_plus_y: p,
        est_mean: stats.mean,
        est_bias: stats.bias,
        est_std: stats.std,
        rsd: stats.rsd,
        heisenberg_ref: refs.heisenberg_rsd,
        delta_min,
        delta_max,
        delta_sum: env.total_detuning(),
        seed: row_seed(config.master_seed, n_spins),
    })
}

fn plan(config: &SweepConfig) -> (Vec<(ProtocolKind, usize)>, Vec<SweepFailure>) {
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for &protocol in &config.protocols {
        // The budget does not depend on N, so one probe decides feasibility.
        match build_protocol(protocol, config.tau, 1, config.phi1) {
            Ok(_) => items.extend(config.n_values.iter().map(|&n| (protocol, n))),
            Err(e) => failures.push(SweepFailure {
                protocol,
                n_spins: None,
                message: e.to_string(),
            }),
        }
    }
    (items, failures)
}

fn assemble(
    results: Vec<((ProtocolKind, usize), Result<SweepRow>)>,
    mut failures: Vec<SweepFailure>,
) -> SweepOutput {
    let mut rows = Vec::with_capacity(results.len());
    for ((protocol, n), result) in results {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(SweepFailure {
                protocol,
                n_spins: Some(n),
                message: e.to_string(),
            }),
        }
    }
    SweepOutput { rows, failures }
}

/// Runs every `(protocol, N)` item in parallel; output order is the
/// sequential order.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let (items, failures) = plan(config);
    let results = items
        .par_iter()
        .map(|&(p, n)| ((p, n), sweep_row(config, p, n)))
        .collect();
    Ok(assemble(results, failures))
}

/// Single-threaded reference for [`run_sweep`].
pub fn run_sweep_sequential(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let (items, failures) = plan(config);
    let results = items
        .iter()
        .map(|&(p, n)| ((p, n), sweep_row(config, p, n)))
        .collect();
    Ok(assemble(results, failures))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Tsv,
}

impl OutputFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            OutputFormat::Csv => b',',
            OutputFormat::Tsv => b'\t',
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Tsv => "tsv",
        }
    }
}

/// Writes the header and rows. Floats use the shortest decimal that parses
/// back to the same value.
pub fn write_rows<W: Write>(rows: &[SweepRow], out: W, format: OutputFormat) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(format.delimiter())
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.csv_record())?;
    }
    writer.flush()?;
    Ok(())
}

/// Shared settings of the figure pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSettings {
    pub tau: f64,
    pub omega: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub phi1: f64,
    pub n_max: usize,
    pub format: OutputFormat,
}

impl Default for FigureSettings {
    fn default() -> Self {
        FigureSettings {
            tau: 100.0 * PI,
            omega: 1e-5,
            trials: 1_000_000,
            master_seed: 42,
            phi1: 0.0,
            n_max: 2000,
            format: OutputFormat::Csv,
        }
    }
}

/// The two panel configurations of a figure, labelled `a` and `b`.
pub fn figure_panels(which: u8, settings: &FigureSettings) -> Result<[(char, SweepConfig); 2]> {
    let omega = settings.omega;
    let models = match which {
        1 => [
            DetuningModel::Uniform(omega),
            DetuningModel::Uniform(0.1 * omega),
        ],
        2 => [
            DetuningModel::IidUniform { lo: 0.0, hi: omega },
            DetuningModel::IidUniform {
                lo: 0.0,
                hi: 0.1 * omega,
            },
        ],
        other => return Err(invalid(format!("figure must be 1 or 2, got {other}"))),
    };
    let panel = |detuning: DetuningModel| SweepConfig {
        protocols: ProtocolKind::ALL.to_vec(),
        n_values: (1..=settings.n_max).collect(),
        tau: settings.tau,
        omega,
        trials: settings.trials,
        detuning,
        master_seed: settings.master_seed,
        phi1: settings.phi1,
    };
    let [a, b] = models;
    Ok([('a', panel(a)), ('b', panel(b))])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOutput {
    pub paths: Vec<PathBuf>,
    pub failures: Vec<SweepFailure>,
}

/// Writes `fig{which}a` and `fig{which}b` tables into `out_dir`.
pub fn reproduce_figure(
    which: u8,
    settings: &FigureSettings,
    out_dir: &Path,
) -> Result<FigureOutput> {
    let panels = figure_panels(which, settings)?;
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    let mut failures = Vec::new();
    for (label, config) in panels {
        let output = run_sweep(&config)?;
        let path = out_dir.join(format!("fig{which}{label}.{}", settings.format.extension()));
        let file = File::create(&path)?;
        write_rows(&output.rows, std::io::BufWriter::new(file), settings.format)?;
        paths.push(path);
        failures.extend(output.failures);
    }
    Ok(FigureOutput { paths, failures })
}
