//! `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! protocols = conventional, composite
//! n_values = 1..100, 200, 500
//! tau = 314.1592653589793
//! detuning = iid(0, 1e-5)
//! ```
//!
//! Every key is optional; unknown or repeated keys are errors.

use std::collections::HashSet;
use std::path::PathBuf;

use ghzsim_core::protocols::ProtocolKind;
use ghzsim_core::sweep::{DetuningModel, OutputFormat, SweepConfig};

pub const KEYS: [&str; 11] = [
    "protocols",
    "n_values",
    "tau",
    "omega",
    "trials",
    "detuning",
    "master_seed",
    "phi1",
    "output",
    "format",
    "verbosity",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown key '{key}' (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("duplicate key '{key}' (line {line})")]
    DuplicateKey { key: String, line: usize },
    #[error("expected 'key = value' (line {line})")]
    Syntax { line: usize },
    #[error("invalid value for '{key}' (line {line}): {reason}")]
    Value {
        key: String,
        line: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sweep: SweepConfig,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sweep: SweepConfig::default(),
            output: None,
            format: OutputFormat::Csv,
            verbosity: 0,
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
            });
        }
        if !seen.insert(key) {
            return Err(ConfigError::DuplicateKey {
                key: key.to_string(),
                line,
            });
        }
        let fail = |reason: String| ConfigError::Value {
            key: key.to_string(),
            line,
            reason,
        };
        if value.is_empty() {
            return Err(fail("empty value".into()));
        }
        apply(&mut config, key, value).map_err(fail)?;
    }
    config.sweep.validate().map_err(|e| ConfigError::Value {
        key: "(config)".into(),
        line: 0,
        reason: e.to_string(),
    })?;
    Ok(config)
}

fn apply(config: &mut RunConfig, key: &str, value: &str) -> Result<(), String> {
    let sweep = &mut config.sweep;
    match key {
        "protocols" => sweep.protocols = parse_protocols(value)?,
        "n_values" => sweep.n_values = parse_n_values(value)?,
        "tau" => sweep.tau = parse_f64(value)?,
        "omega" => sweep.omega = parse_f64(value)?,
        "trials" => sweep.trials = parse_count(value)?,
        "detuning" => sweep.detuning = parse_detuning(value)?,
        "master_seed" => sweep.master_seed = value.parse().map_err(|e| format!("{e}"))?,
        "phi1" => sweep.phi1 = parse_f64(value)?,
        "output" => config.output = Some(PathBuf::from(value)),
        "format" => config.format = parse_format(value)?,
        "verbosity" => config.verbosity = value.parse().map_err(|e| format!("{e}"))?,
        _ => unreachable!("key checked against KEYS"),
    }
    Ok(())
}

pub fn parse_f64(value: &str) -> Result<f64, String> {
    let x: f64 = value
        .parse()
        .map_err(|_| format!("'{value}' is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{value}' is not finite"))
    }
}

/// Positive integer, also accepted in exponent form such as `1e6`.
pub fn parse_count(value: &str) -> Result<u64, String> {
    if let Ok(m) = value.parse::<u64>() {
        return if m >= 1 {
            Ok(m)
        } else {
            Err("must be at least 1".into())
        };
    }
    let x = parse_f64(value)?;
    if x >= 1.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("'{value}' is not a positive integer"))
    }
}

pub fn parse_format(value: &str) -> Result<OutputFormat, String> {
    match value.to_ascii_lowercase().as_str() {
        "csv" => Ok(OutputFormat::Csv),
        "tsv" => Ok(OutputFormat::Tsv),
        other => Err(format!("unknown format '{other}' (expected csv or tsv)")),
    }
}

fn parse_protocols(value: &str) -> Result<Vec<ProtocolKind>, String> {
    if value.eq_ignore_ascii_case("all") {
        return Ok(ProtocolKind::ALL.to_vec());
    }
    let mut out: Vec<ProtocolKind> = Vec::new();
    for item in value.split(',') {
        let kind: ProtocolKind = item.trim().parse().map_err(|e| format!("{e}"))?;
        if out.contains(&kind) {
            return Err(format!("protocol '{kind}' listed twice"));
        }
        out.push(kind);
    }
    Ok(out)
}

/// Comma-separated integers and inclusive `a..b` ranges, strictly increasing.
pub fn parse_n_values(value: &str) -> Result<Vec<usize>, String> {
    let int = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{}' is not a non-negative integer", s.trim()))
    };
    let mut out = Vec::new();
    for item in value.split(',') {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (int(a)?, int(b)?);
                if a > b {
                    return Err(format!("empty range {a}..{b}"));
                }
                out.extend(a..=b);
            }
            None => out.push(int(item)?),
        }
    }
    if out.first() == Some(&0) {
        return Err("N must be at least 1".into());
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err("values must be strictly increasing".into());
    }
    Ok(out)
}

/// A bare number, `uniform(δ)`, `iid(lo, hi)` or `explicit(δ₁, δ₂, …)`.
pub fn parse_detuning(value: &str) -> Result<DetuningModel, String> {
    if let Ok(d) = parse_f64(value) {
        return Ok(DetuningModel::Uniform(d));
    }
    let (name, rest) = value
        .split_once('(')
        .ok_or_else(|| format!("'{value}' is not a detuning model"))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| format!("missing ')' in '{value}'"))?;
    let numbers = args
        .split(',')
        .map(|s| parse_f64(s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let model = match (
        name.trim().to_ascii_lowercase().as_str(),
        numbers.as_slice(),
    ) {
        ("uniform", [d]) => DetuningModel::Uniform(*d),
        ("iid", [lo, hi]) => DetuningModel::IidUniform { lo: *lo, hi: *hi },
        ("explicit", list) => DetuningModel::Explicit(list.to_vec()),
        (other, _) => return Err(format!("unknown detuning model '{other}' or wrong arity")),
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}
