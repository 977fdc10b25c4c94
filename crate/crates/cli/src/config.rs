//! Command-line and config-file handling for the scenario runner.
//!
//! Values may come from flags, from a flat `key = value` file, or from
//! defaults, in that order of precedence. The squeezing strength is given
//! as exactly one of `r` / `lambda`; a squeeze flag supersedes both file
//! keys at once so a file can never half-override the amplitude.

use std::fmt;
use std::path::PathBuf;

use clap::Parser;
use tmsv_ppt::gaussian::{critical_time, BathParams, SqueezeInit};

/// Raw options as they arrive from the command line.
#[derive(Debug, Parser)]
#[command(
    name = "tmsv-ppt",
    version,
    about = "Evolve a two-mode squeezed vacuum through a gain/loss bath and \
             write the partial-transpose spectrum, negativities, critical \
             time, and witness operators as CSV files"
)]
pub struct RawOptions {
    /// Gain rate G of the amplifying bath coupling.
    #[arg(long)]
    pub gain: Option<f64>,

    /// Loss rate L of the damping bath coupling.
    #[arg(long)]
    pub loss: Option<f64>,

    /// Initial squeezing parameter r (give either this or --lambda).
    #[arg(long)]
    pub r: Option<f64>,

    /// Initial λ = tanh r in [0, 1) (give either this or --r).
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Upper end of the time grid [default: 2·t_c when finite, else 3/L].
    #[arg(long)]
    pub tmax: Option<f64>,

    /// Number of grid points, at least 2 [default: 200].
    #[arg(long)]
    pub steps: Option<usize>,

    /// Fock-space truncation used by the numerical oracle [default: 30].
    #[arg(long)]
    pub nmax: Option<usize>,

    /// Largest block index S in the per-block outputs [default: 10].
    #[arg(long)]
    pub smax: Option<usize>,

    /// Output directory for the CSV files [default: tmsv_ppt_out].
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also integrate the master equation in Fock space and append
    /// numerical cross-check columns.
    #[arg(long)]
    pub oracle: bool,

    /// Flat key=value file supplying any of gain, loss, r, lambda, tmax,
    /// steps, nmax, smax.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved, validated scenario parameters.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub bath: BathParams,
    pub init: SqueezeInit,
    pub tmax: f64,
    pub steps: usize,
    pub nmax: usize,
    pub smax: usize,
    pub out: PathBuf,
    pub oracle: bool,
}

/// Failures split by exit code: bad input (1) versus a numerical or I/O
/// breakdown while running (2).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Run(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Values read from a config file; every field optional.
#[derive(Debug, Default, PartialEq)]
struct FileOptions {
    gain: Option<f64>,
    loss: Option<f64>,
    r: Option<f64>,
    lambda: Option<f64>,
    tmax: Option<f64>,
    steps: Option<usize>,
    nmax: Option<usize>,
    smax: Option<usize>,
}

fn parse_file(text: &str) -> Result<FileOptions, CliError> {
    let mut options = FileOptions::default();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {}: expected `key = value`, got `{line}`",
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();

        fn real(key: &str, value: &str, slot: &mut Option<f64>) -> Result<(), CliError> {
            if slot.is_some() {
                return Err(CliError::Usage(format!("config sets `{key}` twice")));
            }
            *slot = Some(value.parse().map_err(|_| {
                CliError::Usage(format!("config value for `{key}` is not a number: `{value}`"))
            })?);
            Ok(())
        }
        fn integer(key: &str, value: &str, slot: &mut Option<usize>) -> Result<(), CliError> {
            if slot.is_some() {
                return Err(CliError::Usage(format!("config sets `{key}` twice")));
            }
            *slot = Some(value.parse().map_err(|_| {
                CliError::Usage(format!(
                    "config value for `{key}` is not a non-negative integer: `{value}`"
                ))
            })?);
            Ok(())
        }

        match key {
            "gain" => real(key, value, &mut options.gain)?,
            "loss" => real(key, value, &mut options.loss)?,
            "r" => real(key, value, &mut options.r)?,
            "lambda" => real(key, value, &mut options.lambda)?,
            "tmax" => real(key, value, &mut options.tmax)?,
            "steps" => integer(key, value, &mut options.steps)?,
            "nmax" => integer(key, value, &mut options.nmax)?,
            "smax" => integer(key, value, &mut options.smax)?,
            other => {
                return Err(CliError::Usage(format!("config has unknown key `{other}`")));
            }
        }
    }
    Ok(options)
}

fn usage(e: tmsv_ppt::Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Merge flags over file values, apply defaults, and validate everything.
pub fn resolve(raw: RawOptions) -> Result<ScenarioConfig, CliError> {
    let file = match &raw.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_file(&text)?
        }
        None => FileOptions::default(),
    };

    let gain = raw
        .gain
        .or(file.gain)
        .ok_or_else(|| CliError::Usage("missing gain rate: pass --gain or set it in the config".into()))?;
    let loss = raw
        .loss
        .or(file.loss)
        .ok_or_else(|| CliError::Usage("missing loss rate: pass --loss or set it in the config".into()))?;
    let bath = BathParams::new(gain, loss).map_err(usage)?;

    let init = match (raw.r, raw.lambda) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--r and --lambda both given; the squeezing strength must come from exactly one".into(),
            ));
        }
        (Some(r), None) => SqueezeInit::from_r(r).map_err(usage)?,
        (None, Some(lambda)) => SqueezeInit::from_lambda(lambda).map_err(usage)?,
        (None, None) => match (file.r, file.lambda) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "config sets both r and lambda; keep exactly one".into(),
                ));
            }
            (Some(r), None) => SqueezeInit::from_r(r).map_err(usage)?,
            (None, Some(lambda)) => SqueezeInit::from_lambda(lambda).map_err(usage)?,
            (None, None) => {
                return Err(CliError::Usage(
                    "missing squeezing strength: pass --r or --lambda (or set one in the config)".into(),
                ));
            }
        },
    };

    let steps = raw.steps.or(file.steps).unwrap_or(200);
    if steps < 2 {
        return Err(CliError::Usage(format!(
            "the time grid needs at least 2 points, got {steps}"
        )));
    }
    let nmax = raw.nmax.or(file.nmax).unwrap_or(30);
    if nmax == 0 {
        return Err(CliError::Usage("nmax must be at least 1".into()));
    }
    let smax = raw.smax.or(file.smax).unwrap_or(10);
    if smax > nmax {
        return Err(CliError::Usage(format!(
            "smax must not exceed nmax, got smax={smax}, nmax={nmax}"
        )));
    }

    let tmax = match raw.tmax.or(file.tmax) {
        Some(t) => {
            if !t.is_finite() || t <= 0.0 {
                return Err(CliError::Usage(format!(
                    "tmax must be finite and positive, got {t}"
                )));
            }
            t
        }
        None => default_tmax(&bath, &init)?,
    };

    Ok(ScenarioConfig {
        bath,
        init,
        tmax,
        steps,
        nmax,
        smax,
        out: raw.out.unwrap_or_else(|| PathBuf::from("tmsv_ppt_out")),
        oracle: raw.oracle,
    })
}

/// Twice the disentanglement time when that is finite and positive,
/// otherwise a few damping times.
fn default_tmax(bath: &BathParams, init: &SqueezeInit) -> Result<f64, CliError> {
    if let Some(tc) = critical_time(bath, init) {
        if tc > 0.0 {
            return Ok(2.0 * tc);
        }
    }
    let rate = if bath.loss() > 0.0 {
        bath.loss()
    } else if bath.gain() > 0.0 {
        bath.gain()
    } else {
        return Err(CliError::Usage(
            "both rates are zero, so no time scale exists: pass --tmax".into(),
        ));
    };
    Ok(3.0 / rate)
}
