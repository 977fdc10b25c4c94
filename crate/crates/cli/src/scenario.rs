//! Drives a full scenario: closed-form trajectory on a uniform time grid,
//! per-block spectra, negativities, critical time, witness operators, and
//! (optionally) the brute-force Fock-space integrator as a cross-check.
//! Every float is written as `{:.16e}` so outputs are byte-reproducible
//! and round-trip exactly.

use std::fmt::Write as _;

use tmsv_ppt::fock::{integrate_with_tol, tmsv_fock_state_with_tol};
use tmsv_ppt::gaussian::{
    alpha_beta, critical_time, evolve_coefficients, tmsv_coeffs, GaussianCoeffs,
};
use tmsv_ppt::measures::{negativity, numerical_negativity, sub_negativity};
use tmsv_ppt::spectrum::block_spectrum;
use tmsv_ppt::witness::build_witness;

use crate::config::{CliError, ScenarioConfig};

/// Truncation-tail budget for the optional oracle run; matches the
/// accuracy the cross-check columns are meant to certify.
const ORACLE_TAIL_TOL: f64 = 1e-6;

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

fn push_float(line: &mut String, value: f64) {
    // 17 significant digits: parses back to the identical f64.
    let _ = write!(line, ",{:.16e}", value);
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.out).map_err(run_err)?;

    let times: Vec<f64> = (0..config.steps)
        .map(|i| config.tmax * i as f64 / (config.steps - 1) as f64)
        .collect();
    let start = tmsv_coeffs(&config.init);
    let trajectory: Vec<GaussianCoeffs> = times
        .iter()
        .map(|&t| evolve_coefficients(&start, &config.bath, t))
        .collect::<Result<_, _>>()
        .map_err(run_err)?;

    write_coefficients(config, &times, &trajectory)?;
    write_spectra(config, &times, &trajectory)?;
    let numeric = if config.oracle {
        Some(oracle_negativity(config, &times)?)
    } else {
        None
    };
    write_negativity(config, &times, &trajectory, numeric.as_deref())?;
    write_critical_time(config)?;
    write_witnesses(config)?;
    Ok(())
}

fn write_coefficients(
    config: &ScenarioConfig,
    times: &[f64],
    trajectory: &[GaussianCoeffs],
) -> Result<(), CliError> {
    let mut text = String::from("t,A,B,C,D,Xi,alpha1,beta1,alpha2,beta2\n");
    for (t, coeffs) in times.iter().zip(trajectory) {
        let ab = alpha_beta(coeffs).map_err(run_err)?;
        let mut line = format!("{:.16e}", t);
        for v in [
            coeffs.a(),
            coeffs.b(),
            coeffs.c(),
            coeffs.d(),
            coeffs.xi(),
            ab.alpha1,
            ab.beta1,
            ab.alpha2,
            ab.beta2,
        ] {
            push_float(&mut line, v);
        }
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(config.out.join("coefficients.csv"), text).map_err(run_err)
}

fn write_spectra(
    config: &ScenarioConfig,
    times: &[f64],
    trajectory: &[GaussianCoeffs],
) -> Result<(), CliError> {
    for s in 0..=config.smax {
        let mut text = String::from("t");
        for n in 0..=s {
            let _ = write!(text, ",xi_{}_{}", n, s - n);
        }
        text.push('\n');
        for (t, coeffs) in times.iter().zip(trajectory) {
            let spectrum = block_spectrum(coeffs, s).map_err(run_err)?;
            let mut line = format!("{:.16e}", t);
            for v in spectrum.eigenvalues {
                push_float(&mut line, v);
            }
            text.push_str(&line);
            text.push('\n');
        }
        std::fs::write(config.out.join(format!("spectrum_S{s}.csv")), text).map_err(run_err)?;
    }
    Ok(())
}

/// Numerical negativity (blocks S ≤ smax) at every grid time, from one
/// cumulative RK4 integration of the partially transposed state.
fn oracle_negativity(config: &ScenarioConfig, times: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut state = tmsv_fock_state_with_tol(&config.init, config.nmax, ORACLE_TAIL_TOL)
        .map_err(run_err)?
        .partial_transpose();
    let rate = config.bath.gain() + config.bath.loss();

    let mut values = Vec::with_capacity(times.len());
    values.push(numerical_negativity(&state, config.smax).map_err(run_err)?);
    for window in times.windows(2) {
        if rate > 0.0 {
            let dt = 0.05 / (rate * config.nmax as f64);
            state = integrate_with_tol(&state, &config.bath, window[1] - window[0], dt, ORACLE_TAIL_TOL)
                .map_err(run_err)?;
        }
        values.push(numerical_negativity(&state, config.smax).map_err(run_err)?);
    }
    Ok(values)
}

fn write_negativity(
    config: &ScenarioConfig,
    times: &[f64],
    trajectory: &[GaussianCoeffs],
    numeric: Option<&[f64]>,
) -> Result<(), CliError> {
    let mut text = String::from("t,N");
    for s in 0..=config.smax {
        let _ = write!(text, ",N_{s}");
    }
    if numeric.is_some() {
        text.push_str(",N_numeric");
    }
    text.push('\n');

    let mut worst_deviation = 0.0_f64;
    for (i, (t, coeffs)) in times.iter().zip(trajectory).enumerate() {
        let mut line = format!("{:.16e}", t);
        push_float(&mut line, negativity(coeffs).map_err(run_err)?);
        let mut block_sum = 0.0;
        for s in 0..=config.smax {
            let value = sub_negativity(coeffs, s).map_err(run_err)?;
            block_sum += value;
            push_float(&mut line, value);
        }
        if let Some(values) = numeric {
            push_float(&mut line, values[i]);
            worst_deviation = worst_deviation.max((values[i] - block_sum).abs());
        }
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(config.out.join("negativity.csv"), text).map_err(run_err)?;

    if let Some(values) = numeric {
        let mut summary = String::from("numerical oracle cross-check\n");
        let _ = writeln!(summary, "grid points: {}", values.len());
        let _ = writeln!(summary, "fock truncation nmax: {}", config.nmax);
        let rate = config.bath.gain() + config.bath.loss();
        if rate > 0.0 {
            let _ = writeln!(summary, "rk4 step: {:.16e}", 0.05 / (rate * config.nmax as f64));
        } else {
            let _ = writeln!(summary, "rk4 step: none (both rates zero, state is static)");
        }
        let _ = writeln!(
            summary,
            "max |N_numeric - sum of N_S for S <= {}|: {:.16e}",
            config.smax, worst_deviation
        );
        std::fs::write(config.out.join("oracle_summary.txt"), summary).map_err(run_err)?;
    }
    Ok(())
}

fn write_critical_time(config: &ScenarioConfig) -> Result<(), CliError> {
    let text = match critical_time(&config.bath, &config.init) {
        Some(tc) => format!("{:.16e}\n", tc),
        None => "infinite\n".to_string(),
    };
    std::fs::write(config.out.join("tc.txt"), text).map_err(run_err)
}

fn write_witnesses(config: &ScenarioConfig) -> Result<(), CliError> {
    for s in 1..=config.smax {
        let witness = build_witness(s, 1).map_err(run_err)?;
        let mut text = format!("# witness S={s} n=1\nj,l,value\n");
        for (&(j, l), &value) in &witness.entries {
            let _ = writeln!(text, "{j},{l},{value:.16e}");
        }
        std::fs::write(config.out.join(format!("witness_S{s}_n1.csv")), text).map_err(run_err)?;
    }
    Ok(())
}
