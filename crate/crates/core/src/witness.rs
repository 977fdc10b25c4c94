//! Entanglement-witness operators built from the eigenvectors of the
//! partially transposed state, plus separable reference states for testing
//! them.
//!
//! For every eigenvector |φ_{n,S−n}⟩ with a negative eigenvalue (odd n), the
//! operator W = (|φ⟩⟨φ|)^{T_A} satisfies Tr(ρ_sep·W) ≥ 0 for separable
//! states while Tr(ρ·W) = ξ_{n,S−n} < 0 on the entangled state. Because the
//! eigenvectors of squeezed-vacuum trajectories never move, one fixed,
//! finite-dimensional operator witnesses the entanglement at every time.

use crate::error::{Error, Result};
use crate::fock::FockDensityMatrix;
use crate::spectrum::{gamma_coefficient, ln_factorial};
use ndarray::Array2;
use std::collections::BTreeMap;

/// The operator W_{S,n} = Σ_{j,l} v_j v_l |l, S−j⟩⟨j, S−l| with v the Fock
/// coefficients of the eigenvector |φ_{n,S−n}⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessOperator {
    /// Photon-number sum of the underlying eigenvector.
    pub s: usize,
    /// Eigenvector index; odd n gives a true entanglement witness.
    pub n: usize,
    /// True when n is odd, i.e. the expectation dips below zero on the
    /// entangled squeezed-vacuum trajectory.
    pub is_witness: bool,
    /// Nonzero matrix elements: `(j, l) → v_j·v_l`, the coefficient of
    /// |l, S−j⟩⟨j, S−l|.
    pub entries: BTreeMap<(usize, usize), f64>,
}

/// Construct W_{S,n}. The coefficient of |l, S−j⟩⟨j, S−l| is
///
/// ```text
/// v_j·v_l = Γ_{S,n,j} Γ_{S,n,l} √(j!(S−j)!·l!(S−l)!) / (2^S · n!(S−n)!)
/// ```
///
/// evaluated with exact integer Γ and log-factorials; exact zeros (Γ = 0)
/// are omitted from the map.
pub fn build_witness(s: usize, n: usize) -> Result<WitnessOperator> {
    if n > s {
        return Err(Error::InvalidParameter(format!(
            "witness index must satisfy n ≤ S, got S={s}, n={n}"
        )));
    }
    let ln_norm = (s as f64) * 2f64.ln() + ln_factorial(n) + ln_factorial(s - n);
    let gammas = (0..=s)
        .map(|j| gamma_coefficient(s, n, j))
        .collect::<Result<Vec<i128>>>()?;
    let mut entries = BTreeMap::new();
    for j in 0..=s {
        if gammas[j] == 0 {
            continue;
        }
        for l in 0..=s {
            if gammas[l] == 0 {
                continue;
            }
            let ln_mag = 0.5
                * (ln_factorial(j) + ln_factorial(s - j) + ln_factorial(l) + ln_factorial(s - l))
                - ln_norm;
            entries.insert((j, l), (gammas[j] * gammas[l]) as f64 * ln_mag.exp());
        }
    }
    Ok(WitnessOperator {
        s,
        n,
        is_witness: n % 2 == 1,
        entries,
    })
}

/// Split the witness into its block-diagonal parts Λ_K, K = −S..=S, where
/// the element |l, S−j⟩⟨j, S−l| belongs to the block K = S−j−l. Block K has
/// dimension S−|K|+1; rows are indexed by the ket label
/// l − max(0, −K) and columns by j − max(0, −K), which lays every block out
/// as an anti-diagonal matrix. Returned in order K = −S, …, S.
pub fn witness_blocks(w: &WitnessOperator) -> Vec<Array2<f64>> {
    let s = w.s as i64;
    let mut blocks: Vec<Array2<f64>> = (-s..=s)
        .map(|k| {
            let dim = (s - k.abs() + 1) as usize;
            Array2::zeros((dim, dim))
        })
        .collect();
    for (&(j, l), &v) in &w.entries {
        let k = s - j as i64 - l as i64;
        if k.abs() > s {
            continue;
        }
        let low = (-k).max(0) as usize;
        let block = &mut blocks[(k + s) as usize];
        block[[l - low, j - low]] = v;
    }
    blocks
}

/// Tr(ρ·W) on an un-transposed Fock state:
/// Σ_{j,l} v_j v_l · ρ[j, S−l, l, S−j]. Requires the witness to fit inside
/// the truncation (S ≤ nmax).
pub fn expectation(state: &FockDensityMatrix, w: &WitnessOperator) -> Result<f64> {
    if state.is_partial_transpose {
        return Err(Error::InvalidParameter(
            "witness expectations are taken on the un-transposed state".into(),
        ));
    }
    if w.s > state.nmax {
        return Err(Error::InvalidParameter(format!(
            "witness with S={} does not fit inside nmax={}",
            w.s, state.nmax
        )));
    }
    let mut acc = 0.0;
    for (&(j, l), &v) in &w.entries {
        acc += v * state.elements[[j, w.s - l, l, w.s - j]];
    }
    Ok(acc)
}

fn normalize_mode(mut m: Array2<f64>) -> Result<Array2<f64>> {
    let tr: f64 = (0..m.nrows()).map(|i| m[[i, i]]).sum();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "single-mode state has non-positive trace {tr}"
        )));
    }
    m.mapv_inplace(|v| v / tr);
    Ok(m)
}

fn coherent_mode(alpha: f64, nmax: usize) -> Result<Array2<f64>> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "coherent amplitude must be finite, got {alpha}"
        )));
    }
    // |α⟩⟨α| with real α, truncated then renormalized: entries
    // e^{−α²} αⁿ⁺ᵖ / √(n! p!).
    let dim = nmax + 1;
    let mut m = Array2::zeros((dim, dim));
    for n in 0..dim {
        for p in 0..dim {
            m[[n, p]] = (-alpha * alpha).exp()
                * alpha.powi((n + p) as i32)
                * (-0.5 * (ln_factorial(n) + ln_factorial(p))).exp();
        }
    }
    normalize_mode(m)
}

fn thermal_mode(n_th: f64, nmax: usize) -> Result<Array2<f64>> {
    if !n_th.is_finite() || n_th < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "thermal occupation must be finite and non-negative, got {n_th}"
        )));
    }
    let dim = nmax + 1;
    let mut m = Array2::zeros((dim, dim));
    let ratio = n_th / (n_th + 1.0);
    for n in 0..dim {
        m[[n, n]] = ratio.powi(n as i32) / (n_th + 1.0);
    }
    normalize_mode(m)
}

fn product_state(a: &Array2<f64>, b: &Array2<f64>) -> FockDensityMatrix {
    let nmax = a.nrows() - 1;
    let mut state = FockDensityMatrix::zeros(nmax, false);
    for n in 0..=nmax {
        for m in 0..=nmax {
            for p in 0..=nmax {
                for q in 0..=nmax {
                    state.elements[[n, m, p, q]] = a[[n, p]] * b[[m, q]];
                }
            }
        }
    }
    state
}

/// Separable reference state: coherent |α⟩ (real amplitude) in the first
/// mode, thermal occupation `n_th` in the second, truncated and
/// renormalized per mode.
pub fn coherent_thermal_product(
    alpha: f64,
    n_th: f64,
    nmax: usize,
) -> Result<FockDensityMatrix> {
    Ok(product_state(
        &coherent_mode(alpha, nmax)?,
        &thermal_mode(n_th, nmax)?,
    ))
}

/// Separable reference state: a product of two coherent states with real
/// amplitudes.
pub fn coherent_coherent_product(
    alpha_a: f64,
    alpha_b: f64,
    nmax: usize,
) -> Result<FockDensityMatrix> {
    Ok(product_state(
        &coherent_mode(alpha_a, nmax)?,
        &coherent_mode(alpha_b, nmax)?,
    ))
}

/// Separable reference state: a product of photon-number-diagonal modes
/// with the given occupation weights (renormalized; both slices must have
/// the same length ≥ 1 with non-negative entries).
pub fn fock_diagonal_product(pa: &[f64], pb: &[f64]) -> Result<FockDensityMatrix> {
    if pa.is_empty() || pa.len() != pb.len() {
        return Err(Error::InvalidParameter(format!(
            "occupation lists must be non-empty and equally long, got {} and {}",
            pa.len(),
            pb.len()
        )));
    }
    for &v in pa.iter().chain(pb.iter()) {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "occupation weights must be finite and non-negative, got {v}"
            )));
        }
    }
    let dim = pa.len();
    let make = |p: &[f64]| -> Result<Array2<f64>> {
        let mut m = Array2::zeros((dim, dim));
        for n in 0..dim {
            m[[n, n]] = p[n];
        }
        normalize_mode(m)
    };
    Ok(product_state(&make(pa)?, &make(pb)?))
}
