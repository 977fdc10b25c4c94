//! Brute-force Fock-space representation of the two-mode state and a direct
//! RK4 integrator for the gain/loss master equation.
//!
//! Everything here is deliberately independent of the closed-form route: the
//! master equation is applied element-by-element on a truncated number basis
//! `|n, m⟩⟨p, q|`, `0 ≤ n, m, p, q ≤ nmax`, and the partially transposed
//! blocks are diagonalized numerically. The element stencil is
//!
//! ```text
//! dρ[n,m,p,q]/dt = G·[ 2√(np)·ρ[n−1,m,p−1,q] + 2√(mq)·ρ[n,m−1,p,q−1]
//!                      − (n+m+p+q+4)·ρ[n,m,p,q] ]
//!                + L·[ 2√((n+1)(p+1))·ρ[n+1,m,p+1,q]
//!                      + 2√((m+1)(q+1))·ρ[n,m+1,p,q+1]
//!                      − (n+m+p+q)·ρ[n,m,p,q] ]
//! ```
//!
//! and is the same for the density matrix and its partial transpose (each
//! mode's gain and loss terms are symmetric under the bra/ket index swap the
//! transpose performs). The stencil preserves the index differences
//! (n−p, m−q), so the integrator only propagates the difference classes that
//! are populated at t = 0 — for squeezed-vacuum inputs that reduces the
//! active set from (nmax+1)⁴ elements to a few percent of it.

use crate::error::{Error, Result};
use crate::gaussian::{BathParams, GaussianCoeffs, SqueezeInit};
use crate::jacobi;
use crate::spectrum::{block_spectrum, fock_eigenvector};
use crate::tol;
use ndarray::{Array2, Array4};
use std::collections::HashSet;
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::Path;

/// Two-mode density matrix (or its partial transpose) on the truncated Fock
/// space `0..=nmax` per mode.
///
/// `elements[[n, m, p, q]] = ⟨n, m| ρ |p, q⟩`, with n, p indexing the first
/// mode and m, q the second. `is_partial_transpose` records whether the
/// array currently stores ρ or ρ^{T_A}; operations that are only meaningful
/// for one of the two refuse the other.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    /// Highest retained Fock index per mode.
    pub nmax: usize,
    /// Dense element array of shape `[nmax+1; 4]`.
    pub elements: Array4<f64>,
    /// True when the array stores the partial transpose over the first mode.
    pub is_partial_transpose: bool,
}

impl FockDensityMatrix {
    /// All-zero state with the given truncation and transpose tag.
    pub fn zeros(nmax: usize, is_partial_transpose: bool) -> Self {
        let dim = nmax + 1;
        Self {
            nmax,
            elements: Array4::zeros((dim, dim, dim, dim)),
            is_partial_transpose,
        }
    }

    /// Number of retained Fock levels per mode, `nmax + 1`.
    pub fn dim(&self) -> usize {
        self.nmax + 1
    }

    /// Σₙₘ ρ[n,m,n,m]. The diagonal is invariant under partial
    /// transposition, so this is the physical trace for both tags.
    pub fn trace(&self) -> f64 {
        let dim = self.dim();
        let mut tr = 0.0;
        for n in 0..dim {
            for m in 0..dim {
                tr += self.elements[[n, m, n, m]];
            }
        }
        tr
    }

    /// Total population sitting on the truncation edge: Σ ρ[n,m,n,m] over
    /// diagonal entries with n = nmax or m = nmax. A growing value signals
    /// that the truncation is about to corrupt the dynamics.
    pub fn boundary_population(&self) -> f64 {
        let dim = self.dim();
        let mut pop = 0.0;
        for m in 0..dim {
            pop += self.elements[[self.nmax, m, self.nmax, m]];
        }
        for n in 0..self.nmax {
            pop += self.elements[[n, self.nmax, n, self.nmax]];
        }
        pop
    }

    /// Largest elementwise absolute difference to `other`; the states must
    /// share truncation and transpose tag.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.nmax != other.nmax || self.is_partial_transpose != other.is_partial_transpose {
            return Err(Error::InvalidParameter(format!(
                "cannot compare states with different shape or transpose tag \
                 (nmax {} vs {}, transposed {} vs {})",
                self.nmax, other.nmax, self.is_partial_transpose, other.is_partial_transpose
            )));
        }
        let mut max = 0.0f64;
        for (a, b) in self.elements.iter().zip(other.elements.iter()) {
            max = max.max((a - b).abs());
        }
        Ok(max)
    }

    /// Partial transpose over the first mode: out[n,m,p,q] = in[p,m,n,q],
    /// toggling the tag. Involutive.
    pub fn partial_transpose(&self) -> Self {
        let dim = self.dim();
        let mut out = Array4::zeros((dim, dim, dim, dim));
        for n in 0..dim {
            for m in 0..dim {
                for p in 0..dim {
                    for q in 0..dim {
                        out[[n, m, p, q]] = self.elements[[p, m, n, q]];
                    }
                }
            }
        }
        Self {
            nmax: self.nmax,
            elements: out,
            is_partial_transpose: !self.is_partial_transpose,
        }
    }

    /// Serialize to a little-endian binary dump: header
    /// `nmax: u64, transpose flag: u64, time: f64, gain: f64, loss: f64`
    /// followed by the elements in row-major order.
    pub fn write_binary(&self, path: &Path, time: f64, bath: &BathParams) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        w.write_all(&(self.nmax as u64).to_le_bytes())?;
        w.write_all(&(self.is_partial_transpose as u64).to_le_bytes())?;
        w.write_all(&time.to_le_bytes())?;
        w.write_all(&bath.gain().to_le_bytes())?;
        w.write_all(&bath.loss().to_le_bytes())?;
        for v in self.elements.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`Self::write_binary`]; returns the state together with
    /// the recorded time and bath.
    pub fn read_binary(path: &Path) -> Result<(Self, f64, BathParams)> {
        let file = std::fs::File::open(path)?;
        let mut r = std::io::BufReader::new(file);
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut std::io::BufReader<std::fs::File>| -> Result<u64> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let nmax = read_u64(&mut r)? as usize;
        let flag = read_u64(&mut r)?;
        if flag > 1 {
            return Err(Error::InvalidParameter(format!(
                "corrupt dump: transpose flag must be 0 or 1, got {flag}"
            )));
        }
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |r: &mut std::io::BufReader<std::fs::File>| -> Result<f64> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let time = read_f64(&mut r)?;
        let gain = read_f64(&mut r)?;
        let loss = read_f64(&mut r)?;
        let dim = nmax + 1;
        let mut data = Vec::with_capacity(dim * dim * dim * dim);
        for _ in 0..dim * dim * dim * dim {
            data.push(read_f64(&mut r)?);
        }
        let elements = Array4::from_shape_vec((dim, dim, dim, dim), data)
            .expect("shape matches the element count by construction");
        Ok((
            Self {
                nmax,
                elements,
                is_partial_transpose: flag == 1,
            },
            time,
            BathParams::new(gain, loss)?,
        ))
    }
}

/// Two-mode squeezed vacuum in the Fock basis:
/// ρ[n,n,p,p] = (1−λ²)·λ^{n+p}, all other elements zero. Fails when the
/// truncated tail λ^{2(nmax+1)} exceeds the default tail tolerance.
pub fn tmsv_fock_state(init: &SqueezeInit, nmax: usize) -> Result<FockDensityMatrix> {
    tmsv_fock_state_with_tol(init, nmax, tol::DEFAULT_TAIL_TOL)
}

/// [`tmsv_fock_state`] with an explicit bound on the discarded population
/// λ^{2(nmax+1)}.
pub fn tmsv_fock_state_with_tol(
    init: &SqueezeInit,
    nmax: usize,
    tail_tol: f64,
) -> Result<FockDensityMatrix> {
    if !(tail_tol > 0.0) || !tail_tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tail tolerance must be finite and positive, got {tail_tol}"
        )));
    }
    let lambda = init.lambda();
    let tail = lambda.powi(2 * (nmax as i32 + 1));
    if tail > tail_tol {
        return Err(Error::Truncation(format!(
            "squeezed vacuum with lambda={lambda} keeps population {tail:.3e} beyond nmax={nmax}, \
             above the tolerance {tail_tol:.3e}"
        )));
    }
    let mut state = FockDensityMatrix::zeros(nmax, false);
    let norm = 1.0 - lambda * lambda;
    for n in 0..=nmax {
        for p in 0..=nmax {
            state.elements[[n, n, p, p]] = norm * lambda.powi((n + p) as i32);
        }
    }
    Ok(state)
}

/// Master-equation right-hand side evaluated on the partial transpose with
/// the dense elementwise stencil (see the module docs). Requires the
/// transposed tag.
pub fn master_rhs_pt(state: &FockDensityMatrix, bath: &BathParams) -> Result<Array4<f64>> {
    if !state.is_partial_transpose {
        return Err(Error::InvalidParameter(
            "transposed-stencil right-hand side needs a partially transposed state".into(),
        ));
    }
    Ok(stencil_rhs(state, bath))
}

fn stencil_rhs(state: &FockDensityMatrix, bath: &BathParams) -> Array4<f64> {
    let dim = state.dim();
    let (g, l) = (bath.gain(), bath.loss());
    let el = &state.elements;
    let mut out = Array4::zeros((dim, dim, dim, dim));
    for n in 0..dim {
        for m in 0..dim {
            for p in 0..dim {
                for q in 0..dim {
                    let sum = (n + m + p + q) as f64;
                    let mut v = -(g * (sum + 4.0) + l * sum) * el[[n, m, p, q]];
                    if n > 0 && p > 0 {
                        v += 2.0 * g * ((n * p) as f64).sqrt() * el[[n - 1, m, p - 1, q]];
                    }
                    if m > 0 && q > 0 {
                        v += 2.0 * g * ((m * q) as f64).sqrt() * el[[n, m - 1, p, q - 1]];
                    }
                    if n + 1 < dim && p + 1 < dim {
                        v += 2.0 * l * (((n + 1) * (p + 1)) as f64).sqrt()
                            * el[[n + 1, m, p + 1, q]];
                    }
                    if m + 1 < dim && q + 1 < dim {
                        v += 2.0 * l * (((m + 1) * (q + 1)) as f64).sqrt()
                            * el[[n, m + 1, p, q + 1]];
                    }
                    out[[n, m, p, q]] = v;
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Mode {
    A,
    B,
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy)]
enum Ladder {
    Lower,
    Raise,
}

/// Apply a single ladder operator to a zero-padded element array:
/// `Left` multiplies the operator onto the ket side (Xρ), `Right` onto the
/// bra side (ρX). Padding by one extra level makes operator composition on
/// the padded array agree exactly with the truncated single-stencil result
/// after cropping.
fn apply_ladder(padded: &Array4<f64>, mode: Mode, side: Side, ladder: Ladder) -> Array4<f64> {
    let dimp = padded.shape()[0];
    let mut out = Array4::zeros((dimp, dimp, dimp, dimp));
    // Axis acted on: ket index of the mode for Left, bra index for Right.
    let axis = match (mode, side) {
        (Mode::A, Side::Left) => 0,
        (Mode::B, Side::Left) => 1,
        (Mode::A, Side::Right) => 2,
        (Mode::B, Side::Right) => 3,
    };
    for n in 0..dimp {
        for m in 0..dimp {
            for p in 0..dimp {
                for q in 0..dimp {
                    let idx = [n, m, p, q];
                    let k = idx[axis];
                    // Matrix elements: (aρ)[k] = √(k+1)·ρ[k+1] and
                    // (a†ρ)[k] = √k·ρ[k−1] on the ket side; on the bra side
                    // the roles flip: (ρa)[k] = √k·ρ[k−1], (ρa†)[k] = √(k+1)·ρ[k+1].
                    let (shift_up, factor): (bool, f64) = match (side, ladder) {
                        (Side::Left, Ladder::Lower) => (true, ((k + 1) as f64).sqrt()),
                        (Side::Left, Ladder::Raise) => (false, (k as f64).sqrt()),
                        (Side::Right, Ladder::Lower) => (false, (k as f64).sqrt()),
                        (Side::Right, Ladder::Raise) => (true, ((k + 1) as f64).sqrt()),
                    };
                    let mut src = idx;
                    if shift_up {
                        if k + 1 >= dimp {
                            continue;
                        }
                        src[axis] = k + 1;
                    } else {
                        if k == 0 {
                            continue;
                        }
                        src[axis] = k - 1;
                    }
                    out[idx] = factor * padded[src];
                }
            }
        }
    }
    out
}

/// Master-equation right-hand side for the un-transposed density matrix,
/// built by explicit operator composition
/// `G(2a†ρa − aa†ρ − ρaa†) + L(2aρa† − a†aρ − ρa†a)` per mode, on a
/// zero-padded copy of the state. Requires the un-transposed tag.
///
/// This is an intentionally different code path from [`master_rhs_pt`]; the
/// test suite checks the two agree under partial transposition.
pub fn master_rhs(state: &FockDensityMatrix, bath: &BathParams) -> Result<Array4<f64>> {
    if state.is_partial_transpose {
        return Err(Error::InvalidParameter(
            "operator-composition right-hand side needs an un-transposed state".into(),
        ));
    }
    let dim = state.dim();
    let dimp = dim + 1;
    let (g, l) = (bath.gain(), bath.loss());
    let mut padded = Array4::zeros((dimp, dimp, dimp, dimp));
    padded
        .slice_mut(ndarray::s![..dim, ..dim, ..dim, ..dim])
        .assign(&state.elements);

    let mut acc = Array4::zeros((dimp, dimp, dimp, dimp));
    for mode in [Mode::A, Mode::B] {
        // 2 a†ρa: raise the ket after lowering the bra (the two commute).
        let rho_a = apply_ladder(&padded, mode, Side::Right, Ladder::Lower);
        let gain_sandwich = apply_ladder(&rho_a, mode, Side::Left, Ladder::Raise);
        // aa†ρ and ρaa†.
        let adag_rho = apply_ladder(&padded, mode, Side::Left, Ladder::Raise);
        let a_adag_rho = apply_ladder(&adag_rho, mode, Side::Left, Ladder::Lower);
        let rho_a_adag = apply_ladder(&rho_a, mode, Side::Right, Ladder::Raise);
        // 2 aρa†.
        let rho_adag = apply_ladder(&padded, mode, Side::Right, Ladder::Raise);
        let loss_sandwich = apply_ladder(&rho_adag, mode, Side::Left, Ladder::Lower);
        // a†aρ and ρa†a.
        let a_rho = apply_ladder(&padded, mode, Side::Left, Ladder::Lower);
        let adag_a_rho = apply_ladder(&a_rho, mode, Side::Left, Ladder::Raise);
        let rho_adag_a = apply_ladder(&rho_adag, mode, Side::Right, Ladder::Lower);

        acc = acc
            + &(g * (2.0 * &gain_sandwich - &a_adag_rho - &rho_a_adag))
            + &(l * (2.0 * &loss_sandwich - &adag_a_rho - &rho_adag_a));
    }
    Ok(acc.slice(ndarray::s![..dim, ..dim, ..dim, ..dim]).to_owned())
}

struct CompactSystem {
    /// (n, m, p, q) per active entry, row-major order.
    coords: Vec<[usize; 4]>,
    /// Neighbor positions inside the compact vector; entry 0 with a zero
    /// coefficient stands in for out-of-range neighbors.
    idx_gain_a: Vec<u32>,
    idx_gain_b: Vec<u32>,
    idx_loss_a: Vec<u32>,
    idx_loss_b: Vec<u32>,
    co_gain_a: Vec<f64>,
    co_gain_b: Vec<f64>,
    co_loss_a: Vec<f64>,
    co_loss_b: Vec<f64>,
    co_diag: Vec<f64>,
    /// Compact positions of the diagonal entries (n, m, n, m).
    diag_entries: Vec<u32>,
    /// Compact positions of diagonal entries on the truncation edge.
    boundary_entries: Vec<u32>,
}

/// Enumerate the difference classes (n−p, m−q) populated by `state` and lay
/// out every Fock element belonging to one of them as a flat vector with
/// precomputed stencil neighbors.
fn build_compact_system(state: &FockDensityMatrix, bath: &BathParams) -> CompactSystem {
    let dim = state.dim();
    let nmax = state.nmax;
    let (g, l) = (bath.gain(), bath.loss());

    let mut classes: HashSet<(i32, i32)> = HashSet::new();
    for ((n, m, p, q), &v) in state.elements.indexed_iter() {
        if v != 0.0 {
            classes.insert((n as i32 - p as i32, m as i32 - q as i32));
        }
    }

    let mut coords = Vec::new();
    let mut flat_to_compact = vec![u32::MAX; dim * dim * dim * dim];
    for n in 0..dim {
        for m in 0..dim {
            for p in 0..dim {
                for q in 0..dim {
                    if classes.contains(&(n as i32 - p as i32, m as i32 - q as i32)) {
                        let flat = ((n * dim + m) * dim + p) * dim + q;
                        flat_to_compact[flat] = coords.len() as u32;
                        coords.push([n, m, p, q]);
                    }
                }
            }
        }
    }

    let count = coords.len();
    let mut sys = CompactSystem {
        coords,
        idx_gain_a: vec![0; count],
        idx_gain_b: vec![0; count],
        idx_loss_a: vec![0; count],
        idx_loss_b: vec![0; count],
        co_gain_a: vec![0.0; count],
        co_gain_b: vec![0.0; count],
        co_loss_a: vec![0.0; count],
        co_loss_b: vec![0.0; count],
        co_diag: vec![0.0; count],
        diag_entries: Vec::new(),
        boundary_entries: Vec::new(),
    };
    let flat = |n: usize, m: usize, p: usize, q: usize| ((n * dim + m) * dim + p) * dim + q;
    for k in 0..count {
        let [n, m, p, q] = sys.coords[k];
        let sum = (n + m + p + q) as f64;
        sys.co_diag[k] = -(g * (sum + 4.0) + l * sum);
        // Stencil neighbors stay inside the same difference class, so their
        // compact index always exists when the Fock indices are in range.
        if n > 0 && p > 0 {
            sys.idx_gain_a[k] = flat_to_compact[flat(n - 1, m, p - 1, q)];
            sys.co_gain_a[k] = 2.0 * g * ((n * p) as f64).sqrt();
        }
        if m > 0 && q > 0 {
            sys.idx_gain_b[k] = flat_to_compact[flat(n, m - 1, p, q - 1)];
            sys.co_gain_b[k] = 2.0 * g * ((m * q) as f64).sqrt();
        }
        if n < nmax && p < nmax {
            sys.idx_loss_a[k] = flat_to_compact[flat(n + 1, m, p + 1, q)];
            sys.co_loss_a[k] = 2.0 * l * (((n + 1) * (p + 1)) as f64).sqrt();
        }
        if m < nmax && q < nmax {
            sys.idx_loss_b[k] = flat_to_compact[flat(n, m + 1, p, q + 1)];
            sys.co_loss_b[k] = 2.0 * l * (((m + 1) * (q + 1)) as f64).sqrt();
        }
        if n == p && m == q {
            sys.diag_entries.push(k as u32);
            if n == nmax || m == nmax {
                sys.boundary_entries.push(k as u32);
            }
        }
    }
    sys
}

fn compact_rhs(sys: &CompactSystem, x: &[f64], out: &mut [f64]) {
    for k in 0..x.len() {
        out[k] = sys.co_diag[k] * x[k]
            + sys.co_gain_a[k] * x[sys.idx_gain_a[k] as usize]
            + sys.co_gain_b[k] * x[sys.idx_gain_b[k] as usize]
            + sys.co_loss_a[k] * x[sys.idx_loss_a[k] as usize]
            + sys.co_loss_b[k] * x[sys.idx_loss_b[k] as usize];
    }
}

/// Integrate the master equation with classical RK4 and the default
/// truncation tolerance. Works for both transpose tags — the elementwise
/// stencil is the same.
pub fn integrate(
    state: &FockDensityMatrix,
    bath: &BathParams,
    t_final: f64,
    dt: f64,
) -> Result<FockDensityMatrix> {
    integrate_with_tol(state, bath, t_final, dt, tol::DEFAULT_TAIL_TOL)
}

/// [`integrate`] with an explicit truncation tolerance: the run aborts as
/// soon as the boundary population exceeds `tail_tol`, and (for
/// non-amplifying baths, L ≥ G) the final trace may not have drifted by more
/// than 10·`tail_tol`.
pub fn integrate_with_tol(
    state: &FockDensityMatrix,
    bath: &BathParams,
    t_final: f64,
    dt: f64,
    tail_tol: f64,
) -> Result<FockDensityMatrix> {
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "integration time must be finite and non-negative, got {t_final}"
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and positive, got {dt}"
        )));
    }
    if !(tail_tol > 0.0) || !tail_tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tail tolerance must be finite and positive, got {tail_tol}"
        )));
    }
    let rate = (bath.gain() + bath.loss()) * state.nmax as f64;
    if rate * dt > tol::RK4_STABILITY * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "step size {dt} too large for nmax={} at these bath rates; \
             need (G+L)·nmax·dt ≤ {}",
            state.nmax,
            tol::RK4_STABILITY
        )));
    }
    if t_final == 0.0 {
        return Ok(state.clone());
    }

    let sys = build_compact_system(state, bath);
    if sys.coords.is_empty() {
        return Ok(state.clone());
    }
    let mut x: Vec<f64> = sys
        .coords
        .iter()
        .map(|&[n, m, p, q]| state.elements[[n, m, p, q]])
        .collect();
    let trace0: f64 = sys.diag_entries.iter().map(|&k| x[k as usize]).sum();

    let count = x.len();
    let mut k1 = vec![0.0; count];
    let mut k2 = vec![0.0; count];
    let mut k3 = vec![0.0; count];
    let mut k4 = vec![0.0; count];
    let mut tmp = vec![0.0; count];

    let full_steps = (t_final / dt + 1e-9).floor() as u64;
    let remainder = t_final - full_steps as f64 * dt;
    let mut elapsed = 0.0;
    let mut do_step = |x: &mut Vec<f64>, h: f64| {
        compact_rhs(&sys, x, &mut k1);
        for k in 0..count {
            tmp[k] = x[k] + 0.5 * h * k1[k];
        }
        compact_rhs(&sys, &tmp, &mut k2);
        for k in 0..count {
            tmp[k] = x[k] + 0.5 * h * k2[k];
        }
        compact_rhs(&sys, &tmp, &mut k3);
        for k in 0..count {
            tmp[k] = x[k] + h * k3[k];
        }
        compact_rhs(&sys, &tmp, &mut k4);
        for k in 0..count {
            x[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
    };

    let check_boundary = |x: &[f64], elapsed: f64| -> Result<()> {
        let bpop: f64 = sys
            .boundary_entries
            .iter()
            .map(|&k| x[k as usize])
            .sum();
        if bpop > tail_tol {
            return Err(Error::Truncation(format!(
                "population {bpop:.3e} reached the truncation edge nmax={} at t={elapsed:.6} \
                 (tolerance {tail_tol:.3e}); increase nmax",
                state.nmax
            )));
        }
        Ok(())
    };

    check_boundary(&x, 0.0)?;
    for _ in 0..full_steps {
        do_step(&mut x, dt);
        elapsed += dt;
        check_boundary(&x, elapsed)?;
    }
    if remainder > dt * 1e-9 {
        do_step(&mut x, remainder);
        elapsed += remainder;
        check_boundary(&x, elapsed)?;
    }

    if bath.loss() >= bath.gain() {
        let trace: f64 = sys.diag_entries.iter().map(|&k| x[k as usize]).sum();
        if (trace - trace0).abs() > 10.0 * tail_tol {
            return Err(Error::Truncation(format!(
                "trace drifted by {:.3e} over the run (allowed {:.3e}); increase nmax",
                (trace - trace0).abs(),
                10.0 * tail_tol
            )));
        }
    }

    let mut out = FockDensityMatrix::zeros(state.nmax, state.is_partial_transpose);
    for (k, &[n, m, p, q]) in sys.coords.iter().enumerate() {
        out.elements[[n, m, p, q]] = x[k];
    }
    Ok(out)
}

/// Extract the photon-number-sum block `s` of a partially transposed state
/// as a dense (s+1)×(s+1) matrix with entries
/// `M[i, j] = ρ^{T_A}[i, s−i, j, s−j]`; indices beyond the truncation
/// contribute zeros. Requires `s ≤ 2·nmax` (the block is empty otherwise).
pub fn extract_block(state: &FockDensityMatrix, s: usize) -> Result<Array2<f64>> {
    if !state.is_partial_transpose {
        return Err(Error::InvalidParameter(
            "photon-number-sum blocks exist only for the partial transpose".into(),
        ));
    }
    if s > 2 * state.nmax {
        return Err(Error::InvalidParameter(format!(
            "block sum {s} lies entirely outside the truncation nmax={}",
            state.nmax
        )));
    }
    let mut block = Array2::zeros((s + 1, s + 1));
    for i in 0..=s {
        if i > state.nmax || s - i > state.nmax {
            continue;
        }
        for j in 0..=s {
            if j > state.nmax || s - j > state.nmax {
                continue;
            }
            block[[i, j]] = state.elements[[i, s - i, j, s - j]];
        }
    }
    Ok(block)
}

/// Numerically diagonalize one extracted block and order the eigenpairs by
/// the analytic eigenvector index n (number of antisymmetric quanta), not by
/// magnitude: eigenpair k is the one whose eigenvector has the largest
/// overlap with the closed-form Fock eigenvector of index n = k. Column
/// signs are fixed so that this overlap is positive.
pub fn diagonalize_block(block: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let dim = block.nrows();
    if dim == 0 || block.ncols() != dim {
        return Err(Error::InvalidParameter(format!(
            "block must be square and non-empty, got {}x{}",
            dim,
            block.ncols()
        )));
    }
    let mut scale = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            scale = scale.max(block[[i, j]].abs());
            asym = asym.max((block[[i, j]] - block[[j, i]]).abs());
        }
    }
    if asym > tol::SYMMETRY_TOL * scale.max(1.0) {
        return Err(Error::Numerical(format!(
            "block is not symmetric: max asymmetry {asym:.3e} at scale {scale:.3e}"
        )));
    }
    let sym = 0.5 * (block + &block.t());
    let (vals, vecs) = jacobi::symmetric_eigen(&sym)?;

    let s = dim - 1;
    let references: Vec<_> = (0..dim)
        .map(|n| fock_eigenvector(s, n))
        .collect::<Result<_>>()?;
    let mut ordered_vals = vec![0.0; dim];
    let mut assigned_col = vec![0usize; dim];
    let mut used = vec![false; dim];
    for n in 0..dim {
        let mut best: Option<(usize, f64)> = None;
        for col in 0..dim {
            if used[col] {
                continue;
            }
            let overlap: f64 = (0..dim)
                .map(|j| references[n].coefficients[j] * vecs[[j, col]])
                .sum();
            if best.map_or(true, |(_, b)| overlap.abs() > b.abs()) {
                best = Some((col, overlap));
            }
        }
        let (col, _) = best.expect("every index gets a column: dim columns for dim indices");
        used[col] = true;
        assigned_col[n] = col;
        ordered_vals[n] = vals[col];
    }

    // An eigensolver returns an arbitrary orthonormal basis inside a
    // degenerate eigenspace (the initial squeezed vacuum is highly
    // degenerate: ξ_{n,S−n} = ξ_{S−n,n}). Rotate each degenerate cluster
    // onto the span projections of the closed-form eigenvectors, which for a
    // truly degenerate cluster is again an exact eigenbasis.
    let spectral_scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cluster_tol = tol::EIGEN_DEGENERACY * spectral_scale.max(f64::MIN_POSITIVE);
    let mut by_value: Vec<usize> = (0..dim).collect();
    by_value.sort_by(|&a, &b| ordered_vals[a].partial_cmp(&ordered_vals[b]).unwrap());
    let mut ordered_vecs = Array2::zeros((dim, dim));
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim
            && (ordered_vals[by_value[end]] - ordered_vals[by_value[end - 1]]).abs() <= cluster_tol
        {
            end += 1;
        }
        let mut cluster: Vec<usize> = by_value[start..end].to_vec();
        cluster.sort_unstable();
        let columns: Vec<usize> = cluster.iter().map(|&n| assigned_col[n]).collect();
        let mut produced: Vec<Vec<f64>> = Vec::new();
        for &n in &cluster {
            // Project the closed-form vector onto the cluster span …
            let mut w = vec![0.0; dim];
            for &col in &columns {
                let coef: f64 = (0..dim)
                    .map(|j| references[n].coefficients[j] * vecs[[j, col]])
                    .sum();
                for j in 0..dim {
                    w[j] += coef * vecs[[j, col]];
                }
            }
            // … keep it orthogonal to the vectors already produced …
            for prev in &produced {
                let coef: f64 = (0..dim).map(|j| w[j] * prev[j]).sum();
                for j in 0..dim {
                    w[j] -= coef * prev[j];
                }
            }
            let norm = (0..dim).map(|j| w[j] * w[j]).sum::<f64>().sqrt();
            if norm > 0.5 {
                for v in w.iter_mut() {
                    *v /= norm;
                }
            } else {
                // No clear alignment (the closed-form vector barely touches
                // this cluster): keep the solver's own column.
                w = (0..dim).map(|j| vecs[[j, assigned_col[n]]]).collect();
            }
            // … and fix the sign against the closed-form vector.
            let overlap: f64 = (0..dim).map(|j| references[n].coefficients[j] * w[j]).sum();
            if overlap < 0.0 {
                for v in w.iter_mut() {
                    *v = -*v;
                }
            }
            for j in 0..dim {
                ordered_vecs[[j, n]] = w[j];
            }
            produced.push(w);
        }
        start = end;
    }
    Ok((ordered_vals, ordered_vecs))
}

/// Rebuild the partially transposed state in a truncated Fock basis from the
/// closed-form spectrum: Σ_{S ≤ smax} Σ_n ξ_{n,S−n} |φ_{n,S−n}⟩⟨φ_{n,S−n}|.
/// Requires `smax ≤ nmax` so that every included block fits the truncation.
pub fn reconstruct_analytic_fock(
    coeffs: &GaussianCoeffs,
    nmax: usize,
    smax: usize,
) -> Result<FockDensityMatrix> {
    if smax > nmax {
        return Err(Error::InvalidParameter(format!(
            "blocks up to sum {smax} do not fit inside nmax={nmax}"
        )));
    }
    let mut state = FockDensityMatrix::zeros(nmax, true);
    for s in 0..=smax {
        let spectrum = block_spectrum(coeffs, s)?;
        for n in 0..=s {
            let xi = spectrum.eigenvalues[n];
            let vec = fock_eigenvector(s, n)?;
            for j in 0..=s {
                for l in 0..=s {
                    state.elements[[j, s - j, l, s - l]] +=
                        xi * vec.coefficients[j] * vec.coefficients[l];
                }
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::tmsv_coeffs;
    use approx::assert_relative_eq;

    fn init(lambda: f64) -> SqueezeInit {
        SqueezeInit::from_lambda(lambda).unwrap()
    }

    #[test]
    fn squeezed_vacuum_state_has_unit_trace_and_known_elements() {
        let state = tmsv_fock_state(&init(0.2), 12).unwrap();
        assert!(!state.is_partial_transpose);
        assert_relative_eq!(state.trace(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(state.elements[[0, 0, 0, 0]], 0.96, max_relative = 1e-14);
        assert_relative_eq!(
            state.elements[[1, 1, 2, 2]],
            0.96 * 0.2f64.powi(3),
            max_relative = 1e-13
        );
        assert_eq!(state.elements[[1, 0, 0, 0]], 0.0);
    }

    #[test]
    fn squeezed_vacuum_truncation_guard() {
        // λ = 0.8 keeps 0.8^18 ≈ 1.8e-2 of its population beyond nmax = 8.
        assert!(tmsv_fock_state(&init(0.8), 8).is_err());
        assert!(tmsv_fock_state_with_tol(&init(0.8), 8, 0.05).is_ok());
    }

    #[test]
    fn partial_transpose_swaps_first_mode_indices_and_is_involutive() {
        let state = tmsv_fock_state_with_tol(&init(0.3), 6, 1e-6).unwrap();
        let pt = state.partial_transpose();
        assert!(pt.is_partial_transpose);
        for n in 0..=6 {
            for q in 0..=6 {
                // ρ^{T_A}[n,m,p,q] = δ_{pm} δ_{nq} (1−λ²) λ^{m+n}
                assert_relative_eq!(
                    pt.elements[[n, q, q, n]],
                    0.91 * 0.3f64.powi((n + q) as i32),
                    max_relative = 1e-12
                );
            }
        }
        let back = pt.partial_transpose();
        assert!(!back.is_partial_transpose);
        assert_eq!(state.max_abs_diff(&back).unwrap(), 0.0);
    }

    #[test]
    fn the_two_rhs_routes_agree_through_partial_transposition() {
        // Dense-stencil RHS on ρ^{T_A} versus operator-composition RHS on ρ:
        // PT(master_rhs(ρ)) must equal master_rhs_pt(PT(ρ)) elementwise.
        let bath = BathParams::new(1.5, 0.5).unwrap();
        let state = tmsv_fock_state_with_tol(&init(0.3), 6, 1e-6).unwrap();
        let pt = state.partial_transpose();
        let rhs_plain = master_rhs(&state, &bath).unwrap();
        let rhs_pt = master_rhs_pt(&pt, &bath).unwrap();
        let dim = state.dim();
        let mut max_diff = 0.0f64;
        for n in 0..dim {
            for m in 0..dim {
                for p in 0..dim {
                    for q in 0..dim {
                        // transpose of the plain derivative
                        let d = (rhs_plain[[p, m, n, q]] - rhs_pt[[n, m, p, q]]).abs();
                        max_diff = max_diff.max(d);
                    }
                }
            }
        }
        assert!(max_diff < 1e-13, "routes disagree by {max_diff}");
    }

    #[test]
    fn rhs_routes_require_their_own_transpose_tag() {
        let bath = BathParams::new(0.0, 1.0).unwrap();
        let state = tmsv_fock_state_with_tol(&init(0.2), 4, 1e-6).unwrap();
        assert!(master_rhs_pt(&state, &bath).is_err());
        assert!(master_rhs(&state.partial_transpose(), &bath).is_err());
    }

    #[test]
    fn one_integration_step_equals_a_manual_rk4_step_of_the_public_rhs() {
        let bath = BathParams::new(0.7, 1.3).unwrap();
        let state = tmsv_fock_state(&init(0.2), 6).unwrap().partial_transpose();
        let dt = 1e-3;
        let stepped = integrate(&state, &bath, dt, dt).unwrap();

        let rhs = |s: &Array4<f64>| {
            let tagged = FockDensityMatrix {
                nmax: state.nmax,
                elements: s.clone(),
                is_partial_transpose: true,
            };
            master_rhs_pt(&tagged, &bath).unwrap()
        };
        let k1 = rhs(&state.elements);
        let k2 = rhs(&(&state.elements + &(0.5 * dt * &k1)));
        let k3 = rhs(&(&state.elements + &(0.5 * dt * &k2)));
        let k4 = rhs(&(&state.elements + &(dt * &k3)));
        let manual = &state.elements + &(dt / 6.0 * (&k1 + &(2.0 * &k2) + &(2.0 * &k3) + &k4));

        let mut max_diff = 0.0f64;
        for (a, b) in stepped.elements.iter().zip(manual.iter()) {
            max_diff = max_diff.max((a - b).abs());
        }
        assert!(max_diff < 1e-15, "integrator kernel deviates by {max_diff}");
    }

    #[test]
    fn integrator_validates_inputs() {
        let bath = BathParams::new(1.0, 1.0).unwrap();
        let state = tmsv_fock_state(&init(0.2), 8).unwrap();
        assert!(integrate(&state, &bath, -1.0, 1e-3).is_err());
        assert!(integrate(&state, &bath, 1.0, 0.0).is_err());
        // (G+L)·nmax·dt = 2·8·0.01 = 0.16 > 0.05.
        assert!(integrate(&state, &bath, 1.0, 0.01).is_err());
        let same = integrate(&state, &bath, 0.0, 1e-3).unwrap();
        assert_eq!(state.max_abs_diff(&same).unwrap(), 0.0);
    }

    #[test]
    fn pure_loss_conserves_trace_and_empties_the_state() {
        let bath = BathParams::new(0.0, 1.0).unwrap();
        let state = tmsv_fock_state(&init(0.2), 10).unwrap();
        let dt = 0.05 / 10.0;
        let evolved = integrate(&state, &bath, 6.0, dt).unwrap();
        assert_relative_eq!(evolved.trace(), 1.0, epsilon = 1e-9);
        // After t ≫ 1/L almost everything sits in the vacuum.
        assert!(evolved.elements[[0, 0, 0, 0]] > 0.99);
    }

    #[test]
    fn amplifier_aborts_when_population_hits_the_edge() {
        // Strong gain with a tiny basis must fail loudly, not silently.
        let bath = BathParams::new(2.0, 0.0).unwrap();
        let state = tmsv_fock_state(&init(0.2), 5).unwrap();
        let dt = 0.05 / 10.0;
        let err = integrate(&state, &bath, 3.0, dt).unwrap_err();
        match err {
            Error::Truncation(_) => {}
            other => panic!("expected a truncation failure, got {other:?}"),
        }
    }

    #[test]
    fn block_extraction_reads_the_antidiagonal_entries() {
        let state = tmsv_fock_state_with_tol(&init(0.3), 6, 1e-6)
            .unwrap()
            .partial_transpose();
        let block = extract_block(&state, 2).unwrap();
        assert_eq!(block.nrows(), 3);
        for i in 0..=2usize {
            for j in 0..=2usize {
                assert_eq!(block[[i, j]], state.elements[[i, 2 - i, j, 2 - j]]);
            }
        }
        assert!(extract_block(&state, 13).is_err());
        let plain = tmsv_fock_state_with_tol(&init(0.3), 6, 1e-6).unwrap();
        assert!(extract_block(&plain, 2).is_err());
    }

    #[test]
    fn diagonalized_blocks_match_the_closed_form_at_time_zero() {
        let lambda = 0.3;
        let state = tmsv_fock_state(&init(lambda), 10).unwrap().partial_transpose();
        let coeffs = tmsv_coeffs(&init(lambda));
        for s in 0..=4usize {
            let (vals, vecs) = diagonalize_block(&extract_block(&state, s).unwrap()).unwrap();
            let analytic = block_spectrum(&coeffs, s).unwrap();
            for n in 0..=s {
                assert_relative_eq!(vals[n], analytic.eigenvalues[n], epsilon = 1e-12);
                let reference = fock_eigenvector(s, n).unwrap();
                let overlap: f64 = (0..=s)
                    .map(|j| reference.coefficients[j] * vecs[[j, n]])
                    .sum();
                assert!(overlap > 1.0 - 1e-12, "S={s}, n={n}: overlap {overlap}");
            }
        }
    }

    #[test]
    fn reconstruction_matches_the_transposed_state_blockwise() {
        let lambda = 0.3;
        let nmax = 8;
        let pt = tmsv_fock_state(&init(lambda), nmax).unwrap().partial_transpose();
        let recon = reconstruct_analytic_fock(&tmsv_coeffs(&init(lambda)), nmax, nmax).unwrap();
        assert!(recon.is_partial_transpose);
        // Entries inside complete blocks agree; the reconstruction holds
        // nothing outside its included blocks.
        let mut max_diff = 0.0f64;
        for ((n, m, p, q), &v) in recon.elements.indexed_iter() {
            if n + m <= nmax && p + q <= nmax {
                max_diff = max_diff.max((v - pt.elements[[n, m, p, q]]).abs());
            } else {
                assert_eq!(v, 0.0);
            }
        }
        assert!(max_diff < 1e-12, "blockwise deviation {max_diff}");
        assert!(reconstruct_analytic_fock(&tmsv_coeffs(&init(lambda)), 4, 5).is_err());
    }

    #[test]
    fn binary_round_trip_preserves_everything() {
        let dir = std::env::temp_dir().join("fock_dump_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.bin");
        let bath = BathParams::new(0.25, 1.5).unwrap();
        let state = tmsv_fock_state_with_tol(&init(0.4), 5, 1e-4)
            .unwrap()
            .partial_transpose();
        state.write_binary(&path, 0.75, &bath).unwrap();
        let (loaded, time, loaded_bath) = FockDensityMatrix::read_binary(&path).unwrap();
        assert_eq!(time, 0.75);
        assert_eq!(loaded_bath, bath);
        assert_eq!(loaded.nmax, state.nmax);
        assert!(loaded.is_partial_transpose);
        assert_eq!(state.max_abs_diff(&loaded).unwrap(), 0.0);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn boundary_population_counts_edge_diagonal_entries_once() {
        let mut state = FockDensityMatrix::zeros(3, false);
        state.elements[[3, 3, 3, 3]] = 0.25;
        state.elements[[3, 1, 3, 1]] = 0.5;
        state.elements[[0, 3, 0, 3]] = 0.125;
        state.elements[[1, 1, 1, 1]] = 9.0; // interior, not counted
        assert_relative_eq!(state.boundary_population(), 0.875, max_relative = 1e-15);
    }
}
