//! Closed-form eigensystem of the partially transposed Gaussian state.
//!
//! In the rotated quadratures u = (x−y)/√2, v = (x+y)/√2 the partial
//! transpose factorizes into two double Gaussians with parameters
//! (α₁, β₁) and (α₂, β₂); Mehler's formula then yields a Schmidt
//! decomposition whose eigenvalues are
//!
//! ```text
//! ξ_{n,m} = Ξπ · (√α₁−√β₁)ⁿ/(√α₁+√β₁)^{n+1} · (√α₂−√β₂)^m/(√α₂+√β₂)^{m+1}
//! ```
//!
//! and whose eigenfunctions are products of Hermite functions of u and v.
//! The eigenvalues are negative exactly for odd n when B > C, they organize
//! into finite blocks of constant photon-number sum S = n + m in Fock space,
//! and for trajectories starting from a two-mode squeezed vacuum the Fock
//! expansion coefficients of the eigenvectors are time independent.

use crate::error::{Error, Result};
use crate::gaussian::{alpha_beta, AlphaBeta, BathParams, GaussianCoeffs, SqueezeInit};

/// Largest supported photon-number sum for exact integer eigenvector
/// expansion coefficients: keeps every Γ summand inside i128.
pub const MAX_BLOCK_SUM: usize = 64;

/// Eigenvalues ξ_{n,S−n}, n = 0..=S, of one photon-number-sum block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum {
    /// Photon-number sum S labelling the block.
    pub s: usize,
    /// `eigenvalues[n]` is ξ_{n,S−n}; entries with odd n are the negative
    /// ones while the state is entangled.
    pub eigenvalues: Vec<f64>,
}

/// Fock-basis expansion of the eigenvector |φ_{n,S−n}⟩ over the kets
/// |j, S−j⟩, j = 0..=S.
#[derive(Debug, Clone, PartialEq)]
pub struct FockEigenvector {
    /// Photon-number sum S of the block.
    pub s: usize,
    /// Eigenvector index n within the block (number of antisymmetric
    /// quanta).
    pub n: usize,
    /// `coefficients[j]` multiplies |j, S−j⟩; the vector is unit norm.
    pub coefficients: Vec<f64>,
}

/// ln(k!) by direct summation; exact enough (≤ 1 ulp growth per term) for
/// the small factorials used in block expansions.
pub(crate) fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Physicists' Hermite polynomial H_k(z) by the three-term recurrence.
pub(crate) fn hermite(k: usize, z: f64) -> f64 {
    let mut h_prev = 1.0;
    if k == 0 {
        return h_prev;
    }
    let mut h = 2.0 * z;
    for i in 1..k {
        let h_next = 2.0 * z * h - 2.0 * (i as f64) * h_prev;
        h_prev = h;
        h = h_next;
    }
    h
}

fn binomial_i128(a: usize, b: usize) -> i128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: i128 = 1;
    for i in 0..b {
        // Multiplying before dividing keeps every intermediate an integer:
        // acc holds C(a, i) · (a−i) which is divisible by i+1.
        acc = acc * (a - i) as i128 / (i + 1) as i128;
    }
    acc
}

/// Single eigenvalue ξ_{n,m} of the partially transposed state from its
/// spectral parameters and normalization.
pub fn eigenvalue(ab: &AlphaBeta, xi: f64, n: usize, m: usize) -> f64 {
    let (sa1, sb1) = (ab.alpha1.sqrt(), ab.beta1.sqrt());
    let (sa2, sb2) = (ab.alpha2.sqrt(), ab.beta2.sqrt());
    xi * std::f64::consts::PI
        * (sa1 - sb1).powi(n as i32)
        / (sa1 + sb1).powi(n as i32 + 1)
        * (sa2 - sb2).powi(m as i32)
        / (sa2 + sb2).powi(m as i32 + 1)
}

/// All eigenvalues of the block with photon-number sum `s`.
pub fn block_spectrum(coeffs: &GaussianCoeffs, s: usize) -> Result<BlockSpectrum> {
    let ab = alpha_beta(coeffs)?;
    let eigenvalues = (0..=s)
        .map(|n| eigenvalue(&ab, coeffs.xi(), n, s - n))
        .collect();
    Ok(BlockSpectrum { s, eigenvalues })
}

/// Integer expansion coefficient
/// Γ_{S,n,j} = Σ_{k=0}^{min(j,n)} (−1)^{n−k} C(S−n, j−k) C(n, k),
/// evaluated exactly in 128-bit arithmetic.
pub fn gamma_coefficient(s: usize, n: usize, j: usize) -> Result<i128> {
    if n > s || j > s {
        return Err(Error::InvalidParameter(format!(
            "gamma coefficient needs n ≤ S and j ≤ S, got S={s}, n={n}, j={j}"
        )));
    }
    if s > MAX_BLOCK_SUM {
        return Err(Error::InvalidParameter(format!(
            "block sum S={s} exceeds the exact-integer limit {MAX_BLOCK_SUM}"
        )));
    }
    let mut acc: i128 = 0;
    for k in 0..=j.min(n) {
        let sign = if (n - k) % 2 == 0 { 1 } else { -1 };
        acc += sign * binomial_i128(s - n, j - k) * binomial_i128(n, k);
    }
    Ok(acc)
}

/// Fock-basis eigenvector |φ_{n,S−n}⟩ = Σ_j v_j |j, S−j⟩ with
/// v_j = Γ_{S,n,j} √(j!(S−j)!) / (√(2^S) √(n!(S−n)!)).
///
/// These coefficients depend only on (S, n), not on time or bath: the
/// eigenvectors of the partially transposed state are frozen while its
/// eigenvalues evolve.
pub fn fock_eigenvector(s: usize, n: usize) -> Result<FockEigenvector> {
    if n > s {
        return Err(Error::InvalidParameter(format!(
            "eigenvector index must satisfy n ≤ S, got S={s}, n={n}"
        )));
    }
    let ln_norm = 0.5 * (ln_factorial(n) + ln_factorial(s - n)) + 0.5 * s as f64 * 2f64.ln();
    let mut coefficients = Vec::with_capacity(s + 1);
    for j in 0..=s {
        let gamma = gamma_coefficient(s, n, j)? as f64;
        let ln_mag = 0.5 * (ln_factorial(j) + ln_factorial(s - j)) - ln_norm;
        coefficients.push(gamma * ln_mag.exp());
    }
    Ok(FockEigenvector { s, n, coefficients })
}

/// Position-space eigenfunction φ_{n,m}(x, y) of the partially transposed
/// state:
///
/// ```text
/// φ_{n,m} = [2^{n−1} 2^{m−1} n! m!]^{−1/2} (α₁β₁α₂β₂)^{1/8} π^{−1/2}
///           · H_n[2(α₁β₁)^{1/4} (x−y)/√2] · H_m[2(α₂β₂)^{1/4} (x+y)/√2]
///           · exp[−√(α₁β₁)(x−y)² − √(α₂β₂)(x+y)²]
/// ```
///
/// The family is orthonormal on the (x, y) plane for any positive
/// parameters.
pub fn position_eigenfunction(ab: &AlphaBeta, n: usize, m: usize, x: f64, y: f64) -> f64 {
    let p1 = ab.alpha1 * ab.beta1;
    let p2 = ab.alpha2 * ab.beta2;
    let ln2 = 2f64.ln();
    let ln_pref = -0.5
        * ((n as f64 - 1.0) * ln2 + (m as f64 - 1.0) * ln2 + ln_factorial(n) + ln_factorial(m));
    let pref = ln_pref.exp() * (p1 * p2).powf(0.125) / std::f64::consts::PI.sqrt();
    let u = (x - y) / std::f64::consts::SQRT_2;
    let v = (x + y) / std::f64::consts::SQRT_2;
    pref * hermite(n, 2.0 * p1.powf(0.25) * u)
        * hermite(m, 2.0 * p2.powf(0.25) * v)
        * (-p1.sqrt() * (x - y).powi(2) - p2.sqrt() * (x + y).powi(2)).exp()
}

/// Initial slope dξ_{n,S−n}/dt at t = 0 for a two-mode squeezed vacuum with
/// squeeze parameter r > 0:
///
/// ```text
/// (−1)ⁿ tanh^S r · csch r · sech³ r · { (G−L)(S−2n)
///     + (G+L)(S−2n) cosh 2r − [L·S + G(S+2)] sinh 2r }
/// ```
///
/// For G = 0 the slope of every odd-n (negative) eigenvalue is strictly
/// positive; with gain present, some negative eigenvalues initially grow in
/// magnitude. Rejects r = 0, where the slope expression degenerates (every
/// eigenvalue with S > 0 is then identically zero at t = 0 anyway).
pub fn initial_eigenvalue_rate(
    bath: &BathParams,
    init: &SqueezeInit,
    s: usize,
    n: usize,
) -> Result<f64> {
    if n > s {
        return Err(Error::InvalidParameter(format!(
            "rate index must satisfy n ≤ S, got S={s}, n={n}"
        )));
    }
    let r = init.r();
    if r == 0.0 {
        return Err(Error::InvalidParameter(
            "initial eigenvalue rate needs r > 0".into(),
        ));
    }
    let (g, l) = (bath.gain(), bath.loss());
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let s_f = s as f64;
    let k = s_f - 2.0 * n as f64;
    let brace = (g - l) * k + (g + l) * k * (2.0 * r).cosh()
        - (l * s_f + g * (s_f + 2.0)) * (2.0 * r).sinh();
    Ok(sign * r.tanh().powi(s as i32) / r.sinh() / r.cosh().powi(3) * brace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{evolve_coefficients, tmsv_coeffs};
    use approx::assert_relative_eq;

    fn tmsv(lambda: f64) -> GaussianCoeffs {
        tmsv_coeffs(&SqueezeInit::from_lambda(lambda).unwrap())
    }

    #[test]
    fn initial_eigenvalues_are_geometric_in_the_squeezing() {
        // ξ_{n,m}(0) = (1−λ²)(−λ)ⁿλ^m.
        let lambda = 0.2f64;
        let c = tmsv(lambda);
        let ab = alpha_beta(&c).unwrap();
        for n in 0..6 {
            for m in 0..6 {
                let expect =
                    (1.0 - lambda * lambda) * (-lambda).powi(n as i32) * lambda.powi(m as i32);
                assert_relative_eq!(eigenvalue(&ab, c.xi(), n, m), expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn vacuum_spectrum_is_a_point_mass() {
        let c = tmsv(0.0);
        let ab = alpha_beta(&c).unwrap();
        assert_relative_eq!(eigenvalue(&ab, c.xi(), 0, 0), 1.0, max_relative = 1e-14);
        assert_eq!(eigenvalue(&ab, c.xi(), 1, 0), 0.0);
        assert_eq!(eigenvalue(&ab, c.xi(), 0, 3), 0.0);
    }

    #[test]
    fn eigenvalues_sum_to_unit_trace() {
        // Σ_{n,m} ξ_{n,m} telescopes to Ξπ/(4√(β₁β₂)) = 1.
        let c0 = tmsv(0.5);
        let bath = BathParams::new(1.5, 0.5).unwrap();
        for &t in &[0.0, 0.05, 0.3] {
            let c = evolve_coefficients(&c0, &bath, t).unwrap();
            let mut total = 0.0;
            for s in 0..200 {
                total += block_spectrum(&c, s).unwrap().eigenvalues.iter().sum::<f64>();
            }
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn negative_entries_sit_at_odd_indices_while_entangled() {
        let c = tmsv(0.4);
        for s in 0..8 {
            let spectrum = block_spectrum(&c, s).unwrap();
            for (n, &xi) in spectrum.eigenvalues.iter().enumerate() {
                if n % 2 == 1 {
                    assert!(xi < 0.0, "S={s}, n={n}: {xi}");
                } else {
                    assert!(xi > 0.0, "S={s}, n={n}: {xi}");
                }
            }
        }
    }

    #[test]
    fn gamma_coefficients_small_cases() {
        // n = 0 reduces to plain binomials.
        for j in 0..=4 {
            assert_eq!(gamma_coefficient(4, 0, j).unwrap(), binomial_i128(4, j));
        }
        // S = 1, n = 1: the antisymmetric Bell-like combination (|1,0⟩−|0,1⟩)/√2.
        assert_eq!(gamma_coefficient(1, 1, 0).unwrap(), -1);
        assert_eq!(gamma_coefficient(1, 1, 1).unwrap(), 1);
        // S = 2, n = 1: Γ = −C(1,j) + C(1,j−1).
        assert_eq!(gamma_coefficient(2, 1, 0).unwrap(), -1);
        assert_eq!(gamma_coefficient(2, 1, 1).unwrap(), 0);
        assert_eq!(gamma_coefficient(2, 1, 2).unwrap(), 1);
        // Out-of-range requests fail.
        assert!(gamma_coefficient(2, 3, 0).is_err());
        assert!(gamma_coefficient(2, 0, 3).is_err());
        assert!(gamma_coefficient(65, 0, 0).is_err());
    }

    #[test]
    fn eigenvector_coefficients_for_one_antisymmetric_quantum() {
        let v = fock_eigenvector(1, 1).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(v.coefficients[0], -s, max_relative = 1e-14);
        assert_relative_eq!(v.coefficients[1], s, max_relative = 1e-14);
    }

    #[test]
    fn eigenvectors_are_orthonormal_within_each_block() {
        for s in 0..=8usize {
            let vecs: Vec<FockEigenvector> =
                (0..=s).map(|n| fock_eigenvector(s, n).unwrap()).collect();
            for a in 0..=s {
                for b in 0..=s {
                    let dot: f64 = (0..=s)
                        .map(|j| vecs[a].coefficients[j] * vecs[b].coefficients[j])
                        .sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12, "S={s}: ⟨{a}|{b}⟩ = {dot}");
                }
            }
        }
    }

    #[test]
    fn eigenvector_mode_swap_symmetry() {
        // Swapping the two modes maps |φ_{n,S−n}⟩ to (−1)ⁿ itself, so
        // v_{S−j} = (−1)ⁿ v_j.
        for s in 0..=7usize {
            for n in 0..=s {
                let v = fock_eigenvector(s, n).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                for j in 0..=s {
                    assert_relative_eq!(
                        v.coefficients[s - j],
                        sign * v.coefficients[j],
                        epsilon = 1e-14
                    );
                }
            }
        }
    }

    #[test]
    fn position_eigenfunction_reduces_to_harmonic_oscillator_modes() {
        // On any squeezed-vacuum trajectory α₁β₁ = α₂β₂ = 1/16, and the
        // eigenfunction collapses to the standard 2D oscillator mode
        // H_n((x−y)/√2) H_m((x+y)/√2) e^{−(x²+y²)/2} / √(2^{n+m} n! m! π).
        let c = tmsv(0.2);
        let ab = alpha_beta(&c).unwrap();
        for (n, m) in [(0usize, 0usize), (1, 0), (0, 2), (2, 1)] {
            for (x, y) in [(0.0, 0.0), (0.3, -0.7), (1.1, 0.4)] {
                let u = (x - y) / std::f64::consts::SQRT_2;
                let v = (x + y) / std::f64::consts::SQRT_2;
                let norm = (2f64.powi((n + m) as i32)
                    * ln_factorial(n).exp()
                    * ln_factorial(m).exp()
                    * std::f64::consts::PI)
                    .sqrt();
                let expect = hermite(n, u) * hermite(m, v)
                    * (-(x * x + y * y) / 2.0).exp()
                    / norm;
                assert_relative_eq!(
                    position_eigenfunction(&ab, n, m, x, y),
                    expect,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn initial_rate_matches_finite_differences_of_the_closed_form() {
        let init = SqueezeInit::from_lambda(0.2).unwrap();
        let c0 = tmsv_coeffs(&init);
        for (g, l) in [(0.0, 1.0), (1.5, 0.5), (1.0, 1.0)] {
            let bath = BathParams::new(g, l).unwrap();
            let h = 1e-5;
            let xi_at = |t: f64| {
                let c = evolve_coefficients(&c0, &bath, t).unwrap();
                let ab = alpha_beta(&c).unwrap();
                (c.xi(), ab)
            };
            for (s, n) in [(1usize, 1usize), (4, 1), (4, 3), (7, 2), (10, 5)] {
                let f = |t: f64| {
                    let (xi, ab) = xi_at(t);
                    eigenvalue(&ab, xi, n, s - n)
                };
                let fd = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
                let rate = initial_eigenvalue_rate(&bath, &init, s, n).unwrap();
                assert_relative_eq!(rate, fd, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn pure_loss_initial_rates_of_negative_eigenvalues_are_positive() {
        let init = SqueezeInit::from_lambda(0.4).unwrap();
        let bath = BathParams::new(0.0, 1.0).unwrap();
        for s in 1..=10usize {
            for n in (1..=s).step_by(2) {
                let rate = initial_eigenvalue_rate(&bath, &init, s, n).unwrap();
                assert!(rate > 0.0, "S={s}, n={n}: rate={rate}");
            }
        }
    }

    #[test]
    fn initial_rate_rejects_degenerate_inputs() {
        let bath = BathParams::new(1.0, 1.0).unwrap();
        assert!(initial_eigenvalue_rate(&bath, &SqueezeInit::from_r(0.0).unwrap(), 2, 1).is_err());
        let init = SqueezeInit::from_lambda(0.2).unwrap();
        assert!(initial_eigenvalue_rate(&bath, &init, 2, 3).is_err());
    }

    #[test]
    fn hermite_recurrence_against_explicit_polynomials() {
        for &z in &[-1.3, 0.0, 0.4, 2.2] {
            assert_eq!(hermite(0, z), 1.0);
            assert_eq!(hermite(1, z), 2.0 * z);
            assert_relative_eq!(hermite(2, z), 4.0 * z * z - 2.0, max_relative = 1e-14);
            assert_relative_eq!(
                hermite(3, z),
                8.0 * z * z * z - 12.0 * z,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert_relative_eq!(ln_factorial(5), 120f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(
            ln_factorial(20),
            2432902008176640000f64.ln(),
            max_relative = 1e-14
        );
    }
}
