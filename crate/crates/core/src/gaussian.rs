//! Exact time evolution of real symmetric two-mode Gaussian states under a
//! phase-insensitive gain/loss bath.
//!
//! The position-space density matrix is the four-variable Gaussian
//!
//! ```text
//! ρ(x₁,y₁;x₂,y₂) = Ξ exp[−A(x₁²+x₂²+y₁²+y₂²) + B(x₁y₁+x₂y₂)
//!                        + C(x₁x₂+y₁y₂) + D(x₁y₂+x₂y₁)]
//! ```
//!
//! with Ξ = (1/π)√((2A−C)² − (B+D)²). The bath closes a four-dimensional ODE
//! system on (A, B, C, D) that admits a closed-form solution: the
//! combinations B−D and 2A+C relax geometrically with η(t) = e^{2(G−L)t},
//! while 2A−C and B+D follow from the second moments ⟨x²⟩ and ⟨xy⟩, which
//! evolve affinely in η. This module implements that closed form, the raw ODE
//! right-hand side (kept as an independent test oracle), the two-mode
//! squeezed-vacuum initial condition, the derived spectral parameters
//! α₁, β₁, α₂, β₂, and the critical disentanglement time.

use crate::error::{Error, Result};

/// Gain and loss rates (units of 1/time) of the phase-insensitive bath.
///
/// `gain` feeds photons into each mode, `loss` drains them. A thermal bath of
/// mean occupation n_th and amplitude decay rate γ/2 corresponds to
/// G = γ·n_th/2, L = γ·(n_th+1)/2. Both rates zero means frozen evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    gain: f64,
    loss: f64,
}

impl BathParams {
    /// Validate `gain ≥ 0`, `loss ≥ 0` (both finite).
    pub fn new(gain: f64, loss: f64) -> Result<Self> {
        if !gain.is_finite() || !loss.is_finite() || gain < 0.0 || loss < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bath rates must be finite and non-negative, got gain={gain}, loss={loss}"
            )));
        }
        Ok(Self { gain, loss })
    }

    /// Thermal-bath specialization: G = γ·n_th/2 and L = γ·(n_th+1)/2 for a
    /// bath of mean photon number `n_th` and amplitude decay rate γ/2.
    pub fn thermal(gamma: f64, n_th: f64) -> Result<Self> {
        if !gamma.is_finite() || !n_th.is_finite() || gamma < 0.0 || n_th < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "thermal bath needs finite non-negative gamma and n_th, got gamma={gamma}, n_th={n_th}"
            )));
        }
        Self::new(0.5 * gamma * n_th, 0.5 * gamma * (n_th + 1.0))
    }

    /// Gain rate G.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Loss rate L.
    pub fn loss(&self) -> f64 {
        self.loss
    }
}

/// Squeezing strength of the initial two-mode squeezed vacuum, stored both as
/// the squeeze parameter r ≥ 0 and as λ = tanh r ∈ [0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeInit {
    r: f64,
    lambda: f64,
}

impl SqueezeInit {
    /// Build from the squeeze parameter r ≥ 0.
    ///
    /// Rejects r large enough that tanh r rounds to 1 in double precision
    /// (r ≳ 19), since every derived formula then degenerates.
    pub fn from_r(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "squeeze parameter must be finite and non-negative, got r={r}"
            )));
        }
        let lambda = r.tanh();
        if lambda >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "squeeze parameter r={r} too large: tanh r rounds to 1 in double precision"
            )));
        }
        Ok(Self { r, lambda })
    }

    /// Build from λ = tanh r ∈ [0, 1).
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1), got {lambda}"
            )));
        }
        Ok(Self {
            r: lambda.atanh(),
            lambda,
        })
    }

    /// Squeeze parameter r.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// λ = tanh r.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Exponent coefficients (A, B, C, D) and normalization Ξ of the two-mode
/// Gaussian state.
///
/// Construction validates positive-definiteness of the quadratic form, which
/// is equivalent to all four spectral parameters α₁, β₁, α₂, β₂ being
/// strictly positive; that in turn guarantees (2A−C)² > (B+D)², so Ξ is real
/// and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCoeffs {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    xi: f64,
}

impl GaussianCoeffs {
    /// Validate (a, b, c, d) and compute Ξ = (1/π)√((2a−c)² − (b+d)²).
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("A", a), ("B", b), ("C", c), ("D", d)] {
            if !v.is_finite() {
                return Err(Error::NonPhysical(format!(
                    "coefficient {name} is not finite: {v}"
                )));
            }
        }
        // All four of α₁, β₁, α₂, β₂ strictly positive ⇔ the Gaussian is
        // normalizable; (2a−c)² − (b+d)² = 16·β₁β₂ is then positive as well.
        let (alpha1, beta1, alpha2, beta2) = alpha_beta_raw(a, b, c, d);
        for (name, v) in [
            ("alpha1", alpha1),
            ("beta1", beta1),
            ("alpha2", alpha2),
            ("beta2", beta2),
        ] {
            if !(v > 0.0) {
                return Err(Error::NonPhysical(format!(
                    "quadratic form not positive definite: {name} = {v}"
                )));
            }
        }
        let det = (2.0 * a - c).powi(2) - (b + d).powi(2);
        let xi = det.sqrt() / std::f64::consts::PI;
        Ok(Self { a, b, c, d, xi })
    }

    /// Coefficient A of −(x₁²+x₂²+y₁²+y₂²).
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Coefficient B of +(x₁y₁+x₂y₂).
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Coefficient C of +(x₁x₂+y₁y₂).
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Coefficient D of +(x₁y₂+x₂y₁).
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Normalization Ξ = (1/π)√((2A−C)² − (B+D)²).
    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// The four spectral parameters of the partially transposed Gaussian:
/// α₁ = (2A−B+C+D)/4, β₁ = (2A+B−C+D)/4, α₂ = (2A+B+C−D)/4,
/// β₂ = (2A−B−C−D)/4; all strictly positive for a physical state.
///
/// For any trajectory starting from a two-mode squeezed vacuum,
/// α₁β₁ = α₂β₂ = 1/16 at all times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBeta {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

/// Second moments ⟨x²⟩ and ⟨xy⟩ of the mode quadratures (x is either mode's
/// position; the state is mode-symmetric).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoments {
    /// ⟨x²⟩ > 0.
    pub xx: f64,
    /// ⟨xy⟩, with ⟨x²⟩² > ⟨xy⟩².
    pub xy: f64,
}

fn alpha_beta_raw(a: f64, b: f64, c: f64, d: f64) -> (f64, f64, f64, f64) {
    (
        0.25 * (2.0 * a - b + c + d),
        0.25 * (2.0 * a + b - c + d),
        0.25 * (2.0 * a + b + c - d),
        0.25 * (2.0 * a - b - c - d),
    )
}

/// Growth factors of the closed-form solution at time `t ≥ 0`:
/// η = e^{2(G−L)t} and ḡ = (G+L)/(G−L)·(η − 1), with the exact limit
/// ḡ = 2(G+L)·t when G = L.
///
/// ḡ is evaluated through `exp_m1`, so the G → L limit is approached without
/// catastrophic cancellation; the G = L branch itself is exact.
pub fn growth_factors(bath: &BathParams, t: f64) -> Result<(f64, f64)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and non-negative, got t={t}"
        )));
    }
    let (g, l) = (bath.gain, bath.loss);
    let eta = (2.0 * (g - l) * t).exp();
    let gbar = if g == l {
        2.0 * (g + l) * t
    } else {
        (g + l) * (2.0 * (g - l) * t).exp_m1() / (g - l)
    };
    Ok((eta, gbar))
}

/// Initial Gaussian coefficients of the two-mode squeezed vacuum:
/// A₀ = cosh(2r)/2, B₀ = sinh(2r), C₀ = D₀ = 0, so 4A₀² − B₀² = 1 and
/// Ξ(0) = 1/π.
pub fn tmsv_coeffs(init: &SqueezeInit) -> GaussianCoeffs {
    let a0 = 0.5 * (2.0 * init.r).cosh();
    let b0 = (2.0 * init.r).sinh();
    GaussianCoeffs::new(a0, b0, 0.0, 0.0)
        .expect("squeezed vacuum coefficients are always normalizable")
}

fn initial_moments(init: &GaussianCoeffs) -> Result<SecondMoments> {
    let diff = 2.0 * init.a - init.c;
    let bpd = init.b + init.d;
    let det = diff * diff - bpd * bpd;
    let xx = diff / (2.0 * det);
    let xy = bpd / (2.0 * det);
    if !(xx > 0.0) || xx * xx <= xy * xy {
        return Err(Error::NonPhysical(format!(
            "initial moments violate ⟨x²⟩ > |⟨xy⟩|: xx={xx}, xy={xy}"
        )));
    }
    Ok(SecondMoments { xx, xy })
}

/// Second moments at time `t`: ⟨x²⟩_t = ⟨x²⟩₀·η + ḡ/2 and ⟨xy⟩_t = ⟨xy⟩₀·η,
/// with the initial moments read off the Gaussian coefficients as
/// ⟨x²⟩₀ = (2A₀−C₀)/(2[(2A₀−C₀)²−(B₀+D₀)²]) and
/// ⟨xy⟩₀ = (B₀+D₀)/(2[(2A₀−C₀)²−(B₀+D₀)²]).
///
/// Valid for states whose cross moments ⟨a²⟩, ⟨b²⟩, ⟨a†b⟩ vanish (true for
/// the two-mode squeezed vacuum and everything it evolves into); that
/// condition is the caller's obligation for general initial coefficients.
pub fn second_moments(init: &GaussianCoeffs, bath: &BathParams, t: f64) -> Result<SecondMoments> {
    let m0 = initial_moments(init)?;
    let (eta, gbar) = growth_factors(bath, t)?;
    Ok(SecondMoments {
        xx: m0.xx * eta + 0.5 * gbar,
        xy: m0.xy * eta,
    })
}

/// Closed-form coefficients at time `t ≥ 0` for a state that starts from
/// `init`.
///
/// The geometric combinations evolve as B−D = (B₀−D₀)·η and
/// 2A+C = (2A₀+C₀)·η + ḡ, while 2A−C and B+D are recovered from the evolved
/// second moments:
/// 2A−C = ⟨x²⟩_t / (2[⟨x²⟩_t² − ⟨xy⟩_t²]), B+D = ⟨xy⟩_t / (2[⟨x²⟩_t² − ⟨xy⟩_t²]).
///
/// Like [`second_moments`], this assumes vanishing cross moments of the
/// initial state (caller obligation beyond squeezed-vacuum inputs). The
/// result is re-validated, so a non-normalizable outcome (only possible for
/// invalid inputs) is reported as an error rather than silently returned.
pub fn evolve_coefficients(
    init: &GaussianCoeffs,
    bath: &BathParams,
    t: f64,
) -> Result<GaussianCoeffs> {
    let (eta, gbar) = growth_factors(bath, t)?;
    let m = second_moments(init, bath, t)?;
    let det_t = m.xx * m.xx - m.xy * m.xy;
    let sum_t = (2.0 * init.a + init.c) * eta + gbar; // 2A+C at t
    let bmd_t = (init.b - init.d) * eta; // B−D at t
    let diff_t = m.xx / (2.0 * det_t); // 2A−C at t
    let bpd_t = m.xy / (2.0 * det_t); // B+D at t

    let a = 0.25 * (sum_t + diff_t);
    let c = 0.5 * (sum_t - diff_t);
    let b = 0.5 * (bmd_t + bpd_t);
    let d = 0.5 * (-bmd_t + bpd_t);
    GaussianCoeffs::new(a, b, c, d)
}

/// Right-hand side of the coefficient ODE system:
///
/// ```text
/// Ȧ = (G−L)·C + (G+L)/2·[1 − (2A−C)² − (B+D)²]
/// Ḃ = −2(G−L)·D − 2(G+L)·(2A−C)(B+D)
/// Ċ = 4(G−L)·A + (G+L)·[1 + (2A−C)² + (B+D)²]
/// Ḋ = −2(G−L)·B − 2(G+L)·(2A−C)(B+D)
/// ```
///
/// Kept as an independent oracle for [`evolve_coefficients`]; production code
/// always uses the closed form.
pub fn coefficient_ode_rhs(coeffs: &GaussianCoeffs, bath: &BathParams) -> (f64, f64, f64, f64) {
    let (g, l) = (bath.gain, bath.loss);
    let diff = 2.0 * coeffs.a - coeffs.c;
    let bpd = coeffs.b + coeffs.d;
    let da = (g - l) * coeffs.c + 0.5 * (g + l) * (1.0 - diff * diff - bpd * bpd);
    let db = -2.0 * (g - l) * coeffs.d - 2.0 * (g + l) * diff * bpd;
    let dc = 4.0 * (g - l) * coeffs.a + (g + l) * (1.0 + diff * diff + bpd * bpd);
    let dd = -2.0 * (g - l) * coeffs.b - 2.0 * (g + l) * diff * bpd;
    (da, db, dc, dd)
}

/// The four spectral parameters α₁, β₁, α₂, β₂ of the state.
///
/// Errors if any of them is non-positive, which signals a non-physical
/// coefficient set (unreachable through validated constructors).
pub fn alpha_beta(coeffs: &GaussianCoeffs) -> Result<AlphaBeta> {
    let (alpha1, beta1, alpha2, beta2) = alpha_beta_raw(coeffs.a, coeffs.b, coeffs.c, coeffs.d);
    for (name, v) in [
        ("alpha1", alpha1),
        ("beta1", beta1),
        ("alpha2", alpha2),
        ("beta2", beta2),
    ] {
        if !(v > 0.0) {
            return Err(Error::NonPhysical(format!(
                "spectral parameter {name} = {v} is not positive"
            )));
        }
    }
    Ok(AlphaBeta {
        alpha1,
        beta1,
        alpha2,
        beta2,
    })
}

/// Critical disentanglement time t_c — the instant at which every negative
/// eigenvalue of the partially transposed state reaches zero (equivalently
/// B(t) = C(t)).
///
/// * λ = 0: never entangled, returns `Some(0)` by convention.
/// * G = 0: the state stays entangled forever, returns `None`.
/// * G = L: t_c = λ / (2G(1+λ)) (exact limit of the general formula).
/// * otherwise: t_c = ln[(G + Lλ) / (G(1+λ))] / (2(L−G)), positive and finite
///   for every G > 0.
pub fn critical_time(bath: &BathParams, init: &SqueezeInit) -> Option<f64> {
    let lambda = init.lambda;
    if lambda == 0.0 {
        return Some(0.0);
    }
    let (g, l) = (bath.gain, bath.loss);
    if g == 0.0 {
        return None;
    }
    if g == l {
        return Some(lambda / (2.0 * g * (1.0 + lambda)));
    }
    let tc = ((g + l * lambda) / (g * (1.0 + lambda))).ln() / (2.0 * (l - g));
    Some(tc)
}
