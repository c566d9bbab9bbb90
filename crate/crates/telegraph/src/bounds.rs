//! Closed-form evaluation of the Wasserstein error bounds, weight second
//! moments, the telegraph moment generating function and the integrability
//! thresholds.
//!
//! The absolute constant `C` in the Wasserstein bound is not pinned down by
//! the theory; it enters every formula as an explicit caller-supplied
//! parameter (default 1 at the CLI) and reported totals scale linearly in it.

use thiserror::Error;

use crate::core_model::{derive_scalings, ModelParams, ObservableSpec};

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("exponent {exponent} exceeds 700; the bound would overflow")]
    Overflow { exponent: f64 },
    #[error("model error: {0}")]
    Model(#[from] crate::core_model::ModelError),
}

fn require_positive(name: &'static str, value: f64) -> Result<(), BoundsError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::NonPositive { name, value })
    }
}

/// `expm1(x)/x` with the removable singularity filled by its series.
fn expm1_over_x(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        x.exp_m1() / x
    }
}

/// Wasserstein bound (in units of `C`) between the rescaled symmetric
/// telegraph process and Brownian motion:
/// `C·√(T*·L*⁻²)·T*^{-1/4}·(√ln(T*+3) + T*^{-3/4}) + C·L*⁻¹`.
///
/// The `√(T*L*⁻²)·T*^{-1/4}` factor is evaluated exactly as printed, without
/// algebraic simplification.
pub fn w2_bound_sym(t_star: f64, l_star: f64, c: f64) -> Result<f64, BoundsError> {
    require_positive("T*", t_star)?;
    require_positive("L*", l_star)?;
    require_positive("C", c)?;
    let front = (t_star / (l_star * l_star)).sqrt() * t_star.powf(-0.25);
    let inner = (t_star + 3.0).ln().sqrt() + t_star.powf(-0.75);
    Ok(c * front * inner + c / l_star)
}

/// Same-rate asymmetric Wasserstein bound; reduces to the symmetric formula
/// at the effective scalings `T̃* = λT`, `L̃* = |v|⁻¹λL`.
pub fn w2_bound_asym(params: &ModelParams, c: f64) -> Result<f64, BoundsError> {
    let s = derive_scalings(params)?;
    w2_bound_sym(s.t_star, s.l_star, c)
}

/// Exact Brownian weight second moment `E[W_{a,b}(B)²]`: with
/// `x = 2T(a²σ² + b)` this is `expm1(x)/x`, finite for every real `x`.
pub fn brownian_weight_moment(a: f64, b: f64, horizon: f64, sigma2: f64) -> f64 {
    let x = 2.0 * horizon * (a * a * sigma2 + b);
    expm1_over_x(x)
}

/// Upper bound on the telegraph weight second moment
/// `E[W_{a,b}(L⁻¹X^{sym})²]`:
/// `(1 + 1/√(1+4a²L*⁻²)) · max{1, exp(2T*b/λ + 4a²T*L*⁻²/(1+√(1+4a²L*⁻²)))}`.
pub fn telegraph_weight_moment_bound(a: f64, b: f64, lambda: f64, t_star: f64, l_star: f64) -> f64 {
    let root = (1.0 + 4.0 * a * a / (l_star * l_star)).sqrt();
    let exponent = 2.0 * t_star * b / lambda + 4.0 * a * a * t_star / (l_star * l_star) / (1.0 + root);
    (1.0 + 1.0 / root) * 1.0f64.max(exponent.exp())
}

/// Crude variant of the telegraph weight bound: `2·max{1, exp(4a²T*L*⁻²)}`.
/// Dominates [`telegraph_weight_moment_bound`] at the risk-neutral drift.
pub fn telegraph_weight_moment_bound_simple(
    a: f64,
    t_star: f64,
    l_star: f64,
) -> Result<f64, BoundsError> {
    let exponent = 4.0 * a * a * t_star / (l_star * l_star);
    if exponent > 700.0 {
        return Err(BoundsError::Overflow { exponent });
    }
    Ok(2.0 * 1.0f64.max(exponent.exp()))
}

/// Risk-neutral time drift `b = -a²σ²/2`.
pub fn risk_neutral_b(a: f64, sigma2: f64) -> f64 {
    -0.5 * a * a * sigma2
}

/// Closed-form MGF `E[e^{2a·X^{sym,v0}(s)/L}]` of the rate-`λ` symmetric
/// telegraph process:
/// `e^{-λs}(cosh(sρ) + (λ/ρ)sinh(sρ))` with `ρ = √(λ² + 4a²v0²/L²)`.
///
/// Evaluated through `e^{s(ρ-λ)}` and `e^{-s(ρ+λ)}` so that large `sλ` does
/// not overflow the intermediate hyperbolics.
pub fn telegraph_mgf(a: f64, lambda: f64, v0: f64, length_scale: f64, s: f64) -> f64 {
    let rho = (lambda * lambda + 4.0 * a * a * v0 * v0 / (length_scale * length_scale)).sqrt();
    let lam_over_rho = lambda / rho;
    0.5 * (1.0 + lam_over_rho) * (s * (rho - lambda)).exp()
        + 0.5 * (1.0 - lam_over_rho) * (-s * (rho + lambda)).exp()
}

/// Assembled error bound: `total = prefactor · w2_bound · (√m_telegraph +
/// √m_brownian)`, linear in the absolute constant `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Wasserstein bound, in units of `C`.
    pub w2_bound: f64,
    /// Exact Brownian weight second moment.
    pub m_brownian: f64,
    /// Upper bound on the telegraph weight second moment.
    pub m_telegraph_bound: f64,
    /// `|a|κ_fκ_g` (symmetric) or `√2|a|κ_fκ_g` (asymmetric).
    pub prefactor: f64,
    /// Full right-hand side of the error estimate.
    pub total: f64,
    /// The absolute constant the report was evaluated at.
    pub c: f64,
}

/// Error bound for the symmetric motion: prefactor `|a|κ_fκ_g` times the
/// Wasserstein bound times the sum of the root weight moments.
pub fn total_error_bound_sym(
    spec: &ObservableSpec,
    params: &ModelParams,
    c: f64,
) -> Result<BoundReport, BoundsError> {
    let s = derive_scalings(params)?;
    let w2 = w2_bound_sym(s.t_star, s.l_star, c)?;
    let m_brownian = brownian_weight_moment(spec.a, spec.b, params.horizon, s.sigma2);
    let m_telegraph = telegraph_weight_moment_bound(spec.a, spec.b, params.lambda, s.t_star, s.l_star);
    let prefactor = spec.a.abs() * spec.kappa_f() * spec.kappa_g();
    Ok(BoundReport {
        w2_bound: w2,
        m_brownian,
        m_telegraph_bound: m_telegraph,
        prefactor,
        total: prefactor * w2 * (m_telegraph.sqrt() + m_brownian.sqrt()),
        c,
    })
}

/// Error bound for the asymmetric same-rate motion: prefactor
/// `√2|a|κ_fκ_g`, scalings taken at the effective speed `v = (v0+v0*)/2`,
/// and the drifted weight moments reduced to the undrifted formulas with
/// `b → b + d`, `d = (v0-v0*)/(2L)`.
pub fn total_error_bound_asym(
    spec: &ObservableSpec,
    params: &ModelParams,
    c: f64,
) -> Result<BoundReport, BoundsError> {
    let s = derive_scalings(params)?;
    let w2 = w2_bound_sym(s.t_star, s.l_star, c)?;
    let b_shifted = spec.b + s.drift;
    let m_brownian = brownian_weight_moment(spec.a, b_shifted, params.horizon, s.sigma2);
    let m_telegraph =
        telegraph_weight_moment_bound(spec.a, b_shifted, params.lambda, s.t_star, s.l_star);
    let prefactor = std::f64::consts::SQRT_2 * spec.a.abs() * spec.kappa_f() * spec.kappa_g();
    Ok(BoundReport {
        w2_bound: w2,
        m_brownian,
        m_telegraph_bound: m_telegraph,
        prefactor,
        total: prefactor * w2 * (m_telegraph.sqrt() + m_brownian.sqrt()),
        c,
    })
}

/// Exponent thresholds `(a_low, a_high)` bracketing where the Brownian
/// weight of the squared-norm observable stops being integrable:
/// finite below `a_low = (1/2)/(L*⁻²T*)`, infinite above
/// `a_high = (3/2)/(L*⁻²T*)`.
pub fn integrability_thresholds(t_star: f64, l_star: f64) -> (f64, f64) {
    let scale = l_star * l_star / t_star;
    (0.5 * scale, 1.5 * scale)
}
