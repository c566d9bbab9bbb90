//! Model parameters, derived scalings and observable specifications.
//!
//! Everything here is an immutable value object; all downstream formulas are
//! dimensionless once [`derive_scalings`] has been applied.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("symmetric mode requires v0 != 0")]
    ZeroSpeed,
    #[error("effective speed v = (v0 + v0*)/2 must be nonzero")]
    ZeroEffectiveSpeed,
}

/// Which switching recipe drives the velocity reversals.
///
/// `Collated` flips at every ring of the superposition of the two Poisson
/// clocks (rate `2λ`); `Alternating` waits an i.i.d. `Exp(λ)` dwell time
/// between reversals (flip rate `λ`). The two recipes have different flip
/// intensities and are kept as first-class options; the MGF validation in
/// `mc_engine` identifies which one matches the closed-form law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimVariant {
    Collated,
    Alternating,
}

impl SimVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimVariant::Collated => "collated",
            SimVariant::Alternating => "alternating",
        }
    }
}

impl std::str::FromStr for SimVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "collated" => Ok(SimVariant::Collated),
            "alternating" => Ok(SimVariant::Alternating),
            other => Err(format!(
                "unknown variant '{other}', expected 'collated' or 'alternating'"
            )),
        }
    }
}

/// Raw model inputs: rates `λ`, `λ*`, speeds `v₀`, `v₀*`, horizon `T` and
/// spatial scale `L`. The start point is always the origin.
///
/// Symmetric mode is a constructor flag, not an inference: callers declare
/// [`ModelParams::symmetric`], which sets `λ* = λ`, `v₀* = -v₀` and forces
/// the drift to zero in [`derive_scalings`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub lambda_star: f64,
    pub v0: f64,
    pub v0_star: f64,
    pub horizon: f64,
    pub length_scale: f64,
    symmetric: bool,
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

impl ModelParams {
    /// Symmetric telegraph process: rate `λ`, speeds `±v0`.
    pub fn symmetric(lambda: f64, v0: f64, horizon: f64, length_scale: f64) -> Result<Self, ModelError> {
        require_positive("lambda", lambda)?;
        require_positive("T", horizon)?;
        require_positive("L", length_scale)?;
        if v0 == 0.0 {
            return Err(ModelError::ZeroSpeed);
        }
        Ok(ModelParams {
            lambda,
            lambda_star: lambda,
            v0,
            v0_star: -v0,
            horizon,
            length_scale,
            symmetric: true,
        })
    }

    /// Asymmetric same-rate telegraph process: rate `λ`, velocity states
    /// `{v0, -v0*}` with `v0 + v0* != 0`.
    pub fn asymmetric(
        lambda: f64,
        v0: f64,
        v0_star: f64,
        horizon: f64,
        length_scale: f64,
    ) -> Result<Self, ModelError> {
        require_positive("lambda", lambda)?;
        require_positive("T", horizon)?;
        require_positive("L", length_scale)?;
        if v0 + v0_star == 0.0 {
            return Err(ModelError::ZeroEffectiveSpeed);
        }
        Ok(ModelParams {
            lambda,
            lambda_star: lambda,
            v0,
            v0_star,
            horizon,
            length_scale,
            symmetric: false,
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Effective speed `v = (v0 + v0*)/2`.
    pub fn v_eff(&self) -> f64 {
        if self.symmetric {
            self.v0
        } else {
            0.5 * (self.v0 + self.v0_star)
        }
    }
}

/// Derived dimensionless scalings: `T* = λT`, `L* = |v|⁻¹λL`, diffusivity
/// `σ² = v²/(λL²)` and the drift rate `d = (v0 - v0*)/(2L)` (zero in the
/// symmetric case).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalings {
    pub t_star: f64,
    pub l_star: f64,
    pub sigma2: f64,
    pub drift: f64,
    pub v_eff: f64,
}

pub fn derive_scalings(params: &ModelParams) -> Result<Scalings, ModelError> {
    let v_eff = params.v_eff();
    if v_eff == 0.0 {
        return Err(ModelError::ZeroEffectiveSpeed);
    }
    let t_star = params.lambda * params.horizon;
    let l_star = params.lambda * params.length_scale / v_eff.abs();
    let sigma2 = v_eff * v_eff / (params.lambda * params.length_scale * params.length_scale);
    let drift = if params.symmetric {
        0.0
    } else {
        0.5 * (params.v0 - params.v0_star) / params.length_scale
    };
    Ok(Scalings {
        t_star,
        l_star,
        sigma2,
        drift,
        v_eff,
    })
}

/// One of the closed kinds the Lipschitz wrappers `f`, `g` may take. Closed
/// enumeration so the Lipschitz constants are always known exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    Identity,
    /// `x ↦ ℓ·x`
    Affine(f64),
    /// `x ↦ max{ℓ·x, c}`
    CallFloor(f64, f64),
}

impl MapKind {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MapKind::Identity => x,
            MapKind::Affine(l) => l * x,
            MapKind::CallFloor(l, c) => (l * x).max(c),
        }
    }

    /// Best Lipschitz constant of the map.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            MapKind::Identity => 1.0,
            MapKind::Affine(l) | MapKind::CallFloor(l, _) => l.abs(),
        }
    }

    /// Slope `ℓ` when the map commutes with averaging (identity/affine),
    /// `None` for the nonlinear kind.
    pub fn affine_slope(&self) -> Option<f64> {
        match *self {
            MapKind::Identity => Some(1.0),
            MapKind::Affine(l) => Some(l),
            MapKind::CallFloor(..) => None,
        }
    }
}

/// Observable `F_{a,b}(X) = g((1/T)∫ f(e^{aX(s)+bs}) ds)` described by its
/// exponents and the kinds of `f` and `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSpec {
    pub a: f64,
    pub b: f64,
    pub f: MapKind,
    pub g: MapKind,
}

impl ObservableSpec {
    pub fn new(a: f64, b: f64, f: MapKind, g: MapKind) -> Self {
        ObservableSpec { a, b, f, g }
    }

    pub fn kappa_f(&self) -> f64 {
        self.f.lipschitz()
    }

    pub fn kappa_g(&self) -> f64 {
        self.g.lipschitz()
    }
}

/// Lusin-Lipschitz constant `κ = 2|a|·κ_f·κ_g` of the observable.
pub fn lipschitz_kappa(spec: &ObservableSpec) -> f64 {
    2.0 * spec.a.abs() * spec.kappa_f() * spec.kappa_g()
}

pub fn eval_f(spec: &ObservableSpec, x: f64) -> f64 {
    spec.f.eval(x)
}

pub fn eval_g(spec: &ObservableSpec, x: f64) -> f64 {
    spec.g.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn scalings_section3_cell() {
        let p = ModelParams::symmetric(100.0, 1.0, 1.0, 1.0).unwrap();
        let s = derive_scalings(&p).unwrap();
        assert_eq!(s.t_star, 100.0);
        assert_eq!(s.l_star, 100.0);
        assert_relative_eq!(s.sigma2, 0.01);
        assert_eq!(s.drift, 0.0);
        assert_eq!(s.v_eff, 1.0);
    }

    #[test]
    fn scalings_identity() {
        let p = ModelParams::symmetric(1.0, 1.0, 1.0, 1.0).unwrap();
        let s = derive_scalings(&p).unwrap();
        assert_eq!((s.t_star, s.l_star, s.sigma2, s.drift), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn scalings_asymmetric() {
        let p = ModelParams::asymmetric(2.0, 2.0, 1.0, 3.0, 1.0).unwrap();
        let s = derive_scalings(&p).unwrap();
        assert_eq!(s.v_eff, 1.5);
        assert_eq!(s.t_star, 6.0);
        assert_relative_eq!(s.l_star, 2.0 / 1.5);
        assert_relative_eq!(s.sigma2, 1.125);
        assert_eq!(s.drift, 0.5);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(ModelParams::symmetric(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::symmetric(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::asymmetric(1.0, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::symmetric(1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        let spec = ObservableSpec::new(3.0, 0.0, MapKind::Identity, MapKind::Identity);
        assert_eq!(lipschitz_kappa(&spec), 6.0);
        let spec = ObservableSpec::new(0.0, 0.0, MapKind::Affine(7.0), MapKind::Identity);
        assert_eq!(lipschitz_kappa(&spec), 0.0);
        let spec = ObservableSpec::new(-2.0, 0.0, MapKind::Affine(0.5), MapKind::Affine(3.0));
        assert_eq!(lipschitz_kappa(&spec), 6.0);
    }

    #[test]
    fn eval_examples() {
        let call = MapKind::CallFloor(1.0, 0.0);
        assert_eq!(call.eval(0.3), 0.3);
        assert_eq!(call.eval(-0.3), 0.0);
        assert_eq!(MapKind::Affine(2.0).eval(1.5), 3.0);
    }

    proptest! {
        #[test]
        fn sigma2_equals_lambda_over_lstar_squared(
            lambda in 0.01f64..1000.0,
            v0 in prop::sample::select(vec![-5.0f64, -1.0, 0.3, 1.0, 2.0]),
            t in 0.01f64..100.0,
            l in 0.01f64..100.0,
        ) {
            let p = ModelParams::symmetric(lambda, v0, t, l).unwrap();
            let s = derive_scalings(&p).unwrap();
            prop_assert!((s.sigma2 - lambda / (s.l_star * s.l_star)).abs() <= 1e-12 * s.sigma2);
        }

        #[test]
        fn kappa_is_even_in_a(a in -10.0f64..10.0, kf in 0.0f64..5.0, kg in 0.0f64..5.0) {
            let pos = ObservableSpec::new(a, 0.0, MapKind::Affine(kf), MapKind::Affine(kg));
            let neg = ObservableSpec::new(-a, 0.0, MapKind::Affine(kf), MapKind::Affine(kg));
            prop_assert_eq!(lipschitz_kappa(&pos), lipschitz_kappa(&neg));
        }

        #[test]
        fn call_floor_is_one_lipschitz(x in -100.0f64..100.0, y in -100.0f64..100.0) {
            let g = MapKind::CallFloor(1.0, 0.0);
            prop_assert_eq!(g.eval(x), x.max(0.0));
            prop_assert!((g.eval(x) - g.eval(y)).abs() <= (x - y).abs());
        }
    }
}
