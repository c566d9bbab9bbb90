//! The exponential average-integral observable
//! `F_{a,b}(X) = g((1/T)∫ f(e^{aX(s)+bs}) ds)` and its weight
//! `W_{a,b}(X)² = (1/T)∫ e^{2aX(s)+2bs} ds`, evaluated in closed form on
//! exact telegraph paths and by left-endpoint Riemann sums on grid paths.

use thiserror::Error;

use crate::core_model::{eval_f, eval_g, ObservableSpec};
use crate::path_samplers::{GridPath, TelegraphPath};

/// Exponents small enough in magnitude that `expm1(x)/x` is replaced by its
/// zero limit.
const COEFF_EPS: f64 = 1e-12;
/// Largest prefix exponent before `exp` is declared unphysical.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Error, PartialEq)]
pub enum FunctionalError {
    #[error("exponent {exponent} exceeds {MAX_EXPONENT}; the functional would overflow")]
    Overflow { exponent: f64 },
    #[error("closed-form evaluation requires an affine f; use grid_functional for nonlinear kinds")]
    NonlinearF,
}

/// Closed-form `(1/T)∫₀ᵀ e^{a·X(s)/L + b·s} ds` over an exact telegraph
/// path, summing one exponential-segment term per constant-velocity stretch.
///
/// On segment `i` the integrand is `e^{prefix + c·(s - t_i)}` with slope
/// `c = s_i·a·v/L + b`; the segment contributes
/// `e^{prefix}·expm1(c·Δ)/c`, or `Δ·e^{prefix}` in the `c → 0` limit.
/// Ties among jump times contribute zero-length segments and need no special
/// handling. Works for jump-free paths (a single segment).
pub fn exact_exp_avg_integral(
    path: &TelegraphPath,
    a: f64,
    b: f64,
    length_scale: f64,
) -> Result<f64, FunctionalError> {
    let slope_scale = a * path.speed / length_scale;
    let mut prefix = 0.0_f64; // a·X(t_left)/L + b·t_left, accumulated exactly
    let mut t_left = 0.0_f64;
    let mut sum = 0.0_f64;
    let n = path.jump_times.len();
    for i in 0..=n {
        if prefix > MAX_EXPONENT {
            return Err(FunctionalError::Overflow { exponent: prefix });
        }
        let t_right = if i == n {
            path.horizon
        } else {
            path.jump_times[i]
        };
        let coeff = path.segment_sign(i) * slope_scale + b;
        let delta = t_right - t_left;
        let x = coeff * delta;
        if prefix + x > MAX_EXPONENT {
            return Err(FunctionalError::Overflow { exponent: prefix + x });
        }
        let term = if x.abs() < COEFF_EPS {
            delta
        } else {
            x.exp_m1() / coeff
        };
        sum += prefix.exp() * term;
        prefix += x;
        t_left = t_right;
    }
    Ok(sum / path.horizon)
}

/// Closed-form `F_{a,b}` on an exact telegraph path. Affine `f` commutes
/// with the average, so the result is
/// `g(ℓ_f · (1/T)∫ e^{aX/L + bs} ds - strike_shift)`; `strike_shift`
/// realizes payoffs of the form `g(x) = max{x - K, 0}` as `CallFloor(1, 0)`
/// applied to the shifted average (pass `0` when no strike is involved).
pub fn exact_functional(
    path: &TelegraphPath,
    spec: &ObservableSpec,
    length_scale: f64,
    strike_shift: f64,
) -> Result<f64, FunctionalError> {
    let slope = spec.f.affine_slope().ok_or(FunctionalError::NonlinearF)?;
    let avg = exact_exp_avg_integral(path, spec.a, spec.b, length_scale)?;
    Ok(eval_g(spec, slope * avg - strike_shift))
}

/// Left-endpoint Riemann evaluation of `F_{a,b}` on a grid path:
/// `g((1/T)·Σᵢ f(e^{a·xᵢ + b·tᵢ})·dt - strike_shift)`.
pub fn grid_functional(path: &GridPath, spec: &ObservableSpec, strike_shift: f64) -> f64 {
    let n = path.n_steps();
    let dt = path.dt();
    let mut sum = 0.0;
    for i in 0..n {
        let t = i as f64 * dt;
        sum += eval_f(spec, (spec.a * path.positions[i] + spec.b * t).exp());
    }
    eval_g(spec, sum / n as f64 - strike_shift)
}

/// Squared weight `W_{a,b}(X)²` on an exact path; by definition this is the
/// average exponential integral at doubled exponents.
pub fn weight_squared_exact(
    path: &TelegraphPath,
    a: f64,
    b: f64,
    length_scale: f64,
) -> Result<f64, FunctionalError> {
    exact_exp_avg_integral(path, 2.0 * a, 2.0 * b, length_scale)
}

/// Squared weight on a grid path by a left-endpoint Riemann sum.
pub fn weight_squared_grid(path: &GridPath, a: f64, b: f64) -> f64 {
    let n = path.n_steps();
    let dt = path.dt();
    let mut sum = 0.0;
    for i in 0..n {
        let t = i as f64 * dt;
        sum += (2.0 * a * path.positions[i] + 2.0 * b * t).exp();
    }
    sum / n as f64
}


#[cfg(test)]
mod tests {
    use super::oracle::riemann_exp_avg;
    use super::*;
    use crate::core_model::{lipschitz_kappa, MapKind, SimVariant};
    use crate::path_samplers::{sample_sym_path, sample_telegraph_grid, RngStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn path(initial_sign: i8, jumps: &[f64], horizon: f64, speed: f64) -> TelegraphPath {
        TelegraphPath {
            initial_sign,
            jump_times: jumps.to_vec(),
            horizon,
            speed,
        }
    }

    #[test]
    fn single_segment_exponential() {
        let p = path(1, &[], 1.0, 1.0);
        let v = exact_exp_avg_integral(&p, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(v, 1.0f64.exp_m1(), max_relative = 1e-14);
    }

    #[test]
    fn two_segment_hand_value() {
        let p = path(1, &[0.5], 1.0, 1.0);
        let v = exact_exp_avg_integral(&p, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(v, 2.0 * 0.5f64.exp_m1(), max_relative = 1e-13);
        assert_relative_eq!(v, riemann_exp_avg(&p, 1.0, 0.0, 1.0, 1_000_000), max_relative = 1e-5);
    }

    #[test]
    fn zero_exponents_average_to_one() {
        let p = path(-1, &[0.1, 0.2, 0.7], 1.0, 2.0);
        assert_eq!(exact_exp_avg_integral(&p, 0.0, 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn section3_no_jump_payoff() {
        let spec = ObservableSpec::new(3.0, -0.045, MapKind::Identity, MapKind::CallFloor(1.0, 0.0));
        let p = path(1, &[], 1.0, 1.0);
        let f = exact_functional(&p, &spec, 1.0, 1.0).unwrap();
        assert_relative_eq!(f, 2.955f64.exp_m1() / 2.955 - 1.0, max_relative = 1e-13);
        assert_relative_eq!(f, 5.159635438183811, max_relative = 1e-12);
    }

    #[test]
    fn affine_f_scales_linearly() {
        let spec = ObservableSpec::new(1.0, 0.0, MapKind::Affine(2.0), MapKind::Identity);
        let p = path(1, &[], 1.0, 1.0);
        let f = exact_functional(&p, &spec, 1.0, 0.0).unwrap();
        assert_relative_eq!(f, 2.0 * 1.0f64.exp_m1(), max_relative = 1e-14);
    }

    #[test]
    fn path_free_when_a_zero() {
        let spec = ObservableSpec::new(0.0, 0.0, MapKind::Identity, MapKind::Identity);
        let p = path(-1, &[0.3, 0.4], 1.0, 3.0);
        assert_eq!(exact_functional(&p, &spec, 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn nonlinear_f_rejected_in_closed_form() {
        let spec = ObservableSpec::new(1.0, 0.0, MapKind::CallFloor(1.0, 0.0), MapKind::Identity);
        let p = path(1, &[], 1.0, 1.0);
        assert_eq!(
            exact_functional(&p, &spec, 1.0, 0.0),
            Err(FunctionalError::NonlinearF)
        );
    }

    #[test]
    fn overflow_is_an_error_not_infinity() {
        let p = path(1, &[], 1.0, 1.0);
        assert!(matches!(
            exact_exp_avg_integral(&p, 1000.0, 0.0, 1.0),
            Err(FunctionalError::Overflow { .. })
        ));
    }

    #[test]
    fn grid_constant_zero_path() {
        let g = GridPath {
            horizon: 1.0,
            positions: vec![0.0; 11],
        };
        let spec = ObservableSpec::new(5.0, 0.0, MapKind::Identity, MapKind::Identity);
        assert_eq!(grid_functional(&g, &spec, 0.0), 1.0);
    }

    #[test]
    fn grid_linear_path_converges() {
        let n = 1_000_000usize;
        let positions: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let g = GridPath { horizon: 1.0, positions };
        let spec = ObservableSpec::new(1.0, 0.0, MapKind::Identity, MapKind::Identity);
        let v = grid_functional(&g, &spec, 0.0);
        assert_relative_eq!(v, 1.0f64.exp_m1(), max_relative = 3e-6);
        // n = 1 keeps only the left endpoint e^0.
        let g1 = GridPath { horizon: 1.0, positions: vec![0.0, 1.0] };
        assert_eq!(grid_functional(&g1, &spec, 0.0), 1.0);
    }

    #[test]
    fn weight_squared_delegates_to_doubled_exponents() {
        let p = path(1, &[0.2, 0.9], 1.0, 1.0);
        let (a, b) = (0.7, -0.3);
        assert_eq!(
            weight_squared_exact(&p, a, b, 1.0).unwrap(),
            exact_exp_avg_integral(&p, 2.0 * a, 2.0 * b, 1.0).unwrap()
        );
        let p0 = path(1, &[], 1.0, 1.0);
        assert_relative_eq!(
            weight_squared_exact(&p0, 0.5, 0.0, 1.0).unwrap(),
            1.0f64.exp_m1(),
            max_relative = 1e-14
        );
        assert_eq!(weight_squared_exact(&p0, 0.0, 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn zero_coefficient_limit_is_continuous() {
        // One segment of length 1 with slope coefficient eps: the closed form
        // must approach the limit branch value e^0·Δ = 1.
        let p = path(1, &[], 1.0, 1.0);
        let limit = exact_exp_avg_integral(&p, 0.0, 0.0, 1.0).unwrap();
        for eps in [1e-12, -1e-12, 1e-6, -1e-6] {
            // a = eps, b = 0 gives coeff = eps on the single segment.
            let v = exact_exp_avg_integral(&p, eps, 0.0, 1.0).unwrap();
            assert!((v - limit).abs() <= 2.0 * eps.abs(), "eps={eps} v={v}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_matches_riemann_oracle(
            seed in any::<u64>(),
            lambda in 1.0f64..100.0,
            a in -3.0f64..3.0,
            b in -1.0f64..1.0,
        ) {
            let mut rng = RngStream::new(seed, 0).rng();
            let p = sample_sym_path(lambda, 1.0, 1.0, SimVariant::Collated, false, &mut rng);
            let exact = exact_exp_avg_integral(&p, a, b, 1.0).unwrap();
            let oracle = riemann_exp_avg(&p, a, b, 1.0, 100_000);
            prop_assert!((exact - oracle).abs() / exact <= 1e-4);
        }

        #[test]
        fn positivity(seed in any::<u64>(), a in -3.0f64..3.0, b in -1.0f64..1.0) {
            let mut rng = RngStream::new(seed, 1).rng();
            let p = sample_sym_path(10.0, 1.0, 1.0, SimVariant::Alternating, false, &mut rng);
            prop_assert!(exact_exp_avg_integral(&p, a, b, 1.0).unwrap() > 0.0);
            prop_assert!(weight_squared_exact(&p, a, b, 1.0).unwrap() > 0.0);
        }

        #[test]
        fn lusin_lipschitz_inequality_on_grids(
            seed in any::<u64>(),
            a in -2.0f64..2.0,
            b in -0.5f64..0.5,
        ) {
            let mut rng = RngStream::new(seed, 2).rng();
            let spec = ObservableSpec::new(a, b, MapKind::Identity, MapKind::CallFloor(1.0, 0.0));
            let px = sample_sym_path(8.0, 1.0, 1.0, SimVariant::Alternating, false, &mut rng);
            let py = sample_sym_path(8.0, 1.0, 1.0, SimVariant::Alternating, false, &mut rng);
            let gx = sample_telegraph_grid(&px, 256);
            let gy = sample_telegraph_grid(&py, 256);
            let fx = grid_functional(&gx, &spec, 0.0);
            let fy = grid_functional(&gy, &spec, 0.0);
            let wx = weight_squared_grid(&gx, a, b).sqrt();
            let wy = weight_squared_grid(&gy, a, b).sqrt();
            let dist = {
                let mut s = 0.0;
                for i in 0..gx.n_steps() {
                    let d = gx.positions[i] - gy.positions[i];
                    s += d * d;
                }
                (s / gx.n_steps() as f64).sqrt()
            };
            let kappa = lipschitz_kappa(&spec);
            prop_assert!((fx - fy).abs() <= kappa * 0.5 * (wx + wy) * dist + 1e-12);
        }
    }
}
