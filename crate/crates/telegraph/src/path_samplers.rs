//! Exact telegraph path simulation and discretized Brownian paths.
//!
//! Telegraph paths are exact: a path is fully described by its initial
//! velocity sign and the ordered reversal times, and positions are
//! reconstructed by integrating the piecewise-constant velocity. No Euler
//! stepping is involved anywhere on the telegraph side.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use thiserror::Error;

use crate::core_model::SimVariant;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("symmetric component speed {actual} does not match (v0 + v0*)/2 = {expected}")]
    SpeedMismatch { expected: f64, actual: f64 },
    #[error("effective speed must be nonzero")]
    ZeroEffectiveSpeed,
}

/// A seeded, counter-indexed random stream. Identical `(seed, substream)`
/// produce identical draws on every platform, so Monte Carlo replicates can
/// own disjoint substreams and results stay independent of worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub substream: u64,
}

impl RngStream {
    pub fn new(seed: u64, substream: u64) -> Self {
        RngStream { seed, substream }
    }

    /// Instantiate the generator positioned at the start of this substream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream);
        rng
    }
}

/// SplitMix64 finalizer; used to derive disjoint seed domains from a root
/// seed and a salt (experiment cell index, estimator side, ...).
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Exact symmetric telegraph path: initial velocity sign, ordered reversal
/// times in `(0, T)`, horizon and speed.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphPath {
    pub initial_sign: i8,
    pub jump_times: Vec<f64>,
    pub horizon: f64,
    pub speed: f64,
}

impl TelegraphPath {
    /// Velocity sign on segment `i` (0-based): `initial_sign·(-1)^i`.
    pub fn segment_sign(&self, i: usize) -> f64 {
        if i % 2 == 0 {
            f64::from(self.initial_sign)
        } else {
            -f64::from(self.initial_sign)
        }
    }

    /// Position at time `t` by integrating the piecewise-constant velocity.
    ///
    /// Panics when `t` lies outside `[0, T]`.
    pub fn position_at(&self, t: f64) -> f64 {
        assert!(
            (0.0..=self.horizon).contains(&t),
            "t = {t} outside [0, {}]",
            self.horizon
        );
        let mut x = 0.0;
        let mut sign = f64::from(self.initial_sign);
        let mut prev = 0.0;
        for &tj in &self.jump_times {
            if tj >= t {
                break;
            }
            x += sign * self.speed * (tj - prev);
            sign = -sign;
            prev = tj;
        }
        x + sign * self.speed * (t - prev)
    }
}

/// Sample an exact symmetric telegraph path.
///
/// `Collated`: the reversal count is `Poisson(2λT)` and the reversal times
/// are that many sorted `Uniform(0, T)` draws. `Alternating`: reversal times
/// are cumulative sums of i.i.d. `Exp(λ)` dwell times truncated at `T`.
///
/// The initial sign is `±1` with probability 1/2 each, drawn first;
/// `pin_initial_sign` forces `+1` instead (no draw is consumed).
pub fn sample_sym_path<R: Rng + ?Sized>(
    lambda: f64,
    speed: f64,
    horizon: f64,
    variant: SimVariant,
    pin_initial_sign: bool,
    rng: &mut R,
) -> TelegraphPath {
    let initial_sign = if pin_initial_sign {
        1
    } else if rng.random::<bool>() {
        1
    } else {
        -1
    };
    let jump_times = match variant {
        SimVariant::Collated => {
            let n = Poisson::new(2.0 * lambda * horizon)
                .expect("rate must be positive and finite")
                .sample(rng) as usize;
            let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times
        }
        SimVariant::Alternating => {
            let dwell = Exp::new(lambda).expect("rate must be positive and finite");
            let mut times = Vec::new();
            let mut t = dwell.sample(rng);
            while t < horizon {
                times.push(t);
                t += dwell.sample(rng);
            }
            times
        }
    };
    TelegraphPath {
        initial_sign,
        jump_times,
        horizon,
        speed,
    }
}

/// Asymmetric telegraph path decomposed by the Galilean transform:
/// `X(t) = drift_rate·t + sign·X_sym(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetricPath {
    pub drift_rate: f64,
    pub sign: i8,
    pub sym: TelegraphPath,
}

impl AsymmetricPath {
    pub fn position_at(&self, t: f64) -> f64 {
        self.drift_rate * t + f64::from(self.sign) * self.sym.position_at(t)
    }
}

/// Wrap a symmetric path into the asymmetric process with velocity states
/// `{v0, -v0*}`. `sign = +1` corresponds to starting in state `v0`, `-1` to
/// starting in `-v0*`; the symmetric component must carry speed
/// `v = (v0 + v0*)/2`.
pub fn galilean_asym(
    sym: TelegraphPath,
    sign: i8,
    v0: f64,
    v0_star: f64,
) -> Result<AsymmetricPath, PathError> {
    let v = 0.5 * (v0 + v0_star);
    if v == 0.0 {
        return Err(PathError::ZeroEffectiveSpeed);
    }
    if sym.speed != v {
        return Err(PathError::SpeedMismatch {
            expected: v,
            actual: sym.speed,
        });
    }
    Ok(AsymmetricPath {
        drift_rate: 0.5 * (v0 - v0_star),
        sign,
        sym,
    })
}

/// Sample an asymmetric same-rate telegraph path via the Galilean transform.
pub fn sample_asym_path<R: Rng + ?Sized>(
    lambda: f64,
    v0: f64,
    v0_star: f64,
    horizon: f64,
    variant: SimVariant,
    rng: &mut R,
) -> Result<AsymmetricPath, PathError> {
    let v = 0.5 * (v0 + v0_star);
    if v == 0.0 {
        return Err(PathError::ZeroEffectiveSpeed);
    }
    // sign = 1(V(0) = v0) - 1(V(0) = -v0*), uniform over the two states.
    let sign = if rng.random::<bool>() { 1 } else { -1 };
    let sym = sample_sym_path(lambda, v, horizon, variant, true, rng);
    galilean_asym(sym, sign, v0, v0_star)
}

/// Path values on an equidistant time grid `t_i = i·T/n_steps`,
/// `i = 0..=n_steps`, with `positions[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub horizon: f64,
    pub positions: Vec<f64>,
}

impl GridPath {
    pub fn n_steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }
}

/// Discretized Brownian path with the given diffusivity and drift:
/// `x_i = x_{i-1} + drift·dt + √(σ²·dt)·Z_i`.
pub fn sample_bm_grid<R: Rng + ?Sized>(
    sigma2: f64,
    drift: f64,
    horizon: f64,
    n_steps: usize,
    rng: &mut R,
) -> GridPath {
    assert!(n_steps >= 1);
    assert!(sigma2 >= 0.0);
    let dt = horizon / n_steps as f64;
    let sd = (sigma2 * dt).sqrt();
    let mut positions = Vec::with_capacity(n_steps + 1);
    let mut x = 0.0;
    positions.push(x);
    for _ in 0..n_steps {
        let z: f64 = StandardNormal.sample(rng);
        x += drift * dt + sd * z;
        positions.push(x);
    }
    GridPath { horizon, positions }
}

/// Evaluate an exact telegraph path on an equidistant grid. Node values
/// equal `position_at` exactly.
pub fn sample_telegraph_grid(path: &TelegraphPath, n_steps: usize) -> GridPath {
    assert!(n_steps >= 1);
    let dt = path.horizon / n_steps as f64;
    let positions = (0..=n_steps)
        .map(|i| {
            let t = if i == n_steps {
                path.horizon
            } else {
                i as f64 * dt
            };
            path.position_at(t)
        })
        .collect();
    GridPath {
        horizon: path.horizon,
        positions,
    }
}
