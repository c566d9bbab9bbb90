//! Deterministic parallel Monte Carlo estimation, the rate-convergence
//! experiment and its log-log regression.
//!
//! Replicate `i` of an estimation always consumes `RngStream(seed, i)` and
//! replicates are reduced blockwise in index order, so results are bitwise
//! identical for any worker count and scheduling.

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::total_error_bound_sym;
use crate::core_model::{MapKind, ModelParams, ObservableSpec, SimVariant};
use crate::functionals::{exact_functional, grid_functional};
use crate::path_samplers::{mix_seed, sample_bm_grid, sample_sym_path, RngStream};

/// Replicates per sequential block; blocks are the unit of parallelism.
const BLOCK: u64 = 8192;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(u64),
    #[error("replicate {replicate} produced a non-finite value {value}")]
    NonFinite { replicate: u64, value: f64 },
    #[error("regression needs at least 2 usable points, got {0}")]
    TooFewPoints(usize),
    #[error("regression abscissas are all equal")]
    DegenerateAbscissa,
    #[error("bound evaluation failed: {0}")]
    Bounds(String),
}

/// Single-pass mean/variance accumulator (Welford) with an associative
/// merge, so blockwise reductions reproduce the sequential result.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let delta = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += delta * n2 / n;
        self.m2 += other.m2 + delta * delta * n1 * n2 / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

/// Estimate the mean of `task` over `n` replicates. Replicate `i` draws from
/// `RngStream(seed, i)`; the result does not depend on the worker count.
/// Non-finite samples abort with the offending replicate index.
pub fn mc_estimate<F>(task: F, n: u64, seed: u64) -> Result<MCEstimate, McError>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    if n < 2 {
        return Err(McError::TooFewSamples(n));
    }
    let n_blocks = n.div_ceil(BLOCK);
    let accs: Result<Vec<MomentAccumulator>, McError> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut acc = MomentAccumulator::new();
            let lo = block * BLOCK;
            let hi = (lo + BLOCK).min(n);
            for i in lo..hi {
                let mut rng = RngStream::new(seed, i).rng();
                let x = task(&mut rng);
                if !x.is_finite() {
                    return Err(McError::NonFinite {
                        replicate: i,
                        value: x,
                    });
                }
                acc.push(x);
            }
            Ok(acc)
        })
        .collect();
    let mut total = MomentAccumulator::new();
    for acc in accs?.iter() {
        total.merge(acc);
    }
    Ok(MCEstimate {
        mean: total.mean(),
        std_error: total.std_error(),
        n: total.count(),
    })
}

/// Configuration of the rate-convergence experiment. Defaults mirror the
/// reference setup: `K ∈ {0.7, 1, 1.3}`, `σ ∈ {0.3, 0.5, 0.7}`,
/// `λ ∈ {2.5, 5, ..., 100}`, `T = L = v0 = 1`, a 10⁴-point Brownian grid,
/// and per-cell exponents `a = σ√λ`, `b = -σ²/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strikes: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub n_samples: u64,
    pub n_grid_steps: usize,
    pub variant: SimVariant,
    pub pin_initial_sign: bool,
    pub seed: u64,
    pub c: f64,
    /// Audit flag: sample the Brownian side with diffusivity 1 instead of
    /// the Kac-regime value `v0²/(λL²)`.
    pub literal_standard_bm: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strikes: vec![0.7, 1.0, 1.3],
            sigmas: vec![0.3, 0.5, 0.7],
            lambda_grid: (1..=40).map(|i| 2.5 * i as f64).collect(),
            n_samples: 10_000_000,
            n_grid_steps: 10_000,
            variant: SimVariant::Alternating,
            pin_initial_sign: false,
            seed: 7_461_309_152_763_024_881,
            c: 1.0,
            literal_standard_bm: false,
        }
    }
}

/// One experiment cell: both estimates, their signed difference and the
/// theoretical bound at the configured `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub strike: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub n: u64,
    pub est_brownian: f64,
    pub se_brownian: f64,
    pub est_telegraph: f64,
    pub se_telegraph: f64,
    /// `est_brownian - est_telegraph`, exactly.
    pub error: f64,
    pub bound_per_c: f64,
    pub variant: SimVariant,
    pub seed: u64,
}

/// Run the experiment grid: one row per `(K, σ, λ)` cell. The telegraph side
/// is simulated exactly with the configured variant; the Brownian side is
/// discretized on `n_grid_steps` equidistant points. The two sides draw from
/// disjoint seed domains derived from `(seed, cell index, side)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>, McError> {
    if config.n_samples < 2 {
        return Err(McError::TooFewSamples(config.n_samples));
    }
    let horizon = 1.0;
    let length_scale = 1.0;
    let v0 = 1.0;
    let mut rows = Vec::new();
    let mut cell_idx: u64 = 0;
    for &strike in &config.strikes {
        for &sigma in &config.sigmas {
            for &lambda in &config.lambda_grid {
                let a = sigma * lambda.sqrt();
                let b = -0.5 * sigma * sigma;
                let spec =
                    ObservableSpec::new(a, b, MapKind::Identity, MapKind::CallFloor(1.0, 0.0));
                let tel_seed = mix_seed(config.seed, 2 * cell_idx);
                let bm_seed = mix_seed(config.seed, 2 * cell_idx + 1);

                let variant = config.variant;
                let pin = config.pin_initial_sign;
                let tel = mc_estimate(
                    |rng| {
                        let path = sample_sym_path(lambda, v0, horizon, variant, pin, rng);
                        exact_functional(&path, &spec, length_scale, strike)
                            .unwrap_or(f64::NAN)
                    },
                    config.n_samples,
                    tel_seed,
                )?;

                let sigma2_bm = if config.literal_standard_bm {
                    1.0
                } else {
                    v0 * v0 / (lambda * length_scale * length_scale)
                };
                let n_grid = config.n_grid_steps;
                let bm = mc_estimate(
                    |rng| {
                        let path = sample_bm_grid(sigma2_bm, 0.0, horizon, n_grid, rng);
                        grid_functional(&path, &spec, strike)
                    },
                    config.n_samples,
                    bm_seed,
                )?;

                let params = ModelParams::symmetric(lambda, v0, horizon, length_scale)
                    .map_err(|e| McError::Bounds(e.to_string()))?;
                let bound = total_error_bound_sym(&spec, &params, config.c)
                    .map_err(|e| McError::Bounds(e.to_string()))?;

                rows.push(ExperimentRow {
                    strike,
                    sigma,
                    lambda,
                    n: config.n_samples,
                    est_brownian: bm.mean,
                    se_brownian: bm.std_error,
                    est_telegraph: tel.mean,
                    se_telegraph: tel.std_error,
                    error: bm.mean - tel.mean,
                    bound_per_c: bound.total,
                    variant: config.variant,
                    seed: config.seed,
                });
                cell_idx += 1;
            }
        }
    }
    Ok(rows)
}

/// Ordinary least squares fit of `ln|error|` on `ln λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub intercept: f64,
    pub slope: f64,
    pub n_points: usize,
    pub r_squared: f64,
    /// How many input errors were non-positive (their magnitude was used).
    pub n_nonpositive: usize,
}

/// Regress `ln|error|` on `ln λ`. Points with exactly zero error are
/// dropped; negative errors contribute through their magnitude and are
/// counted in `n_nonpositive`.
pub fn ols_loglog(points: &[(f64, f64)]) -> Result<RegressionFit, McError> {
    let n_nonpositive = points.iter().filter(|(_, e)| *e <= 0.0).count();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e != 0.0)
        .map(|&(lambda, e)| (lambda.ln(), e.abs().ln()))
        .collect();
    if usable.len() < 2 {
        return Err(McError::TooFewPoints(usable.len()));
    }
    let n = usable.len() as f64;
    let x_bar = usable.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let y_bar = usable.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|&(x, _)| (x - x_bar) * (x - x_bar)).sum();
    if sxx == 0.0 {
        return Err(McError::DegenerateAbscissa);
    }
    let sxy: f64 = usable
        .iter()
        .map(|&(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let ss_tot: f64 = usable.iter().map(|&(_, y)| (y - y_bar) * (y - y_bar)).sum();
    let ss_res: f64 = usable
        .iter()
        .map(|&(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RegressionFit {
        intercept,
        slope,
        n_points: usable.len(),
        r_squared,
        n_nonpositive,
    })
}

/// Empirical-vs-analytic comparison of the telegraph MGF at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfCheck {
    pub s: f64,
    pub empirical: f64,
    pub analytic: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Compare the empirical mean of `e^{2a·X(s)}` (unit speed, unit length
/// scale) against the closed-form MGF at each requested time point.
pub fn validate_mgf(
    lambda: f64,
    a: f64,
    s_list: &[f64],
    n: u64,
    seed: u64,
    variant: SimVariant,
) -> Result<Vec<MgfCheck>, McError> {
    let mut out = Vec::with_capacity(s_list.len());
    for (idx, &s) in s_list.iter().enumerate() {
        let est = mc_estimate(
            |rng| {
                let path = sample_sym_path(lambda, 1.0, s, variant, false, rng);
                (2.0 * a * path.position_at(s)).exp()
            },
            n,
            mix_seed(seed, idx as u64),
        )?;
        let analytic = crate::bounds::telegraph_mgf(a, lambda, 1.0, 1.0, s);
        let z_score = if est.std_error == 0.0 {
            0.0
        } else {
            (est.mean - analytic) / est.std_error
        };
        out.push(MgfCheck {
            s,
            empirical: est.mean,
            analytic,
            std_error: est.std_error,
            z_score,
        });
    }
    Ok(out)
}
