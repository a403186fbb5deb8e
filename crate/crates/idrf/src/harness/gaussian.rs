//! Validation of the Gaussian special case against the closed-form
//! covariance `C(h) = π a b² e^{−h²/(2a)}` of the Gaussian-bell kernel.
//!
//! The estimator runs the step scheme through a separable two-pass sum so
//! the per-realization cost is linear in the grid instead of quadratic:
//! first collapse the increment matrix along the second axis against the
//! one-dimensional profile, then collapse the result along the first axis.

use super::config::{Config, MethodConfig};
use crate::error::{Error, Result};
use crate::measures::{sample_with_rng, MeasureSpec};
use crate::rng::RngStream;
use crate::step::min_n_for_eps;

/// `C(h) = π a b² e^{−h²/(2a)}` for the Gaussian-bell kernel with a
/// Gaussian basis in two dimensions.
pub fn theoretical_covariance(a: f64, b: f64, h: f64) -> f64 {
    std::f64::consts::PI * a * b * b * (-h * h / (2.0 * a)).exp()
}

#[derive(Clone, Debug)]
pub struct LagEstimate {
    pub h: f64,
    pub estimate: f64,
    pub theory: f64,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub realizations: usize,
    pub step_n: usize,
    pub mean: f64,
    pub variance: f64,
    pub lags: Vec<LagEstimate>,
    pub max_abs_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Per-target sparse row of 1-d profile weights against the increment grid.
struct ProfileRows {
    start: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

fn profile_rows(
    targets: &[f64],
    cells: usize,
    support: f64,
    kernel_a: f64,
    cutoff: f64,
) -> ProfileRows {
    let delta = 2.0 * support / cells as f64;
    let mut start = Vec::with_capacity(targets.len());
    let mut weights = Vec::with_capacity(targets.len());
    for &t in targets {
        let lo = (((t - cutoff + support) / delta).floor().max(0.0)) as usize;
        let hi = ((((t + cutoff + support) / delta).ceil()) as usize).min(cells);
        let mut row = Vec::with_capacity(hi.saturating_sub(lo));
        for k in lo..hi {
            let xi = -support + k as f64 * delta;
            row.push((-(t - xi) * (t - xi) / kernel_a).exp());
        }
        start.push(lo);
        weights.push(row);
    }
    ProfileRows { start, weights }
}

/// Estimate mean, variance, and the covariance along the first axis for the
/// Gaussian-bell / Gaussian-measure configuration, and compare against the
/// closed form at the given tolerance.
pub fn validate_gaussian(config: &Config, realizations: usize, tol: f64) -> Result<ValidationReport> {
    if config.measure != MeasureSpec::Gaussian {
        return Err(Error::usage("validate_gaussian: measure must be gaussian"));
    }
    if config.kernel_name != "gaussian_bell" {
        return Err(Error::usage("validate_gaussian: kernel must be gaussian_bell"));
    }
    if config.dim != 2 {
        return Err(Error::usage("validate_gaussian: the covariance check is two-dimensional"));
    }
    if realizations == 0 || config.grid < 2 {
        return Err(Error::usage("validate_gaussian: need realizations ≥ 1 and grid ≥ 2"));
    }
    let support = config.resolved_support()?;
    let kernel = config.kernel_spec()?;
    let (kernel_a, b) = (config.kernel_a, config.kernel_b);
    let n = match &config.method {
        MethodConfig::Step { n: Some(n), .. } => *n,
        MethodConfig::Step { n: None, epsilon } => {
            // auto precision: L² bound at half the validation tolerance
            let eps = epsilon.unwrap_or(tol / 2.0);
            let (c_t, gamma) = kernel.holder.expect("builtin kernel has Hölder metadata");
            min_n_for_eps(c_t, gamma, support, 2, 2.0, eps)?
        }
        MethodConfig::Wavelet { .. } => {
            return Err(Error::usage("validate_gaussian: configure the step method"));
        }
    };

    let cells = 2 * n;
    let cell_vol = (support / n as f64).powi(2);
    let grid = config.grid;
    let spacing = 2.0 * config.window / grid as f64;
    let targets: Vec<f64> = (0..grid).map(|i| -config.window + i as f64 * spacing).collect();
    // profile is negligible below 1e-10 of its peak
    let cutoff = (kernel_a * (1e10f64).ln()).sqrt();
    let rows = profile_rows(&targets, cells, support, kernel_a, cutoff);

    let max_lag = (0.5 / spacing).round() as usize;
    let lags: Vec<usize> = (0..=max_lag.min(grid - 1)).collect();

    let mut sum = 0.0f64;
    let mut count = 0u64;
    let mut cross = vec![0.0f64; lags.len()];
    let mut cross_count = vec![0u64; lags.len()];

    let root = RngStream::root(config.seed);
    let mut increments = vec![0.0f64; cells * cells];
    let mut collapsed = vec![0.0f64; grid * cells];
    let mut field = vec![0.0f64; grid * grid];
    for r in 0..realizations {
        let mut rng = root.child(r as u64).child(0).rng();
        for v in increments.iter_mut() {
            *v = sample_with_rng(MeasureSpec::Gaussian, cell_vol, &mut rng)?;
        }
        // pass 1: collapse the second axis; row-major increments[k1*cells + k2]
        for (j2, w) in rows.weights.iter().enumerate() {
            let k0 = rows.start[j2];
            for k1 in 0..cells {
                let base = k1 * cells + k0;
                let mut acc = 0.0;
                for (dk, &g) in w.iter().enumerate() {
                    acc += g * increments[base + dk];
                }
                collapsed[j2 * cells + k1] = acc;
            }
        }
        // pass 2: collapse the first axis
        for (j1, w) in rows.weights.iter().enumerate() {
            let k0 = rows.start[j1];
            for j2 in 0..grid {
                let row = &collapsed[j2 * cells..(j2 + 1) * cells];
                let mut acc = 0.0;
                for (dk, &g) in w.iter().enumerate() {
                    acc += g * row[k0 + dk];
                }
                field[j1 * grid + j2] = b * acc;
            }
        }
        for &v in &field {
            sum += v;
        }
        count += field.len() as u64;
        for (li, &lag) in lags.iter().enumerate() {
            let mut acc = 0.0;
            for j1 in 0..grid - lag {
                for j2 in 0..grid {
                    acc += field[j1 * grid + j2] * field[(j1 + lag) * grid + j2];
                }
            }
            cross[li] += acc;
            cross_count[li] += ((grid - lag) * grid) as u64;
        }
    }

    let mean = sum / count as f64;
    let mut lag_estimates = Vec::with_capacity(lags.len());
    let mut max_dev = mean.abs();
    for (li, &lag) in lags.iter().enumerate() {
        let h = lag as f64 * spacing;
        let estimate = cross[li] / cross_count[li] as f64 - mean * mean;
        let theory = theoretical_covariance(kernel_a, b, h);
        max_dev = max_dev.max((estimate - theory).abs());
        lag_estimates.push(LagEstimate { h, estimate, theory });
    }
    let variance = lag_estimates[0].estimate;
    Ok(ValidationReport {
        realizations,
        step_n: n,
        mean,
        variance,
        max_abs_deviation: max_dev,
        tolerance: tol,
        pass: max_dev <= tol,
        lags: lag_estimates,
    })
}
