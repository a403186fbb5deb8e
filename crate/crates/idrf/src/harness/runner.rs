//! Realization batches over independent streams, Table-4 counters, the
//! direct shot-noise oracle, and cold/warm timing.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::config::{Config, MethodConfig};
use super::TargetGrid;
use crate::error::{Error, Result};
use crate::field::{FieldRealization, RealizationMeta};
use crate::haar::{synthesize_wavelet, CoefficientStore, WaveletPlan, WaveletPlanConfig};
use crate::kernels::KernelSpec;
use crate::measures::MeasureSpec;
use crate::rng::RngStream;
use crate::step::{build_grid, min_n_for_eps, synthesize_step, StepPlan};

enum Plan {
    Step(StepPlan),
    Wavelet(WaveletPlan),
}

impl Plan {
    fn synthesize(
        &self,
        m: MeasureSpec,
        targets: &[Vec<f64>],
        stream: RngStream,
    ) -> Result<FieldRealization> {
        match self {
            Plan::Step(p) => synthesize_step(p, m, targets, stream),
            Plan::Wavelet(p) => synthesize_wavelet(p, m, targets, stream),
        }
    }
}

fn build_plan(config: &Config, coef_cache: Option<&Path>) -> Result<Plan> {
    let kernel = config.kernel_spec()?;
    let a = kernel.support_halfwidth;
    match &config.method {
        MethodConfig::Step { n, epsilon } => {
            let n = match (n, epsilon) {
                (Some(n), _) => *n,
                (None, Some(eps)) => {
                    let (c_t, gamma) = kernel.holder.ok_or_else(|| {
                        Error::usage("step epsilon needs kernel Hölder metadata")
                    })?;
                    let s = config.measure.error_exponent();
                    min_n_for_eps(c_t, gamma, a, config.dim, s, *eps)?
                }
                (None, None) => unreachable!("validated at parse time"),
            };
            let plan = StepPlan::new(build_grid(a, n, config.dim)?, kernel)?;
            Ok(Plan::Step(plan))
        }
        MethodConfig::Wavelet {
            epsilon,
            epsilon_split,
            extra_levels,
            conservative_delta,
            ..
        } => {
            let mode = config.cutoff_mode()?;
            let s = config.measure.error_exponent();
            let plan_cfg = WaveletPlanConfig {
                eps: *epsilon,
                split: *epsilon_split,
                extra_levels: *extra_levels,
                mode,
                conservative_delta: *conservative_delta,
            };
            let mut plan = WaveletPlan::new(kernel, s, plan_cfg)?;
            if let Some(dir) = coef_cache {
                plan = plan.with_store(CoefficientStore::new(dir)?);
            }
            Ok(Plan::Wavelet(plan))
        }
    }
}

/// Run `config.realizations` realizations over independent child streams.
///
/// `threads = 1` keeps everything on the calling thread; otherwise the
/// realization indices are split into contiguous chunks, one per worker.
/// Output is identical for every thread count.
pub fn run_batch(
    config: &Config,
    threads: usize,
    coef_cache: Option<&Path>,
) -> Result<Vec<FieldRealization>> {
    if threads == 0 {
        return Err(Error::usage("run_batch: threads must be at least 1"));
    }
    let plan = Arc::new(build_plan(config, coef_cache)?);
    let grid = TargetGrid::new(config.window, config.grid, config.dim)?;
    let targets = grid.all_points();
    let root = RngStream::root(config.seed);
    let r = config.realizations;
    if r == 0 {
        return Ok(Vec::new());
    }
    if threads == 1 {
        return (0..r)
            .map(|i| plan.synthesize(config.measure, &targets, root.child(i as u64)))
            .collect();
    }
    let workers = threads.min(r);
    let chunk = r.div_ceil(workers);
    let mut out: Vec<Option<Result<FieldRealization>>> = Vec::new();
    out.resize_with(r, || None);
    std::thread::scope(|scope| {
        for (w, slot) in out.chunks_mut(chunk).enumerate() {
            let plan = Arc::clone(&plan);
            let targets = &targets;
            scope.spawn(move || {
                for (j, s) in slot.iter_mut().enumerate() {
                    let i = w * chunk + j;
                    *s = Some(plan.synthesize(config.measure, targets, root.child(i as u64)));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("worker filled every slot")).collect()
}

/// Table-4 counters: terms in the approximating sum and independent
/// increments, for the full (unselected) schemes.
pub fn count_summands(method: &str, n: u32, d: usize) -> Result<(u64, u64)> {
    match method {
        "step" => {
            if n == 0 {
                return Err(Error::usage("count_summands: step needs n ≥ 1"));
            }
            let cells = (2 * n as u64).pow(d as u32);
            Ok((cells, cells))
        }
        "wavelet" => {
            let u = 1 + (1u64 << (d - 1)) * d as u64 * ((1u64 << (n + 1)) - 1);
            let rv = 1u64 << (d as u32 * (n + 1));
            Ok((u, rv))
        }
        other => Err(Error::usage(format!("count_summands: unknown method `{other}`"))),
    }
}

/// Resolve the configured method to its Table-4 counters (full scheme, no
/// selection): method name, summands, random variables.
pub fn resolved_counts(config: &Config) -> Result<(String, u64, u64)> {
    match build_plan(config, None)? {
        Plan::Step(p) => {
            let (u, rv) = count_summands("step", p.grid.n as u32, config.dim)?;
            Ok(("step".into(), u, rv))
        }
        Plan::Wavelet(p) => {
            let (u, rv) = count_summands("wavelet", p.z, config.dim)?;
            Ok(("wavelet".into(), u, rv))
        }
    }
}

/// Direct Poisson shot-noise field `X(t) = Σ_{x ∈ Ψ} f_t(x)` with `Ψ` a
/// homogeneous Poisson point set of the given intensity on the kernel
/// support box.
pub fn shot_noise_direct(
    kernel: &KernelSpec,
    intensity: f64,
    targets: &[Vec<f64>],
    stream: RngStream,
) -> Result<FieldRealization> {
    if !(intensity >= 0.0) {
        return Err(Error::usage("shot_noise_direct: intensity must be nonnegative"));
    }
    let t0 = Instant::now();
    let support = kernel.support_box();
    let mean = intensity * support.volume();
    let mut rng = stream.child(0).rng();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|_| Error::usage("shot_noise_direct: invalid Poisson mean"))?
            .sample(&mut rng) as u64
    } else {
        0
    };
    let d = kernel.dim;
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let x: Vec<f64> = (0..d)
            .map(|i| rng.gen_range(support.lo[i]..support.hi[i]))
            .collect();
        points.push(x);
    }
    let values: Vec<f64> = targets
        .iter()
        .map(|t| points.iter().map(|x| kernel.eval(t, x)).sum())
        .collect();
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(FieldRealization {
        values,
        meta: RealizationMeta {
            method: "shot_noise".into(),
            detail: format!("intensity={intensity}"),
            epsilon: None,
            measure: MeasureSpec::poisson(intensity.max(f64::MIN_POSITIVE))?,
            seed: stream.seed,
            stream_id: stream.stream_id,
            summands: count,
            random_variables: count + 1,
            coefficient_ms: 0.0,
            synthesis_ms: ms,
        },
    })
}

/// Cold/warm timing split over one batch, run sequentially.
#[derive(Clone, Debug)]
pub struct BenchReport {
    pub cold_coefficient_ms: f64,
    pub cold_total_ms: f64,
    pub warm_median_ms: f64,
    pub realizations: usize,
    pub summands: u64,
    pub random_variables: u64,
}

pub fn bench(config: &Config, coef_cache: Option<&Path>) -> Result<BenchReport> {
    if config.realizations < 2 {
        return Err(Error::usage("bench: need at least 2 realizations"));
    }
    let batch = run_batch(config, 1, coef_cache)?;
    let cold = &batch[0].meta;
    let mut warm: Vec<f64> = batch[1..]
        .iter()
        .map(|r| r.meta.coefficient_ms + r.meta.synthesis_ms)
        .collect();
    warm.sort_by(f64::total_cmp);
    let warm_median_ms = warm[warm.len() / 2];
    Ok(BenchReport {
        cold_coefficient_ms: cold.coefficient_ms,
        cold_total_ms: cold.coefficient_ms + cold.synthesis_ms,
        warm_median_ms,
        realizations: batch.len(),
        summands: cold.summands,
        random_variables: cold.random_variables,
    })
}
