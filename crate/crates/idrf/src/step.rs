//! Step-function scheme: the regular grid, the synthesis sum
//! `X̃⁽ⁿ⁾(t) = Σ_{|k|≤n} f_t(ξ_k) Λ(Δ_k)`, and its error bounds.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::error_metrics::{err_s_cells, ErrReport};
use crate::field::{FieldRealization, RealizationMeta};
use crate::geom::AxisBox;
use crate::kernels::KernelSpec;
use crate::measures::{sample_with_rng, MeasureSpec};
use crate::rng::RngStream;

/// Regular partition of `[−A,A]^d` into `(2n)^d` half-open cells
/// `Δ_k = Π [k_i A/n, (k_i+1) A/n)` with nodes `ξ_k` at the lower-left
/// corners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPartition {
    pub halfwidth: f64,
    pub n: usize,
    pub dim: usize,
}

pub fn build_grid(halfwidth: f64, n: usize, dim: usize) -> Result<GridPartition> {
    if !(halfwidth > 0.0) || n == 0 || dim == 0 {
        return Err(Error::usage("build_grid: need A > 0, n ≥ 1, d ≥ 1"));
    }
    Ok(GridPartition { halfwidth, n, dim })
}

impl GridPartition {
    pub fn cells_per_axis(&self) -> usize {
        2 * self.n
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_axis().pow(self.dim as u32)
    }

    pub fn cell_width(&self) -> f64 {
        self.halfwidth / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(self.dim as i32)
    }

    /// Per-axis indices (each in `0..2n`) of the cell with the given
    /// row-major flat index.
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let m = self.cells_per_axis();
        let mut idx = vec![0; self.dim];
        let mut rest = flat;
        for i in (0..self.dim).rev() {
            idx[i] = rest % m;
            rest /= m;
        }
        idx
    }

    /// Node `ξ_k`, the lower-left corner of cell `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let w = self.cell_width();
        self.multi_index(flat)
            .into_iter()
            .map(|i| -self.halfwidth + i as f64 * w)
            .collect()
    }

    pub fn cell(&self, flat: usize) -> AxisBox {
        let lo = self.node(flat);
        let w = self.cell_width();
        let hi = lo.iter().map(|l| l + w).collect();
        AxisBox { lo, hi }
    }
}

type WeightRow = Arc<Vec<(u32, f64)>>;

/// Grid + kernel with per-target weight rows cached across realizations.
pub struct StepPlan {
    pub grid: GridPartition,
    pub kernel: KernelSpec,
    cache: Mutex<HashMap<Vec<u64>, WeightRow>>,
}

impl StepPlan {
    pub fn new(grid: GridPartition, kernel: KernelSpec) -> Result<Self> {
        if grid.dim != kernel.dim {
            return Err(Error::usage("step plan: grid and kernel dimensions differ"));
        }
        if grid.halfwidth > kernel.support_halfwidth + 1e-12 {
            return Err(Error::usage(
                "step plan: grid extends beyond the kernel support box",
            ));
        }
        Ok(StepPlan {
            grid,
            kernel,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Sparse row of nonzero weights `f_t(ξ_k)`, cached per target.
    pub fn weights_for(&self, t: &[f64]) -> WeightRow {
        let key: Vec<u64> = t.iter().map(|v| v.to_bits()).collect();
        if let Some(row) = self.cache.lock().unwrap().get(&key) {
            return Arc::clone(row);
        }
        let mut row = Vec::new();
        for flat in 0..self.grid.num_cells() {
            let w = self.kernel.eval(t, &self.grid.node(flat));
            if w != 0.0 {
                row.push((flat as u32, w));
            }
        }
        let row = Arc::new(row);
        self.cache.lock().unwrap().insert(key, Arc::clone(&row));
        row
    }
}

/// One realization of the step approximant at every target, sharing one
/// vector of cell increments `Λ(Δ_k)` across targets.
pub fn synthesize_step(
    plan: &StepPlan,
    m: MeasureSpec,
    targets: &[Vec<f64>],
    stream: RngStream,
) -> Result<FieldRealization> {
    let t0 = Instant::now();
    let rows: Vec<WeightRow> = targets.iter().map(|t| plan.weights_for(t)).collect();
    let weight_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let cells = plan.grid.num_cells();
    let vol = plan.grid.cell_volume();
    let mut rng = stream.child(0).rng();
    let mut draws = Vec::with_capacity(cells);
    for _ in 0..cells {
        draws.push(sample_with_rng(m, vol, &mut rng)?);
    }
    let values: Vec<f64> = rows
        .iter()
        .map(|row| row.iter().map(|&(k, w)| w * draws[k as usize]).sum())
        .collect();
    let synth_ms = t1.elapsed().as_secs_f64() * 1e3;

    Ok(FieldRealization {
        values,
        meta: RealizationMeta {
            method: "step".into(),
            detail: format!("n={}", plan.grid.n),
            epsilon: None,
            measure: m,
            seed: stream.seed,
            stream_id: stream.stream_id,
            summands: cells as u64,
            random_variables: cells as u64,
            coefficient_ms: weight_ms,
            synthesis_ms: synth_ms,
        },
    })
}

/// Quadrature value of `Err_s = ‖f_t − f̃_t^{(n)}‖_{L^s}` for the step
/// approximant, integrating cell by cell so the discontinuities never sit
/// inside a quadrature panel.
pub fn step_error(plan: &StepPlan, t: &[f64], s: f64, rel_tol: f64) -> Result<ErrReport> {
    let grid = plan.grid;
    let cells: Vec<AxisBox> = (0..grid.num_cells()).map(|f| grid.cell(f)).collect();
    let width = grid.cell_width();
    let approx = |x: &[f64]| {
        let mut flat = 0usize;
        for &xi in x {
            let i = (((xi + grid.halfwidth) / width) as usize).min(grid.cells_per_axis() - 1);
            flat = flat * grid.cells_per_axis() + i;
        }
        plan.kernel.eval(t, &grid.node(flat))
    };
    err_s_cells(&|x: &[f64]| plan.kernel.eval(t, x), &approx, s, &cells, rel_tol)
}

fn check_bound_args(c_t: f64, gamma_t: f64, a: f64, d: usize, s: f64, n: usize) -> Result<()> {
    if !(s > 0.0 && s <= 2.0) {
        return Err(Error::usage("bound: theorem requires 0 < s ≤ 2"));
    }
    if !(gamma_t > 0.0 && gamma_t <= 1.0) || !(c_t > 0.0) {
        return Err(Error::usage("bound: need C_t > 0 and 0 < γ_t ≤ 1"));
    }
    if !(a > 0.0) || d == 0 || n == 0 {
        return Err(Error::usage("bound: need A > 0, d ≥ 1, n ≥ 1"));
    }
    Ok(())
}

/// Hölder step bound
/// `Err_s ≤ (2^d C_t d / (1 + γ_t s))^{1/s} A^{γ_t + d/s} n^{−γ_t}`.
pub fn bound_holder(c_t: f64, gamma_t: f64, a: f64, d: usize, s: f64, n: usize) -> Result<f64> {
    check_bound_args(c_t, gamma_t, a, d, s, n)?;
    let df = d as f64;
    let lead = (2f64.powi(d as i32) * c_t * df / (1.0 + gamma_t * s)).powf(1.0 / s);
    Ok(lead * a.powf(gamma_t + df / s) * (n as f64).powf(-gamma_t))
}

/// The same bound for a control measure `c · Lebesgue`.
pub fn bound_holder_scaled(
    c_t: f64,
    gamma_t: f64,
    a: f64,
    d: usize,
    s: f64,
    n: usize,
    lebesgue_factor: f64,
) -> Result<f64> {
    if !(lebesgue_factor > 0.0) {
        return Err(Error::usage("bound: control-measure factor must be positive"));
    }
    Ok(lebesgue_factor.sqrt() * bound_holder(c_t, gamma_t, a, d, s, n)?)
}

/// The constant `D(d,s)` of the polar-coordinate bound.
pub fn d_constant(d: usize, s: f64) -> Result<f64> {
    let df = d as f64;
    match d {
        0 | 1 => Err(Error::usage("D(d,s) is defined for d ≥ 2")),
        2 => Ok(1.0),
        3 => Ok(2f64.powf(1.0 / s)),
        4 => Ok(std::f64::consts::PI.powf(1.0 / s)),
        _ if d % 2 == 1 => Ok((std::f64::consts::PI.powf(df - 3.0) * gamma_fn(1.5)
            / gamma_fn(df / 2.0))
        .powf(1.0 / s)),
        _ => Ok((std::f64::consts::PI.powf(df - 3.5) * gamma_fn(1.5)
            / gamma_fn((df - 1.0) / 2.0))
        .powf(1.0 / s)),
    }
}

/// Polar-coordinate variant of the step bound, `d ≥ 2`.
pub fn bound_polar(c_t: f64, gamma_t: f64, a: f64, d: usize, s: f64, n: usize) -> Result<f64> {
    check_bound_args(c_t, gamma_t, a, d, s, n)?;
    if d < 2 {
        return Err(Error::usage("bound_polar: unsupported for d = 1"));
    }
    let df = d as f64;
    let lead = (2f64.powi(d as i32) * c_t * std::f64::consts::FRAC_PI_2
        * df.powf((gamma_t * s + df) / 2.0)
        / (gamma_t * s + df))
        .powf(1.0 / s);
    Ok(lead * a.powf(gamma_t + df / s) * (n as f64).powf(-gamma_t) * d_constant(d, s)?)
}

/// Left side of the crossover inequality
/// `(π/2) d^{(γs+d)/2−1} D^s(d,s) (1+γs)/(γs+d)`; values ≥ 1 mean the
/// polar estimate is worse than the Hölder one.
pub fn polar_crossover(gamma_t: f64, s: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    Ok(std::f64::consts::FRAC_PI_2
        * df.powf((gamma_t * s + df) / 2.0 - 1.0)
        * d_constant(d, s)?.powf(s)
        * (1.0 + gamma_t * s)
        / (gamma_t * s + df))
}

/// Smallest `n` with `bound_holder(...) ≤ eps`.
pub fn min_n_for_eps(c_t: f64, gamma_t: f64, a: f64, d: usize, s: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::usage("min_n_for_eps: eps must be positive"));
    }
    let at_one = bound_holder(c_t, gamma_t, a, d, s, 1)?;
    let mut n = ((at_one / eps).powf(1.0 / gamma_t)).ceil().max(1.0) as usize;
    // guard against floating-point edge cases around the closed-form inverse
    while n > 1 && bound_holder(c_t, gamma_t, a, d, s, n - 1)? <= eps {
        n -= 1;
    }
    while bound_holder(c_t, gamma_t, a, d, s, n)? > eps {
        n += 1;
    }
    Ok(n)
}
