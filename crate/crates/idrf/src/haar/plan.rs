//! Wavelet simulation plan: cut-off level, FWT precision budget, near-best
//! n-term selection, and field synthesis from finest-level cell increments.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::cache::CoefficientStore;
use super::fwt::{forward_fwt, CoefficientSet};
use super::{
    cutoff_bound, cutoff_level, fwt_input_precision, psi_norm_s, unscaled_cell_tolerance,
    CutoffMode, HaarIndex,
};
use crate::error::{Error, Result};
use crate::field::{FieldRealization, RealizationMeta};
use crate::geom::AxisBox;
use crate::kernels::KernelSpec;
use crate::measures::{sample_with_rng, MeasureSpec};
use crate::rng::RngStream;

/// One coefficient retained by the n-term selection.
#[derive(Clone, Debug)]
pub struct SelectedCoef {
    pub index: HaarIndex,
    pub coefficient: f64,
    /// Contribution bound `|coefficient| · ‖Ψ‖_{L^s}`.
    pub weight: f64,
}

/// Minimal prefix of the weight-ordered coefficients whose discarded tail
/// stays within the selection budget.
#[derive(Clone, Debug)]
pub struct Selection {
    pub coefs: Vec<SelectedCoef>,
    /// `L^s` bound on the discarded part, in norm units.
    pub discarded: f64,
    pub budget: f64,
}

fn order_rank(idx: &HaarIndex) -> (u8, u32, u32, Vec<u32>) {
    match idx {
        HaarIndex::Father => (0, 0, 0, Vec::new()),
        HaarIndex::Detail { e, k, j } => (1, *k, *e, j.clone()),
    }
}

/// Keep the fewest coefficients such that the `L^s` bound on the dropped
/// remainder is at most `budget`. For `s ≥ 1` the contribution bounds add
/// by the triangle inequality; for `0 < s < 1` their `s`-th powers add.
pub fn nbest_select(set: &CoefficientSet, s: f64, budget: f64) -> Result<Selection> {
    if !(s > 0.0) {
        return Err(Error::usage("nbest_select: s must be positive"));
    }
    if !(budget >= 0.0) {
        return Err(Error::usage("nbest_select: budget must be nonnegative"));
    }
    let mut items: Vec<SelectedCoef> = set
        .iter()
        .map(|(index, coefficient)| {
            let weight = coefficient.abs() * psi_norm_s(&index, set.a, set.d, s);
            SelectedCoef { index, coefficient, weight }
        })
        .collect();
    items.sort_by(|x, y| {
        y.weight
            .total_cmp(&x.weight)
            .then_with(|| order_rank(&x.index).cmp(&order_rank(&y.index)))
    });
    let key = |w: f64| if s < 1.0 { w.powf(s) } else { w };
    let budget_key = key(budget);
    let total: f64 = items.iter().map(|c| key(c.weight)).sum();
    let mut kept = 0.0;
    let mut cut = items.len();
    for (i, c) in items.iter().enumerate() {
        if total - kept <= budget_key {
            cut = i;
            break;
        }
        kept += key(c.weight);
    }
    if total - kept > budget_key && cut == items.len() {
        // all coefficients kept; the remainder is exactly zero
        kept = total;
    }
    items.truncate(cut.min(items.len()));
    let rest = (total - kept).max(0.0);
    let discarded = if s < 1.0 { rest.powf(1.0 / s) } else { rest };
    Ok(Selection { coefs: items, discarded, budget })
}

#[derive(Clone, Copy, Debug)]
pub struct WaveletPlanConfig {
    /// Overall `L^s` error target `ε`.
    pub eps: f64,
    /// Fraction of `ε` given to truncation + selection (`ε₁`); the rest is
    /// the FWT precision budget `ε₂`.
    pub split: f64,
    /// Extra detail levels `l` beyond the minimal cut-off `m_t`.
    pub extra_levels: u32,
    pub mode: CutoffMode,
    /// Take the smaller of the two published `δ` variants at `s = 1`.
    pub conservative_delta: bool,
}

impl WaveletPlanConfig {
    pub fn new(eps: f64, mode: CutoffMode) -> Self {
        WaveletPlanConfig { eps, split: 0.99, extra_levels: 0, mode, conservative_delta: false }
    }
}

struct TargetData {
    coefs: Arc<CoefficientSet>,
    selection: Arc<Selection>,
}

/// Everything deterministic about the wavelet scheme for one kernel: the
/// cut-off level, precision budgets, and per-target coefficient sets with
/// their selections, cached across realizations.
pub struct WaveletPlan {
    pub kernel: KernelSpec,
    pub s: f64,
    pub config: WaveletPlanConfig,
    pub eps1: f64,
    pub eps2: f64,
    /// Minimal cut-off detail level for `ε_t ≤ ε₁`.
    pub m_t: u32,
    /// Finest detail level `z = m_t + l` actually used.
    pub z: u32,
    /// Truncation error bound at level `z`.
    pub eps_star: f64,
    /// Selection budget `ε₁ ⊖ ε*` (additive in `L^s` or its `s`-th power).
    pub budget: f64,
    /// FWT input precision.
    pub delta: f64,
    /// Absolute tolerance on the raw cell integrals.
    pub cell_tol: f64,
    cache: Mutex<HashMap<Vec<u64>, Arc<TargetData>>>,
    store: Option<CoefficientStore>,
}

impl WaveletPlan {
    pub fn new(kernel: KernelSpec, s: f64, config: WaveletPlanConfig) -> Result<Self> {
        if !(config.eps > 0.0) {
            return Err(Error::usage("wavelet plan: eps must be positive"));
        }
        if !(config.split > 0.0 && config.split < 1.0) {
            return Err(Error::usage("wavelet plan: split must lie in (0, 1)"));
        }
        if !(s > 0.0) {
            return Err(Error::usage("wavelet plan: s must be positive"));
        }
        let d = kernel.dim;
        let a = kernel.support_halfwidth;
        let eps1 = config.split * config.eps;
        let eps2 = config.eps - eps1;
        let m_t = cutoff_level(config.mode, s, d, a, eps1)?;
        let z = m_t + config.extra_levels;
        let eps_star = cutoff_bound(config.mode, s, d, a, z)?;
        if eps_star > eps1 {
            return Err(Error::usage(
                "wavelet plan: truncation bound exceeds eps1, nothing left to select",
            ));
        }
        let budget = if s < 1.0 {
            (eps1.powf(s) - eps_star.powf(s)).max(0.0).powf(1.0 / s)
        } else {
            eps1 - eps_star
        };
        let delta = fwt_input_precision(s, d, z, a, eps2, config.conservative_delta)?;
        let cell_tol = unscaled_cell_tolerance(delta, d, z, a);
        Ok(WaveletPlan {
            kernel,
            s,
            config,
            eps1,
            eps2,
            m_t,
            z,
            eps_star,
            budget,
            delta,
            cell_tol,
            cache: Mutex::new(HashMap::new()),
            store: None,
        })
    }

    /// Attach an on-disk store for the FWT input vectors.
    pub fn with_store(mut self, store: CoefficientStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn cells_per_axis(&self) -> usize {
        1usize << (self.z + 1)
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_axis().pow(self.kernel.dim as u32)
    }

    /// One-line description for realization metadata.
    pub fn digest(&self) -> String {
        format!(
            "eps={:.3e} mt={} z={} delta={:.3e}",
            self.config.eps, self.m_t, self.z, self.delta
        )
    }

    fn finest_cell(&self, flat: usize) -> AxisBox {
        let per_axis = self.cells_per_axis();
        let a = self.kernel.support_halfwidth;
        let side = 2.0 * a / per_axis as f64;
        let d = self.kernel.dim;
        let mut lo = vec![0.0; d];
        let mut rest = flat;
        for i in (0..d).rev() {
            lo[i] = -a + (rest % per_axis) as f64 * side;
            rest /= per_axis;
        }
        let hi = lo.iter().map(|l| l + side).collect();
        AxisBox { lo, hi }
    }

    /// Scaled FWT input vector for one target, to precision `delta`.
    fn fwt_input(&self, t: &[f64]) -> Result<Vec<f64>> {
        if let Some(store) = &self.store {
            if let Some(v) = store.load(&self.kernel.id, t, self.z, self.delta) {
                if v.len() == self.num_cells() {
                    return Ok(v);
                }
            }
        }
        let d = self.kernel.dim as f64;
        let a = self.kernel.support_halfwidth;
        let scale = 2f64.powf((self.z + 1) as f64 * d / 2.0) / (2.0 * a).powf(d / 2.0);
        let mut input = Vec::with_capacity(self.num_cells());
        for flat in 0..self.num_cells() {
            let cell = self.finest_cell(flat);
            input.push(self.kernel.cell_integral(t, &cell, self.cell_tol)? * scale);
        }
        if let Some(store) = &self.store {
            store.save(&self.kernel.id, t, self.z, self.delta, &input)?;
        }
        Ok(input)
    }

    fn target_data(&self, t: &[f64]) -> Result<Arc<TargetData>> {
        if t.len() != self.kernel.dim {
            return Err(Error::usage("wavelet plan: target dimension mismatch"));
        }
        let key: Vec<u64> = t.iter().map(|v| v.to_bits()).collect();
        if let Some(data) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(data));
        }
        let input = self.fwt_input(t)?;
        let mut set =
            forward_fwt(&input, self.z, self.kernel.dim, self.kernel.support_halfwidth)?;
        set.delta = Some(self.delta);
        let selection = nbest_select(&set, self.s, self.budget)?;
        let data = Arc::new(TargetData {
            coefs: Arc::new(set),
            selection: Arc::new(selection),
        });
        self.cache.lock().unwrap().insert(key, Arc::clone(&data));
        Ok(data)
    }

    pub fn coefficients_for(&self, t: &[f64]) -> Result<Arc<CoefficientSet>> {
        Ok(Arc::clone(&self.target_data(t)?.coefs))
    }

    pub fn selection_for(&self, t: &[f64]) -> Result<Arc<Selection>> {
        Ok(Arc::clone(&self.target_data(t)?.selection))
    }
}

/// Aggregate a row-major level-`k+1` array (side `2·side`) into its parents.
fn aggregate(children: &[f64], side: usize, d: usize) -> Vec<f64> {
    let parents = side.pow(d as u32);
    let fan = 1usize << d;
    let child_side = side * 2;
    let mut out = vec![0.0; parents];
    let mut pm = vec![0usize; d];
    for p in 0..parents {
        let mut rest = p;
        for axis in (0..d).rev() {
            pm[axis] = rest % side;
            rest /= side;
        }
        let mut acc = 0.0;
        for v in 0..fan {
            let mut flat = 0usize;
            for axis in 0..d {
                flat = flat * child_side + 2 * pm[axis] + (v >> axis & 1);
            }
            acc += children[flat];
        }
        out[p] = acc;
    }
    out
}

/// `∫ Ψ dΛ` from the unnormalized dyadic sums `S^{(k)}` of the increments.
fn psi_integral(idx: &HaarIndex, sums: &[Vec<f64>], a: f64, d: usize) -> f64 {
    let amp = (2.0 * a).powf(-(d as f64) / 2.0);
    match idx {
        HaarIndex::Father => amp * sums[0][0],
        HaarIndex::Detail { e, k, .. } => {
            let m = idx.translate().unwrap();
            let child_side = 1usize << (k + 1);
            let fan = 1usize << d;
            let mut acc = 0.0;
            for v in 0..fan {
                let mut flat = 0usize;
                for axis in 0..d {
                    flat = flat * child_side
                        + 2 * m[axis] as usize
                        + (v >> axis & 1);
                }
                let sign = if (*e as usize & v).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * sums[*k as usize + 1][flat];
            }
            amp * 2f64.powf(*k as f64 * d as f64 / 2.0) * acc
        }
    }
}

/// One realization of the wavelet approximant at every target, sharing one
/// vector of finest-level increments across targets.
pub fn synthesize_wavelet(
    plan: &WaveletPlan,
    m: MeasureSpec,
    targets: &[Vec<f64>],
    stream: RngStream,
) -> Result<FieldRealization> {
    let t0 = Instant::now();
    let selections: Vec<Arc<Selection>> =
        targets.iter().map(|t| plan.selection_for(t)).collect::<Result<_>>()?;
    let coef_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let d = plan.kernel.dim;
    let a = plan.kernel.support_halfwidth;
    let cells = plan.num_cells();
    let vol = (2.0 * a / plan.cells_per_axis() as f64).powi(d as i32);
    let mut rng = stream.child(0).rng();
    let mut draws = Vec::with_capacity(cells);
    for _ in 0..cells {
        draws.push(sample_with_rng(m, vol, &mut rng)?);
    }
    // dyadic sums S^{(k)} for k = 0..=z+1, finest level first to build
    let mut sums = vec![draws];
    for k in (0..=plan.z).rev() {
        let next = aggregate(sums.last().unwrap(), 1usize << k, d);
        sums.push(next);
    }
    sums.reverse();

    let mut integral_cache: HashMap<HaarIndex, f64> = HashMap::new();
    let mut values = Vec::with_capacity(targets.len());
    let mut summands = 0u64;
    for sel in &selections {
        let mut x = 0.0;
        for c in &sel.coefs {
            let integral = *integral_cache
                .entry(c.index.clone())
                .or_insert_with(|| psi_integral(&c.index, &sums, a, d));
            x += c.coefficient * integral;
        }
        values.push(x);
        summands = summands.max(sel.coefs.len() as u64);
    }
    let synth_ms = t1.elapsed().as_secs_f64() * 1e3;

    Ok(FieldRealization {
        values,
        meta: RealizationMeta {
            method: "wavelet".into(),
            detail: plan.digest(),
            epsilon: Some(plan.config.eps),
            measure: m,
            seed: stream.seed,
            stream_id: stream.stream_id,
            summands,
            random_variables: cells as u64,
            coefficient_ms: coef_ms,
            synthesis_ms: synth_ms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::BuiltinKernel;

    fn small_set() -> CoefficientSet {
        let mut set = CoefficientSet::zeros(1.0, 2, 1);
        set.father = 2.0;
        set.details[0] = vec![0.5, -3.0, 0.5];
        set.details[1][5] = 1.0;
        set
    }

    #[test]
    fn selection_orders_by_weight() {
        // s = 2 makes every norm 1, so weights are |coefficients|
        let sel = nbest_select(&small_set(), 2.0, 0.0).unwrap();
        let weights: Vec<f64> = sel.coefs.iter().map(|c| c.weight).collect();
        let mut sorted = weights.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(weights, sorted);
        assert_eq!(sel.coefs[0].coefficient, -3.0);
        assert_eq!(sel.coefs[1].coefficient, 2.0);
    }

    #[test]
    fn tie_break_is_deterministic() {
        // the two 0.5 coefficients tie; e asc must win
        let sel = nbest_select(&small_set(), 2.0, 0.0).unwrap();
        let tied: Vec<&HaarIndex> = sel
            .coefs
            .iter()
            .filter(|c| c.coefficient == 0.5)
            .map(|c| &c.index)
            .collect();
        match (tied[0], tied[1]) {
            (HaarIndex::Detail { e: e1, .. }, HaarIndex::Detail { e: e2, .. }) => {
                assert!(e1 < e2);
            }
            other => panic!("unexpected indices {other:?}"),
        }
    }

    #[test]
    fn selection_budget_minimality() {
        let set = small_set();
        for budget in [0.0, 0.4, 0.9, 1.4, 3.9, 100.0] {
            let sel = nbest_select(&set, 2.0, budget).unwrap();
            assert!(sel.discarded <= budget + 1e-12, "budget {budget}");
            if let Some(last) = sel.coefs.last() {
                // dropping the weakest kept coefficient would overshoot
                assert!(sel.discarded + last.weight > budget, "budget {budget}");
            }
        }
        let all = nbest_select(&set, 2.0, 0.0).unwrap();
        assert_eq!(all.coefs.len(), 5);
        assert_eq!(all.discarded, 0.0);
        let none = nbest_select(&set, 2.0, 100.0).unwrap();
        assert!(none.coefs.is_empty());
    }

    #[test]
    fn selection_small_s_additivity() {
        // for s < 1 the budget compares against Σ weight^s of the dropped part
        let set = small_set();
        let s = 0.5;
        let sel = nbest_select(&set, s, 1.0).unwrap();
        let total: f64 = set
            .iter()
            .map(|(idx, c)| (c.abs() * psi_norm_s(&idx, 1.0, 2, s)).powf(s))
            .sum();
        let retained: f64 = sel.coefs.iter().map(|c| c.weight.powf(s)).sum();
        assert!((total - retained).powf(1.0 / s) <= 1.0 + 1e-12);
        assert!((sel.discarded - (total - retained).max(0.0).powf(1.0 / s)).abs() < 1e-12);
    }

    fn pyramid_plan(eps: f64) -> WaveletPlan {
        let k = BuiltinKernel::Pyramid { a: 1.0, b: 1.0 }.spec(2, 1.0).unwrap();
        let c_t = k.grad_bound.unwrap();
        let cfg = WaveletPlanConfig::new(eps, CutoffMode::Differentiable { c_t });
        WaveletPlan::new(k, 1.5, cfg).unwrap()
    }

    #[test]
    fn plan_budgets_are_consistent() {
        let plan = pyramid_plan(0.5);
        assert_eq!(plan.z, plan.m_t);
        assert!(plan.eps_star <= plan.eps1);
        assert!((plan.eps1 - 0.99 * 0.5).abs() < 1e-15);
        assert!((plan.budget - (plan.eps1 - plan.eps_star)).abs() < 1e-15);
        assert!(plan.delta > 0.0 && plan.cell_tol > 0.0);
        // tighter eps never lowers the cut-off level
        let coarse = pyramid_plan(1.0);
        let fine = pyramid_plan(0.1);
        assert!(fine.z >= coarse.z);
    }

    #[test]
    fn selection_respects_eps_budget() {
        let plan = pyramid_plan(0.5);
        let sel = plan.selection_for(&[0.0, 0.0]).unwrap();
        assert!(plan.eps_star + sel.discarded <= plan.eps1 + 1e-12);
        assert!(!sel.coefs.is_empty());
    }

    #[test]
    fn synthesis_matches_direct_cell_sum_when_everything_kept() {
        // with the whole coefficient table kept, the wavelet sum collapses
        // to Σ_cells avg(f̃)·Λ(cell)
        let k = BuiltinKernel::Pyramid { a: 1.0, b: 1.0 }.spec(2, 1.0).unwrap();
        let c_t = k.grad_bound.unwrap();
        let mut cfg = WaveletPlanConfig::new(0.8, CutoffMode::Differentiable { c_t });
        cfg.split = 0.99;
        let plan = WaveletPlan::new(k, 1.5, cfg).unwrap();
        let t = vec![0.1, -0.2];
        // force full selection by zeroing the budget
        let set = plan.coefficients_for(&t).unwrap();
        let full = nbest_select(&set, 1.5, 0.0).unwrap();
        let avgs = set.cell_averages();

        let m = MeasureSpec::stable(1.5, 0.2).unwrap();
        let stream = RngStream::root(11);
        let vol = (2.0 / plan.cells_per_axis() as f64).powi(2);
        let mut rng = stream.child(0).rng();
        let mut draws = Vec::new();
        for _ in 0..plan.num_cells() {
            draws.push(sample_with_rng(m, vol, &mut rng).unwrap());
        }
        let direct: f64 = avgs.iter().zip(&draws).map(|(a, l)| a * l).sum();

        let mut sums = vec![draws];
        for kk in (0..=plan.z).rev() {
            let next = aggregate(sums.last().unwrap(), 1usize << kk, 2);
            sums.push(next);
        }
        sums.reverse();
        let x: f64 = full
            .coefs
            .iter()
            .map(|c| c.coefficient * psi_integral(&c.index, &sums, 1.0, 2))
            .sum();
        assert!((x - direct).abs() < 1e-10 * direct.abs().max(1.0), "{x} vs {direct}");
    }

    #[test]
    fn synthesis_determinism_and_counters() {
        let plan = pyramid_plan(0.5);
        let m = MeasureSpec::gamma_levy(1.0).unwrap();
        let targets = vec![vec![0.0, 0.0], vec![0.3, 0.3]];
        let r1 = synthesize_wavelet(&plan, m, &targets, RngStream::root(4)).unwrap();
        let r2 = synthesize_wavelet(&plan, m, &targets, RngStream::root(4)).unwrap();
        assert_eq!(r1.values, r2.values);
        assert_eq!(r1.meta.random_variables, plan.num_cells() as u64);
        assert!(r1.meta.summands > 0);
        let r3 = synthesize_wavelet(&plan, m, &targets, RngStream::root(5)).unwrap();
        assert_ne!(r1.values, r3.values);
    }

    #[test]
    fn reconstruction_error_within_eps_for_gaussian_l2() {
        // s = 2, Gaussian basis: E(X − X̃)² = 2‖f − f̃‖₂², and the planned
        // parts bound ‖f − f̃‖₂ by eps; check the deterministic part
        let k = BuiltinKernel::Pyramid { a: 1.0, b: 1.0 }.spec(2, 1.0).unwrap();
        let c_t = k.grad_bound.unwrap();
        let cfg = WaveletPlanConfig::new(0.3, CutoffMode::Differentiable { c_t });
        let plan = WaveletPlan::new(k.clone(), 2.0, cfg).unwrap();
        let t = vec![0.0, 0.0];
        let sel = plan.selection_for(&t).unwrap();
        let recon = move |x: &[f64]| {
            sel.coefs
                .iter()
                .map(|c| c.coefficient * super::super::psi_eval(&c.index, x, 1.0).unwrap())
                .sum::<f64>()
        };
        let err = crate::error_metrics::err_s(
            &|x: &[f64]| k.eval(&t, x),
            &recon,
            2.0,
            &AxisBox::cube(1.0, 2),
            1e-3,
        )
        .unwrap();
        assert!(err.value <= plan.config.eps * 1.0001, "err {} eps {}", err.value, plan.config.eps);
    }
}
