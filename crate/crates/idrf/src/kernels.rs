//! Kernel families `f_t(x)` and their integration over cells.
//!
//! A [`KernelSpec`] bundles the evaluation rule with the smoothness metadata
//! (Hölder constant and exponent, sup bound, gradient bound) that the error
//! bounds consume, plus an exact cell-integral rule where one exists.
//! Builtin kernels: Epanechnikov, Pyramid, Gaussian bell.

use std::fmt;
use std::sync::Arc;

use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::quad;

/// One-dimensional profile of a separable kernel: `f_t(x) = b · Π g(x_i − t_i)`.
#[derive(Clone, Copy, Debug)]
pub enum Profile1d {
    /// `(a − |u|)_+`
    Triangle { a: f64 },
    /// `exp(−u²/a)`
    Gauss { a: f64 },
}

impl Profile1d {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Profile1d::Triangle { a } => (a - u.abs()).max(0.0),
            Profile1d::Gauss { a } => (-u * u / a).exp(),
        }
    }

    /// `∫_lo^hi g(u) du`, exact.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Profile1d::Triangle { a } => {
                let h = |u: f64| {
                    let u = u.clamp(-a, a);
                    a * u - u.signum() * u * u / 2.0
                };
                h(hi) - h(lo)
            }
            Profile1d::Gauss { a } => {
                let r = a.sqrt();
                0.5 * (std::f64::consts::PI * a).sqrt() * (erf(hi / r) - erf(lo / r))
            }
        }
    }

    /// Radius beyond which the profile is zero, if compact.
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Profile1d::Triangle { a } => Some(a),
            Profile1d::Gauss { .. } => None,
        }
    }
}

/// Product form of a separable kernel, identical profile on every axis.
#[derive(Clone, Copy, Debug)]
pub struct Separable {
    pub amplitude: f64,
    pub profile: Profile1d,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinKernel {
    /// `f_t(x) = b (a² − ‖x−t‖₂²)_+`
    Epanechnikov { a: f64, b: f64 },
    /// `f_t(x) = b Π_i (a − |x_i − t_i|)_+`
    Pyramid { a: f64, b: f64 },
    /// `f_t(x) = b exp(−‖x−t‖₂²/a)`
    GaussianBell { a: f64, b: f64 },
}

impl BuiltinKernel {
    pub fn from_name(name: &str, a: f64, b: f64) -> Result<Self> {
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::usage("kernel parameters a, b must be positive"));
        }
        match name {
            "epanechnikov" => Ok(BuiltinKernel::Epanechnikov { a, b }),
            "pyramid" => Ok(BuiltinKernel::Pyramid { a, b }),
            "gaussian_bell" => Ok(BuiltinKernel::GaussianBell { a, b }),
            other => Err(Error::usage(format!("unknown kernel `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinKernel::Epanechnikov { .. } => "epanechnikov",
            BuiltinKernel::Pyramid { .. } => "pyramid",
            BuiltinKernel::GaussianBell { .. } => "gaussian_bell",
        }
    }

    /// Smallest halfwidth containing `supp f_t` for all `t ∈ [−T,T]^d`,
    /// for the compactly supported kernels.
    pub fn natural_support(&self, window_halfwidth: f64) -> Option<f64> {
        match *self {
            BuiltinKernel::Epanechnikov { a, .. } | BuiltinKernel::Pyramid { a, .. } => {
                Some(window_halfwidth + a)
            }
            BuiltinKernel::GaussianBell { .. } => None,
        }
    }

    /// Build the full spec with an explicit support halfwidth.
    pub fn spec(self, dim: usize, support_halfwidth: f64) -> Result<KernelSpec> {
        if dim == 0 {
            return Err(Error::usage("kernel dimension must be at least 1"));
        }
        if !(support_halfwidth > 0.0) {
            return Err(Error::usage("support halfwidth must be positive"));
        }
        let d = dim as f64;
        let (holder, sup_bound, grad_bound) = match self {
            BuiltinKernel::Epanechnikov { a, b } => {
                let g = 2.0 * a * b;
                (Some((g, 1.0)), Some(a * a * b), Some(g))
            }
            BuiltinKernel::Pyramid { a, b } => {
                let g = d.sqrt() * a.powi(dim as i32 - 1) * b;
                (Some((g, 1.0)), Some(a.powi(dim as i32) * b), Some(g))
            }
            BuiltinKernel::GaussianBell { a, b } => {
                let g = b * (2.0 / a).sqrt() * (-0.5f64).exp();
                (Some((g, 1.0)), Some(b), Some(g))
            }
        };
        Ok(KernelSpec {
            id: format!("{}-a{}-b{}", self.name(), self.params().0, self.params().1),
            dim,
            support_halfwidth,
            holder,
            sup_bound,
            grad_bound,
            shape: Shape::Builtin(self),
        })
    }

    fn params(&self) -> (f64, f64) {
        match *self {
            BuiltinKernel::Epanechnikov { a, b }
            | BuiltinKernel::Pyramid { a, b }
            | BuiltinKernel::GaussianBell { a, b } => (a, b),
        }
    }
}

type CustomEval = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Builtin(BuiltinKernel),
    Custom(CustomEval),
}

/// A kernel family together with the metadata the error bounds need.
///
/// Immutable after construction; every operation is pure.
#[derive(Clone)]
pub struct KernelSpec {
    pub id: String,
    pub dim: usize,
    /// All `f_t` vanish outside `[−A,A]^d`; evaluation is truncated there.
    pub support_halfwidth: f64,
    /// `(C_t, γ_t)` with `|f(x)−f(y)| ≤ C‖x−y‖₂^γ`.
    pub holder: Option<(f64, f64)>,
    pub sup_bound: Option<f64>,
    pub grad_bound: Option<f64>,
    shape: Shape,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("support_halfwidth", &self.support_halfwidth)
            .finish()
    }
}

impl KernelSpec {
    /// A user-supplied kernel under the same contract as the builtins.
    pub fn custom(
        id: impl Into<String>,
        dim: usize,
        support_halfwidth: f64,
        eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 || !(support_halfwidth > 0.0) {
            return Err(Error::usage("custom kernel needs dim ≥ 1 and positive halfwidth"));
        }
        Ok(KernelSpec {
            id: id.into(),
            dim,
            support_halfwidth,
            holder: None,
            sup_bound: None,
            grad_bound: None,
            shape: Shape::Custom(Arc::new(eval)),
        })
    }

    pub fn with_holder(mut self, c: f64, gamma: f64) -> Self {
        self.holder = Some((c, gamma));
        self
    }

    pub fn with_sup_bound(mut self, m: f64) -> Self {
        self.sup_bound = Some(m);
        self
    }

    pub fn support_box(&self) -> AxisBox {
        AxisBox::cube(self.support_halfwidth, self.dim)
    }

    /// Kernel value before truncation to `[−A,A]^d`.
    pub fn eval_raw(&self, t: &[f64], x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Builtin(BuiltinKernel::Epanechnikov { a, b }) => {
                let r2: f64 = t.iter().zip(x).map(|(ti, xi)| (xi - ti).powi(2)).sum();
                b * (a * a - r2).max(0.0)
            }
            Shape::Builtin(BuiltinKernel::Pyramid { a, b }) => {
                b * t
                    .iter()
                    .zip(x)
                    .map(|(ti, xi)| (a - (xi - ti).abs()).max(0.0))
                    .product::<f64>()
            }
            Shape::Builtin(BuiltinKernel::GaussianBell { a, b }) => {
                let r2: f64 = t.iter().zip(x).map(|(ti, xi)| (xi - ti).powi(2)).sum();
                b * (-r2 / a).exp()
            }
            Shape::Custom(f) => f(t, x),
        }
    }

    /// `f_t(x)`, zero outside the support box.
    pub fn eval(&self, t: &[f64], x: &[f64]) -> f64 {
        if x.iter().any(|xi| xi.abs() > self.support_halfwidth) {
            return 0.0;
        }
        self.eval_raw(t, x)
    }

    /// Dimension-checked evaluation.
    pub fn eval_checked(&self, t: &[f64], x: &[f64]) -> Result<f64> {
        if t.len() != self.dim || x.len() != self.dim {
            return Err(Error::usage(format!(
                "kernel dimension mismatch: expected {}, got t:{} x:{}",
                self.dim,
                t.len(),
                x.len()
            )));
        }
        Ok(self.eval(t, x))
    }

    /// Product decomposition, when the kernel factors across axes.
    pub fn separable(&self) -> Option<Separable> {
        match &self.shape {
            Shape::Builtin(BuiltinKernel::Pyramid { a, b }) => Some(Separable {
                amplitude: *b,
                profile: Profile1d::Triangle { a: *a },
            }),
            Shape::Builtin(BuiltinKernel::GaussianBell { a, b }) => Some(Separable {
                amplitude: *b,
                profile: Profile1d::Gauss { a: *a },
            }),
            _ => None,
        }
    }

    fn exact_cell_integral(&self, t: &[f64], cell: &AxisBox) -> Option<f64> {
        let sep = self.separable()?;
        let mut v = sep.amplitude;
        for i in 0..self.dim {
            v *= sep.profile.integral(cell.lo[i] - t[i], cell.hi[i] - t[i]);
        }
        Some(v)
    }

    /// `∫_cell f_t(x) dx` within absolute tolerance `abs_tol`.
    ///
    /// Uses the exact product rule where available, otherwise adaptive
    /// quadrature; the cell must lie inside the support box.
    pub fn cell_integral(&self, t: &[f64], cell: &AxisBox, abs_tol: f64) -> Result<f64> {
        if t.len() != self.dim || cell.dim() != self.dim {
            return Err(Error::usage("cell_integral dimension mismatch"));
        }
        if !cell.contained_in(&self.support_box()) {
            return Err(Error::usage("cell_integral: cell outside the kernel support box"));
        }
        if let Some(v) = self.exact_cell_integral(t, cell) {
            return Ok(v);
        }
        let r = quad::integrate(
            &|x: &[f64]| self.eval_raw(t, x),
            cell,
            abs_tol,
            quad::DEFAULT_MAX_DEPTH,
        )?;
        Ok(r.value)
    }

    /// Same as [`cell_integral`](Self::cell_integral) with the exact rule
    /// suppressed; used to cross-check the product rules.
    pub fn cell_integral_quadrature(&self, t: &[f64], cell: &AxisBox, abs_tol: f64) -> Result<f64> {
        let r = quad::integrate(
            &|x: &[f64]| self.eval_raw(t, x),
            cell,
            abs_tol,
            quad::DEFAULT_MAX_DEPTH,
        )?;
        Ok(r.value)
    }
}

/// Smallest halfwidth `K` from a doubling search with
/// `(∫_{ℝ^d∖[−K,K]^d} |f_t|^s dx)^{1/s} ≤ eps_tail`.
///
/// `ceiling` caps the search; the tail is estimated against the box
/// `[−2·ceiling, 2·ceiling]^d`, which must dominate the mass of `|f_t|^s`
/// outside it (true for the builtins with any generous ceiling).
pub fn effective_box(
    k: &KernelSpec,
    t: &[f64],
    s: f64,
    eps_tail: f64,
    initial: f64,
    ceiling: f64,
) -> Result<f64> {
    if !(s > 0.0) || !(initial > 0.0) || ceiling < initial {
        return Err(Error::usage("effective_box: need s > 0 and 0 < initial ≤ ceiling"));
    }
    if eps_tail.is_infinite() {
        return Ok(initial);
    }
    let probe_outer = 2.0 * ceiling;
    let mut halfwidth = initial;
    loop {
        let tail = tail_norm(k, t, s, halfwidth, probe_outer)?;
        if tail <= eps_tail {
            return Ok(halfwidth);
        }
        if halfwidth >= ceiling {
            return Err(Error::Numerical {
                message: "effective_box: no halfwidth below the ceiling meets the tail target"
                    .into(),
                estimate: tail,
                achieved: eps_tail,
            });
        }
        halfwidth = (halfwidth * 2.0).min(ceiling);
    }
}

/// `(∫_{[−C,C]^d ∖ [−K,K]^d} |f_t|^s dx)^{1/s}`.
fn tail_norm(k: &KernelSpec, t: &[f64], s: f64, inner: f64, outer: f64) -> Result<f64> {
    if let Some(sep) = k.separable() {
        // |f|^s factorizes with profile parameters scaled by 1/s
        let pow = |p: Profile1d| match p {
            Profile1d::Triangle { a } => Profile1d::Triangle { a },
            Profile1d::Gauss { a } => Profile1d::Gauss { a: a / s },
        };
        let one_d = |p: Profile1d, lo: f64, hi: f64, ti: f64| -> f64 {
            match p {
                Profile1d::Triangle { .. } => {
                    // integrate |g|^s numerically in 1-d, cheap and robust
                    let b = AxisBox::new(vec![lo], vec![hi]).unwrap();
                    quad::integrate(
                        &|x: &[f64]| p.eval(x[0] - ti).powf(s),
                        &b,
                        1e-12,
                        quad::DEFAULT_MAX_DEPTH,
                    )
                    .map(|r| r.value)
                    .unwrap_or(0.0)
                }
                Profile1d::Gauss { .. } => p.integral(lo - ti, hi - ti),
            }
        };
        let p = pow(sep.profile);
        let mut full = sep.amplitude.powf(s);
        let mut inner_mass = sep.amplitude.powf(s);
        for i in 0..k.dim {
            full *= one_d(p, -outer, outer, t[i]);
            inner_mass *= one_d(p, -inner, inner, t[i]);
        }
        return Ok((full - inner_mass).max(0.0).powf(1.0 / s));
    }
    // generic path: decompose the shell into axis slabs
    let d = k.dim;
    let mut slabs = Vec::new();
    for i in 0..d {
        for side in 0..2 {
            let mut lo = vec![0.0; d];
            let mut hi = vec![0.0; d];
            for j in 0..d {
                if j < i {
                    lo[j] = -inner;
                    hi[j] = inner;
                } else if j == i {
                    if side == 0 {
                        lo[j] = inner;
                        hi[j] = outer;
                    } else {
                        lo[j] = -outer;
                        hi[j] = -inner;
                    }
                } else {
                    lo[j] = -outer;
                    hi[j] = outer;
                }
            }
            slabs.push(AxisBox::new(lo, hi)?);
        }
    }
    let r = quad::integrate_cells(
        &|x: &[f64]| k.eval_raw(t, x).abs().powf(s),
        &slabs,
        1e-12,
        quad::DEFAULT_MAX_DEPTH,
    )?;
    Ok(r.value.max(0.0).powf(1.0 / s))
}
