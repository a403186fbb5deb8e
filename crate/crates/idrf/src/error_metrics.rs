//! The error functional `Err_s = ‖f − g‖_{L^s}` computed by quadrature, the
//! stable-law identities tying it to scale and absolute moments, and the
//! moment-based bounds (Campbell, spot-variable second moment).

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::measures::SpotDescriptor;
use crate::quad;

#[derive(Clone, Copy, Debug)]
pub struct ErrReport {
    pub s: f64,
    pub value: f64,
    /// Absolute tolerance achieved on the underlying `∫|f−g|^s` integral.
    pub achieved: f64,
}

/// `(∫_box |f−g|^s dx)^{1/s}` within relative tolerance `tol`.
pub fn err_s<F, G>(f: &F, g: &G, s: f64, region: &AxisBox, tol: f64) -> Result<ErrReport>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    err_s_cells(f, g, s, std::slice::from_ref(region), tol)
}

/// Same as [`err_s`] with the integration domain split along the
/// breakpoints of `g` (grid or dyadic cells), so the quadrature never
/// straddles a discontinuity.
pub fn err_s_cells<F, G>(f: &F, g: &G, s: f64, cells: &[AxisBox], tol: f64) -> Result<ErrReport>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    if !(s > 0.0) {
        return Err(Error::usage("err_s: s must be positive"));
    }
    if !(tol > 0.0) {
        return Err(Error::usage("err_s: tolerance must be positive"));
    }
    let integrand = |x: &[f64]| (f(x) - g(x)).abs().powf(s);
    // relative tolerance on ∫|f−g|^s gives roughly tol relative error on
    // its s-th root
    let r = quad::integrate_rel(&integrand, cells, s * tol, quad::DEFAULT_MAX_DEPTH)?;
    Ok(ErrReport {
        s,
        value: r.value.max(0.0).powf(1.0 / s),
        achieved: r.achieved,
    })
}

/// §3.1.1: for a stable integrator, `Err_α` equals the scale parameter of
/// the error variable `X − X̃`.
pub fn stable_error_scale(err: &ErrReport, alpha: f64) -> Result<f64> {
    if (err.s - alpha).abs() > 1e-12 {
        return Err(Error::usage("stable_error_scale: report must be computed at s = α"));
    }
    Ok(err.value)
}

/// `∫₀^∞ u^{−p−1} sin²u du` for `0 < p < 2`.
pub fn sine_power_integral(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::usage("sine integral: need 0 < p < 2"));
    }
    // head: integrand ~ u^{1−p} near 0, integrable and smooth enough
    let head = quad::integrate(
        &|x: &[f64]| x[0].powf(-p - 1.0) * x[0].sin().powi(2),
        &AxisBox::new(vec![1e-8], vec![1.0]).unwrap(),
        1e-10,
        quad::DEFAULT_MAX_DEPTH,
    )?;
    // body up to U, then the analytic tail of the non-oscillatory half;
    // the cos(2u) half beyond U is O(U^{−p−1}) by parts and is dropped
    let u_max = 2000.0;
    let body = quad::integrate(
        &|x: &[f64]| x[0].powf(-p - 1.0) * x[0].sin().powi(2),
        &AxisBox::new(vec![1.0], vec![u_max]).unwrap(),
        1e-10,
        quad::DEFAULT_MAX_DEPTH,
    )?;
    let tail = 0.5 * u_max.powf(-p) / p;
    Ok(head.value + body.value + tail)
}

/// The constant `c_{α,β_t}(p)` with
/// `𝔼|X−X̃|^p = (c_{α,β_t}(p))^p σ^p` for `0 < p < α`.
pub fn c_constant(alpha: f64, beta_t: f64, p: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::usage("c_constant: need 0 < α < 2"));
    }
    if alpha == 1.0 && beta_t != 0.0 {
        return Err(Error::usage("c_constant: α = 1 requires β_t = 0"));
    }
    if !(p > 0.0 && p < alpha) {
        return Err(Error::usage("c_constant: moment of order p ≥ α is infinite"));
    }
    let t = beta_t * (std::f64::consts::FRAC_PI_2 * alpha).tan();
    let cp = 2f64.powf(p - 1.0) * gamma_fn(1.0 - p / alpha) / (p * sine_power_integral(p)?)
        * (1.0 + t * t).powf(p / (2.0 * alpha))
        * ((p / alpha) * t.atan()).cos();
    Ok(cp.powf(1.0 / p))
}

/// Effective skewness `β_t` of the error variable for constant skewness
/// intensity `β`; `None` when `f = g` a.e. (the ratio is undefined).
pub fn beta_t_effective<F, G>(
    f: &F,
    g: &G,
    beta: f64,
    alpha: f64,
    region: &AxisBox,
    tol: f64,
) -> Result<Option<f64>>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let den = quad::integrate(
        &|x: &[f64]| (f(x) - g(x)).abs().powf(alpha),
        region,
        tol,
        quad::DEFAULT_MAX_DEPTH,
    )?;
    if den.value <= tol {
        return Ok(None);
    }
    let num = quad::integrate(
        &|x: &[f64]| {
            let d = f(x) - g(x);
            d.abs().powf(alpha) * d.signum()
        },
        region,
        tol,
        quad::DEFAULT_MAX_DEPTH,
    )?;
    Ok(Some(beta * num.value / den.value))
}

/// §3.1.1 α = 1, β ≢ 0: the approximation error is measured by `Err_{3/2}`.
pub fn err_alpha1_skewed<F, G>(f: &F, g: &G, region: &AxisBox, tol: f64) -> Result<ErrReport>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    err_s(f, g, 1.5, region, tol)
}

/// Majorant `|x ln x| ≤ max(√x, x√x)` used in the α = 1 convergence proof.
pub fn xlnx_majorant(x: f64) -> f64 {
    x.sqrt().max(x * x.sqrt())
}

/// Campbell bound: `𝔼|X − X̃| ≤ intensity · ∫|f−g| dx` for a Poisson basis.
pub fn campbell_bound<F, G>(
    f: &F,
    g: &G,
    intensity: f64,
    region: &AxisBox,
    tol: f64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    if !(intensity >= 0.0) {
        return Err(Error::usage("campbell_bound: intensity must be nonnegative"));
    }
    let r = quad::integrate(
        &|x: &[f64]| (f(x) - g(x)).abs(),
        region,
        tol,
        quad::DEFAULT_MAX_DEPTH,
    )?;
    Ok(intensity * r.value)
}

/// §3.1.3: `(𝔼(X−X̃)²)^{1/2} ≤ (c₁+c₂)^{1/2} Err₂` with `c₁ = Var L'` and
/// `c₂ = ∫(𝔼L')² λ(dy)` over the support box.
pub fn second_moment_bound(spot: SpotDescriptor, region: &AxisBox, err2: f64) -> Result<f64> {
    let v = match spot {
        SpotDescriptor::Moments(v) => v,
        SpotDescriptor::HeavyTailed => {
            return Err(Error::usage(
                "second_moment_bound: measure has no finite second spot moments",
            ))
        }
    };
    let c1 = v.variance;
    let c2 = v.mean * v.mean * v.control_density * region.volume();
    Ok((c1 + c2).sqrt() * err2)
}

/// Verifies `‖Σ wᵢ fᵢ‖^p ≤ Σ |wᵢ|^p ‖fᵢ‖^p` (for `p ≤ 1`), respectively the
/// Minkowski inequality (for `p > 1`), by quadrature.
pub fn subadditivity_check<F>(
    fs: &[F],
    weights: &[f64],
    p: f64,
    region: &AxisBox,
    tol: f64,
) -> Result<bool>
where
    F: Fn(&[f64]) -> f64,
{
    if fs.len() != weights.len() || fs.is_empty() {
        return Err(Error::usage("subadditivity_check: need one weight per function"));
    }
    if !(p > 0.0) {
        return Err(Error::usage("subadditivity_check: p must be positive"));
    }
    let combined = |x: &[f64]| -> f64 {
        fs.iter().zip(weights).map(|(f, w)| w * f(x)).sum()
    };
    let zero = |_: &[f64]| 0.0;
    let lhs = err_s(&combined, &zero, p, region, tol)?.value;
    let norms: Vec<f64> = fs
        .iter()
        .map(|f| err_s(f, &zero, p, region, tol).map(|r| r.value))
        .collect::<Result<_>>()?;
    let slack = 1e-9 + 10.0 * tol;
    if p <= 1.0 {
        let rhs: f64 = norms
            .iter()
            .zip(weights)
            .map(|(n, w)| w.abs().powf(p) * n.powf(p))
            .sum();
        Ok(lhs.powf(p) <= rhs * (1.0 + slack) + 1e-12)
    } else {
        let rhs: f64 = norms.iter().zip(weights).map(|(n, w)| w.abs() * n).sum();
        Ok(lhs <= rhs * (1.0 + slack) + 1e-12)
    }
}
