//! Fast Haar wavelet transform in `d` dimensions.
//!
//! The forward transform maps the vector of scaled cell integrals
//! `2^{(n+1)d/2} (2A)^{−d/2} ∫_cell f` (row-major over the finest dyadic
//! grid, `2^{n+1}` cells per axis) to the father coefficient plus all detail
//! coefficients of levels `0..=n`, in `O(2^{(n+1)d})` multiply-adds. The
//! inverse is the transpose.

use super::HaarIndex;
use crate::error::{Error, Result};

/// All Haar coefficients of one target up to detail level `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub a: f64,
    pub d: usize,
    /// Finest detail level stored.
    pub n: u32,
    pub father: f64,
    /// Per level `k`: `(2^d − 1) 2^{kd}` values, indexed
    /// `(e − 1) · 2^{kd} + m_flat` with `m_flat` row-major over the
    /// translates.
    pub details: Vec<Vec<f64>>,
    /// Input precision of the FWT that produced this set; `None` when the
    /// coefficients are exact.
    pub delta: Option<f64>,
}

impl CoefficientSet {
    pub fn zeros(a: f64, d: usize, n: u32) -> Self {
        let details = (0..=n)
            .map(|k| vec![0.0; (((1usize << d) - 1) << (k as usize * d)) as usize])
            .collect();
        CoefficientSet { a, d, n, father: 0.0, details, delta: None }
    }

    pub fn level_width(&self, k: u32) -> usize {
        1usize << k
    }

    fn m_flat(&self, k: u32, m: &[u32]) -> usize {
        let w = self.level_width(k);
        m.iter().fold(0usize, |acc, &mi| acc * w + mi as usize)
    }

    pub fn get(&self, idx: &HaarIndex) -> f64 {
        match idx {
            HaarIndex::Father => self.father,
            HaarIndex::Detail { e, k, .. } => {
                let m = idx.translate().unwrap();
                let cells = 1usize << (*k as usize * self.d);
                self.details[*k as usize][(*e as usize - 1) * cells + self.m_flat(*k, &m)]
            }
        }
    }

    /// Total number of stored coefficients (father + details).
    pub fn len(&self) -> usize {
        1 + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Iterate `(index, coefficient)` over all stored coefficients.
    pub fn iter(&self) -> impl Iterator<Item = (HaarIndex, f64)> + '_ {
        let father = std::iter::once((HaarIndex::Father, self.father));
        let details = self.details.iter().enumerate().flat_map(move |(k, level)| {
            let k = k as u32;
            let cells = 1usize << (k as usize * self.d);
            let w = 1u32 << k;
            level.iter().enumerate().map(move |(i, &c)| {
                let e = (i / cells) as u32 + 1;
                let mut m_flat = i % cells;
                let mut j = vec![0u32; self.d];
                for axis in (0..self.d).rev() {
                    j[axis] = (m_flat % w as usize) as u32 + w;
                    m_flat /= w as usize;
                }
                (HaarIndex::Detail { e, k, j }, c)
            })
        });
        father.chain(details)
    }

    /// Copy with all detail levels above `k` set to zero (the cut series).
    pub fn cut_at(&self, k: u32) -> CoefficientSet {
        let mut out = self.clone();
        for level in (k + 1)..=self.n {
            out.details[level as usize].iter_mut().for_each(|c| *c = 0.0);
        }
        out
    }

    /// Cell averages of the represented function on the finest grid
    /// (`2^{n+1}` cells per axis, row-major).
    pub fn cell_averages(&self) -> Vec<f64> {
        let scale = 2f64.powf((self.n + 1) as f64 * self.d as f64 / 2.0)
            / (2.0 * self.a).powf(self.d as f64 / 2.0);
        inverse_fwt(self).into_iter().map(|v| v * scale).collect()
    }

    /// Evaluate the represented (piecewise-constant) function at `x`.
    pub fn eval_piecewise(&self, x: &[f64], averages: &[f64]) -> f64 {
        let per_axis = 1usize << (self.n + 1);
        let mut flat = 0usize;
        for &xi in x {
            if xi.abs() > self.a {
                return 0.0;
            }
            let u = (xi + self.a) / (2.0 * self.a);
            let cell = ((u * per_axis as f64) as usize).min(per_axis - 1);
            flat = flat * per_axis + cell;
        }
        averages[flat]
    }
}

fn check_len(input_len: usize, n: u32, d: usize) -> Result<usize> {
    let per_axis = 1usize << (n + 1);
    let expect = per_axis.pow(d as u32);
    if input_len != expect {
        return Err(Error::usage(format!(
            "fwt: input length {input_len} does not match 2^{{(n+1)d}} = {expect}"
        )));
    }
    Ok(per_axis)
}

/// One butterfly stage: combine `2^d` children into scaling + detail parts.
/// `side` is the parent grid side length.
fn stage_forward(children: &[f64], side: usize, d: usize) -> (Vec<f64>, Vec<f64>) {
    let parents = side.pow(d as u32);
    let fan = 1usize << d;
    let norm = (fan as f64).sqrt().recip(); // 2^{−d/2}
    let mut scaling = vec![0.0; parents];
    let mut details = vec![0.0; (fan - 1) * parents];
    let child_side = side * 2;
    let mut pm = vec![0usize; d];
    for p in 0..parents {
        // decode parent multi-index
        let mut rest = p;
        for axis in (0..d).rev() {
            pm[axis] = rest % side;
            rest /= side;
        }
        let mut kids = [0.0f64; 32];
        for v in 0..fan {
            let mut flat = 0usize;
            for axis in 0..d {
                flat = flat * child_side + 2 * pm[axis] + (v >> axis & 1);
            }
            kids[v] = children[flat];
        }
        for e in 0..fan {
            let mut acc = 0.0;
            for v in 0..fan {
                let sign = if (e & v).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * kids[v];
            }
            acc *= norm;
            if e == 0 {
                scaling[p] = acc;
            } else {
                details[(e - 1) * parents + p] = acc;
            }
        }
    }
    (scaling, details)
}

fn stage_inverse(scaling: &[f64], details: &[f64], side: usize, d: usize) -> Vec<f64> {
    let parents = side.pow(d as u32);
    let fan = 1usize << d;
    let norm = (fan as f64).sqrt().recip();
    let child_side = side * 2;
    let mut out = vec![0.0; parents * fan];
    let mut pm = vec![0usize; d];
    for p in 0..parents {
        let mut rest = p;
        for axis in (0..d).rev() {
            pm[axis] = rest % side;
            rest /= side;
        }
        for v in 0..fan {
            let mut acc = scaling[p];
            for e in 1..fan {
                let sign = if (e & v).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * details[(e - 1) * parents + p];
            }
            let mut flat = 0usize;
            for axis in 0..d {
                flat = flat * child_side + 2 * pm[axis] + (v >> axis & 1);
            }
            out[flat] = norm * acc;
        }
    }
    out
}

/// Full analysis: scaled cell integrals to Haar coefficients.
pub fn forward_fwt(input: &[f64], n: u32, d: usize, a: f64) -> Result<CoefficientSet> {
    if d == 0 || d > 20 {
        return Err(Error::usage("fwt: dimension out of range"));
    }
    check_len(input.len(), n, d)?;
    let mut set = CoefficientSet::zeros(a, d, n);
    let mut current = input.to_vec();
    for k in (0..=n).rev() {
        let side = 1usize << k;
        let (scaling, details) = stage_forward(&current, side, d);
        set.details[k as usize] = details;
        current = scaling;
    }
    set.father = current[0];
    Ok(set)
}

/// Full synthesis back to scaled cell integrals; exact inverse of
/// [`forward_fwt`].
pub fn inverse_fwt(set: &CoefficientSet) -> Vec<f64> {
    let mut current = vec![set.father];
    for k in 0..=set.n {
        let side = 1usize << k;
        current = stage_inverse(&current, &set.details[k as usize], side, set.d);
    }
    current
}
