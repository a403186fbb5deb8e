//! Axis-aligned boxes in `R^d`.

use crate::error::{Error, Result};

/// Axis-aligned box `[lo_1, hi_1) x ... x [lo_d, hi_d)`.
///
/// Cells are treated as half-open so that regular partitions tile exactly,
/// but for integration purposes the boundary is immaterial.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::usage("box lo/hi dimension mismatch"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::usage("box has lo > hi on some axis"));
        }
        Ok(AxisBox { lo, hi })
    }

    /// The cube `[-a, a]^d`.
    pub fn cube(halfwidth: f64, dim: usize) -> Self {
        AxisBox {
            lo: vec![-halfwidth; dim],
            hi: vec![halfwidth; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(xi, (l, h))| *xi >= *l && *xi <= *h)
    }

    /// Whether `self` is contained in `other` (closed-box containment).
    pub fn contained_in(&self, other: &AxisBox) -> bool {
        self.lo.len() == other.lo.len()
            && self
                .lo
                .iter()
                .zip(&other.lo)
                .all(|(a, b)| *a >= *b - 1e-12)
            && self
                .hi
                .iter()
                .zip(&other.hi)
                .all(|(a, b)| *a <= *b + 1e-12)
    }

    /// Interiors intersect.
    pub fn overlaps_interior(&self, other: &AxisBox) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((al, ah), (bl, bh))| al < bh && bl < ah)
    }

    /// The `2^d` children obtained by bisecting every axis.
    pub fn bisect_all(&self) -> Vec<AxisBox> {
        let d = self.dim();
        let mid = self.center();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0u32..(1u32 << d) {
            let mut lo = Vec::with_capacity(d);
            let mut hi = Vec::with_capacity(d);
            for i in 0..d {
                if mask >> i & 1 == 0 {
                    lo.push(self.lo[i]);
                    hi.push(mid[i]);
                } else {
                    lo.push(mid[i]);
                    hi.push(self.hi[i]);
                }
            }
            out.push(AxisBox { lo, hi });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_volume() {
        let b = AxisBox::cube(1.0, 2);
        assert_eq!(b.volume(), 4.0);
        assert!(b.contains(&[0.5, -0.5]));
        assert!(!b.contains(&[1.5, 0.0]));
    }

    #[test]
    fn bisect_tiles() {
        let b = AxisBox::cube(1.0, 3);
        let kids = b.bisect_all();
        assert_eq!(kids.len(), 8);
        let total: f64 = kids.iter().map(|c| c.volume()).sum();
        assert!((total - b.volume()).abs() < 1e-12);
    }

    #[test]
    fn overlap_detection() {
        let a = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let b = AxisBox::new(vec![1.0, 0.0], vec![2.0, 1.0]).unwrap();
        let c = AxisBox::new(vec![0.5, 0.5], vec![1.5, 1.5]).unwrap();
        assert!(!a.overlaps_interior(&b));
        assert!(a.overlaps_interior(&c));
    }
}
