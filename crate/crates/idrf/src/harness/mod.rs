//! Experiment runner: configuration, realization batches, Gaussian
//! validation, counters, timing, and result export.

mod config;
mod export;
mod gaussian;
mod runner;

pub use config::{Config, MethodConfig, OutputConfig, OutputFormat};
pub use export::{export_batch, export_bin, export_csv, export_gnuplot, import_bin, sidecar_path};
pub use gaussian::{theoretical_covariance, validate_gaussian, LagEstimate, ValidationReport};
pub use runner::{
    bench, count_summands, resolved_counts, run_batch, shot_noise_direct, BenchReport,
};

use crate::error::{Error, Result};

/// Row-major equidistant target grid on `[−T,T]^d` with `points` per axis,
/// spaced `2T/points` from `−T` (half-open, so lags are exact multiples of
/// the spacing).
#[derive(Clone, Debug, PartialEq)]
pub struct TargetGrid {
    pub halfwidth: f64,
    pub points: usize,
    pub dim: usize,
}

impl TargetGrid {
    pub fn new(halfwidth: f64, points: usize, dim: usize) -> Result<Self> {
        if !(halfwidth > 0.0) || points == 0 || dim == 0 {
            return Err(Error::usage("target grid: need T > 0, points ≥ 1, dim ≥ 1"));
        }
        Ok(TargetGrid { halfwidth, points, dim })
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / self.points as f64
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut rest = flat;
        for i in (0..self.dim).rev() {
            out[i] = -self.halfwidth + (rest % self.points) as f64 * self.spacing();
            rest /= self.points;
        }
        out
    }

    pub fn all_points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.point(f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_row_major() {
        let g = TargetGrid::new(0.5, 50, 2).unwrap();
        assert_eq!(g.len(), 2500);
        assert_eq!(g.spacing(), 0.02);
        assert_eq!(g.point(0), vec![-0.5, -0.5]);
        assert_eq!(g.point(1), vec![-0.5, -0.48]);
        assert_eq!(g.point(50), vec![-0.48, -0.5]);
    }
}
