//! Realization container shared by both synthesis schemes.

use crate::measures::MeasureSpec;

/// Provenance of one simulated realization.
#[derive(Clone, Debug)]
pub struct RealizationMeta {
    pub method: String,
    /// Resolution `n` (step) or a plan digest (wavelet).
    pub detail: String,
    pub epsilon: Option<f64>,
    pub measure: MeasureSpec,
    pub seed: u64,
    pub stream_id: u64,
    /// Terms in the approximating sum per target point.
    pub summands: u64,
    /// Independent measure increments drawn for the realization.
    pub random_variables: u64,
    /// Wall-clock split: coefficient/weight phase vs synthesis phase.
    pub coefficient_ms: f64,
    pub synthesis_ms: f64,
}

/// Field values at the requested target points, plus provenance.
#[derive(Clone, Debug)]
pub struct FieldRealization {
    /// One value per target point, in target order.
    pub values: Vec<f64>,
    pub meta: RealizationMeta,
}
