//! Nonnegative integer matrices, projective cones, and currents.

pub mod analysis;
pub mod currents;
pub mod factor;
pub mod matrix;
pub mod simplex;

use thiserror::Error;

pub use analysis::{
    cone_summary, default_norm_threshold, extremal_rays, projective_diameter, ue_criterion, ue_scan, ConeSummary,
    UeReport, UeVerdict,
};
pub use currents::{
    check_current_consistency, cylinder_envelope, cylinder_measure, empirical_current, occurrence_count, pushed_family,
    ConsistencyReport, CylinderEstimate, MeasureVector,
};
pub use factor::{elementary_factors, factor_product, shape_counts, ElementaryMatrix, ShapeCounts};
pub use matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConeError {
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("step index {index} out of range (trace has {len} steps)")]
    OutOfRange { index: usize, len: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Precondition(String),
}
