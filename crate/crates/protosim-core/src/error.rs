//! Error type shared by all modules.

use alloc::string::String;

/// Validation and numerical failures surfaced by the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A vector required to be unit L2 norm was not, beyond tolerance.
    #[error("vector is not unit-norm: |norm - 1| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotUnitNorm { deviation: f64, tolerance: f64 },

    /// A class label fell outside `[0, num_classes)`.
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    /// Two shapes that must agree did not.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An input collection was empty where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A configuration field failed validation.
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// Covariance (plus ridge) was not positive-definite.
    #[error(
        "covariance is not positive-definite at pivot {pivot} (ridge {ridge:.3e}); \
         increase the ridge"
    )]
    NotPositiveDefinite { pivot: usize, ridge: f64 },

    /// A matrix required to be symmetric was not, beyond tolerance.
    #[error("matrix asymmetry {deviation:.3e} exceeds tolerance {tolerance:.1e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    /// Normalization of a (near-)zero vector was requested.
    #[error("cannot normalize a vector with norm {norm:.3e}")]
    ZeroNorm { norm: f64 },

    /// A metric was asked for without both populations present.
    #[error("score set needs at least one InD and one OoD record (ind={ind}, ood={ood})")]
    SinglePopulation { ind: usize, ood: usize },

    /// A record was missing a label required by the requested metric.
    #[error("record {index} is missing a {which} label")]
    MissingLabel { index: usize, which: &'static str },
}
