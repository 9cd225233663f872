use thiserror::Error;

/// Errors raised by construction, validation, and closed-loop execution.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix offered as a skew-symmetric element fails the antisymmetry
    /// tolerance.
    #[error("matrix is not antisymmetric (defect {defect:.3e})")]
    NotAntisymmetric { defect: f64 },

    /// A matrix offered as a rotation fails orthonormality or has a
    /// non-positive determinant.
    #[error("matrix is not a rotation (orthonormality defect {defect:.3e}, det {det:.6})")]
    NotARotation { defect: f64, det: f64 },

    /// Polar projection onto SO(3) is undefined for singular or
    /// reflection-dominant input.
    #[error("cannot project onto SO(3): {0}")]
    Projection(String),

    /// A scenario or its parts violate their invariants.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// A fuzzy membership parameter lies outside its constraint box.
    #[error("fuzzy parameter k{index} = {value} outside [{lower}, {upper}]")]
    ParamOutOfBounds {
        /// 1-based index, matching the k1..k22 naming.
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    /// A configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// The filter state stopped being representable (non-finite values).
    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
