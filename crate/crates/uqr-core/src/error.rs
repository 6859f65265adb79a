//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation or inversion was requested at a value the map omits
    /// (0 or infinity for Zorich-type maps, infinity for sine-type maps).
    #[error("value is omitted by the map: {0}")]
    OmittedValue(String),

    /// A point lay outside the domain of the requested operation,
    /// e.g. a ball Mobius map applied on or outside the unit sphere.
    #[error("point outside the operation's domain: {0}")]
    OutOfDomain(String),

    /// Beam height too large for the exponential radial scale.
    #[error("beam height {height} exceeds the representable range (|height| <= {limit})")]
    RangeOverflow { height: f64, limit: f64 },

    /// A direction vector that should be unit length was not.
    #[error("expected a unit vector, got norm {norm}")]
    NotUnit { norm: f64 },

    /// Preimage enumeration found two candidates closer than the dedup
    /// tolerance; the target is too close to a critical value to resolve.
    #[error("target is critical-value-proximate: candidates within {separation:.3e}")]
    DegenerateTarget { separation: f64 },

    /// Linearization base point has a nontrivial stabilizer.
    #[error("base point has a nontrivial stabilizer ({order} elements)")]
    NontrivialStabilizer { order: usize },

    /// Linearization base point is not carried to its own orbit by the
    /// conformal automorphism, so it induces no fixed point.
    #[error("A(x*) is not in the group orbit of x* (nearest miss {miss:.3e})")]
    NotAFixedPoint { miss: f64 },

    /// The conformal automorphism fails to normalize the group.
    #[error("conformal automorphism does not normalize the group: {0}")]
    NotAdmissible(String),

    /// An operation-specific precondition failed at runtime.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Scene or parameter validation failure.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
