//! Crate-wide error type.
//!
//! Every fallible operation returns one of these variants; none of the public
//! entry points panic on malformed input. Obstruction certificates are *not*
//! errors — drivers report them through [`crate::diag1d::DiagOutcome`].

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible dimensions.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    /// Input required to be Hermitian is not (within the documented tolerance).
    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds tolerance")]
    NotHermitian { deviation: f64 },

    /// Input required to be normal is not: `[A, A*]` is too large.
    #[error("matrix is not normal: commutator norm {deviation:.3e} exceeds tolerance")]
    NotNormal { deviation: f64 },

    /// Input required to be unitary is not.
    #[error("matrix is not unitary: deviation {deviation:.3e} exceeds tolerance")]
    NotUnitary { deviation: f64 },

    /// Iteration budget exhausted with the objective still above target.
    #[error("iteration failed to converge: achieved {achieved:.3e}, target {target:.3e}")]
    NoConvergence { achieved: f64, target: f64 },

    /// An eigenvalue sits too close to a rounding decision boundary.
    #[error("spectrum straddles the snap threshold: eigenvalue {value}")]
    SpectrumStraddle { value: f64 },

    /// Matrix is singular (or numerically so) where invertibility is required.
    #[error("matrix is singular or nearly singular (detail: {0})")]
    Singular(String),

    /// A frame column is not a unit vector / frame is not unitary.
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    /// Invalid construction parameter.
    #[error("bad parameter: {0}")]
    BadParam(String),

    /// Per-generator decompositions do not share a common frame.
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    /// Containers disagree in shape (vertex counts, label counts, ...).
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Structural validation of a domain or field failed.
    #[error("validation failed: {0}")]
    ValidationFailed(String),

    /// Frame field handed to the homotopy is not usable.
    #[error("frames invalid: {0}")]
    FramesInvalid(String),

    /// Spectrum of an alignment unitary leaves no usable arc for a logarithm.
    #[error("spectral gap collapse: largest gap {gap:.3e} below minimum {min_gap:.3e}")]
    GapCollapse { gap: f64, min_gap: f64 },

    /// Construction finished but the residual target was not met.
    #[error("tolerance not met: achieved residual {achieved:.3e}, requested {requested:.3e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },

    /// Discrete data is too coarse for a certified integer (winding, degree).
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    /// Determinant of a would-be SU(2) field strays from 1.
    #[error("matrix is not special unitary: {0}")]
    NotSpecialUnitary(String),

    /// A state overlap used by the Chern link product is below the certified
    /// minimum, so the lattice flux cannot be trusted.
    #[error("overlap collapse: |overlap| {value:.3e} below 0.1")]
    OverlapCollapse { value: f64 },

    /// Boundary data oscillates beyond the admissibility bound; the caller
    /// must refine the mesh before filling the disk.
    #[error("oscillation too large: {0}")]
    OscillationTooLarge(String),

    /// Example kind is incompatible with the supplied domain.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// Envelope is not a readable `mfd/1` file.
    #[error("format error: {0}")]
    FormatError(String),

    /// Checksum mismatch: the payload was corrupted or truncated.
    #[error("integrity error: {0}")]
    IntegrityError(String),

    /// Well-formed file whose contents are internally inconsistent.
    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
