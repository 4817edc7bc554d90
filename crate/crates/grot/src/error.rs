//! Error type shared by all modules.

use crate::geometry::PlanarPoint;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, GrotError>;

/// Everything that can go wrong across the geometry, integration, rotation,
/// degree, and condition-checking layers.
#[derive(Debug, Clone, Error)]
pub enum GrotError {
    /// A sample lies exactly at the origin where polar charts degenerate.
    #[error("sample {index} lies at the origin; polar lift undefined")]
    OriginSample { index: usize },

    /// Consecutive samples subtend an angle ≥ π; unwrapping would alias.
    #[error("samples {index}-{} subtend an angle {gap:.6} ≥ π; refine the sampling", index + 1)]
    UnderSampled { index: usize, gap: f64 },

    /// An operation needing H or ∇H was called on a non-Hamiltonian field.
    #[error("field has no Hamiltonian data")]
    MissingHamiltonian,

    /// Adaptive step fell below the configured minimum without an event.
    /// Signals a possible non-smooth locus; the last state is reported.
    #[error("step size underflow at t = {t:.12e} (h = {h:.3e}) near ({}, {})", state.x, state.y)]
    StepUnderflow { t: f64, state: PlanarPoint, h: f64 },

    /// The step budget was exhausted before reaching the target time.
    #[error("maximum step count exceeded at t = {t:.12e}")]
    MaxStepsExceeded { t: f64 },

    /// Rotation requested on a trajectory that reached the origin.
    #[error("trajectory hit the origin at t = {t_hit:.12e}; rotation undefined past it")]
    OriginHitTrajectory { t_hit: f64 },

    /// Evaluation time outside the trajectory's sampled range.
    #[error("t = {t:.12e} outside the trajectory's sampled range")]
    OutOfRange { t: f64 },

    /// A backward solution from the sampled cylinder escaped; continuability
    /// fails at this resolution. The offending cylinder sample is reported.
    #[error("backward solution from (t̄ = {t_bar:.6}, z̄ = ({}, {})) escaped", z_bar.x, z_bar.y)]
    BackwardBlowUp { t_bar: f64, z_bar: PlanarPoint },

    /// A boundary-loop trajectory hit the origin; profiles are undefined.
    #[error("loop sample {index}: trajectory hit the origin")]
    OriginOnBoundary { index: usize },

    /// A loop image sample lies at the target point of a winding count.
    #[error("loop image sample {index} lies at the origin; winding undefined")]
    ZeroOnLoop { index: usize },

    /// The contour level is never straddled by the sampled grid.
    #[error("level {level:.6} not bracketed on the sampled annulus (range {lo:.6}..{hi:.6})")]
    LevelNotBracketed { level: f64, lo: f64, hi: f64 },

    /// Marching squares produced no closed contour at this resolution.
    #[error("contour for level {level:.6} is broken at the sampled resolution")]
    ContourBroken { level: f64 },

    /// Fixed-point subdivision exhausted its budget without a verified root.
    #[error("no fixed point converged; {candidates} candidate cell(s) remained")]
    NoConvergence { candidates: usize },

    /// A degree report failed its admissibility requirements.
    #[error("boundary not admissible: {reason}")]
    NotAdmissible { reason: String },

    /// Family parameters violate their invariants.
    #[error("invalid parameters: {msg}")]
    InvalidParams { msg: String },

    /// Time outside the domain where a time-dependent construction is defined.
    #[error("t = {t:.12e} outside the construction's time domain")]
    OutOfTimeDomain { t: f64 },

    /// The rotation integral and the angular lift disagree beyond tolerance.
    /// This indicates an integration-consistency bug and should never occur.
    #[error("rotation integral {integral:.9} and lift {lift:.9} disagree at t = {t:.9}")]
    LiftIntegralMismatch { t: f64, integral: f64, lift: f64 },
}
