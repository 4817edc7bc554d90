//! Clockwise polar and canonical-polar charts, and angle unwrapping.
//!
//! # Angle convention
//!
//! The angle is **clockwise-positive**: the chart is
//! `Ψ(θ, r) = (r·cos θ, −r·sin θ)`, so increasing θ moves a point clockwise
//! in the usual drawing orientation. The matching angle of a Cartesian point
//! is `θ = −atan2(y, x)`. The quarter-turn matrix consistent with this
//! convention is `J = [[0, 1], [−1, 0]]`, i.e. `J z = (y, −x)`, and a field
//! rotating points clockwise has `⟨F, Jz⟩ > 0`.
//!
//! Canonical polar coordinates use the action-like radius `ρ = |z|²/2`
//! (so `z = (√(2ρ)·cos θ, −√(2ρ)·sin θ)`), in which a Hamiltonian system
//! becomes `θ̇ = ∂H/∂ρ`, `ρ̇ = −∂H/∂θ`.

use crate::error::{GrotError, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean norm |z|.
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Squared norm |z|².
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Inner product ⟨self, other⟩.
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Clockwise quarter turn `J z = (y, −x)`.
    pub fn j(self) -> Self {
        Self::new(self.y, -self.x)
    }

    /// Canonical radius ρ = |z|²/2.
    pub fn rho(self) -> f64 {
        0.5 * self.norm_sq()
    }

    /// The clockwise angle representative in (−π, π]: θ = −atan2(y, x).
    pub fn clockwise_angle(self) -> f64 {
        -self.y.atan2(self.x)
    }
}

impl Add for PlanarPoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanarPoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for PlanarPoint {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for PlanarPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// An unwrapped clockwise polar lift (θ continuous, r = |z|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarLift {
    /// Unwrapped clockwise angle in radians.
    pub theta: f64,
    /// Radius r = |z| ≥ 0.
    pub r: f64,
}

/// Canonical polar coordinates (θ clockwise, ρ = |z|²/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPolar {
    pub theta: f64,
    pub rho: f64,
}

/// The clockwise polar chart `Ψ(θ, r) = (r cos θ, −r sin θ)`.
pub fn psi(lift: PolarLift) -> PlanarPoint {
    PlanarPoint::new(lift.r * lift.theta.cos(), -lift.r * lift.theta.sin())
}

/// Wraps an angle to the interval (−π, π].
pub fn wrap_to_pi(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a - two_pi * (a / two_pi).round();
    if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// The representative of `angle + 2πk` closest to `hint`.
pub fn closest_representative(angle: f64, hint: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    angle + two_pi * ((hint - angle) / two_pi).round()
}

/// Converts a point to an unwrapped clockwise polar lift, selecting the θ
/// representative closest to `hint`.
pub fn to_polar(p: PlanarPoint, hint: f64) -> Result<PolarLift> {
    let r = p.norm();
    if !(r > 0.0) {
        return Err(GrotError::OriginSample { index: 0 });
    }
    Ok(PolarLift {
        theta: closest_representative(p.clockwise_angle(), hint),
        r,
    })
}

/// Converts a point to canonical polar coordinates (θ closest to `hint`).
pub fn to_canonical(p: PlanarPoint, hint: f64) -> Result<CanonicalPolar> {
    let lift = to_polar(p, hint)?;
    Ok(CanonicalPolar {
        theta: lift.theta,
        rho: p.rho(),
    })
}

/// Inverse canonical chart: `(θ, ρ) ↦ (√(2ρ) cos θ, −√(2ρ) sin θ)`.
pub fn from_canonical(c: CanonicalPolar) -> PlanarPoint {
    psi(PolarLift {
        theta: c.theta,
        r: (2.0 * c.rho).sqrt(),
    })
}

/// Angular gap threshold above which unwrapping refuses to guess.
///
/// A wrapped increment cannot exceed π in magnitude, so a gap close to π is
/// indistinguishable from aliasing; such inputs are rejected rather than
/// silently repaired, because rotation counts must never be corrupted.
const UNWRAP_GAP_LIMIT: f64 = std::f64::consts::PI - 1e-3;

/// Unwraps a densely sampled planar path into a continuous polar lift.
///
/// The first output θ is the representative of the first sample's angle
/// closest to `theta0_hint`; subsequent angles follow by adding wrapped
/// increments, which must stay below π in magnitude (see
/// [`UNWRAP_GAP_LIMIT`]).
pub fn unwrap_lift(samples: &[PlanarPoint], theta0_hint: f64) -> Result<Vec<PolarLift>> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev_raw = 0.0;
    let mut prev_theta = 0.0;
    for (i, &p) in samples.iter().enumerate() {
        let r = p.norm();
        if !(r > 0.0) {
            return Err(GrotError::OriginSample { index: i });
        }
        let raw = p.clockwise_angle();
        let theta = if i == 0 {
            closest_representative(raw, theta0_hint)
        } else {
            let gap = wrap_to_pi(raw - prev_raw);
            if gap.abs() >= UNWRAP_GAP_LIMIT {
                return Err(GrotError::UnderSampled {
                    index: i - 1,
                    gap: gap.abs(),
                });
            }
            prev_theta + gap
        };
        out.push(PolarLift { theta, r });
        prev_raw = raw;
        prev_theta = theta;
    }
    Ok(out)
}
