//! Planar vector fields `F(t, z)`, Hamiltonian-backed fields `F = J∇H`,
//! and built-in reference systems.
//!
//! With the clockwise conventions of [`crate::geometry`], a Hamiltonian
//! field is `F = J∇H` with `J z = (y, −x)`; in canonical polar coordinates
//! the system reads `θ̇ = ∂H/∂ρ`, `ρ̇ = −∂H/∂θ`, and the identities
//! `∂H/∂ρ = ⟨∇H, z⟩/|z|²`, `∂H/∂θ = ⟨∇H, Jz⟩` convert between charts.

use crate::error::{GrotError, Result};
use crate::geometry::PlanarPoint;

/// A time-periodic planar vector field.
///
/// Implementations must be immutable and shareable across threads; all
/// trajectory ensembles evaluate fields concurrently.
pub trait Field: Send + Sync {
    /// The time period T > 0.
    fn period(&self) -> f64;

    /// The field value F(t, z).
    fn eval(&self, t: f64, z: PlanarPoint) -> PlanarPoint;

    /// The Hamiltonian H(t, z), when the field is Hamiltonian-backed.
    fn hamiltonian(&self, _t: f64, _z: PlanarPoint) -> Option<f64> {
        None
    }

    /// The analytic gradient ∇H(t, z), when available.
    fn grad_h(&self, _t: f64, _z: PlanarPoint) -> Option<PlanarPoint> {
        None
    }

    /// Time points in `[0, period)` where the field is discontinuous in t.
    /// The integrator never lets a step straddle a seam (extended
    /// periodically over the whole time range).
    fn time_seams(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Advisory cap on the integration step near steep features, or `None`
    /// where no advisory applies. Purely a hint; accuracy control still
    /// rests with the embedded error estimate.
    fn max_step_hint(&self, _t: f64, _z: PlanarPoint) -> Option<f64> {
        None
    }

    /// Advisory center `(θ, ρ)` of a steep moving feature at time t, used
    /// by sampling-based condition checkers to focus their grids. `None`
    /// for fields without localized structure.
    fn hot_locus(&self, _t: f64) -> Option<(f64, f64)> {
        None
    }

    /// A short stable name for reports.
    fn name(&self) -> &str;
}

/// Canonical-polar partials `(∂H/∂θ, ∂H/∂ρ)` of a Hamiltonian field,
/// derived from the Cartesian gradient. Errors on non-Hamiltonian fields.
pub fn canonical_partials(field: &dyn Field, t: f64, z: PlanarPoint) -> Result<(f64, f64)> {
    let g = field.grad_h(t, z).ok_or(GrotError::MissingHamiltonian)?;
    let n2 = z.norm_sq();
    Ok((g.dot(z.j()), g.dot(z) / n2))
}

/// The rigid clockwise rotation field `F = Jz` (Hamiltonian `H = |z|²/2`).
#[derive(Debug, Clone)]
pub struct LinearClockwise {
    period: f64,
}

impl LinearClockwise {
    /// `period` is the nominal time period used by Poincaré constructions;
    /// the field itself is autonomous.
    pub fn new(period: f64) -> Self {
        Self { period }
    }
}

impl Field for LinearClockwise {
    fn period(&self) -> f64 {
        self.period
    }
    fn eval(&self, _t: f64, z: PlanarPoint) -> PlanarPoint {
        z.j()
    }
    fn hamiltonian(&self, _t: f64, z: PlanarPoint) -> Option<f64> {
        Some(0.5 * z.norm_sq())
    }
    fn grad_h(&self, _t: f64, z: PlanarPoint) -> Option<PlanarPoint> {
        Some(z)
    }
    fn name(&self) -> &str {
        "linear-clockwise"
    }
}

/// The radial-power Hamiltonian `H = ρ^α` (autonomous): `θ̇ = αρ^{α−1}`,
/// `ρ̇ = 0`, so every circle rotates rigidly clockwise at a rate that grows
/// with radius.
#[derive(Debug, Clone)]
pub struct RadialPower {
    alpha: f64,
    period: f64,
}

impl RadialPower {
    pub fn new(alpha: f64, period: f64) -> Self {
        assert!(alpha > 1.0, "radial power needs alpha > 1");
        Self { alpha, period }
    }

    fn h_rho(&self, z: PlanarPoint) -> f64 {
        self.alpha * z.rho().powf(self.alpha - 1.0)
    }
}

impl Field for RadialPower {
    fn period(&self) -> f64 {
        self.period
    }
    fn eval(&self, _t: f64, z: PlanarPoint) -> PlanarPoint {
        z.j() * self.h_rho(z)
    }
    fn hamiltonian(&self, _t: f64, z: PlanarPoint) -> Option<f64> {
        Some(z.rho().powf(self.alpha))
    }
    fn grad_h(&self, _t: f64, z: PlanarPoint) -> Option<PlanarPoint> {
        Some(z * self.h_rho(z))
    }
    fn name(&self) -> &str {
        "radial-power"
    }
}

/// The forced Duffing oscillator `ẍ + x³ = amp·sin(ω t)` on the phase plane
/// `z = (x, ẋ)`: `eval(t, (x, v)) = (v, −x³ + amp·sin(ω t))`.
///
/// Hamiltonian `H = v²/2 + x⁴/4 − amp·sin(ω t)·x` under the clockwise
/// convention. The period is `2π/ω` (conventionally `2π` when unforced).
#[derive(Debug, Clone)]
pub struct DuffingForced {
    amp: f64,
    omega: f64,
    period: f64,
}

impl DuffingForced {
    pub fn new(amp: f64, omega: f64) -> Self {
        let period = if amp == 0.0 {
            std::f64::consts::TAU
        } else {
            assert!(omega > 0.0, "forced Duffing needs omega > 0");
            std::f64::consts::TAU / omega
        };
        Self { amp, omega, period }
    }

    fn forcing(&self, t: f64) -> f64 {
        self.amp * (self.omega * t).sin()
    }
}

impl Field for DuffingForced {
    fn period(&self) -> f64 {
        self.period
    }
    fn eval(&self, t: f64, z: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(z.y, -z.x.powi(3) + self.forcing(t))
    }
    fn hamiltonian(&self, t: f64, z: PlanarPoint) -> Option<f64> {
        Some(0.5 * z.y * z.y + 0.25 * z.x.powi(4) - self.forcing(t) * z.x)
    }
    fn grad_h(&self, t: f64, z: PlanarPoint) -> Option<PlanarPoint> {
        Some(PlanarPoint::new(z.x.powi(3) - self.forcing(t), z.y))
    }
    fn name(&self) -> &str {
        "duffing"
    }
}

/// A Hamiltonian field assembled from closures: `F = J∇H`.
pub struct HamiltonianField<H, G>
where
    H: Fn(f64, PlanarPoint) -> f64 + Send + Sync,
    G: Fn(f64, PlanarPoint) -> PlanarPoint + Send + Sync,
{
    h: H,
    grad: G,
    period: f64,
    name: String,
}

/// Builds a Hamiltonian-backed field from `H`, its analytic gradient, and a
/// period. The field is `eval(t, z) = J·∇H(t, z) = (∂H/∂y, −∂H/∂x)`.
pub fn make_hamiltonian_field<H, G>(h: H, grad: G, period: f64) -> HamiltonianField<H, G>
where
    H: Fn(f64, PlanarPoint) -> f64 + Send + Sync,
    G: Fn(f64, PlanarPoint) -> PlanarPoint + Send + Sync,
{
    assert!(period > 0.0, "period must be positive");
    HamiltonianField {
        h,
        grad,
        period,
        name: "hamiltonian".to_owned(),
    }
}

impl<H, G> Field for HamiltonianField<H, G>
where
    H: Fn(f64, PlanarPoint) -> f64 + Send + Sync,
    G: Fn(f64, PlanarPoint) -> PlanarPoint + Send + Sync,
{
    fn period(&self) -> f64 {
        self.period
    }
    fn eval(&self, t: f64, z: PlanarPoint) -> PlanarPoint {
        (self.grad)(t, z).j()
    }
    fn hamiltonian(&self, t: f64, z: PlanarPoint) -> Option<f64> {
        Some((self.h)(t, z))
    }
    fn grad_h(&self, t: f64, z: PlanarPoint) -> Option<PlanarPoint> {
        Some((self.grad)(t, z))
    }
    fn name(&self) -> &str {
        &self.name
    }
}

/// Validates a field's analytic gradient against central differences of H.
///
/// Returns the maximum over `samples` of
/// `|central-difference(H) − ∇H| / (1 + |∇H|)`. Finite differences are a
/// test-only oracle; integration always uses the analytic gradient.
pub fn grad_check(field: &dyn Field, samples: &[(f64, PlanarPoint)], h: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(t, z) in samples {
        let g = field.grad_h(t, z).ok_or(GrotError::MissingHamiltonian)?;
        let hx = |p: PlanarPoint| field.hamiltonian(t, p).ok_or(GrotError::MissingHamiltonian);
        let fd_x = (hx(PlanarPoint::new(z.x + h, z.y))? - hx(PlanarPoint::new(z.x - h, z.y))?)
            / (2.0 * h);
        let fd_y = (hx(PlanarPoint::new(z.x, z.y + h))? - hx(PlanarPoint::new(z.x, z.y - h))?)
            / (2.0 * h);
        let err = (PlanarPoint::new(fd_x, fd_y) - g).norm() / (1.0 + g.norm());
        worst = worst.max(err);
    }
    Ok(worst)
}
