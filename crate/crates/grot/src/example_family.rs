//! A two-parameter family of time-periodic Hamiltonian plane fields with a
//! designed blow-up solution.
//!
//! The base Hamiltonian `ρ^α` drives clockwise rotation whose speed grows
//! with the canonical radius `ρ = |z|²/2`. On top of it, a localized,
//! time-dependent "dip" term carves a moving trough in the angular
//! direction. The trough is centered on a prescribed spiral
//! `(θ*(t), ρ*(t))` whose radius blows up at a finite time `t_f`; its
//! shape is tuned so that the spiral itself solves the equations of motion
//! exactly, while the perturbation stays uniformly small (`sup |f| < ε`)
//! and its angular slope stays inside the budget `(−ρ̇*, β/t_f)`.
//!
//! The family exhibits a sharp dichotomy in the parameters `(α, β)`:
//! radial coercivity of the Hamiltonian holds iff `β(α−2) ≥ 1`, and the
//! generalized rotation of the blow-up solution diverges iff
//! `β(α−1) ≥ 1`; otherwise it converges to an explicit finite limit.

use crate::cheb::Chebyshev;
use crate::error::{GrotError, Result};
use crate::fields::Field;
use crate::geometry::{self, CanonicalPolar, PlanarPoint};
use crate::rotation::GRotValue;
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Parameters of the family.
///
/// Constraints (checked by [`ExampleParams::validate`]): `alpha > 1`,
/// `beta > 0`, `0 < t_f ≤ period`, starting radius
/// `sigma0 · t_f^(1−beta) ≥ 1`, and `epsilon`, `v_width`, `d_cap`
/// all positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExampleParams {
    /// Radial exponent of the base Hamiltonian `ρ^α` (`α > 1`).
    pub alpha: f64,
    /// Blow-up rate of the tracked radius (`β > 0`).
    pub beta: f64,
    /// Radius scale: `ρ*(t) = sigma0 · t_f / (t_f − t)^β`.
    pub sigma0: f64,
    /// Designed blow-up time (the dip is active on `[0, t_f)`).
    pub t_f: f64,
    /// Period of the field (`t_f ≤ period`; the dip is off on `[t_f, period)`).
    pub period: f64,
    /// Uniform bound budget for the dip: `sup |f| ≤ epsilon / 2`.
    pub epsilon: f64,
    /// Half-width of the saturation ramp in the scaled slope variable.
    pub v_width: f64,
    /// Extra user cap on the dip depth `d` (use `inf` for no cap).
    pub d_cap: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            alpha: 2.0,
            beta: 1.0,
            sigma0: 1.0,
            t_f: 1.0,
            period: 1.0,
            epsilon: 0.25,
            v_width: 2.0,
            d_cap: f64::INFINITY,
        }
    }
}

impl ExampleParams {
    /// A parameter set with the given exponents and all other values at
    /// their defaults (`sigma0 = t_f = period = 1`, `epsilon = 1/4`,
    /// `v_width = 2`, no depth cap).
    pub fn with_exponents(alpha: f64, beta: f64) -> Self {
        ExampleParams {
            alpha,
            beta,
            ..Default::default()
        }
    }

    /// Checks the parameter constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GrotError::InvalidParams { msg });
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return bad(format!("alpha must be finite and > 1, got {}", self.alpha));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be finite and > 0, got {}", self.beta));
        }
        if !(self.t_f.is_finite() && self.t_f > 0.0) {
            return bad(format!("t_f must be finite and > 0, got {}", self.t_f));
        }
        if !(self.period.is_finite() && self.period >= self.t_f) {
            return bad(format!(
                "period must be finite and ≥ t_f = {}, got {}",
                self.t_f, self.period
            ));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return bad(format!("sigma0 must be finite and > 0, got {}", self.sigma0));
        }
        let rho0 = self.sigma0 * self.t_f.powf(1.0 - self.beta);
        if !(rho0 >= 1.0) {
            return bad(format!(
                "starting radius sigma0·t_f^(1−beta) must be ≥ 1, got {rho0}"
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be finite and > 0, got {}", self.epsilon));
        }
        if !(self.v_width.is_finite() && self.v_width > 0.0) {
            return bad(format!("v_width must be finite and > 0, got {}", self.v_width));
        }
        if self.d_cap.is_nan() || self.d_cap <= 0.0 {
            return bad(format!("d_cap must be > 0 (inf allowed), got {}", self.d_cap));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shape functions
// ---------------------------------------------------------------------------

fn exp_bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: `0` for `x ≤ 0`, `1` for `x ≥ 1`, strictly increasing in
/// between, with all derivatives vanishing at both ends. Symmetric:
/// `S(x) + S(1−x) = 1`, and `S′(1/2) = 2` exactly.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let p = exp_bump(x);
        p / (p + exp_bump(1.0 - x))
    }
}

/// Derivative of [`smoothstep`].
pub fn smoothstep_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let p = exp_bump(x);
        let q = exp_bump(1.0 - x);
        // p′(x) = p/x²; (1−x)′ flips the sign of q′.
        let pd = p / (x * x);
        let qd = q / ((1.0 - x) * (1.0 - x));
        (pd * q + p * qd) / ((p + q) * (p + q))
    }
}

/// Antiderivative of [`smoothstep`] on `[0, 1]` with `∫₀⁰ = 0`, via a
/// once-computed Chebyshev expansion (the integrand is smooth, so the
/// 256-node fit is accurate to full precision for this purpose).
static SMOOTHSTEP_INTEGRAL: Lazy<Chebyshev> =
    Lazy::new(|| Chebyshev::fit(smoothstep, 0.0, 1.0, 256).antiderivative());

/// Odd, smooth saturation profile with an exact linear core.
///
/// `saturation(v) = v` for `|v| ≤ v_width/2`, then the slope ramps smoothly
/// from 1 to 0, and the value is constant for `|v| ≥ v_width`. The slope
/// stays in `[0, 1]` everywhere and the plateau level is
/// [`saturation_sup`] `= 3·v_width/4` (up to quadrature error `~1e−15`).
pub fn saturation(v: f64, v_width: f64) -> f64 {
    let core = 0.5 * v_width;
    let a = v.abs();
    let mag = if a <= core {
        a
    } else if a < v_width {
        // ∫ slope over (core, a): substitute x = (v_width − s)/(v_width − core).
        let ramp = v_width - core;
        let x = (v_width - a) / ramp;
        let t1 = SMOOTHSTEP_INTEGRAL.eval(1.0);
        core + ramp * (t1 - SMOOTHSTEP_INTEGRAL.eval(x))
    } else {
        saturation_sup(v_width)
    };
    if v < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Slope of [`saturation`]: `1` on the core, a smooth ramp down to `0`.
pub fn saturation_deriv(v: f64, v_width: f64) -> f64 {
    let core = 0.5 * v_width;
    let a = v.abs();
    if a <= core {
        1.0
    } else if a < v_width {
        smoothstep((v_width - a) / (v_width - core))
    } else {
        0.0
    }
}

/// Plateau value of [`saturation`] (`= 3·v_width/4` by the symmetry of the
/// ramp; evaluated from the quadrature so the tail is exactly continuous).
pub fn saturation_sup(v_width: f64) -> f64 {
    let core = 0.5 * v_width;
    core + (v_width - core) * SMOOTHSTEP_INTEGRAL.eval(1.0)
}

/// Smooth angular cutoff: `≡ 1` on `[−1/4, 1/4]`, supported in
/// `[−1/2, 1/2]`, even. Its Lipschitz constant is exactly
/// [`PLATEAU_LIPSCHITZ`] `= 8` (the ramp is a smoothstep with slope 2 at
/// its midpoint, scaled by 4).
pub fn plateau(u: f64) -> f64 {
    smoothstep(4.0 * (0.5 - u.abs()))
}

/// Derivative of [`plateau`].
pub fn plateau_deriv(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        -4.0 * u.signum() * smoothstep_deriv(4.0 * (0.5 - u.abs()))
    }
}

/// `sup |plateau′|`, attained at the ramp midpoints `|u| = 3/8`.
pub const PLATEAU_LIPSCHITZ: f64 = 8.0;

/// Radial bump: `g(w) = exp(1 − 1/(1 − 4w²))` for `|w| < 1/2`, zero
/// outside. `g(0) = 1`, `g′(0) = 0`, support exactly `[−1/2, 1/2]`.
pub fn bump_g(w: f64) -> f64 {
    if w.abs() < 0.5 {
        let s = 1.0 - 4.0 * w * w;
        (1.0 - 1.0 / s).exp()
    } else {
        0.0
    }
}

/// Derivative of [`bump_g`].
pub fn bump_g_deriv(w: f64) -> f64 {
    if w.abs() < 0.5 {
        let s = 1.0 - 4.0 * w * w;
        (1.0 - 1.0 / s).exp() * (-8.0 * w) / (s * s)
    } else {
        0.0
    }
}

/// `sup |g′|` of the radial bump, computed once by golden-section search
/// (the magnitude is unimodal on each half-support).
pub fn bump_g_lipschitz() -> f64 {
    static SUP: Lazy<f64> = Lazy::new(|| {
        let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
        let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - (hi - lo) * inv_phi;
            let b = lo + (hi - lo) * inv_phi;
            if bump_g_deriv(a).abs() > bump_g_deriv(b).abs() {
                hi = b;
            } else {
                lo = a;
            }
        }
        bump_g_deriv(0.5 * (lo + hi)).abs()
    });
    *SUP
}

// ---------------------------------------------------------------------------
// The designed spiral and the dip term
// ---------------------------------------------------------------------------

/// The designed blow-up solution `(θ*(t), ρ*(t))` in canonical polar
/// coordinates, with its rotation limit.
#[derive(Debug, Clone, Copy)]
pub struct SpecialSolution {
    params: ExampleParams,
}

/// Builds the designed solution for a parameter set.
pub fn special_solution(params: ExampleParams) -> Result<SpecialSolution> {
    params.validate()?;
    Ok(SpecialSolution { params })
}

impl SpecialSolution {
    /// Tracked radius `ρ*(t) = σ₀ t_f / (t_f − t)^β`, `+∞` for `t ≥ t_f`.
    pub fn rho_star(&self, t: f64) -> f64 {
        let p = &self.params;
        if t >= p.t_f {
            return f64::INFINITY;
        }
        p.sigma0 * p.t_f / (p.t_f - t).powf(p.beta)
    }

    /// Radial speed `ρ̇*(t) = β σ₀ t_f / (t_f − t)^(β+1)`.
    pub fn rho_star_dot(&self, t: f64) -> f64 {
        let p = &self.params;
        if t >= p.t_f {
            return f64::INFINITY;
        }
        p.beta * p.sigma0 * p.t_f / (p.t_f - t).powf(p.beta + 1.0)
    }

    /// Angular speed of the spiral: `θ̇* = α ρ*^(α−1)`.
    pub fn theta_star_dot(&self, t: f64) -> f64 {
        let p = &self.params;
        p.alpha * self.rho_star(t).powf(p.alpha - 1.0)
    }

    /// Tracked angle `θ*(t)`, the exact antiderivative of `θ̇*` with
    /// `θ*(0) = 0`. With `q = β(α−1)` and `c = α (σ₀ t_f)^(α−1)`:
    /// `c·((t_f−t)^(1−q) − t_f^(1−q))/(q−1)` for `q ≠ 1`, and
    /// `c·ln(t_f/(t_f−t))` for `q = 1`. For `t ≥ t_f` this is the limit
    /// value (finite iff `q < 1`).
    pub fn theta_star(&self, t: f64) -> f64 {
        let p = &self.params;
        let q = p.beta * (p.alpha - 1.0);
        let c = p.alpha * (p.sigma0 * p.t_f).powf(p.alpha - 1.0);
        let remaining = (p.t_f - t).max(0.0);
        if (q - 1.0).abs() < 1e-12 {
            if remaining == 0.0 {
                return f64::INFINITY;
            }
            c * (p.t_f / remaining).ln()
        } else {
            let tail = if remaining == 0.0 && q > 1.0 {
                f64::INFINITY
            } else {
                remaining.powf(1.0 - q)
            };
            c * (tail - p.t_f.powf(1.0 - q)) / (q - 1.0)
        }
    }

    /// Generalized rotation of the spiral over `[0, t_f)`: finite
    /// `α σ₀^(α−1) t_f^(α−β(α−1)) / (2π (1 − β(α−1)))` when `β(α−1) < 1`,
    /// `+∞` otherwise.
    pub fn rot_limit(&self) -> GRotValue {
        let p = &self.params;
        let q = p.beta * (p.alpha - 1.0);
        if q >= 1.0 - 1e-12 {
            GRotValue::PlusInfinity
        } else {
            let v = p.alpha * p.sigma0.powf(p.alpha - 1.0) * p.t_f.powf(p.alpha - q)
                / (TAU * (1.0 - q));
            GRotValue::Finite(v)
        }
    }

    pub fn params(&self) -> &ExampleParams {
        &self.params
    }
}

/// Depth of the dip term. The minimum of four budgets: uniform size
/// (`sup|f| = d·Σ ≤ ε/2`), angular slope (`d·Σ·L_χ ≤ β/(2 t_f)`),
/// confinement of the saturation ramp inside the cutoff plateau
/// (`d·v_width/ρ̇*(0) ≤ 1/4`), and the user cap. `Σ` is the saturation
/// plateau [`saturation_sup`].
pub fn dip_depth(p: &ExampleParams) -> f64 {
    let sup = saturation_sup(p.v_width);
    let sol = SpecialSolution { params: *p };
    let by_size = p.epsilon / (2.0 * sup);
    let by_slope = p.beta / (2.0 * p.t_f * PLATEAU_LIPSCHITZ * sup);
    let by_confinement = sol.rho_star_dot(0.0) / (4.0 * p.v_width);
    by_size.min(by_slope).min(by_confinement).min(p.d_cap)
}

/// The angular dip at time `t` and angular offset `u = θ − θ*(t)`
/// (`2π`-periodic in `u`, supported on `|u| ≤ 1/2` mod `2π`):
/// `f(t,u) = −d · saturation(ρ̇*(t)·u/d) · plateau(u)`.
///
/// On the inner plateau the angular slope is exactly `−ρ̇*(t)`, which is
/// what lets the designed spiral solve the equations of motion; the
/// saturation keeps `|f| ≤ d·Σ` uniformly as `ρ̇* → ∞`.
///
/// Errors with [`GrotError::OutOfTimeDomain`] unless `0 ≤ t < t_f`.
pub fn dip_f(p: &ExampleParams, t: f64, u: f64) -> Result<f64> {
    p.validate()?;
    check_dip_time(p, t)?;
    Ok(dip_f_raw(p, &SpecialSolution { params: *p }, dip_depth(p), t, u))
}

/// Angular derivative `∂f/∂u`, same domain as [`dip_f`].
pub fn dip_f_du(p: &ExampleParams, t: f64, u: f64) -> Result<f64> {
    p.validate()?;
    check_dip_time(p, t)?;
    Ok(dip_f_du_raw(p, &SpecialSolution { params: *p }, dip_depth(p), t, u))
}

fn check_dip_time(p: &ExampleParams, t: f64) -> Result<()> {
    if (0.0..p.t_f).contains(&t) {
        Ok(())
    } else {
        Err(GrotError::OutOfTimeDomain { t })
    }
}

fn dip_f_raw(p: &ExampleParams, sol: &SpecialSolution, d: f64, t: f64, u: f64) -> f64 {
    let uw = geometry::wrap_to_pi(u);
    if uw.abs() >= 0.5 {
        return 0.0;
    }
    let mut w = sol.rho_star_dot(t) * uw / d;
    if w.is_nan() {
        // Only reachable as ∞·0 when uw = 0 exactly and ρ̇* overflowed.
        w = 0.0;
    }
    -d * saturation(w, p.v_width) * plateau(uw)
}

fn dip_f_du_raw(p: &ExampleParams, sol: &SpecialSolution, d: f64, t: f64, u: f64) -> f64 {
    let uw = geometry::wrap_to_pi(u);
    if uw.abs() >= 0.5 {
        return 0.0;
    }
    let rho_dot = sol.rho_star_dot(t);
    let mut w = rho_dot * uw / d;
    if w.is_nan() {
        w = 0.0;
    }
    let slope_term = if w.abs() >= p.v_width {
        0.0 // saturation_deriv vanishes; avoids ∞·0 when ρ̇* overflows
    } else {
        -rho_dot * saturation_deriv(w, p.v_width) * plateau(uw)
    };
    slope_term - d * saturation(w, p.v_width) * plateau_deriv(uw)
}

// ---------------------------------------------------------------------------
// Parameter dichotomies
// ---------------------------------------------------------------------------

/// Radial-coercivity dichotomy: the family satisfies the coercive lower
/// bound on the Hamiltonian iff `β(α−2) ≥ 1`.
pub fn h1_predicate(p: &ExampleParams) -> bool {
    p.beta * (p.alpha - 2.0) >= 1.0 - 1e-12
}

/// Rotation-divergence dichotomy: the designed solution's generalized
/// rotation diverges iff `β(α−1) ≥ 1`.
pub fn a4_predicate(p: &ExampleParams) -> bool {
    p.beta * (p.alpha - 1.0) >= 1.0 - 1e-12
}

// ---------------------------------------------------------------------------
// The field
// ---------------------------------------------------------------------------

/// The family member for one parameter set. `H(t, θ, ρ) = ρ^α + K`, where
/// `K = f(t, θ − θ*(t)) · g(ρ − ρ*(t))` while `t mod period ∈ [0, t_f)`
/// and `K = 0` on `[t_f, period)`.
#[derive(Debug, Clone)]
pub struct ExampleField {
    params: ExampleParams,
    sol: SpecialSolution,
    depth: f64,
}

/// Builds the field, validating parameters.
pub fn make_example_field(params: ExampleParams) -> Result<ExampleField> {
    params.validate()?;
    Ok(ExampleField {
        params,
        sol: SpecialSolution { params },
        depth: dip_depth(&params),
    })
}

/// Initial point of the designed blow-up solution:
/// `Ψ(θ*(0), ρ*(0)) = (√(2 ρ*(0)), 0)`.
pub fn make_special_seed(p: &ExampleParams) -> Result<PlanarPoint> {
    let sol = special_solution(*p)?;
    Ok(geometry::from_canonical(CanonicalPolar {
        theta: 0.0,
        rho: sol.rho_star(0.0),
    }))
}

impl ExampleField {
    /// Canonical partial derivatives `(∂H/∂θ, ∂H/∂ρ)` at phase time `t`
    /// (already reduced mod period) and canonical polar point `(θ, ρ)`.
    pub fn partials(&self, t: f64, theta: f64, rho: f64) -> (f64, f64) {
        let p = &self.params;
        let base_rho = p.alpha * rho.powf(p.alpha - 1.0);
        // Defensive inner gate: the dip lives on |ρ − ρ*| < 1/2 with
        // ρ* ≥ 1, so it cannot reach ρ < 1/2; skip it there regardless.
        if rho < 0.5 {
            return (0.0, base_rho);
        }
        let tau = t.rem_euclid(p.period);
        if tau >= p.t_f {
            return (0.0, base_rho);
        }
        let v = rho - self.sol.rho_star(tau);
        if !(v.abs() < 0.5) {
            // Also covers ρ* = ∞ (v = −∞) just below the blow-up time.
            return (0.0, base_rho);
        }
        let u = theta - self.sol.theta_star(tau);
        let f = dip_f_raw(p, &self.sol, self.depth, tau, u);
        let f_u = dip_f_du_raw(p, &self.sol, self.depth, tau, u);
        (f_u * bump_g(v), base_rho + f * bump_g_deriv(v))
    }

    fn hamiltonian_value(&self, t: f64, theta: f64, rho: f64) -> f64 {
        let p = &self.params;
        let base = rho.powf(p.alpha);
        if rho < 0.5 {
            return base;
        }
        let tau = t.rem_euclid(p.period);
        if tau >= p.t_f {
            return base;
        }
        let v = rho - self.sol.rho_star(tau);
        if !(v.abs() < 0.5) {
            return base;
        }
        let u = theta - self.sol.theta_star(tau);
        base + dip_f_raw(&self.params, &self.sol, self.depth, tau, u) * bump_g(v)
    }

    pub fn params(&self) -> &ExampleParams {
        &self.params
    }

    /// The designed blow-up solution of this field.
    pub fn solution(&self) -> SpecialSolution {
        self.sol
    }

    /// The dip depth `d` in use.
    pub fn depth(&self) -> f64 {
        self.depth
    }
}

impl Field for ExampleField {
    fn period(&self) -> f64 {
        self.params.period
    }

    fn eval(&self, t: f64, z: PlanarPoint) -> PlanarPoint {
        let norm_sq = z.norm_sq();
        if norm_sq == 0.0 {
            return PlanarPoint::new(0.0, 0.0);
        }
        let (h_theta, h_rho) = self.partials(t, z.clockwise_angle(), z.rho());
        z.j() * h_rho - z * (h_theta / norm_sq)
    }

    fn hamiltonian(&self, t: f64, z: PlanarPoint) -> Option<f64> {
        Some(self.hamiltonian_value(t, z.clockwise_angle(), z.rho()))
    }

    fn grad_h(&self, t: f64, z: PlanarPoint) -> Option<PlanarPoint> {
        let norm_sq = z.norm_sq();
        if norm_sq == 0.0 {
            return Some(PlanarPoint::new(0.0, 0.0));
        }
        let (h_theta, h_rho) = self.partials(t, z.clockwise_angle(), z.rho());
        Some(z * h_rho + z.j() * (h_theta / norm_sq))
    }

    fn time_seams(&self) -> Vec<f64> {
        // The dip switches on at 0 and off at t_f; when t_f == period the
        // two coincide mod period.
        if self.params.t_f < self.params.period {
            vec![0.0, self.params.t_f]
        } else {
            vec![0.0]
        }
    }

    fn max_step_hint(&self, t: f64, z: PlanarPoint) -> Option<f64> {
        let p = &self.params;
        let tau = t.rem_euclid(p.period);
        if tau >= p.t_f {
            return None;
        }
        let rho_star = self.sol.rho_star(tau);
        if (z.rho() - rho_star).abs() < 0.75 {
            // The tracked radius moves on the timescale (t_f − τ)/(β+1);
            // resolve it so the trough is never stepped over.
            Some(0.1 * (p.t_f - tau) / (p.beta + 1.0))
        } else {
            None
        }
    }

    fn hot_locus(&self, t: f64) -> Option<(f64, f64)> {
        let tau = t.rem_euclid(self.params.period);
        if tau >= self.params.t_f {
            None
        } else {
            Some((self.sol.theta_star(tau), self.sol.rho_star(tau)))
        }
    }

    fn name(&self) -> &str {
        "example-family"
    }
}

/// Worst relative defect of the designed spiral as a solution of the
/// canonical equations of motion, over a time grid in `[0, t_f)`:
/// `max_t |θ̇* − ∂H/∂ρ|/(1+|θ̇*|) + |ρ̇* + ∂H/∂θ|/(1+|ρ̇*|)` evaluated at
/// `(t, θ*(t), ρ*(t))`. The normalization keeps the check meaningful near
/// the blow-up time where the magnitudes diverge.
pub fn residual_special_solution(p: &ExampleParams, t_grid: &[f64]) -> Result<f64> {
    let field = make_example_field(*p)?;
    let sol = field.solution();
    let mut worst = 0.0_f64;
    for &t in t_grid {
        check_dip_time(p, t)?;
        let (h_theta, h_rho) = field.partials(t, sol.theta_star(t), sol.rho_star(t));
        let td = sol.theta_star_dot(t);
        let rd = sol.rho_star_dot(t);
        let res = (td - h_rho).abs() / (1.0 + td.abs()) + (rd + h_theta).abs() / (1.0 + rd.abs());
        worst = worst.max(res);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grad_check;
    use crate::integrator::{integrate, Classification, IntegratorConfig};
    use approx::assert_relative_eq;

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(-3.0), 0.0);
        assert_eq!(smoothstep(7.0), 1.0);
        // Exact midpoint slope and the reflection identity.
        assert_relative_eq!(smoothstep_deriv(0.5), 2.0, epsilon = 1e-14);
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert_relative_eq!(smoothstep(x) + smoothstep(1.0 - x), 1.0, epsilon = 1e-14);
            // Finite-difference check of the derivative.
            if k > 0 && k < 20 {
                let h = 1e-6;
                let fd = (smoothstep(x + h) - smoothstep(x - h)) / (2.0 * h);
                assert_relative_eq!(smoothstep_deriv(x), fd, epsilon = 1e-7, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn saturation_shape() {
        let vw = 2.0;
        // Exact linear core.
        for &v in &[0.0, 0.3, -0.7, 1.0, -1.0] {
            assert_eq!(saturation(v, vw), v);
        }
        // Odd, monotone, slope in [0,1], plateau at 3/4 of the width.
        let sup = saturation_sup(vw);
        assert_relative_eq!(sup, 0.75 * vw, epsilon = 1e-12);
        assert_eq!(saturation(2.5, vw), sup);
        assert_eq!(saturation(f64::INFINITY, vw), sup);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=500 {
            let v = -3.0 + 6.0 * k as f64 / 500.0;
            let s = saturation(v, vw);
            assert_relative_eq!(saturation(-v, vw), -s, epsilon = 1e-14);
            assert!(s >= prev - 1e-14, "not monotone at v = {v}");
            prev = s;
            let sd = saturation_deriv(v, vw);
            assert!((-1e-12..=1.0 + 1e-12).contains(&sd));
            // The slope really is the derivative of the value.
            let h = 1e-5;
            let fd = (saturation(v + h, vw) - saturation(v - h, vw)) / (2.0 * h);
            assert!((sd - fd).abs() < 5e-9, "slope mismatch at v={v}: {sd} vs {fd}");
        }
        // Continuity at the core edge and the outer edge.
        assert_relative_eq!(saturation(1.0 + 1e-12, vw), 1.0, epsilon = 1e-9);
        assert_relative_eq!(saturation(2.0 - 1e-12, vw), sup, epsilon = 1e-9);
    }

    #[test]
    fn plateau_shape() {
        for k in 0..=20 {
            let u = -0.25 + 0.5 * k as f64 / 20.0;
            assert_eq!(plateau(u), 1.0, "plateau must be exactly 1 at {u}");
        }
        assert_eq!(plateau(0.5), 0.0);
        assert_eq!(plateau(-0.7), 0.0);
        // Lipschitz constant: grid max close to, and never above, 8.
        let mut max_slope = 0.0_f64;
        for k in 0..=4000 {
            let u = -0.6 + 1.2 * k as f64 / 4000.0;
            let pd = plateau_deriv(u).abs();
            max_slope = max_slope.max(pd);
            let h = 1e-6;
            let fd = (plateau(u + h) - plateau(u - h)) / (2.0 * h);
            assert!((plateau_deriv(u) - fd).abs() < 2e-6);
        }
        assert!(max_slope <= PLATEAU_LIPSCHITZ + 1e-9);
        assert!(max_slope > 7.99, "grid max {max_slope} should approach 8");
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump_g(0.0), 1.0);
        assert_eq!(bump_g(0.5), 0.0);
        assert_eq!(bump_g(-0.6), 0.0);
        assert_relative_eq!(bump_g(0.25), (1.0_f64 - 4.0 / 3.0).exp(), epsilon = 1e-15);
        // g′(0) = 0 and FD agreement.
        assert_eq!(bump_g_deriv(0.0), 0.0);
        let mut grid_max = 0.0_f64;
        for k in 1..=999 {
            let w = -0.5 + k as f64 / 1000.0;
            let h = 1e-6;
            let fd = (bump_g(w + h) - bump_g(w - h)) / (2.0 * h);
            assert!((bump_g_deriv(w) - fd).abs() < 1e-6);
            grid_max = grid_max.max(bump_g_deriv(w).abs());
        }
        let lip = bump_g_lipschitz();
        assert!(lip >= grid_max && lip <= grid_max + 1e-3, "sup|g′| = {lip}");
    }

    #[test]
    fn depth_budget_at_defaults() {
        // ε/(2Σ) = 0.25/3, slope budget 1/(2·8·1.5) = 1/24 (the minimum),
        // confinement 1/8.
        let p = ExampleParams::default();
        assert_relative_eq!(dip_depth(&p), 1.0 / 24.0, epsilon = 1e-12);
        // The user cap takes over when tighter.
        let capped = ExampleParams {
            d_cap: 0.01,
            ..p
        };
        assert_eq!(dip_depth(&capped), 0.01);
    }

    #[test]
    fn spiral_closed_forms() {
        // α = 2, β = 1: ρ* = 1/(1−t), θ* = 2 ln(1/(1−t)).
        let sol = special_solution(ExampleParams::default()).unwrap();
        assert_relative_eq!(sol.rho_star(0.9), 10.0, epsilon = 1e-12);
        assert_relative_eq!(sol.theta_star(0.9), -2.0 * 0.1_f64.ln(), epsilon = 1e-12);
        assert_eq!(sol.rho_star(1.0), f64::INFINITY);
        assert_eq!(sol.theta_star(1.0), f64::INFINITY);

        // θ* really antidifferentiates θ̇* (finite differences), across
        // both branches q ≠ 1 and q = 1.
        for (alpha, beta) in [(2.0, 1.0), (1.5, 1.0), (3.0, 0.5), (4.0, 2.0)] {
            let sol = special_solution(ExampleParams::with_exponents(alpha, beta)).unwrap();
            for &t in &[0.1, 0.5, 0.8] {
                let h = 1e-6;
                let fd = (sol.theta_star(t + h) - sol.theta_star(t - h)) / (2.0 * h);
                assert_relative_eq!(fd, sol.theta_star_dot(t), max_relative = 1e-8);
                let fd = (sol.rho_star(t + h) - sol.rho_star(t - h)) / (2.0 * h);
                assert_relative_eq!(fd, sol.rho_star_dot(t), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn rotation_limits() {
        let lim = |a: f64, b: f64| {
            special_solution(ExampleParams::with_exponents(a, b))
                .unwrap()
                .rot_limit()
        };
        assert_eq!(lim(2.0, 1.0), GRotValue::PlusInfinity);
        assert_eq!(lim(4.0, 1.0), GRotValue::PlusInfinity);
        assert_eq!(lim(1.5, 2.0), GRotValue::PlusInfinity); // q = 1 exactly
        assert_relative_eq!(
            lim(1.5, 1.0).finite().unwrap(),
            3.0 / TAU,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            lim(1.5, 0.5).finite().unwrap(),
            1.0 / (TAU * 0.75) * 1.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn dichotomy_predicates() {
        let p = |a, b| ExampleParams::with_exponents(a, b);
        assert!(h1_predicate(&p(4.0, 1.0)) && a4_predicate(&p(4.0, 1.0)));
        assert!(!h1_predicate(&p(2.0, 1.0)) && a4_predicate(&p(2.0, 1.0)));
        assert!(!h1_predicate(&p(1.5, 1.0)) && !a4_predicate(&p(1.5, 1.0)));
        assert!(!h1_predicate(&p(3.0, 0.5)) && a4_predicate(&p(3.0, 0.5))); // boundary 1.0
        assert!(h1_predicate(&p(3.0, 1.0)));
        assert!(h1_predicate(&p(2.5, 2.0)));
        assert!(!a4_predicate(&p(1.5, 0.5)));
    }

    #[test]
    fn dip_slope_and_magnitude_budgets() {
        let p = ExampleParams::default();
        let d = dip_depth(&p);
        // The depth is budgeted so the worst-case dip stays within ε/2.
        assert!(d * saturation_sup(p.v_width) <= p.epsilon / 2.0 + 1e-15);
        let sol = special_solution(p).unwrap();
        for &t in &[0.0, 0.3, 0.7, 0.9, 0.99] {
            let rho_dot = sol.rho_star_dot(t);
            // Exact design slope at the trough center.
            assert_relative_eq!(
                dip_f_du(&p, t, 0.0).unwrap(),
                -rho_dot,
                max_relative = 1e-12
            );
            assert_eq!(dip_f(&p, t, 0.0).unwrap(), 0.0);
            // Support and periodicity.
            assert_eq!(dip_f(&p, t, 0.6).unwrap(), 0.0);
            assert_eq!(dip_f(&p, t, 0.5).unwrap(), 0.0);
            let inside = dip_f(&p, t, 0.2).unwrap();
            assert_relative_eq!(dip_f(&p, t, 0.2 + TAU).unwrap(), inside, epsilon = 1e-12);
            // Magnitude and slope budgets on a grid.
            for k in 0..=400 {
                let u = -0.55 + 1.1 * k as f64 / 400.0;
                let f = dip_f(&p, t, u).unwrap();
                assert!(f.abs() <= p.epsilon / 2.0 + 1e-12, "|f| too big at ({t},{u})");
                // Odd in u: a drop through the trough center.
                assert!(f * u <= 0.0, "sign pattern broken at ({t},{u})");
                let fu = dip_f_du(&p, t, u).unwrap();
                assert!(
                    fu >= -rho_dot * (1.0 + 1e-9),
                    "slope below −ρ̇* at ({t},{u}): {fu} vs {}",
                    -rho_dot
                );
                assert!(fu < p.beta / p.t_f, "slope ≥ β/t_f at ({t},{u}): {fu}");
            }
        }
        // Out-of-domain times are rejected.
        assert!(matches!(
            dip_f(&p, 1.0, 0.0),
            Err(GrotError::OutOfTimeDomain { .. })
        ));
        assert!(matches!(
            dip_f(&p, -0.1, 0.0),
            Err(GrotError::OutOfTimeDomain { .. })
        ));
    }

    #[test]
    fn residual_of_designed_solution_is_tiny() {
        for (alpha, beta) in [(2.0, 1.0), (1.5, 1.0), (3.0, 0.5), (4.0, 2.0)] {
            let p = ExampleParams::with_exponents(alpha, beta);
            let r = residual_special_solution(&p, &[0.0, 0.3, 0.6, 0.9]).unwrap();
            assert!(r < 1e-9, "residual {r} for α={alpha}, β={beta}");
            let r = residual_special_solution(&p, &[0.999]).unwrap();
            assert!(r < 1e-6, "late-time residual {r} for α={alpha}, β={beta}");
        }
    }

    #[test]
    fn hamiltonian_is_pure_power_away_from_the_trough() {
        let p = ExampleParams {
            period: 2.0,
            ..Default::default()
        };
        let field = make_example_field(p).unwrap();
        let sol = field.solution();
        // On [t_f, period) the dip is structurally off, so H(1.5, z) is the
        // pure power through the exact code path used everywhere; far from
        // ρ*(t) in radius the dip must contribute exactly nothing, i.e.
        // bitwise the same value.
        for &t in &[0.0, 0.4, 0.8] {
            let rho_far = sol.rho_star(t) + 0.51;
            for &rho in &[0.1, 0.45, rho_far, rho_far + 3.0] {
                let z = geometry::from_canonical(CanonicalPolar { theta: 1.0, rho });
                let h = field.hamiltonian(t, z).unwrap();
                assert_eq!(h, field.hamiltonian(1.5, z).unwrap(), "t={t}, ρ={rho}");
                assert_relative_eq!(h, z.rho().powf(p.alpha), max_relative = 1e-13);
                let (h_theta, _) = field.partials(t, z.clockwise_angle(), z.rho());
                assert_eq!(h_theta, 0.0);
            }
        }
        // Dip switched off on [t_f, period), and T-periodic in t.
        for &t in &[1.0, 1.7, 1.999] {
            for &rho in &[0.7, 1.0, 2.5] {
                let z = geometry::from_canonical(CanonicalPolar { theta: 0.3, rho });
                let h = field.hamiltonian(t, z).unwrap();
                assert_eq!(h, field.hamiltonian(1.5, z).unwrap());
                assert_eq!(h, field.hamiltonian(t + 3.0 * p.period, z).unwrap());
                assert_relative_eq!(h, z.rho().powf(p.alpha), max_relative = 1e-13);
            }
        }
        assert_eq!(field.time_seams(), vec![0.0, 1.0]);
        assert!(field.hot_locus(0.5).is_some());
        assert!(field.hot_locus(1.5).is_none());
    }

    #[test]
    fn gradient_matches_field_numerically() {
        // The analytic gradient must agree with finite differences of H,
        // including points straddling the trough.
        let p = ExampleParams::default();
        let field = make_example_field(p).unwrap();
        let sol = field.solution();
        let mut samples = Vec::new();
        for k in 0..60 {
            let t = 0.5 * (k % 5) as f64 / 5.0;
            let angle = 2.399963229728653 * k as f64;
            let rho = sol.rho_star(t) + 0.9 * ((k as f64 * 0.37).sin()) * 0.6;
            samples.push((
                t,
                geometry::from_canonical(CanonicalPolar { theta: angle, rho }),
            ));
        }
        let worst = grad_check(&field, &samples, 1e-6).unwrap();
        assert!(worst < 1e-7, "gradient defect {worst}");
    }

    #[test]
    fn designed_solution_is_tracked_by_the_integrator() {
        // Integrate the seed forward: the numerical orbit must ride the
        // trough, matching ρ*(t) and the angular lift to high accuracy.
        let p = ExampleParams::default();
        let field = make_example_field(p).unwrap();
        let sol = field.solution();
        let z0 = make_special_seed(&p).unwrap();
        assert_relative_eq!(z0.x, 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(z0.y, 0.0);
        let cfg = IntegratorConfig {
            t_end: 1.0,
            escape_radius: (2.0 * 100.0_f64).sqrt(), // ρ = 100
            ..Default::default()
        };
        let traj = integrate(&field, z0, 0.0, &cfg).unwrap();
        let Classification::BlowUp { t_f_est } = traj.classification else {
            panic!("expected blow-up, got {:?}", traj.classification);
        };
        assert!((t_f_est - 1.0).abs() < 5e-3, "t_f estimate {t_f_est}");
        let (t_end, z_end) = *traj.samples.last().unwrap();
        assert_relative_eq!(z_end.rho(), sol.rho_star(t_end), max_relative = 1e-6);
        let rot_end = *traj.rot_channel.last().unwrap();
        assert_relative_eq!(
            rot_end,
            sol.theta_star(t_end) / TAU,
            max_relative = 1e-6
        );
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let bad = [
            ExampleParams {
                alpha: 1.0,
                ..Default::default()
            },
            ExampleParams {
                beta: 0.0,
                ..Default::default()
            },
            ExampleParams {
                period: 0.5,
                ..Default::default()
            },
            ExampleParams {
                sigma0: 0.5,
                ..Default::default()
            }, // ρ*(0) < 1
            ExampleParams {
                epsilon: -1.0,
                ..Default::default()
            },
            ExampleParams {
                d_cap: 0.0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(make_example_field(p).is_err(), "accepted {p:?}");
        }
    }
}
