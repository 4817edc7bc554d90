//! Adaptive integration of planar trajectories with dense output, event
//! detection (escape and origin proximity), and an augmented quadrature
//! channel for the clockwise rotation integrand.
//!
//! The integrated state is `(x, y, w)` where `w` accumulates
//! `w′ = ⟨F(t,z), Jz⟩ / (2π |z|²)` — the instantaneous clockwise angular
//! speed in turns — so the rotation number rides the same Runge–Kutta
//! stages as the trajectory itself and inherits its order and step control.
//!
//! Events are located on the dense-output polynomial of each accepted step:
//! a coarse scan brackets the first crossing, bisection refines it to
//! `1e−12` in `t`, and the trajectory is truncated at the event with the
//! defining inequality satisfied at the reported state.

use crate::dop853::{self, DenseSegment, StepController};
use crate::error::{GrotError, Result};
use crate::fields::Field;
use crate::geometry::{self, PlanarPoint, PolarLift};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Tolerances, event thresholds, and limits for one integration run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    /// Relative tolerance of the embedded error control.
    pub rtol: f64,
    /// Absolute tolerance of the embedded error control.
    pub atol: f64,
    /// Minimum step size; controller collapse below it raises
    /// [`GrotError::StepUnderflow`].
    pub h_min: f64,
    /// Escape radius `R_esc`: crossing `|z| ≥ R_esc` classifies the
    /// trajectory as blowing up.
    pub escape_radius: f64,
    /// Origin radius `δ_origin`: crossing into `|z| ≤ δ_origin` from
    /// outside classifies the trajectory as hitting the origin
    /// neighborhood. `0` disables origin events entirely (used by root
    /// polishing, where iterates may legitimately pass near the origin).
    pub origin_radius: f64,
    /// Target time; integration is backward when `t_end < t0`.
    pub t_end: f64,
    /// Cap on step attempts (accepted + rejected).
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_min: 1e-14,
            escape_radius: 1e3,
            origin_radius: 1e-6,
            t_end: 1.0,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    /// Checks the configuration invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(GrotError::InvalidParams {
                msg: format!("tolerances must be positive: rtol {}, atol {}", self.rtol, self.atol),
            });
        }
        if !(self.h_min > 0.0) {
            return Err(GrotError::InvalidParams {
                msg: format!("h_min must be positive: {}", self.h_min),
            });
        }
        if !(self.escape_radius > 0.0) {
            return Err(GrotError::InvalidParams {
                msg: format!("escape radius must be positive: {}", self.escape_radius),
            });
        }
        if !(self.origin_radius >= 0.0 && self.origin_radius < self.escape_radius) {
            return Err(GrotError::InvalidParams {
                msg: format!(
                    "need 0 ≤ origin radius < escape radius: {} vs {}",
                    self.origin_radius, self.escape_radius
                ),
            });
        }
        if self.max_steps == 0 {
            return Err(GrotError::InvalidParams {
                msg: "max_steps must be at least 1".to_owned(),
            });
        }
        Ok(())
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    /// Reached `t_end` without triggering an event.
    Complete,
    /// Crossed the escape radius; `t_f_est` extrapolates the blow-up time
    /// from the escape tail.
    BlowUp { t_f_est: f64 },
    /// Crossed into the origin ball from outside at `t_hit`.
    OriginHit { t_hit: f64 },
}

/// An integrated trajectory: samples dense enough for polar lifting, the
/// lift itself, the rotation quadrature channel, and the dense-output
/// polynomials of every accepted step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(t, z)` in traversal order (t strictly increasing forward, strictly
    /// decreasing backward). Consecutive angular gaps stay below ~1 radian
    /// by dense-output refinement.
    pub samples: Vec<(f64, PlanarPoint)>,
    /// Polar lift aligned with `samples`; `None` when the trajectory hit
    /// the origin (or sits exactly on it, where no polar chart exists).
    pub lift: Option<Vec<PolarLift>>,
    /// Accumulated rotation integral (in turns) aligned with `samples`;
    /// starts at 0.
    pub rot_channel: Vec<f64>,
    pub classification: Classification,
    /// Mean squared log-log residual of the blow-up time fit, when the
    /// classification is `BlowUp`.
    pub blowup_fit_residual: Option<f64>,
    /// Field evaluation count.
    pub nfev: usize,
    pub n_accepted: usize,
    pub n_rejected: usize,
    dense: Vec<DenseSegment<3>>,
    t_start: f64,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    /// Final sampled time (the event time for event-terminated runs).
    pub fn t_final(&self) -> f64 {
        self.samples.last().expect("trajectory has samples").0
    }

    pub fn final_state(&self) -> PlanarPoint {
        self.samples.last().expect("trajectory has samples").1
    }

    fn locate(&self, t: f64) -> Result<[f64; 3]> {
        let (t0, t1) = (self.t_start, self.t_final());
        let lo = t0.min(t1);
        let hi = t0.max(t1);
        let slack = 1e-12 * t.abs().max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(GrotError::OutOfRange { t });
        }
        let t = t.clamp(lo, hi);
        if self.dense.is_empty() {
            // Single-sample trajectory (t_end == t0).
            let z = self.samples[0].1;
            return Ok([z.x, z.y, 0.0]);
        }
        let dir = (t1 - t0).signum();
        // Last segment whose start lies at or before t in traversal order.
        let idx = self
            .dense
            .partition_point(|seg| (seg.t0 - t) * dir <= 0.0)
            .saturating_sub(1);
        Ok(self.dense[idx].eval(t))
    }

    /// Interpolated state at `t` within the sampled range.
    pub fn state_at(&self, t: f64) -> Result<PlanarPoint> {
        let y = self.locate(t)?;
        Ok(PlanarPoint::new(y[0], y[1]))
    }

    /// Rotation integral (in turns) accumulated over `[t_start, t]`.
    pub fn rot_at(&self, t: f64) -> Result<f64> {
        Ok(self.locate(t)?[2])
    }
}

/// Angular gap (radians) above which output samples are subdivided. Kept
/// well below the π limit of the unwrapping chart.
const REFINE_GAP: f64 = 1.0;

fn rhs_of<'a>(
    field: &'a dyn Field,
    nfev: &'a mut usize,
) -> impl FnMut(f64, &[f64; 3]) -> [f64; 3] + 'a {
    move |t: f64, y: &[f64; 3]| {
        *nfev += 1;
        let z = PlanarPoint::new(y[0], y[1]);
        let f = field.eval(t, z);
        let n2 = z.norm_sq();
        let w_dot = if n2 > 0.0 { f.dot(z.j()) / (TAU * n2) } else { 0.0 };
        [f.x, f.y, w_dot]
    }
}

/// First expanded seam strictly beyond `t` in direction `dir`, if any.
fn next_seam(seams: &[f64], period: f64, t: f64, dir: f64) -> Option<f64> {
    if seams.is_empty() {
        return None;
    }
    let guard = 1e-12 * t.abs().max(1.0);
    let mut best: Option<f64> = None;
    for &s0 in seams {
        let s = if dir > 0.0 {
            s0 + period * ((t + guard - s0) / period).ceil()
        } else {
            s0 + period * ((t - guard - s0) / period).floor()
        };
        best = Some(match best {
            None => s,
            Some(b) if (s - b) * dir < 0.0 => s,
            Some(b) => b,
        });
    }
    best
}

#[derive(Clone, Copy, PartialEq)]
enum EventKind {
    Escape,
    Origin,
}

/// Scans one dense segment for the first false→true crossing of `pred`
/// (in traversal order) and bisects it to ~1e−12 in t. Returns a time at
/// which `pred` holds.
fn locate_crossing(
    seg: &DenseSegment<3>,
    t_a: f64,
    t_b: f64,
    pred: &dyn Fn(PlanarPoint) -> bool,
) -> Option<f64> {
    const SCAN: usize = 16;
    let point = |t: f64| {
        let y = seg.eval(t);
        PlanarPoint::new(y[0], y[1])
    };
    let mut prev_t = t_a;
    let mut prev_in = pred(point(t_a));
    for i in 1..=SCAN {
        let t_i = t_a + (t_b - t_a) * i as f64 / SCAN as f64;
        let cur_in = pred(point(t_i));
        if !prev_in && cur_in {
            // Bisect [prev_t, t_i]; keep the predicate-true side.
            let (mut lo, mut hi) = (prev_t, t_i);
            for _ in 0..80 {
                if (hi - lo).abs() <= 1e-12 * hi.abs().max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if pred(point(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev_t = t_i;
        prev_in = cur_in;
    }
    None
}

fn scan_events(
    seg: &DenseSegment<3>,
    t_a: f64,
    t_b: f64,
    cfg: &IntegratorConfig,
) -> Option<(f64, EventKind)> {
    let r_esc = cfg.escape_radius;
    let escape = locate_crossing(seg, t_a, t_b, &|z: PlanarPoint| z.norm() >= r_esc)
        .map(|t| (t, EventKind::Escape));
    let origin = if cfg.origin_radius > 0.0 {
        let d = cfg.origin_radius;
        locate_crossing(seg, t_a, t_b, &|z: PlanarPoint| z.norm() <= d)
            .map(|t| (t, EventKind::Origin))
    } else {
        None
    };
    match (escape, origin) {
        (Some(a), Some(b)) => Some(if (a.0 - t_a).abs() <= (b.0 - t_a).abs() { a } else { b }),
        (a, b) => a.or(b),
    }
}

/// Pushes dense-output samples over `(t_a, t_b]` of one segment, bisecting
/// until adjacent samples are less than [`REFINE_GAP`] radians apart (by
/// both the rotation channel and the wrapped geometric angle).
fn push_refined(
    seg: &DenseSegment<3>,
    t_a: f64,
    y_a: [f64; 3],
    t_b: f64,
    y_b: [f64; 3],
    depth: u32,
    out: &mut Vec<(f64, [f64; 3])>,
) {
    let turn_gap = TAU * (y_b[2] - y_a[2]).abs();
    let z_a = PlanarPoint::new(y_a[0], y_a[1]);
    let z_b = PlanarPoint::new(y_b[0], y_b[1]);
    let geo_gap = if z_a.norm_sq() > 0.0 && z_b.norm_sq() > 0.0 {
        geometry::wrap_to_pi(z_b.clockwise_angle() - z_a.clockwise_angle()).abs()
    } else {
        0.0
    };
    if depth < 24 && (turn_gap >= REFINE_GAP || geo_gap >= REFINE_GAP) {
        let t_m = 0.5 * (t_a + t_b);
        let y_m = seg.eval(t_m);
        push_refined(seg, t_a, y_a, t_m, y_m, depth + 1, out);
        push_refined(seg, t_m, y_m, t_b, y_b, depth + 1, out);
    } else {
        out.push((t_b, y_b));
    }
}

/// Fits `ln ρ = a − b·ln(t_f − t)` over the escape tail and returns
/// `(t_f_est, mean squared residual)`. `dir` is the traversal sign.
fn fit_blowup_time(samples: &[(f64, PlanarPoint)], dir: f64) -> (f64, f64) {
    let (t_last, z_last) = *samples.last().expect("escape tail nonempty");
    let rho_last = z_last.rho();
    // Last decade of ρ, falling back to the last 20 samples.
    let mut tail: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, z)| z.rho() >= rho_last / 10.0)
        .map(|&(t, z)| (t, z.rho()))
        .collect();
    if tail.len() < 6 {
        let n = samples.len().min(20);
        tail = samples[samples.len() - n..]
            .iter()
            .map(|&(t, z)| (t, z.rho()))
            .collect();
    }
    if tail.len() < 3 {
        return (t_last, f64::INFINITY);
    }

    let span = (t_last - tail[0].0).abs().max(1e-300);
    // Mean squared residual of the log-log linear fit for a candidate
    // remaining time-to-blow-up `u_last` (= t_f − t_last, in |t| units).
    let residual = |u_last: f64| -> f64 {
        let n = tail.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(t, rho) in &tail {
            let x = (u_last + (t_last - t) * dir).ln();
            let y = rho.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let det = n * sxx - sx * sx;
        if det.abs() < 1e-300 {
            return f64::INFINITY;
        }
        let b = (n * sxy - sx * sy) / det;
        let a = (sy - b * sx) / n;
        let mut sse = 0.0;
        for &(t, rho) in &tail {
            let x = (u_last + (t_last - t) * dir).ln();
            let r = rho.ln() - (a + b * x);
            sse += r * r;
        }
        sse / n
    };

    // Golden-section search on ln u over a generous bracket.
    let (mut lo, mut hi) = ((1e-6 * span).ln(), (10.0 * span).ln());
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = residual(x1.exp());
    let mut f2 = residual(x2.exp());
    for _ in 0..90 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = residual(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = residual(x2.exp());
        }
    }
    let u = 0.5 * (x1.exp() + x2.exp());
    (t_last + dir * u, residual(u))
}

/// Integrates `ż = F(t, z)` from `(t0, z0)` to `cfg.t_end` (backward when
/// `t_end < t0`), accumulating the rotation channel and watching for
/// escape/origin events.
///
/// Steps are clipped so none straddles a declared time seam of the field,
/// and the field's `max_step_hint` caps the step near steep features.
pub fn integrate(
    field: &dyn Field,
    z0: PlanarPoint,
    t0: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let mut nfev = 0usize;

    if cfg.t_end == t0 {
        return Ok(Trajectory {
            samples: vec![(t0, z0)],
            lift: lift_of(&[(t0, z0)], z0),
            rot_channel: vec![0.0],
            classification: Classification::Complete,
            blowup_fit_residual: None,
            nfev,
            n_accepted: 0,
            n_rejected: 0,
            dense: Vec::new(),
            t_start: t0,
        });
    }

    let dir = (cfg.t_end - t0).signum();
    let seams = field.time_seams();
    let period = field.period();

    let mut rhs = rhs_of(field, &mut nfev);
    let mut t = t0;
    let mut y = [z0.x, z0.y, 0.0];
    let mut k1 = rhs(t, &y);
    let mut ctrl = StepController::new();
    let h_cap = (cfg.t_end - t0).abs();
    let mut h_nat = dop853::initial_step_size(&mut rhs, t, &y, &k1, dir, cfg.rtol, cfg.atol, h_cap);

    let mut segments: Vec<DenseSegment<3>> = Vec::new();
    let mut event: Option<(f64, EventKind)> = None;
    let mut n_accepted = 0usize;
    let mut n_rejected = 0usize;
    let mut attempts = 0usize;

    loop {
        attempts += 1;
        if attempts > cfg.max_steps {
            drop(rhs);
            return Err(GrotError::MaxStepsExceeded { t });
        }

        // Boundary for this step: the nearer of the next seam and t_end.
        let boundary = match next_seam(&seams, period, t, dir) {
            Some(s) if (s - cfg.t_end) * dir < 0.0 => s,
            _ => cfg.t_end,
        };

        let mut h = h_nat;
        let mut clipped = false;
        let mut to_boundary = false;
        if (t + h - boundary) * dir >= 0.0 {
            h = boundary - t;
            clipped = true;
            to_boundary = true;
        }
        if let Some(cap) = field.max_step_hint(t, PlanarPoint::new(y[0], y[1])) {
            if cap > 0.0 && h.abs() > cap {
                h = cap.copysign(dir);
                clipped = true;
                to_boundary = false;
            }
        }
        if h.abs() < cfg.h_min && !to_boundary {
            drop(rhs);
            return Err(GrotError::StepUnderflow {
                t,
                state: PlanarPoint::new(y[0], y[1]),
                h,
            });
        }

        let trial = dop853::trial_step(&mut rhs, t, &y, &k1, h, cfg.rtol, cfg.atol);
        if trial.err > 1.0 {
            n_rejected += 1;
            h_nat = ctrl.reject(h, trial.err);
            if h_nat.abs() < cfg.h_min {
                drop(rhs);
                return Err(GrotError::StepUnderflow {
                    t,
                    state: PlanarPoint::new(y[0], y[1]),
                    h: h_nat,
                });
            }
            continue;
        }

        n_accepted += 1;
        let t_new = if to_boundary { boundary } else { t + h };
        let f_new = rhs(t_new, &trial.y_new);
        let seg = dop853::dense_segment(&mut rhs, t, &y, &k1, h, &trial, &f_new);

        if let Some(hit) = scan_events(&seg, t, t_new, cfg) {
            segments.push(seg);
            event = Some(hit);
            break;
        }

        segments.push(seg);
        let proposal = ctrl.accept(h, trial.err);
        h_nat = if clipped {
            dir * h_nat.abs().max(proposal.abs())
        } else {
            proposal
        };
        t = t_new;
        y = trial.y_new;
        k1 = f_new;

        if (t - cfg.t_end) * dir >= 0.0 {
            break;
        }
    }
    drop(rhs);

    // Assemble refined output samples, truncating the last segment at the
    // event time if one fired.
    let t_stop = match event {
        Some((t_e, _)) => t_e,
        None => segments.last().map_or(t0, |s| s.t0 + s.h),
    };
    let mut nodes: Vec<(f64, [f64; 3])> = vec![(t0, [z0.x, z0.y, 0.0])];
    for seg in &segments {
        let (a, b) = (seg.t0, seg.t0 + seg.h);
        let b = if (b - t_stop) * dir > 0.0 { t_stop } else { b };
        let y_a = nodes.last().expect("seed node").1;
        push_refined(seg, a, y_a, b, seg.eval(b), 0, &mut nodes);
    }

    let samples: Vec<(f64, PlanarPoint)> = nodes
        .iter()
        .map(|&(t, y)| (t, PlanarPoint::new(y[0], y[1])))
        .collect();
    let rot_channel: Vec<f64> = nodes.iter().map(|&(_, y)| y[2]).collect();

    let (classification, blowup_fit_residual) = match event {
        None => (Classification::Complete, None),
        Some((t_hit, EventKind::Origin)) => (Classification::OriginHit { t_hit }, None),
        Some((_, EventKind::Escape)) => {
            let (t_f_est, res) = fit_blowup_time(&samples, dir);
            (Classification::BlowUp { t_f_est }, Some(res))
        }
    };

    let lift = match classification {
        Classification::OriginHit { .. } => None,
        _ => lift_of(&samples, z0),
    };

    Ok(Trajectory {
        samples,
        lift,
        rot_channel,
        classification,
        blowup_fit_residual,
        nfev,
        n_accepted,
        n_rejected,
        dense: segments,
        t_start: t0,
    })
}

fn lift_of(samples: &[(f64, PlanarPoint)], z0: PlanarPoint) -> Option<Vec<PolarLift>> {
    if z0.norm_sq() == 0.0 {
        return None; // no polar chart on an origin-pinned trajectory
    }
    let points: Vec<PlanarPoint> = samples.iter().map(|&(_, z)| z).collect();
    geometry::unwrap_lift(&points, z0.clockwise_angle()).ok()
}

/// One period of the flow: returns the classification and, when the
/// trajectory is complete, the image `φ(T, z0)` of the period map.
pub fn poincare_map(
    field: &dyn Field,
    z0: PlanarPoint,
    cfg: &IntegratorConfig,
) -> Result<(Classification, Option<PlanarPoint>)> {
    let t_gap = (cfg.t_end - field.period()).abs();
    if t_gap > 1e-9 * field.period().abs().max(1.0) {
        return Err(GrotError::InvalidParams {
            msg: format!(
                "period map needs t_end = field period ({} vs {})",
                cfg.t_end,
                field.period()
            ),
        });
    }
    let traj = integrate(field, z0, 0.0, cfg)?;
    let image = match traj.classification {
        Classification::Complete => Some(traj.final_state()),
        _ => None,
    };
    Ok((traj.classification, image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DuffingForced, LinearClockwise, RadialPower};
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn cfg_to(t_end: f64) -> IntegratorConfig {
        IntegratorConfig {
            t_end,
            ..Default::default()
        }
    }

    #[test]
    fn linear_clockwise_full_turn() {
        let field = LinearClockwise::new(TAU);
        let traj = integrate(&field, PlanarPoint::new(1.0, 0.0), 0.0, &cfg_to(TAU)).unwrap();
        assert_eq!(traj.classification, Classification::Complete);
        let zf = traj.final_state();
        assert!((zf - PlanarPoint::new(1.0, 0.0)).norm() < 1e-8, "final {zf:?}");
        let rot = *traj.rot_channel.last().unwrap();
        assert_relative_eq!(rot, 1.0, epsilon = 1e-10);
        // Lift agrees: θ advanced by 2π.
        let lift = traj.lift.as_ref().unwrap();
        assert_relative_eq!(
            lift.last().unwrap().theta - lift[0].theta,
            TAU,
            epsilon = 1e-8
        );
        // Samples strictly increasing, angular gaps below the chart limit.
        for pair in traj.samples.windows(2) {
            assert!(pair[1].0 > pair[0].0);
        }
        for pair in lift.windows(2) {
            assert!((pair[1].theta - pair[0].theta).abs() < 1.2);
        }
    }

    #[test]
    fn duffing_unforced_equilibrium() {
        let field = DuffingForced::new(0.0, 1.0);
        let traj = integrate(&field, PlanarPoint::new(0.0, 0.0), 0.0, &cfg_to(TAU)).unwrap();
        assert_eq!(traj.classification, Classification::Complete);
        for &(_, z) in &traj.samples {
            assert_eq!(z.norm(), 0.0, "equilibrium drifted to {z:?}");
        }
        assert!(traj.lift.is_none());
        assert_eq!(*traj.rot_channel.last().unwrap(), 0.0);
    }

    #[test]
    fn poincare_identity_maps() {
        // Rigid rotation with T = 2π: period-1 resonance, identity map.
        let field = LinearClockwise::new(TAU);
        let z0 = PlanarPoint::new(2.0, 1.0);
        let (class, img) = poincare_map(&field, z0, &cfg_to(TAU)).unwrap();
        assert_eq!(class, Classification::Complete);
        assert!((img.unwrap() - z0).norm() < 1e-8);

        // θ̇ = 2ρ with T = π at ρ0 = 1: exactly one clockwise turn.
        let field = RadialPower::new(2.0, PI);
        let z0 = PlanarPoint::new(2.0f64.sqrt(), 0.0);
        let (class, img) = poincare_map(&field, z0, &cfg_to(PI)).unwrap();
        assert_eq!(class, Classification::Complete);
        assert!((img.unwrap() - z0).norm() < 1e-7);
    }

    #[test]
    fn radial_power_matches_closed_form_everywhere() {
        // ρ0 = 1 ⇒ θ(t) = 2t clockwise: z(t) = √2 (cos 2t, −sin 2t).
        let field = RadialPower::new(2.0, PI);
        let z0 = PlanarPoint::new(2.0f64.sqrt(), 0.0);
        let traj = integrate(&field, z0, 0.0, &cfg_to(PI)).unwrap();
        for k in 0..=100 {
            let t = PI * k as f64 / 100.0;
            let z = traj.state_at(t).unwrap();
            let want = PlanarPoint::new(
                2.0f64.sqrt() * (2.0 * t).cos(),
                -(2.0f64.sqrt()) * (2.0 * t).sin(),
            );
            assert!((z - want).norm() < 5e-9, "t={t}: {z:?} vs {want:?}");
            assert_relative_eq!(traj.rot_at(t).unwrap(), t / PI, epsilon = 1e-10);
        }
        assert!(traj.state_at(PI + 1e-3).is_err());
        assert!(traj.state_at(-1e-3).is_err());
    }

    #[test]
    fn tolerance_ladder_reduces_error() {
        // Global error on the rigid rotation decreases with tolerance.
        let field = LinearClockwise::new(TAU);
        let z0 = PlanarPoint::new(1.0, 0.0);
        let err_at = |tol: f64| {
            let cfg = IntegratorConfig {
                rtol: tol,
                atol: tol,
                t_end: TAU,
                ..Default::default()
            };
            let traj = integrate(&field, z0, 0.0, &cfg).unwrap();
            (traj.final_state() - z0).norm()
        };
        let e_loose = err_at(1e-5);
        let e_tight = err_at(1e-11);
        assert!(
            e_tight < e_loose / 100.0,
            "no convergence: {e_loose} vs {e_tight}"
        );
    }

    #[test]
    fn unforced_duffing_energy_and_period() {
        // Closed orbit of ẍ = −x³ from (a, 0): period 4√2/a · ∫₀¹ ds/√(1−s⁴).
        let a = 1.0;
        let period = (4.0 * 2.0f64.sqrt() / a) * 1.31102877714605990523;
        let field = DuffingForced::new(0.0, 1.0);
        let z0 = PlanarPoint::new(a, 0.0);
        let cfg = IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-12,
            t_end: period,
            ..Default::default()
        };
        let traj = integrate(&field, z0, 0.0, &cfg).unwrap();
        assert!((traj.final_state() - z0).norm() < 1e-6, "period miss");

        // Energy H = v²/2 + x⁴/4 is conserved along the way.
        let h0 = field.hamiltonian(0.0, z0).unwrap();
        for &(t, z) in &traj.samples {
            assert!((field.hamiltonian(t, z).unwrap() - h0).abs() < 1e-8);
        }
        // Exactly one clockwise turn per closed orbit.
        assert_relative_eq!(*traj.rot_channel.last().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn backward_integration_recovers_start() {
        let field = DuffingForced::new(0.5, 1.0);
        let z0 = PlanarPoint::new(0.7, -0.3);
        let fwd = integrate(&field, z0, 0.0, &cfg_to(TAU)).unwrap();
        assert_eq!(fwd.classification, Classification::Complete);
        let back = integrate(&field, fwd.final_state(), TAU, &cfg_to(0.0)).unwrap();
        assert_eq!(back.classification, Classification::Complete);
        let tol = 10.0 * (1e-10 + 1e-10 * z0.norm());
        assert!(
            (back.final_state() - z0).norm() < tol,
            "round trip error {}",
            (back.final_state() - z0).norm()
        );
        // Backward samples decrease in t.
        for pair in back.samples.windows(2) {
            assert!(pair[1].0 < pair[0].0);
        }
    }

    #[test]
    fn rotation_channel_is_additive_across_restarts() {
        let field = DuffingForced::new(0.5, 1.0);
        let z0 = PlanarPoint::new(1.1, 0.2);
        let s = 2.3;
        let t = TAU;
        let whole = integrate(&field, z0, 0.0, &cfg_to(t)).unwrap();
        let first = integrate(&field, z0, 0.0, &cfg_to(s)).unwrap();
        let second = integrate(&field, first.final_state(), s, &cfg_to(t)).unwrap();
        let lhs = *whole.rot_channel.last().unwrap();
        let rhs = *first.rot_channel.last().unwrap() + *second.rot_channel.last().unwrap();
        assert!((lhs - rhs).abs() < 1e-9, "additivity gap {}", lhs - rhs);
    }

    /// Radial source with ρ̇ = ρ²: ρ(t) = 1/(1−t) blows up at t = 1.
    struct RadialBlowup;
    impl Field for RadialBlowup {
        fn period(&self) -> f64 {
            1.0
        }
        fn eval(&self, _t: f64, z: PlanarPoint) -> PlanarPoint {
            z * (0.5 * z.rho())
        }
        fn name(&self) -> &str {
            "radial-blowup"
        }
    }

    #[test]
    fn escape_event_and_blowup_fit() {
        let rho_esc = 1e4_f64;
        let cfg = IntegratorConfig {
            escape_radius: (2.0 * rho_esc).sqrt(),
            t_end: 2.0,
            ..Default::default()
        };
        let traj = integrate(&RadialBlowup, PlanarPoint::new(2.0f64.sqrt(), 0.0), 0.0, &cfg)
            .unwrap();
        match traj.classification {
            Classification::BlowUp { t_f_est } => {
                assert!((t_f_est - 1.0).abs() < 1e-4, "t_f_est {t_f_est}");
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
        // Event state satisfies the trigger inequality and sits at the
        // closed-form crossing time t = 1 − 1/ρ_esc.
        let (t_hit, z_hit) = *traj.samples.last().unwrap();
        assert!(z_hit.norm() >= cfg.escape_radius);
        assert!((t_hit - (1.0 - 1.0 / rho_esc)).abs() < 1e-9, "t_hit {t_hit}");
        assert!(traj.blowup_fit_residual.unwrap() < 1e-6);
    }

    /// Uniform radial sink: |z(t)| = |z0| e^{−t} crosses any inner radius.
    struct RadialSink;
    impl Field for RadialSink {
        fn period(&self) -> f64 {
            1.0
        }
        fn eval(&self, _t: f64, z: PlanarPoint) -> PlanarPoint {
            -z
        }
        fn name(&self) -> &str {
            "radial-sink"
        }
    }

    #[test]
    fn origin_event_located_precisely() {
        let cfg = IntegratorConfig {
            origin_radius: 0.1,
            t_end: 5.0,
            ..Default::default()
        };
        let traj = integrate(&RadialSink, PlanarPoint::new(1.0, 0.0), 0.0, &cfg).unwrap();
        match traj.classification {
            Classification::OriginHit { t_hit } => {
                assert!((t_hit - 10.0f64.ln()).abs() < 1e-9, "t_hit {t_hit}");
            }
            other => panic!("expected origin hit, got {other:?}"),
        }
        assert!(traj.lift.is_none());
        assert!(traj.final_state().norm() <= 0.1);

        // Disabling origin events integrates through unharmed.
        let cfg_off = IntegratorConfig {
            origin_radius: 0.0,
            t_end: 5.0,
            ..Default::default()
        };
        let traj = integrate(&RadialSink, PlanarPoint::new(1.0, 0.0), 0.0, &cfg_off).unwrap();
        assert_eq!(traj.classification, Classification::Complete);
    }

    /// Piecewise rotation rate: Jz on [0, ½), 2·Jz on [½, 1), 1-periodic.
    struct SteppedRotation;
    impl Field for SteppedRotation {
        fn period(&self) -> f64 {
            1.0
        }
        fn eval(&self, t: f64, z: PlanarPoint) -> PlanarPoint {
            let phase = t.rem_euclid(1.0);
            if phase < 0.5 {
                z.j()
            } else {
                z.j() * 2.0
            }
        }
        fn time_seams(&self) -> Vec<f64> {
            vec![0.0, 0.5]
        }
        fn name(&self) -> &str {
            "stepped-rotation"
        }
    }

    #[test]
    fn seam_clipping_hits_discontinuities_exactly() {
        let traj = integrate(&SteppedRotation, PlanarPoint::new(1.0, 0.0), 0.0, &cfg_to(2.0))
            .unwrap();
        // Mean angular speed 1.5 rad/time over two periods.
        assert_relative_eq!(
            *traj.rot_channel.last().unwrap(),
            2.0 * 1.5 / TAU,
            epsilon = 1e-10
        );
        // Every seam is an exact sample point, so no step straddled one.
        for seam in [0.5, 1.0, 1.5] {
            assert!(
                traj.samples.iter().any(|&(t, _)| t == seam),
                "seam {seam} straddled"
            );
        }
    }

    #[test]
    fn step_underflow_and_max_steps_are_reported() {
        let field = DuffingForced::new(0.5, 1.0);
        let cfg = IntegratorConfig {
            h_min: 0.5,
            rtol: 1e-12,
            atol: 1e-12,
            t_end: TAU,
            ..Default::default()
        };
        match integrate(&field, PlanarPoint::new(1.0, 0.0), 0.0, &cfg) {
            Err(GrotError::StepUnderflow { .. }) => {}
            other => panic!("expected step underflow, got {other:?}"),
        }

        let cfg = IntegratorConfig {
            max_steps: 3,
            t_end: TAU,
            ..Default::default()
        };
        match integrate(&field, PlanarPoint::new(1.0, 0.0), 0.0, &cfg) {
            Err(GrotError::MaxStepsExceeded { .. }) => {}
            other => panic!("expected max-steps error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad = IntegratorConfig {
            rtol: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig {
            origin_radius: 2e3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig {
            h_min: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(IntegratorConfig::default().validate().is_ok());
    }
}
