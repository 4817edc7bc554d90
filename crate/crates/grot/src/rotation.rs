//! Rotation numbers, generalized rotation with a `+∞` value for blow-up,
//! backward-image set estimates, and rotation profiles along curves.
//!
//! Rotation is measured clockwise in full turns. Every finite value is
//! computed twice — once by the quadrature channel riding the integrator
//! and once from the unwrapped polar lift — and the two must agree to
//! `1e−6`, otherwise the computation is rejected rather than trusted.

use crate::error::{GrotError, Result};
use crate::fields::Field;
use crate::geometry::{self, PlanarPoint};
use crate::integrator::{integrate, Classification, IntegratorConfig, Trajectory};
use rayon::prelude::*;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;

/// A rotation number that may be `+∞` (blow-up before the horizon).
///
/// Ordering places `PlusInfinity` above every finite value, which is what
/// level-set logic relies on: a blow-up point exceeds any threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GRotValue {
    Finite(f64),
    PlusInfinity,
}

impl GRotValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, GRotValue::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            GRotValue::Finite(v) => Some(*v),
            GRotValue::PlusInfinity => None,
        }
    }
}

impl PartialOrd for GRotValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (GRotValue::Finite(a), GRotValue::Finite(b)) => a.partial_cmp(b),
            (GRotValue::Finite(_), GRotValue::PlusInfinity) => Some(Ordering::Less),
            (GRotValue::PlusInfinity, GRotValue::Finite(_)) => Some(Ordering::Greater),
            (GRotValue::PlusInfinity, GRotValue::PlusInfinity) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for GRotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GRotValue::Finite(v) => write!(f, "{v}"),
            GRotValue::PlusInfinity => write!(f, "inf"),
        }
    }
}

impl Serialize for GRotValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GRotValue::Finite(v) => s.serialize_f64(*v),
            GRotValue::PlusInfinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for GRotValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = GRotValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<GRotValue, E> {
                Ok(GRotValue::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<GRotValue, E> {
                Ok(GRotValue::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<GRotValue, E> {
                Ok(GRotValue::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<GRotValue, E> {
                match v {
                    "inf" => Ok(GRotValue::PlusInfinity),
                    other => other
                        .parse()
                        .map(GRotValue::Finite)
                        .map_err(|_| E::custom(format!("bad rotation value {other:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Sampled backward image of the time–ball cylinder `[0,T] × B[0,δ]` at
/// `t = 0`: the set of starting points whose trajectories visit the δ-ball.
#[derive(Debug, Clone, Serialize)]
pub struct DDeltaEstimate {
    pub delta: f64,
    /// Backward images at t = 0 of the sampled cylinder points.
    pub point_cloud: Vec<PlanarPoint>,
    /// `1.1 ×` the largest cloud norm.
    pub bounding_radius: f64,
}

/// Empirical bound on total backward unwinding outside the sampled
/// `D_δ` set: the largest observed drawdown of the rotation integral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationBoundEstimate {
    pub delta: f64,
    /// Max over samples of `sup_{s<t} (rot_s − rot_t)`, floored at 0.
    pub lambda: f64,
    /// How many sampled trajectories the bound rests on.
    pub n_samples: usize,
}

/// Clockwise rotation accumulated over `[t_start, t]`, cross-checked
/// against the polar lift.
///
/// Errors with [`GrotError::OriginHitTrajectory`] on origin-hitting
/// trajectories (rotation is undefined past the hit) and with
/// [`GrotError::LiftIntegralMismatch`] if the quadrature channel and the
/// lift disagree by more than `1e−6` turns.
pub fn rot(traj: &Trajectory, t: f64) -> Result<f64> {
    if let Classification::OriginHit { t_hit } = traj.classification {
        return Err(GrotError::OriginHitTrajectory { t_hit });
    }
    let value = traj.rot_at(t)?;
    if let Some(lift) = &traj.lift {
        let z_t = traj.state_at(t)?;
        if z_t.norm_sq() > 0.0 {
            let dir = if traj.t_final() == traj.t_start() {
                1.0
            } else {
                (traj.t_final() - traj.t_start()).signum()
            };
            let idx = traj
                .samples
                .partition_point(|&(ts, _)| (ts - t) * dir <= 0.0)
                .saturating_sub(1);
            let theta_t =
                geometry::closest_representative(z_t.clockwise_angle(), lift[idx].theta);
            let by_lift = (theta_t - lift[0].theta) / TAU;
            if (by_lift - value).abs() > 1e-6 {
                return Err(GrotError::LiftIntegralMismatch {
                    t,
                    integral: value,
                    lift: by_lift,
                });
            }
        }
    }
    Ok(value)
}

/// Generalized rotation over one horizon `[0, cfg.t_end]`: finite for
/// complete trajectories, `+∞` for blow-up, an error for origin hits
/// (where rotation is undefined).
pub fn grot_t(field: &dyn Field, z0: PlanarPoint, cfg: &IntegratorConfig) -> Result<GRotValue> {
    let traj = integrate(field, z0, 0.0, cfg)?;
    match traj.classification {
        Classification::Complete => Ok(GRotValue::Finite(rot(&traj, traj.t_final())?)),
        Classification::BlowUp { .. } => Ok(GRotValue::PlusInfinity),
        Classification::OriginHit { t_hit } => Err(GrotError::OriginHitTrajectory { t_hit }),
    }
}

/// Samples the backward image at `t = 0` of the cylinder `[0,T] × B[0,δ]`.
///
/// `grid = (n_t, n_boundary)`: time levels across one period × points on
/// the δ-circle. Since each time-t backward flow map is a homeomorphism,
/// the image of the disk is bounded by the image of its boundary circle,
/// so sampling the circle suffices for a radius estimate. Backward runs
/// disable origin events (reaching `t = 0` is the whole point) and a
/// backward escape is reported as [`GrotError::BackwardBlowUp`].
pub fn estimate_d_delta(
    field: &dyn Field,
    delta: f64,
    grid: (usize, usize),
    cfg: &IntegratorConfig,
) -> Result<DDeltaEstimate> {
    let (n_t, n_boundary) = grid;
    if delta <= 0.0 || n_t == 0 || n_boundary == 0 {
        return Err(GrotError::InvalidParams {
            msg: format!("need delta > 0 and a nonempty grid: δ={delta}, grid {grid:?}"),
        });
    }
    let period = field.period();
    let mut starts = Vec::with_capacity(n_t * n_boundary);
    for i in 0..n_t {
        let t_bar = if n_t == 1 {
            0.0
        } else {
            period * i as f64 / (n_t - 1) as f64
        };
        for j in 0..n_boundary {
            let a = TAU * j as f64 / n_boundary as f64;
            starts.push((t_bar, PlanarPoint::new(delta * a.cos(), delta * a.sin())));
        }
    }
    let back_cfg = IntegratorConfig {
        t_end: 0.0,
        origin_radius: 0.0,
        ..*cfg
    };
    let point_cloud = starts
        .par_iter()
        .map(|&(t_bar, z_bar)| {
            if t_bar == 0.0 {
                return Ok(z_bar);
            }
            let traj = integrate(field, z_bar, t_bar, &back_cfg)?;
            match traj.classification {
                Classification::Complete => Ok(traj.final_state()),
                Classification::BlowUp { .. } => Err(GrotError::BackwardBlowUp { t_bar, z_bar }),
                Classification::OriginHit { .. } => {
                    unreachable!("origin events are disabled on backward runs")
                }
            }
        })
        .collect::<Result<Vec<PlanarPoint>>>()?;
    let r_max = point_cloud.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(DDeltaEstimate {
        delta,
        point_cloud,
        bounding_radius: 1.1 * r_max,
    })
}

/// Generalized rotation at every point of a sampled closed curve, in
/// order. A curve point whose trajectory hits the origin is reported as
/// [`GrotError::OriginOnBoundary`] with its index.
pub fn rotation_profile(
    field: &dyn Field,
    loop_points: &[PlanarPoint],
    cfg: &IntegratorConfig,
) -> Result<Vec<GRotValue>> {
    loop_points
        .par_iter()
        .enumerate()
        .map(|(index, &z0)| match grot_t(field, z0, cfg) {
            Err(GrotError::OriginHitTrajectory { .. }) => {
                Err(GrotError::OriginOnBoundary { index })
            }
            other => other,
        })
        .collect()
}

/// Empirical bound `Λ` on backward unwinding: the largest drawdown of the
/// rotation integral over trajectories started on a deterministic spiral
/// through the annulus between the `D_δ` bounding radius and `r_outer`.
///
/// Samples whose trajectories hit the origin (the `D_δ` estimate missed
/// them) are skipped; `n_samples` reports how many trajectories the bound
/// actually rests on. The result is a margin input, not a proof.
pub fn estimate_unwinding_bound(
    field: &dyn Field,
    d_delta: &DDeltaEstimate,
    r_outer: f64,
    n_starts: usize,
    cfg: &IntegratorConfig,
) -> Result<RotationBoundEstimate> {
    let r_inner = d_delta.bounding_radius.max(1e-12);
    if r_outer <= r_inner || n_starts == 0 {
        return Err(GrotError::InvalidParams {
            msg: format!("need r_outer > bounding radius {r_inner} and samples: {r_outer}"),
        });
    }
    const GOLDEN_ANGLE: f64 = 2.399963229728653;
    let starts: Vec<PlanarPoint> = (0..n_starts)
        .map(|k| {
            let a = GOLDEN_ANGLE * k as f64;
            let r = r_inner + (r_outer - r_inner) * (k as f64 + 0.5) / n_starts as f64;
            PlanarPoint::new(r * a.cos(), r * a.sin())
        })
        .collect();
    let drawdowns = starts
        .par_iter()
        .map(|&z0| {
            let traj = integrate(field, z0, 0.0, cfg)?;
            if matches!(traj.classification, Classification::OriginHit { .. }) {
                return Ok(None);
            }
            let mut running_max = f64::NEG_INFINITY;
            let mut drawdown = 0.0f64;
            for &w in &traj.rot_channel {
                running_max = running_max.max(w);
                drawdown = drawdown.max(running_max - w);
            }
            Ok(Some(drawdown))
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    let used: Vec<f64> = drawdowns.into_iter().flatten().collect();
    Ok(RotationBoundEstimate {
        delta: d_delta.delta,
        lambda: used.iter().copied().fold(0.0, f64::max),
        n_samples: used.len(),
    })
}
