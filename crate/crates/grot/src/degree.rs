//! Winding numbers of planar loops, the admissibility-and-degree harness
//! for the period map, level-set boundary extraction, and fixed-point
//! localization by quadtree subdivision.
//!
//! Degree convention: winding numbers are **counterclockwise-positive**
//! (the standard orientation for Brouwer degree), independent of the
//! clockwise-positive convention used for rotation numbers. Worked
//! example: the identity image of a counterclockwise unit circle winds
//! `+1`; the displacement `P(z) − z = z` of the doubling map `P(z) = 2z`
//! also winds `+1` along the same circle.

use crate::error::{GrotError, Result};
use crate::fields::Field;
use crate::geometry::PlanarPoint;
use crate::integrator::{integrate, Classification, IntegratorConfig};
use crate::rotation::{self, GRotValue};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::TAU;

/// Shape information for a sampled closed curve, used to insert midpoints
/// that stay on the ideal curve during refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LoopKind {
    Circle { center: PlanarPoint, radius: f64 },
    Polygon,
}

/// A sampled closed curve: `samples` traces the curve once and the last
/// point repeats the first (within `1e−9`).
#[derive(Debug, Clone, Serialize)]
pub struct Loop {
    pub samples: Vec<PlanarPoint>,
    pub kind: LoopKind,
}

impl Loop {
    /// A counterclockwise circle sampled at `n` points (plus the closing
    /// repeat of the first).
    pub fn circle(center: PlanarPoint, radius: f64, n: usize) -> Self {
        let mut samples: Vec<PlanarPoint> = (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                center + PlanarPoint::new(radius * a.cos(), radius * a.sin())
            })
            .collect();
        samples.push(samples[0]);
        Loop {
            samples,
            kind: LoopKind::Circle { center, radius },
        }
    }

    /// A polygon through the given vertices (closing repeat appended if
    /// missing).
    pub fn polygon(mut vertices: Vec<PlanarPoint>) -> Self {
        if let (Some(&first), Some(&last)) = (vertices.first(), vertices.last()) {
            if (first - last).norm() > 1e-9 {
                vertices.push(first);
            }
        }
        Loop {
            samples: vertices,
            kind: LoopKind::Polygon,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples.len() < 4 {
            return Err(GrotError::InvalidParams {
                msg: format!("loop needs at least 3 distinct samples, got {}", self.samples.len()),
            });
        }
        let first = self.samples[0];
        let last = *self.samples.last().unwrap();
        if (first - last).norm() > 1e-9 * (1.0 + first.norm()) {
            return Err(GrotError::InvalidParams {
                msg: format!("loop is not closed: first {first:?}, last {last:?}"),
            });
        }
        Ok(())
    }

    /// Midpoint of the curve arc between two adjacent samples: on the
    /// ideal circle for `Circle` loops, the chord midpoint for polygons
    /// (which lies on the edge, since refinement only ever subdivides
    /// original edges).
    fn midpoint(&self, a: PlanarPoint, b: PlanarPoint) -> PlanarPoint {
        match self.kind {
            LoopKind::Circle { center, radius } => {
                let m = (a - center) + (b - center);
                let n = m.norm();
                if n == 0.0 {
                    // Antipodal pair: bisect via a quarter turn.
                    let d = a - center;
                    center + PlanarPoint::new(-d.y, d.x)
                } else {
                    center + m * (radius / n)
                }
            }
            LoopKind::Polygon => (a + b) * 0.5,
        }
    }
}

/// Outcome of the admissibility-and-degree check along one loop.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub boundary: Loop,
    /// Generalized rotation at each boundary sample (same order).
    pub profile: Vec<GRotValue>,
    /// `(n, margin)` such that every finite profile value lies in
    /// `(n + margin, n + 1 − margin)`; `None` if the profile straddles an
    /// integer or has no finite values.
    pub profile_band: Option<(i64, f64)>,
    /// Counterclockwise winding of the displacement `φ(T,·) − Id` along
    /// the loop; `None` when some boundary trajectory is not Complete.
    pub winding: Option<i64>,
    pub admissible: bool,
    /// Why the report is inadmissible, when it is.
    pub reason: Option<String>,
    /// Set when the report is admissible but the winding is not 1.
    pub discrepancy: Option<String>,
}

/// Minimal band margin for an admissible report: below this the integer
/// separation is numerically inconclusive.
pub const MIN_BAND_MARGIN: f64 = 0.05;

/// Refinement threshold: adjacent boundary samples whose rotations differ
/// by more than this are bisected.
const PROFILE_GAP_LIMIT: f64 = 0.1;

/// Hard cap on boundary samples during adaptive refinement.
const MAX_BOUNDARY_SAMPLES: usize = 4096;

/// Counterclockwise winding number of a closed sampled image curve about
/// the origin.
///
/// Errors with [`GrotError::ZeroOnLoop`] if a sample is exactly at the
/// origin and [`GrotError::UnderSampled`] if two adjacent samples subtend
/// an angle too close to π (the turn direction would be ambiguous; the
/// caller is expected to refine and retry).
pub fn winding_number(image: &[PlanarPoint]) -> Result<i64> {
    if image.len() < 4 {
        return Err(GrotError::InvalidParams {
            msg: format!("winding needs a closed loop of ≥ 3 samples, got {}", image.len()),
        });
    }
    let scale = image.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let closure = (image[0] - *image.last().unwrap()).norm();
    if closure > 1e-9 * (1.0 + scale) {
        return Err(GrotError::InvalidParams {
            msg: format!("image loop is not closed (gap {closure:.3e})"),
        });
    }
    let mut total = 0.0;
    for (i, pair) in image.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if a.norm_sq() == 0.0 {
            return Err(GrotError::ZeroOnLoop { index: i });
        }
        if b.norm_sq() == 0.0 {
            return Err(GrotError::ZeroOnLoop { index: i + 1 });
        }
        // Signed turn from a to b, counterclockwise positive.
        let cross = a.x * b.y - a.y * b.x;
        let delta = cross.atan2(a.dot(b));
        if delta.abs() > std::f64::consts::PI - 1e-3 {
            return Err(GrotError::UnderSampled { index: i, gap: delta.abs() });
        }
        total += delta;
    }
    Ok((total / TAU).round() as i64)
}

#[derive(Debug, Clone, Copy)]
enum PointOutcome {
    Complete { rot: f64, image: PlanarPoint },
    BlowUp,
    OriginHit,
}

fn boundary_outcome(field: &dyn Field, z0: PlanarPoint, cfg: &IntegratorConfig) -> Result<PointOutcome> {
    let traj = integrate(field, z0, 0.0, cfg)?;
    Ok(match traj.classification {
        Classification::Complete => PointOutcome::Complete {
            rot: rotation::rot(&traj, traj.t_final())?,
            image: traj.final_state(),
        },
        Classification::BlowUp { .. } => PointOutcome::BlowUp,
        Classification::OriginHit { .. } => PointOutcome::OriginHit,
    })
}

fn require_one_period(field: &dyn Field, cfg: &IntegratorConfig) -> Result<()> {
    let period = field.period();
    if (cfg.t_end - period).abs() > 1e-9 * period.abs().max(1.0) {
        return Err(GrotError::InvalidParams {
            msg: format!(
                "the period-map horizon must equal the field period ({} vs {})",
                cfg.t_end, period
            ),
        });
    }
    Ok(())
}

/// Runs the admissibility-and-degree check for the period map along a
/// loop enclosing the origin.
///
/// The boundary is adaptively refined (midpoints on the ideal curve)
/// until adjacent rotation values differ by at most 0.1 turns, then the
/// report checks: no origin-hitting boundary trajectory, all finite
/// rotations inside one integer gap with margin ≥ [`MIN_BAND_MARGIN`],
/// and all boundary trajectories Complete so the displacement winding is
/// defined. Inadmissibility is reported in the result (with `reason`),
/// not as an `Err`: the diagnostics are the point.
pub fn theorem1_harness(
    field: &dyn Field,
    boundary: &Loop,
    cfg: &IntegratorConfig,
) -> Result<DegreeReport> {
    boundary.validate()?;
    require_one_period(field, cfg)?;
    // Precondition: the loop itself must enclose the origin.
    let loop_winding = winding_number(&boundary.samples)?;
    if loop_winding == 0 {
        return Err(GrotError::InvalidParams {
            msg: "the loop does not enclose the origin".into(),
        });
    }

    // Open list of boundary points (closure implicit) plus outcomes.
    let mut pts: Vec<PlanarPoint> = boundary.samples[..boundary.samples.len() - 1].to_vec();
    let mut outcomes: Vec<PointOutcome> = evaluate_points(field, &pts, cfg)?;

    // Adaptive refinement on the rotation profile.
    loop {
        let mut inserts: Vec<(usize, PlanarPoint)> = Vec::new();
        for i in 0..pts.len() {
            let j = (i + 1) % pts.len();
            if let (PointOutcome::Complete { rot: ra, .. }, PointOutcome::Complete { rot: rb, .. }) =
                (outcomes[i], outcomes[j])
            {
                if (ra - rb).abs() > PROFILE_GAP_LIMIT {
                    inserts.push((i + 1, boundary.midpoint(pts[i], pts[j])));
                }
            }
        }
        if inserts.is_empty() || pts.len() + inserts.len() > MAX_BOUNDARY_SAMPLES {
            break;
        }
        let new_outcomes = evaluate_points(field, &inserts.iter().map(|&(_, p)| p).collect::<Vec<_>>(), cfg)?;
        // Insert back-to-front so stored indices stay valid.
        for (k, &(at, p)) in inserts.iter().enumerate().rev() {
            pts.insert(at, p);
            outcomes.insert(at, new_outcomes[k]);
        }
    }

    // Assemble the profile and the diagnostics.
    let profile: Vec<GRotValue> = outcomes
        .iter()
        .map(|o| match o {
            PointOutcome::Complete { rot, .. } => GRotValue::Finite(*rot),
            _ => GRotValue::PlusInfinity,
        })
        .collect();
    let origin_hits = outcomes
        .iter()
        .position(|o| matches!(o, PointOutcome::OriginHit));
    let all_complete = outcomes
        .iter()
        .all(|o| matches!(o, PointOutcome::Complete { .. }));

    let finite: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| match o {
            PointOutcome::Complete { rot, .. } => Some(*rot),
            _ => None,
        })
        .collect();
    let profile_band = band_of(&finite);

    let mut reason = None;
    if let Some(i) = origin_hits {
        reason = Some(format!("trajectory from boundary sample {i} hits the origin"));
    } else if !all_complete {
        reason = Some("a boundary trajectory is not Complete; the period map is undefined there".into());
    } else {
        match profile_band {
            None => reason = Some("boundary rotations straddle an integer".into()),
            Some((_, margin)) if margin < MIN_BAND_MARGIN => {
                reason = Some(format!(
                    "integer-separation margin {margin:.4} below the conclusive threshold {MIN_BAND_MARGIN}"
                ));
            }
            _ => {}
        }
    }

    // Displacement winding, refining where the turn is ambiguous.
    let mut winding = None;
    if all_complete && reason.is_none() {
        winding = displacement_winding(field, boundary, &mut pts, &mut outcomes, cfg)?;
        if winding.is_none() {
            reason = Some("displacement winding undefined at sampling resolution".into());
        }
    }

    let admissible = reason.is_none() && winding.is_some();
    let discrepancy = match (admissible, winding) {
        (true, Some(w)) if w != 1 => Some(format!(
            "admissible boundary but displacement winding {w} ≠ 1"
        )),
        _ => None,
    };

    let mut closed = pts.clone();
    closed.push(pts[0]);
    Ok(DegreeReport {
        boundary: Loop {
            samples: closed,
            kind: boundary.kind,
        },
        profile,
        profile_band,
        winding,
        admissible,
        reason,
        discrepancy,
    })
}

fn evaluate_points(
    field: &dyn Field,
    pts: &[PlanarPoint],
    cfg: &IntegratorConfig,
) -> Result<Vec<PointOutcome>> {
    pts.par_iter()
        .map(|&z0| boundary_outcome(field, z0, cfg))
        .collect()
}

/// The integer gap `(n, margin)` containing every value, if one exists.
fn band_of(values: &[f64]) -> Option<(i64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return None;
    }
    let n = lo.floor();
    if hi >= n + 1.0 {
        return None;
    }
    let margin = (lo - n).min(n + 1.0 - hi);
    Some((n as i64, margin))
}

/// Winding of `φ(T,·) − Id` along the refined boundary; refines segments
/// flagged [`GrotError::UnderSampled`] until the winding is defined or
/// the sample cap is reached (`Ok(None)`). A displacement exactly at the
/// origin (boundary fixed point) also yields `Ok(None)`.
fn displacement_winding(
    field: &dyn Field,
    boundary: &Loop,
    pts: &mut Vec<PlanarPoint>,
    outcomes: &mut Vec<PointOutcome>,
    cfg: &IntegratorConfig,
) -> Result<Option<i64>> {
    loop {
        let mut disp: Vec<PlanarPoint> = Vec::with_capacity(pts.len() + 1);
        for (p, o) in pts.iter().zip(outcomes.iter()) {
            match o {
                PointOutcome::Complete { image, .. } => disp.push(*image - *p),
                _ => return Ok(None),
            }
        }
        disp.push(disp[0]);
        match winding_number(&disp) {
            Ok(w) => return Ok(Some(w)),
            Err(GrotError::UnderSampled { index, .. }) => {
                if pts.len() + 1 > MAX_BOUNDARY_SAMPLES {
                    return Ok(None);
                }
                let j = (index + 1) % pts.len();
                let mid = boundary.midpoint(pts[index], pts[j]);
                let out = evaluate_points(field, &[mid], cfg)?;
                pts.insert(index + 1, mid);
                outcomes.insert(index + 1, out[0]);
            }
            Err(GrotError::ZeroOnLoop { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
}

/// Extracts the closed level curve `GRot_T = level` (a half-integer) from
/// a polar grid over the annulus `|z| ∈ [r_lo, r_hi]` by marching squares
/// with linear interpolation. Blow-up (`+∞`) grid values participate as
/// `level + 10` — any finite stand-in above the level gives the same cell
/// topology. The walk must close around the annulus; each contour vertex
/// is then re-evaluated and required to carry a rotation within ±¼ turn
/// of the level.
pub fn build_level_boundary(
    field: &dyn Field,
    level: f64,
    annulus: (f64, f64),
    grid: (usize, usize),
    cfg: &IntegratorConfig,
) -> Result<Loop> {
    let (r_lo, r_hi) = annulus;
    let (n_theta, n_r) = grid;
    if !(r_lo > 0.0 && r_hi > r_lo) || n_theta < 4 || n_r < 2 {
        return Err(GrotError::InvalidParams {
            msg: format!("need 0 < r_lo < r_hi and a real grid, got {annulus:?}, {grid:?}"),
        });
    }
    let half = level - 0.5;
    if (half - half.round()).abs() > 1e-9 {
        return Err(GrotError::InvalidParams {
            msg: format!("level must be a half-integer n + 1/2, got {level}"),
        });
    }

    // Node rotations. Origin hits cannot occur on a positive-radius grid
    // unless the flow carries the node into the origin ball; treat those
    // like blow-up (outside the sub-level set).
    let stand_in = level + 10.0;
    let nodes: Vec<(usize, usize)> = (0..n_theta)
        .flat_map(|i| (0..n_r).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let a = TAU * i as f64 / n_theta as f64;
            let r = r_lo + (r_hi - r_lo) * j as f64 / (n_r - 1) as f64;
            let z = PlanarPoint::new(r * a.cos(), r * a.sin());
            Ok(match rotation::grot_t(field, z, cfg) {
                Ok(GRotValue::Finite(v)) => v,
                Ok(GRotValue::PlusInfinity) => stand_in,
                Err(GrotError::OriginHitTrajectory { .. }) => stand_in,
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let value = |i: usize, j: usize| values[(i % n_theta) * n_r + j];

    let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &values {
        min_v = min_v.min(v);
        max_v = max_v.max(v);
    }
    if min_v >= level || max_v < level {
        return Err(GrotError::LevelNotBracketed {
            level,
            lo: min_v,
            hi: max_v,
        });
    }

    // Marching squares on the (θ-wrapped, r) grid. Grid-space points are
    // (i + fraction, j + fraction); edges are keyed by their endpoints on
    // the half-integer lattice so segments join exactly.
    let corner = |i: usize, j: usize| value(i, j) >= level;
    let mut segments: Vec<((i64, i64), (i64, i64), [f64; 2], [f64; 2])> = Vec::new();
    let interp = |va: f64, vb: f64| {
        let t = (level - va) / (vb - va);
        t.clamp(0.0, 1.0)
    };
    for i in 0..n_theta {
        for j in 0..n_r - 1 {
            // Corners: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1).
            let c = [corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)];
            let idx = (c[0] as u8) | (c[1] as u8) << 1 | (c[2] as u8) << 2 | (c[3] as u8) << 3;
            if idx == 0 || idx == 15 {
                continue;
            }
            let (v00, v10, v11, v01) = (value(i, j), value(i + 1, j), value(i + 1, j + 1), value(i, j + 1));
            let fi = i as f64;
            let fj = j as f64;
            // Edge crossing points in grid space, keyed on doubled lattice
            // ids: bottom = (2i+1, 2j), right = (2i+2, 2j+1),
            // top = (2i+1, 2j+2), left = (2i, 2j+1).
            let e = |side: u8| -> ((i64, i64), [f64; 2]) {
                match side {
                    0 => ((2 * i as i64 + 1, 2 * j as i64), [fi + interp(v00, v10), fj]),
                    1 => ((2 * i as i64 + 2, 2 * j as i64 + 1), [fi + 1.0, fj + interp(v10, v11)]),
                    2 => ((2 * i as i64 + 1, 2 * j as i64 + 2), [fi + interp(v01, v11), fj + 1.0]),
                    _ => ((2 * i as i64, 2 * j as i64 + 1), [fi, fj + interp(v00, v01)]),
                }
            };
            let mut emit = |s1: u8, s2: u8| {
                let (k1, p1) = e(s1);
                let (k2, p2) = e(s2);
                segments.push((k1, k2, p1, p2));
            };
            match idx {
                1 => emit(3, 0),
                2 => emit(0, 1),
                3 => emit(3, 1),
                4 => emit(1, 2),
                5 => {
                    // Saddle: disambiguate by the cell-center value.
                    if 0.25 * (v00 + v10 + v11 + v01) >= level {
                        emit(3, 2);
                        emit(1, 0);
                    } else {
                        emit(3, 0);
                        emit(1, 2);
                    }
                }
                6 => emit(0, 2),
                7 => emit(3, 2),
                8 => emit(2, 3),
                9 => emit(2, 0),
                10 => {
                    if 0.25 * (v00 + v10 + v11 + v01) >= level {
                        emit(0, 1);
                        emit(2, 3);
                    } else {
                        emit(0, 3);
                        emit(2, 1);
                    }
                }
                11 => emit(2, 1),
                12 => emit(1, 3),
                13 => emit(1, 0),
                14 => emit(0, 3),
                _ => unreachable!(),
            }
        }
    }
    if segments.is_empty() {
        return Err(GrotError::ContourBroken { level });
    }

    // Join segments into walks. Wrap θ-keys so column n_theta meets 0.
    let wrap = |k: (i64, i64)| ((k.0).rem_euclid(2 * n_theta as i64), k.1);
    let mut adjacency: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        adjacency.entry(wrap(seg.0)).or_default().push(s);
        adjacency.entry(wrap(seg.1)).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut best_walk: Option<Vec<[f64; 2]>> = None;
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        // Trace a closed walk from this segment.
        let mut walk: Vec<(i64, i64)> = Vec::new();
        let mut points: Vec<[f64; 2]> = Vec::new();
        let (k0, k1) = (wrap(segments[start].0), wrap(segments[start].1));
        used[start] = true;
        walk.push(k0);
        walk.push(k1);
        points.push(segments[start].2);
        points.push(segments[start].3);
        let mut closed = false;
        loop {
            let tail = *walk.last().unwrap();
            let Some(cands) = adjacency.get(&tail) else { break };
            let next = cands.iter().copied().find(|&s| !used[s]);
            let Some(s) = next else {
                closed = walk.first() == walk.last() && walk.len() > 3;
                break;
            };
            used[s] = true;
            let (a, b) = (wrap(segments[s].0), wrap(segments[s].1));
            let (key, pt) = if a == tail {
                (b, segments[s].3)
            } else {
                (a, segments[s].2)
            };
            walk.push(key);
            points.push(pt);
            if key == walk[0] {
                closed = true;
                break;
            }
        }
        if !closed {
            continue;
        }
        // Keep the walk that winds once around the annulus (θ-monotone
        // net displacement of ±n_theta grid columns).
        let net: f64 = points
            .windows(2)
            .map(|w| {
                let mut d = w[1][0] - w[0][0];
                if d > n_theta as f64 / 2.0 {
                    d -= n_theta as f64;
                }
                if d < -(n_theta as f64) / 2.0 {
                    d += n_theta as f64;
                }
                d
            })
            .sum();
        if (net.abs() - n_theta as f64).abs() < 0.5 {
            best_walk = Some(points);
            break;
        }
    }
    let Some(points) = best_walk else {
        return Err(GrotError::ContourBroken { level });
    };

    // Grid space → plane.
    let to_plane = |p: [f64; 2]| {
        let a = TAU * p[0] / n_theta as f64;
        let r = r_lo + (r_hi - r_lo) * p[1] / (n_r - 1) as f64;
        PlanarPoint::new(r * a.cos(), r * a.sin())
    };
    let mut samples: Vec<PlanarPoint> = points.iter().map(|&p| to_plane(p)).collect();
    if (samples[0] - *samples.last().unwrap()).norm() > 1e-9 {
        samples.push(samples[0]);
    }

    // Validate: every contour vertex must carry a rotation within ±¼ turn
    // of the level (blow-up or origin-hit vertices are disqualifying).
    let checks: Vec<f64> = samples[..samples.len() - 1]
        .par_iter()
        .map(|&z| match rotation::grot_t(field, z, cfg) {
            Ok(GRotValue::Finite(v)) => Ok(v),
            Ok(GRotValue::PlusInfinity) => Ok(f64::INFINITY),
            Err(GrotError::OriginHitTrajectory { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<f64>>>()?;
    for &v in &checks {
        if !(v > level - 0.25 && v < level + 0.25) {
            return Err(GrotError::ContourBroken { level });
        }
    }
    Ok(Loop {
        samples,
        kind: LoopKind::Polygon,
    })
}

// ---------------------------------------------------------------------------
// Fixed-point localization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }
    fn center(&self) -> PlanarPoint {
        PlanarPoint::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
    fn children(&self) -> [Rect; 4] {
        let (mx, my) = (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1));
        [
            Rect { x0: self.x0, y0: self.y0, x1: mx, y1: my },
            Rect { x0: mx, y0: self.y0, x1: self.x1, y1: my },
            Rect { x0: self.x0, y0: my, x1: mx, y1: self.y1 },
            Rect { x0: mx, y0: my, x1: self.x1, y1: self.y1 },
        ]
    }
    fn boundary_samples(&self, per_side: usize) -> Vec<PlanarPoint> {
        let mut pts = Vec::with_capacity(4 * per_side);
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            pts.push(PlanarPoint::new(self.x0 + t * (self.x1 - self.x0), self.y0));
        }
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            pts.push(PlanarPoint::new(self.x1, self.y0 + t * (self.y1 - self.y0)));
        }
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            pts.push(PlanarPoint::new(self.x1 - t * (self.x1 - self.x0), self.y1));
        }
        for k in 0..per_side {
            let t = k as f64 / per_side as f64;
            pts.push(PlanarPoint::new(self.x0, self.y1 - t * (self.y1 - self.y0)));
        }
        pts
    }
}

/// What a rectangle's boundary reveals about fixed points inside it.
#[derive(Debug, Clone, Copy)]
struct CellProbe {
    /// Displacement winding, when defined at this resolution.
    winding: Option<i64>,
    /// Smallest sampled boundary displacement.
    min_disp: f64,
    /// Sampled Lipschitz estimate of the displacement along the boundary.
    lipschitz: f64,
    /// Boundary sample spacing of the finest pass.
    spacing: f64,
}

impl CellProbe {
    /// Whether the boundary data *certifies* that no zero can hide inside
    /// (sampled displacement too large everywhere, given the slope).
    fn excludes_zero(&self, size: f64) -> bool {
        let reach = 1.5 * self.lipschitz * (0.71 * size + 0.5 * self.spacing);
        self.min_disp > reach
    }
}

/// Displacement winding along a rectangle boundary, plus the exclusion
/// data. `winding` is `None` when undefined at this resolution
/// (non-Complete trajectory, boundary fixed point, or persistent
/// undersampling).
fn rect_probe(field: &dyn Field, rect: Rect, cfg: &IntegratorConfig) -> Result<CellProbe> {
    let mut per_side = 8;
    let mut probe = CellProbe {
        winding: None,
        min_disp: 0.0,
        lipschitz: f64::INFINITY,
        spacing: f64::INFINITY,
    };
    while per_side <= 64 {
        let pts = rect.boundary_samples(per_side);
        let outcomes = evaluate_points(field, &pts, cfg)?;
        let mut disp = Vec::with_capacity(pts.len() + 1);
        for (p, o) in pts.iter().zip(outcomes.iter()) {
            match o {
                PointOutcome::Complete { image, .. } => disp.push(*image - *p),
                // Cannot certify anything about such a cell.
                _ => return Ok(probe),
            }
        }
        disp.push(disp[0]);
        probe.min_disp = disp.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
        let mut lip = 0.0_f64;
        let mut spacing = 0.0_f64;
        for i in 0..pts.len() {
            let j = (i + 1) % pts.len();
            let gap = (pts[j] - pts[i]).norm();
            if gap > 0.0 {
                lip = lip.max((disp[j] - disp[i]).norm() / gap);
            }
            spacing = spacing.max(gap);
        }
        probe.lipschitz = lip;
        probe.spacing = spacing;
        match winding_number(&disp) {
            Ok(w) => {
                probe.winding = Some(w);
                return Ok(probe);
            }
            Err(GrotError::UnderSampled { .. }) => per_side *= 2,
            Err(GrotError::ZeroOnLoop { .. }) => return Ok(probe),
            Err(e) => return Err(e),
        }
    }
    Ok(probe)
}

#[cfg(test)]
fn rect_winding(field: &dyn Field, rect: Rect, cfg: &IntegratorConfig) -> Result<Option<i64>> {
    Ok(rect_probe(field, rect, cfg)?.winding)
}

/// Whether `z` lies inside the region bounded by `lp` (nonzero winding of
/// the translated boundary).
fn point_in_loop(lp: &Loop, z: PlanarPoint) -> bool {
    let translated: Vec<PlanarPoint> = lp.samples.iter().map(|&p| p - z).collect();
    matches!(winding_number(&translated), Ok(w) if w != 0)
}

/// Residual of the period map at `z`: `φ(T, z) − z`, or `None` when the
/// trajectory is not Complete.
fn displacement(field: &dyn Field, z: PlanarPoint, cfg: &IntegratorConfig) -> Result<Option<PlanarPoint>> {
    let traj = integrate(field, z, 0.0, cfg)?;
    Ok(match traj.classification {
        Classification::Complete => Some(traj.final_state() - z),
        _ => None,
    })
}

/// Damped Gauss–Newton (Levenberg-style) polish of `|φ(T,z) − z|²` from a
/// starting guess; returns the refined point when the residual drops
/// below `tol`.
fn polish_fixed_point(
    field: &dyn Field,
    start: PlanarPoint,
    cfg: &IntegratorConfig,
    tol: f64,
) -> Result<Option<PlanarPoint>> {
    let mut z = start;
    let Some(mut r) = displacement(field, z, cfg)? else {
        return Ok(None);
    };
    let mut lambda = 1e-3;
    for _ in 0..40 {
        if r.norm() < tol {
            return Ok(Some(z));
        }
        let h = 1e-7 * (1.0 + z.norm());
        let (Some(rx), Some(ry)) = (
            displacement(field, z + PlanarPoint::new(h, 0.0), cfg)?,
            displacement(field, z + PlanarPoint::new(0.0, h), cfg)?,
        ) else {
            return Ok(None);
        };
        // Jacobian columns of the displacement map.
        let (j11, j21) = ((rx.x - r.x) / h, (rx.y - r.y) / h);
        let (j12, j22) = ((ry.x - r.x) / h, (ry.y - r.y) / h);
        // Solve (JᵀJ + λI) d = −Jᵀ r.
        let (a11, a12, a22) = (
            j11 * j11 + j21 * j21,
            j11 * j12 + j21 * j22,
            j12 * j12 + j22 * j22,
        );
        let (b1, b2) = (-(j11 * r.x + j21 * r.y), -(j12 * r.x + j22 * r.y));
        let mut improved = false;
        for _ in 0..12 {
            let (m11, m22) = (a11 + lambda, a22 + lambda);
            let det = m11 * m22 - a12 * a12;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let d = PlanarPoint::new((b1 * m22 - b2 * a12) / det, (b2 * m11 - b1 * a12) / det);
            let z_try = z + d;
            if let Some(r_try) = displacement(field, z_try, cfg)? {
                if r_try.norm() < r.norm() {
                    z = z_try;
                    r = r_try;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(if r.norm() < tol { Some(z) } else { None })
}

/// Locates fixed points of the period map inside a region by recursive
/// quadtree subdivision on the displacement winding.
///
/// A cell is discarded only when its boundary winding is zero **and** the
/// sampled boundary displacement is provably too large for a zero to hide
/// inside (Lipschitz exclusion test). Cells with nonzero winding are
/// subdivided down to size `1e−3`; cells kept for any other reason
/// (undefined winding from non-Complete trajectories, boundary fixed
/// points, or failed exclusion — e.g. a degenerate curve of fixed points
/// has winding 0) are handed to a damped Gauss–Newton polish once small.
/// Every returned point is re-verified with tolerances tightened 10× to
/// residual `< 1e−8` and filtered to lie inside the region. Origin events
/// are disabled internally: the origin itself is a legitimate fixed
/// point. Returns [`GrotError::NoConvergence`] with the number of
/// unresolved candidates if no fixed point survives.
pub fn find_fixed_points(
    field: &dyn Field,
    region: &Loop,
    cfg: &IntegratorConfig,
) -> Result<Vec<PlanarPoint>> {
    region.validate()?;
    require_one_period(field, cfg)?;
    let inner = IntegratorConfig {
        origin_radius: 0.0,
        ..*cfg
    };
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &region.samples {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let root = Rect { x0, y0, x1, y1 };

    const MIN_CELL: f64 = 1e-3;
    /// Cells without a sharp (nonzero-winding) signal are polished from
    /// their centers at this size instead of being subdivided further —
    /// degenerate fixed sets would otherwise flood the subdivision.
    const EARLY_POLISH: f64 = 0.05;
    const MAX_CELLS: usize = 4096;
    let mut queue = vec![root];
    let mut seeds: Vec<PlanarPoint> = Vec::new();
    let mut processed = 0usize;
    let mut unresolved = 0usize;
    while let Some(rect) = queue.pop() {
        processed += 1;
        if processed > MAX_CELLS {
            unresolved += 1 + queue.len();
            break;
        }
        let probe = rect_probe(field, rect, &inner)?;
        let sharp = matches!(probe.winding, Some(w) if w != 0);
        if matches!(probe.winding, Some(0)) && probe.excludes_zero(rect.size()) {
            continue;
        }
        if rect.size() <= MIN_CELL || (rect.size() <= EARLY_POLISH && !sharp) {
            seeds.push(rect.center());
        } else {
            // Canonical order keeps the search deterministic.
            let kids = rect.children();
            for k in kids.iter().rev() {
                queue.push(*k);
            }
        }
    }
    seeds.retain(|&s| point_in_loop(region, s));

    // Polish seeds in parallel; verify at 10× tighter tolerances.
    let tight = IntegratorConfig {
        rtol: inner.rtol / 10.0,
        atol: inner.atol / 10.0,
        ..inner
    };
    let polished = seeds
        .par_iter()
        .map(|&seed| {
            let Some(z) = polish_fixed_point(field, seed, &inner, 1e-9)? else {
                return Ok(None);
            };
            let verified = displacement(field, z, &tight)?
                .map(|r| r.norm() < 1e-8)
                .unwrap_or(false);
            Ok(verified.then_some(z))
        })
        .collect::<Result<Vec<Option<PlanarPoint>>>>()?;
    let mut found: Vec<PlanarPoint> = Vec::new();
    for z in polished.into_iter().flatten() {
        if point_in_loop(region, z) && !found.iter().any(|f| (*f - z).norm() < 1e-5) {
            found.push(z);
        }
    }
    if found.is_empty() {
        return Err(GrotError::NoConvergence {
            candidates: unresolved.max(seeds.len()),
        });
    }
    // Canonical output order.
    found.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    Ok(found)
}
