//! The six subcommands. Each one builds every artifact in memory first and
//! only then writes, so a failing run leaves nothing behind (except
//! `find-periodic`, which intentionally emits its report before signaling
//! an inconclusive outcome).

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use grot::conditions::{
    check_a4_auto, check_a5_empirical, check_a6, check_growth, check_h1, check_h2, check_star,
    ConditionVerdict, SampleGrid,
};
use grot::degree::{find_fixed_points, theorem1_harness, DegreeReport, Loop};
use grot::example_family::{
    a4_predicate, h1_predicate, make_example_field, make_special_seed, special_solution,
    ExampleParams,
};
use grot::fields::Field;
use grot::integrator::{integrate, poincare_map, Classification};
use grot::rotation::{estimate_d_delta, rotation_profile};
use grot::{GrotError, PlanarPoint};

use crate::config::{ProfileSection, RunConfig, VerifySection};
use crate::output::{fnum, to_csv, to_json, OutDir};
use crate::{svg, CmdResult, Failure};

fn section<'a, T>(sec: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
    sec.as_ref()
        .ok_or_else(|| Failure::config(format!("this command needs a [{name}] section in the config")))
}

// ---------------------------------------------------------------------------
// integrate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct IntegrateSummary<'a> {
    system: &'a str,
    t0: f64,
    t_end: f64,
    classification: Classification,
    final_time: f64,
    final_state: PlanarPoint,
    /// Accumulated rotation (turns) at the final sample.
    final_rot: f64,
    blowup_fit_residual: Option<f64>,
    n_samples: usize,
    nfev: usize,
    n_accepted: usize,
    n_rejected: usize,
}

pub fn run_integrate(cfg: &RunConfig, out: &OutDir) -> CmdResult {
    let sec = section(&cfg.integrate, "integrate")?;
    let field = cfg.system.build()?;
    let icfg = cfg.integrator.build(field.period());
    let z0 = PlanarPoint::new(sec.z0[0], sec.z0[1]);
    let t0 = sec.t0.unwrap_or(0.0);

    let traj = integrate(field.as_ref(), z0, t0, &icfg)?;

    let mut rows = Vec::with_capacity(traj.samples.len());
    for (i, &(t, z)) in traj.samples.iter().enumerate() {
        let theta = match &traj.lift {
            Some(lift) => fnum(lift[i].theta),
            None => String::new(),
        };
        rows.push(vec![
            fnum(t),
            fnum(z.x),
            fnum(z.y),
            fnum(0.5 * (z.x * z.x + z.y * z.y)),
            theta,
            fnum(traj.rot_channel[i]),
        ]);
    }
    let csv = to_csv(&["t", "x", "y", "rho", "theta_lift", "rot"], &rows)
        .map_err(Failure::internal)?;

    let summary = IntegrateSummary {
        system: field.name(),
        t0,
        t_end: icfg.t_end,
        classification: traj.classification,
        final_time: traj.t_final(),
        final_state: traj.final_state(),
        final_rot: *traj.rot_channel.last().expect("nonempty rotation channel"),
        blowup_fit_residual: traj.blowup_fit_residual,
        n_samples: traj.samples.len(),
        nfev: traj.nfev,
        n_accepted: traj.n_accepted,
        n_rejected: traj.n_rejected,
    };
    let json = to_json(&summary).map_err(Failure::internal)?;

    out.write("trajectory.csv", &csv).map_err(Failure::internal)?;
    out.write("summary.json", &json).map_err(Failure::internal)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

const ALL_CHECKS: [&str; 7] = ["star", "a4", "a5", "a6", "h1", "h2", "growth"];

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct VerifyBundle<'a> {
    system: &'a str,
    grid: SampleGrid,
    checks: BTreeMap<&'static str, ConditionVerdict>,
}

pub fn run_verify(cfg: &RunConfig, out: &OutDir) -> CmdResult {
    let default_sec = VerifySection::default();
    let sec = cfg.verify.as_ref().unwrap_or(&default_sec);
    let field = cfg.system.build()?;
    let period = field.period();
    let icfg = cfg.integrator.build_one_period(period);
    let grid = SampleGrid {
        n_space: sec.n_space.unwrap_or(SampleGrid::default().n_space),
        n_time: sec.n_time.unwrap_or(SampleGrid::default().n_time),
        seed: cfg.run.seed,
    };

    let selected: Vec<String> = match &sec.checks {
        Some(list) => list.clone(),
        None => ALL_CHECKS.iter().map(|s| s.to_string()).collect(),
    };
    for c in &selected {
        if !ALL_CHECKS.contains(&c.as_str()) {
            return Err(Failure::config(format!(
                "unknown check {c:?}; valid checks: {}",
                ALL_CHECKS.join(", ")
            )));
        }
    }
    let want = |name: &str| selected.iter().any(|s| s == name);

    let rho_range = sec.rho_range.map(|[lo, hi]| (lo, hi)).unwrap_or((0.5, 50.0));
    let radii = sec.radii.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]);
    let t_horizon = sec.t_horizon.unwrap_or(period);
    let a4_threshold = sec.a4_threshold.unwrap_or(3.0);
    let a4_seeds: Vec<PlanarPoint> = match &sec.a4_seeds {
        Some(list) => list.iter().map(|&[x, y]| PlanarPoint::new(x, y)).collect(),
        None => match cfg.system.family_params() {
            Some(p) => vec![make_special_seed(&p)?],
            None => (0..4)
                .map(|k| {
                    let a = TAU * k as f64 / 4.0;
                    PlanarPoint::new(2.0 * a.cos(), 2.0 * a.sin())
                })
                .collect(),
        },
    };

    let mut checks: BTreeMap<&'static str, ConditionVerdict> = BTreeMap::new();
    if want("star") {
        checks.insert("star", check_star(field.as_ref(), &grid, t_horizon)?);
    }
    if want("a6") {
        checks.insert("a6", check_a6(field.as_ref(), &radii, &grid)?);
    }
    if want("h1") {
        checks.insert("h1", check_h1(field.as_ref(), rho_range, &grid)?);
    }
    let h2 = if want("h2") || want("growth") {
        Some(check_h2(field.as_ref(), rho_range, &grid)?)
    } else {
        None
    };
    if want("h2") {
        checks.insert("h2", h2.clone().expect("h2 verdict computed above"));
    }
    if want("growth") {
        let h2 = h2.as_ref().expect("h2 verdict computed above");
        // The growth bound borrows the exponent certified by (h2); with no
        // such exponent the bound is unverifiable at this resolution.
        let verdict = if h2.certificate.contains_key("k") {
            check_growth(field.as_ref(), h2, &radii, &grid)?
        } else {
            ConditionVerdict {
                holds_at_resolution: false,
                witness: h2.witness.clone(),
                certificate: BTreeMap::new(),
            }
        };
        checks.insert("growth", verdict);
    }
    if want("a4") {
        checks.insert(
            "a4",
            check_a4_auto(field.as_ref(), &a4_seeds, a4_threshold, &icfg)?,
        );
    }
    if want("a5") {
        checks.insert("a5", check_a5_empirical(field.as_ref(), &radii, &grid, &icfg)?);
    }

    let bundle = VerifyBundle {
        system: field.name(),
        grid,
        checks,
    };
    let json = to_json(&bundle).map_err(Failure::internal)?;
    out.write("verify.json", &json).map_err(Failure::internal)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// find-periodic
// ---------------------------------------------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct PeriodicReport<'a> {
    system: &'a str,
    report: &'a DegreeReport,
    fixed_points: &'a [PlanarPoint],
    /// `|φ(T, z*) − z*|` per fixed point (`null` if its re-run failed).
    residuals: &'a [Option<f64>],
    search_note: Option<&'a str>,
}

pub fn run_find_periodic(cfg: &RunConfig, out: &OutDir) -> CmdResult {
    let sec = section(&cfg.find_periodic, "find-periodic")?;
    if !(sec.radius > 0.0) || !sec.radius.is_finite() {
        return Err(Failure::config(format!(
            "find-periodic radius must be positive and finite, got {}",
            sec.radius
        )));
    }
    let n_boundary = sec.n_boundary.unwrap_or(96);
    if n_boundary < 8 {
        return Err(Failure::config("find-periodic needs n-boundary >= 8"));
    }
    let field = cfg.system.build()?;
    let icfg = cfg.integrator.build_one_period(field.period());
    let center = sec.center.unwrap_or([0.0, 0.0]);
    let boundary = Loop::circle(PlanarPoint::new(center[0], center[1]), sec.radius, n_boundary);

    let report = theorem1_harness(field.as_ref(), &boundary, &icfg)?;
    let (fixed, note) = match find_fixed_points(field.as_ref(), &boundary, &icfg) {
        Ok(points) => (points, None),
        Err(GrotError::NoConvergence { candidates }) => (
            Vec::new(),
            Some(format!(
                "fixed-point search did not converge; {candidates} candidate cell(s) remained"
            )),
        ),
        Err(e) => return Err(e.into()),
    };

    let one_period = |z: PlanarPoint| match poincare_map(field.as_ref(), z, &icfg) {
        Ok((_, img)) => Ok(img),
        Err(GrotError::StepUnderflow { .. } | GrotError::MaxStepsExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let open = &boundary.samples[..boundary.samples.len() - 1];
    let image: Vec<Option<PlanarPoint>> = open
        .par_iter()
        .map(|&z| one_period(z))
        .collect::<grot::Result<_>>()?;
    let residuals: Vec<Option<f64>> = fixed
        .par_iter()
        .map(|&z| Ok(one_period(z)?.map(|w| (w - z).norm())))
        .collect::<grot::Result<_>>()?;

    let json = to_json(&PeriodicReport {
        system: field.name(),
        report: &report,
        fixed_points: &fixed,
        residuals: &residuals,
        search_note: note.as_deref(),
    })
    .map_err(Failure::internal)?;
    let portrait = svg::portrait(open, &image, &fixed);

    out.write("report.json", &json).map_err(Failure::internal)?;
    out.write("portrait.svg", portrait.as_bytes())
        .map_err(Failure::internal)?;

    if report.admissible && !fixed.is_empty() {
        Ok(())
    } else {
        let mut why: Vec<String> = Vec::new();
        if !report.admissible {
            why.push(
                report
                    .reason
                    .clone()
                    .unwrap_or_else(|| "boundary not admissible".to_string()),
            );
        }
        if fixed.is_empty() {
            why.push(note.unwrap_or_else(|| "no fixed point was located".to_string()));
        }
        Err(Failure::inconclusive(format!(
            "{} (report.json and portrait.svg were still written)",
            why.join("; ")
        )))
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn run_sweep(cfg: &RunConfig, out: &OutDir) -> CmdResult {
    let sec = section(&cfg.sweep, "sweep")?;
    if sec.alphas.is_empty() || sec.betas.is_empty() {
        return Err(Failure::config(
            "sweep grid is empty: need at least one alpha and one beta",
        ));
    }
    let grid = SampleGrid {
        n_space: sec.n_space.unwrap_or(SampleGrid::default().n_space),
        n_time: sec.n_time.unwrap_or(SampleGrid::default().n_time),
        seed: cfg.run.seed,
    };
    let rho_range = sec.rho_range.map(|[lo, hi]| (lo, hi)).unwrap_or((0.5, 50.0));
    let threshold = sec.a4_threshold.unwrap_or(3.0);

    let cells: Vec<(f64, f64)> = sec
        .alphas
        .iter()
        .flat_map(|&a| sec.betas.iter().map(move |&b| (a, b)))
        .collect();
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .map(|&(alpha, beta)| -> grot::Result<Vec<String>> {
            let p = ExampleParams::with_exponents(alpha, beta);
            let field = make_example_field(p)?;
            let icfg = cfg.integrator.build_one_period(field.period());
            let emp_h1 = check_h1(&field, rho_range, &grid)?.holds_at_resolution;
            let seed = make_special_seed(&p)?;
            let emp_a4 = check_a4_auto(&field, &[seed], threshold, &icfg)?.holds_at_resolution;
            Ok(vec![
                fnum(alpha),
                fnum(beta),
                h1_predicate(&p).to_string(),
                a4_predicate(&p).to_string(),
                emp_h1.to_string(),
                emp_a4.to_string(),
                special_solution(p)?.rot_limit().to_string(),
            ])
        })
        .collect::<grot::Result<_>>()?;

    let csv = to_csv(
        &[
            "alpha",
            "beta",
            "h1_predicate",
            "a4_predicate",
            "empirical_h1",
            "empirical_a4",
            "rot_limit",
        ],
        &rows,
    )
    .map_err(Failure::internal)?;
    out.write("sweep.csv", &csv).map_err(Failure::internal)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// d-delta
// ---------------------------------------------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct DDeltaSummary<'a> {
    system: &'a str,
    delta: f64,
    n_t: usize,
    n_boundary: usize,
    bounding_radius: f64,
    n_points: usize,
}

pub fn run_d_delta(cfg: &RunConfig, out: &OutDir) -> CmdResult {
    let sec = section(&cfg.d_delta, "d-delta")?;
    let field = cfg.system.build()?;
    let icfg = cfg.integrator.build_one_period(field.period());
    let (n_t, n_boundary) = (sec.n_t.unwrap_or(12), sec.n_boundary.unwrap_or(24));

    let est = estimate_d_delta(field.as_ref(), sec.delta, (n_t, n_boundary), &icfg)?;

    let json = to_json(&DDeltaSummary {
        system: field.name(),
        delta: est.delta,
        n_t,
        n_boundary,
        bounding_radius: est.bounding_radius,
        n_points: est.point_cloud.len(),
    })
    .map_err(Failure::internal)?;
    let rows: Vec<Vec<String>> = est
        .point_cloud
        .iter()
        .map(|p| vec![fnum(p.x), fnum(p.y)])
        .collect();
    let csv = to_csv(&["x", "y"], &rows).map_err(Failure::internal)?;
    let picture = svg::cloud(&est.point_cloud, est.bounding_radius, est.delta);

    out.write("d_delta.json", &json).map_err(Failure::internal)?;
    out.write("cloud.csv", &csv).map_err(Failure::internal)?;
    out.write("cloud.svg", picture.as_bytes())
        .map_err(Failure::internal)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

pub fn run_profile(cfg: &RunConfig, out: &OutDir) -> CmdResult {
    let default_sec = ProfileSection::default();
    let sec = cfg.profile.as_ref().unwrap_or(&default_sec);
    let radii = sec
        .radii
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0]);
    let n_angles = sec.n_angles.unwrap_or(16);
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Failure::config(
            "profile radii must be a nonempty list of positive numbers",
        ));
    }
    if n_angles == 0 {
        return Err(Failure::config("profile needs n-angles >= 1"));
    }
    let field = cfg.system.build()?;
    let icfg = cfg.integrator.build_one_period(field.period());

    let mut rows = Vec::with_capacity(radii.len() * n_angles);
    for &r in &radii {
        let angles: Vec<f64> = (0..n_angles).map(|j| TAU * j as f64 / n_angles as f64).collect();
        let points: Vec<PlanarPoint> = angles
            .iter()
            .map(|&th| PlanarPoint::new(r * th.cos(), -r * th.sin()))
            .collect();
        let values = rotation_profile(field.as_ref(), &points, &icfg)?;
        for (th, v) in angles.iter().zip(&values) {
            rows.push(vec![fnum(r), fnum(*th), v.to_string()]);
        }
    }
    let csv = to_csv(&["radius", "theta", "grot"], &rows).map_err(Failure::internal)?;
    out.write("profile.csv", &csv).map_err(Failure::internal)?;
    Ok(())
}
