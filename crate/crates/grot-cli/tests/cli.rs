//! End-to-end tests of the `grot` binary: exit-code contract, artifact
//! shapes, determinism, and the environment overrides.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn grot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grot"))
}

/// Writes `config`, runs `grot <args..> config.toml` with the output
/// directory redirected into the temp dir, and returns the process output
/// together with that output directory.
fn run_cmd(dir: &Path, args: &[&str], config: &str) -> (Output, PathBuf) {
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, config).expect("write config");
    let out_dir = dir.join("out");
    let output = grot()
        .args(args)
        .arg(&cfg_path)
        .env("GROT_OUT_DIR", &out_dir)
        .output()
        .expect("spawn grot");
    (output, out_dir)
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no exit code")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn n_files(dir: &Path) -> usize {
    fs::read_dir(dir).map(|rd| rd.count()).unwrap_or(0)
}

fn json_file(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).expect("read JSON artifact");
    serde_json::from_str(&text).expect("parse JSON artifact")
}

const LINEAR_2PI: &str = "[system.linear-clockwise]\nperiod = 6.283185307179586\n";

#[test]
fn print_schema_is_a_runnable_config() {
    let out = grot().arg("--print-schema").output().expect("spawn grot");
    assert_eq!(code(&out), 0);
    let schema = String::from_utf8(out.stdout).expect("utf8 schema");
    // The schema must parse as TOML...
    let parsed: toml::Value = toml::from_str(&schema).expect("schema parses as TOML");
    assert!(parsed.get("system").is_some());

    // ... and actually run: a full clockwise turn has rotation exactly 1.
    let dir = tempfile::tempdir().expect("tempdir");
    let (out, out_dir) = run_cmd(dir.path(), &["integrate"], &schema);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let summary = json_file(&out_dir.join("summary.json"));
    assert_eq!(summary["classification"], "Complete");
    let rot = summary["final-rot"].as_f64().expect("final-rot");
    assert!((rot - 1.0).abs() < 1e-8, "rot = {rot}");
    let traj = fs::read_to_string(out_dir.join("trajectory.csv")).expect("trajectory");
    assert!(traj.starts_with("t,x,y,rho,theta_lift,rot\n"));
}

#[test]
fn integrate_blowup_seed_reports_blowup_time() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.example-family]\nalpha = 2.0\nbeta = 1.0\n\n\
                  [integrator]\nescape-radius = 160.0\nt-end = 1.0\n\n\
                  [integrate]\nz0 = [1.4142135623730951, 0.0]\n";
    let (out, out_dir) = run_cmd(dir.path(), &["integrate"], config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let summary = json_file(&out_dir.join("summary.json"));
    let t_f = summary["classification"]["BlowUp"]["t_f_est"]
        .as_f64()
        .expect("blow-up time estimate");
    assert!((0.995..=1.005).contains(&t_f), "t_f_est = {t_f}");
}

#[test]
fn unknown_config_key_exits_2_without_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.linear-clockwise]\nperiod = 1.0\nwavelength = 2.0\n\n[integrate]\nz0 = [1.0, 0.0]\n";
    let (out, out_dir) = run_cmd(dir.path(), &["integrate"], config);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("wavelength"));
    assert_eq!(n_files(&out_dir), 0);
}

#[test]
fn missing_system_exits_2_without_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (out, out_dir) = run_cmd(dir.path(), &["integrate"], "[integrate]\nz0 = [1.0, 0.0]\n");
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("system"));
    assert_eq!(n_files(&out_dir), 0);
}

#[test]
fn missing_command_section_exits_2() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (out, out_dir) = run_cmd(dir.path(), &["integrate"], LINEAR_2PI);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("[integrate]"));
    assert_eq!(n_files(&out_dir), 0);
}

#[test]
fn exhausted_step_budget_exits_3_without_partial_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.linear-clockwise]\nperiod = 6.283185307179586\n\n\
                  [integrator]\nmax-steps = 10\n\n[integrate]\nz0 = [1.0, 0.0]\n";
    let (out, out_dir) = run_cmd(dir.path(), &["integrate"], config);
    assert_eq!(code(&out), 3);
    assert!(stderr_of(&out).contains("step"));
    // The run failed mid-integration: nothing may be left behind, not even
    // a partially written trajectory.
    assert_eq!(n_files(&out_dir), 0);
}

#[test]
fn find_periodic_duffing_locates_fixed_point() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.duffing]\namp = 0.5\nomega = 1.0\n\n\
                  [find-periodic]\nradius = 2.2\nn-boundary = 96\n";
    let (out, out_dir) = run_cmd(dir.path(), &["find-periodic"], config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));

    let report = json_file(&out_dir.join("report.json"));
    assert_eq!(report["report"]["admissible"], true);
    assert_eq!(report["report"]["winding"], 1);
    let fixed = report["fixed-points"].as_array().expect("fixed points");
    assert!(!fixed.is_empty());
    let residual = report["residuals"][0].as_f64().expect("residual");
    assert!(residual < 1e-7, "residual = {residual}");

    let svg = fs::read_to_string(out_dir.join("portrait.svg")).expect("portrait");
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polyline"));
}

#[test]
fn find_periodic_resonant_linear_is_inconclusive_but_reported() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.linear-clockwise]\nperiod = 6.283185307179586\n\n\
                  [find-periodic]\nradius = 1.0\n";
    let (out, out_dir) = run_cmd(dir.path(), &["find-periodic"], config);
    // The period map of the 2π-periodic rigid rotation is the identity:
    // every boundary rotation sits exactly on an integer, which the degree
    // harness must refuse to interpret.
    assert_eq!(code(&out), 4, "stderr: {}", stderr_of(&out));
    let report = json_file(&out_dir.join("report.json"));
    assert_eq!(report["report"]["admissible"], false);
    assert!(report["report"]["reason"].as_str().expect("reason").len() > 0);
    assert!(out_dir.join("portrait.svg").exists());
}

#[test]
fn sweep_predicates_match_empirical_columns() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.example-family]\nalpha = 2.0\nbeta = 1.0\n\n\
                  [sweep]\nalphas = [1.5, 4.0]\nbetas = [1.0]\n";
    let (out, out_dir) = run_cmd(dir.path(), &["sweep"], config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));

    let csv = fs::read_to_string(out_dir.join("sweep.csv")).expect("sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("alpha,beta,h1_predicate,a4_predicate,empirical_h1,empirical_a4,rot_limit")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);

    // Row order is the configured grid order.
    assert_eq!((rows[0][0], rows[0][1]), ("1.5", "1"));
    assert_eq!((rows[1][0], rows[1][1]), ("4", "1"));
    for row in &rows {
        assert_eq!(row[2], row[4], "h1 predicate vs empirical in {row:?}");
        assert_eq!(row[3], row[5], "a4 predicate vs empirical in {row:?}");
    }
    // Subcritical cell: everything false, finite rotation limit 3/(2π).
    assert_eq!((rows[0][2], rows[0][3]), ("false", "false"));
    let limit: f64 = rows[0][6].parse().expect("finite rot limit");
    assert!((limit - 3.0 / std::f64::consts::TAU).abs() < 1e-12);
    // Supercritical cell: both predicates hold and the limit diverges.
    assert_eq!((rows[1][2], rows[1][3]), ("true", "true"));
    assert_eq!(rows[1][6], "inf");
}

#[test]
fn empty_sweep_grid_exits_2_without_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.example-family]\nalpha = 2.0\nbeta = 1.0\n\n\
                  [sweep]\nalphas = []\nbetas = [1.0]\n";
    let (out, out_dir) = run_cmd(dir.path(), &["sweep"], config);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("empty"));
    assert_eq!(n_files(&out_dir), 0);
}

#[test]
fn identical_config_and_seed_give_byte_identical_artifacts() {
    let config = "[system.linear-clockwise]\nperiod = 6.283185307179586\n\n\
                  [verify]\nchecks = [\"star\", \"a6\", \"h1\"]\nn-space = 300\nn-time = 16\n";
    let mut bundles: Vec<Vec<u8>> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().expect("tempdir");
        let (out, out_dir) = run_cmd(dir.path(), &["verify"], config);
        assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
        bundles.push(fs::read(out_dir.join("verify.json")).expect("bundle"));
    }
    assert_eq!(bundles[0], bundles[1]);

    let sweep_config = "[system.example-family]\nalpha = 2.0\nbeta = 1.0\n\n\
                        [sweep]\nalphas = [2.0]\nbetas = [1.0]\n";
    let mut tables: Vec<Vec<u8>> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().expect("tempdir");
        let (out, out_dir) = run_cmd(dir.path(), &["sweep"], sweep_config);
        assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
        tables.push(fs::read(out_dir.join("sweep.csv")).expect("table"));
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn out_dir_comes_from_config_when_env_is_unset() {
    let dir = tempfile::tempdir().expect("tempdir");
    let target = dir.path().join("artifacts");
    let config = format!(
        "[system.linear-clockwise]\nperiod = 6.283185307179586\n\n[run]\nout-dir = {:?}\n\n\
         [profile]\nradii = [1.0]\nn-angles = 4\n",
        target.to_str().expect("utf8 path")
    );
    let cfg_path = dir.path().join("config.toml");
    fs::write(&cfg_path, config).expect("write config");
    let out = grot()
        .arg("profile")
        .arg(&cfg_path)
        .env_remove("GROT_OUT_DIR")
        .output()
        .expect("spawn grot");
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(target.join("profile.csv").exists());
}

#[test]
fn thread_count_env_is_validated() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = format!("{LINEAR_2PI}\n[profile]\nradii = [1.0]\nn-angles = 4\n");

    let cfg_path = dir.path().join("config.toml");
    fs::write(&cfg_path, &config).expect("write config");
    let ok = grot()
        .arg("profile")
        .arg(&cfg_path)
        .env("GROT_OUT_DIR", dir.path().join("out"))
        .env("GROT_THREADS", "1")
        .output()
        .expect("spawn grot");
    assert_eq!(code(&ok), 0, "stderr: {}", stderr_of(&ok));

    let bad = grot()
        .arg("profile")
        .arg(&cfg_path)
        .env("GROT_OUT_DIR", dir.path().join("out2"))
        .env("GROT_THREADS", "many")
        .output()
        .expect("spawn grot");
    assert_eq!(code(&bad), 2);
    assert!(stderr_of(&bad).contains("GROT_THREADS"));
}

#[test]
fn verify_bundle_supercritical_family() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.example-family]\nalpha = 4.0\nbeta = 1.0\n\n\
                  [verify]\nchecks = [\"h1\", \"h2\", \"a4\"]\n";
    let (out, out_dir) = run_cmd(dir.path(), &["verify"], config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let bundle = json_file(&out_dir.join("verify.json"));
    let checks = bundle["checks"].as_object().expect("checks map");
    assert_eq!(checks.len(), 3);
    for name in ["h1", "h2", "a4"] {
        assert_eq!(
            checks[name]["holds_at_resolution"], true,
            "{name} should hold for the steep supercritical cell"
        );
    }
}

#[test]
fn verify_duffing_flux_bound_fails_but_coercivity_holds() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.duffing]\namp = 0.5\nomega = 1.0\n\n\
                  [verify]\nchecks = [\"star\", \"a6\"]\nn-space = 400\n";
    let (out, out_dir) = run_cmd(dir.path(), &["verify"], config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let bundle = json_file(&out_dir.join("verify.json"));
    // The inner flux bound has no feasible constant here: the forcing makes
    // the flux linear in |z| near 0 (so c ≥ amp), but a ball of radius
    // c·T ≥ π then contains points where the cubic term dominates, pushing
    // c — and with it the ball — beyond any fixed candidate.
    assert_eq!(bundle["checks"]["star"]["holds_at_resolution"], false);
    assert_eq!(bundle["checks"]["a6"]["holds_at_resolution"], true);
    let ell = bundle["checks"]["a6"]["certificate"]["ell"]
        .as_f64()
        .expect("coercivity constant");
    assert!(ell >= 0.0, "ell = {ell}");
}

#[test]
fn profile_recovers_closed_form_rotation() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.radial-power]\nalpha = 2.0\nperiod = 3.141592653589793\n\n\
                  [profile]\nradii = [1.4142135623730951]\nn-angles = 4\n";
    let (out, out_dir) = run_cmd(dir.path(), &["profile"], config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let csv = fs::read_to_string(out_dir.join("profile.csv")).expect("profile.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("radius,theta,grot"));
    let mut n = 0;
    for line in lines {
        let grot_value: f64 = line.split(',').nth(2).expect("grot column").parse().expect("finite");
        // H = ρ², ρ0 = 1 (|z| = √2): angular speed 2ρ = 2, so t ∈ [0, π]
        // is exactly one clockwise turn.
        assert!((grot_value - 1.0).abs() < 1e-6, "grot = {grot_value}");
        n += 1;
    }
    assert_eq!(n, 4);
}

#[test]
fn d_delta_bounding_radius_matches_rigid_rotation() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = "[system.linear-clockwise]\nperiod = 6.283185307179586\n\n\
                  [d-delta]\ndelta = 0.1\nn-t = 12\nn-boundary = 24\n";
    let (out, out_dir) = run_cmd(dir.path(), &["d-delta"], config);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let summary = json_file(&out_dir.join("d_delta.json"));
    let r = summary["bounding-radius"].as_f64().expect("bounding radius");
    // The rigid rotation maps the δ-cylinder onto the δ-disk, reported
    // with the 10% safety factor.
    assert!((0.1..=0.12).contains(&r), "bounding radius = {r}");
    let cloud = fs::read_to_string(out_dir.join("cloud.csv")).expect("cloud.csv");
    assert_eq!(cloud.lines().count(), 1 + 12 * 24);
    assert!(fs::read_to_string(out_dir.join("cloud.svg"))
        .expect("cloud.svg")
        .starts_with("<svg"));
}

#[test]
fn usage_errors_exit_2() {
    let none = grot().output().expect("spawn grot");
    assert_eq!(code(&none), 2);
    let unknown = grot().arg("frobnicate").output().expect("spawn grot");
    assert_eq!(code(&unknown), 2);
}
