//! Strict TOML run configuration: one file drives every subcommand.
//!
//! The schema is validated before any computation starts — unknown keys are
//! rejected anywhere in the file — and is documented (as a runnable example)
//! by `grot --print-schema`; see [`SCHEMA`].

use std::path::{Path, PathBuf};

use grot::example_family::{make_example_field, ExampleParams};
use grot::fields::{DuffingForced, Field, LinearClockwise, RadialPower};
use grot::integrator::IntegratorConfig;
use serde::Deserialize;

/// A whole configuration file. Which section beyond `[system]` is consumed
/// depends on the subcommand; unused sections are still schema-checked.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    pub integrate: Option<IntegrateSection>,
    pub verify: Option<VerifySection>,
    pub find_periodic: Option<FindPeriodicSection>,
    pub sweep: Option<SweepSection>,
    pub d_delta: Option<DDeltaSection>,
    pub profile: Option<ProfileSection>,
}

impl RunConfig {
    /// Reads and schema-checks a configuration file.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
        Ok(cfg)
    }
}

/// The `[system.<name>]` table: exactly one built-in vector field.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum SystemConfig {
    LinearClockwise(LinearSystem),
    RadialPower(RadialSystem),
    Duffing(DuffingSystem),
    ExampleFamily(FamilySystem),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct LinearSystem {
    /// Field period `T > 0`.
    pub period: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RadialSystem {
    /// Radial exponent of `H = ρ^α`.
    pub alpha: f64,
    pub period: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DuffingSystem {
    /// Forcing amplitude of `x'' + x³ = amp·cos(ω t)`.
    pub amp: f64,
    /// Forcing frequency; the period is `2π/ω`.
    pub omega: f64,
}

/// Parameters of the blow-up example family; optional keys fall back to the
/// library defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FamilySystem {
    pub alpha: f64,
    pub beta: f64,
    pub sigma0: Option<f64>,
    pub t_f: Option<f64>,
    pub period: Option<f64>,
    pub epsilon: Option<f64>,
    pub v_width: Option<f64>,
    pub d_cap: Option<f64>,
}

impl FamilySystem {
    pub fn params(&self) -> ExampleParams {
        let mut p = ExampleParams::with_exponents(self.alpha, self.beta);
        if let Some(v) = self.sigma0 {
            p.sigma0 = v;
        }
        if let Some(v) = self.t_f {
            p.t_f = v;
        }
        if let Some(v) = self.period {
            p.period = v;
        }
        if let Some(v) = self.epsilon {
            p.epsilon = v;
        }
        if let Some(v) = self.v_width {
            p.v_width = v;
        }
        if let Some(v) = self.d_cap {
            p.d_cap = v;
        }
        p
    }
}

impl SystemConfig {
    /// Instantiates the selected field. Parameter violations surface as
    /// `InvalidParams` (a configuration error).
    pub fn build(&self) -> grot::Result<Box<dyn Field>> {
        match self {
            SystemConfig::LinearClockwise(s) => {
                validate_period(s.period)?;
                Ok(Box::new(LinearClockwise::new(s.period)))
            }
            SystemConfig::RadialPower(s) => {
                validate_period(s.period)?;
                if !(s.alpha >= 1.0) || !s.alpha.is_finite() {
                    return Err(grot::GrotError::InvalidParams {
                        msg: format!("radial-power alpha must be finite and ≥ 1, got {}", s.alpha),
                    });
                }
                Ok(Box::new(RadialPower::new(s.alpha, s.period)))
            }
            SystemConfig::Duffing(s) => {
                if !(s.omega > 0.0) || !s.omega.is_finite() || !s.amp.is_finite() {
                    return Err(grot::GrotError::InvalidParams {
                        msg: format!(
                            "duffing needs finite amp and omega > 0, got amp={}, omega={}",
                            s.amp, s.omega
                        ),
                    });
                }
                Ok(Box::new(DuffingForced::new(s.amp, s.omega)))
            }
            SystemConfig::ExampleFamily(s) => Ok(Box::new(make_example_field(s.params())?)),
        }
    }

    /// The family parameters when the selected system is the example
    /// family; `None` for the other built-ins.
    pub fn family_params(&self) -> Option<ExampleParams> {
        match self {
            SystemConfig::ExampleFamily(s) => Some(s.params()),
            _ => None,
        }
    }
}

fn validate_period(period: f64) -> grot::Result<()> {
    if period > 0.0 && period.is_finite() {
        Ok(())
    } else {
        Err(grot::GrotError::InvalidParams {
            msg: format!("period must be positive and finite, got {period}"),
        })
    }
}

/// `[run]`: artifact location and the sampling seed.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct RunSection {
    /// Output directory, created if missing. `GROT_OUT_DIR` overrides.
    pub out_dir: PathBuf,
    /// Seed for the sampling-based condition checkers.
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out_dir: PathBuf::from("grot-out"),
            seed: 1729,
        }
    }
}

/// `[integrator]`: optional overrides over the library defaults. `t-end`
/// only affects `integrate`; every other command runs whole periods.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IntegratorSection {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub h_min: Option<f64>,
    pub escape_radius: Option<f64>,
    pub origin_radius: Option<f64>,
    pub t_end: Option<f64>,
    pub max_steps: Option<usize>,
}

impl IntegratorSection {
    /// The effective configuration, with `t_end` defaulting to
    /// `default_t_end` (usually one field period).
    pub fn build(&self, default_t_end: f64) -> IntegratorConfig {
        let d = IntegratorConfig::default();
        IntegratorConfig {
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            h_min: self.h_min.unwrap_or(d.h_min),
            escape_radius: self.escape_radius.unwrap_or(d.escape_radius),
            origin_radius: self.origin_radius.unwrap_or(d.origin_radius),
            t_end: self.t_end.unwrap_or(default_t_end),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
        }
    }

    /// Like [`build`](Self::build) but pinned to exactly one period, which
    /// the period-map machinery requires regardless of any `t-end` override.
    pub fn build_one_period(&self, period: f64) -> IntegratorConfig {
        IntegratorConfig {
            t_end: period,
            ..self.build(period)
        }
    }
}

/// `[integrate]`: a single trajectory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IntegrateSection {
    /// Initial state `[x, y]`.
    pub z0: [f64; 2],
    /// Start time; default 0.
    pub t0: Option<f64>,
}

/// `[verify]`: which condition checkers to run and their knobs.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifySection {
    /// Subset of `star, a4, a5, a6, h1, h2, growth`; default: all.
    pub checks: Option<Vec<String>>,
    /// Canonical-radius window `[lo, hi]` for `h1`/`h2`; default `[0.5, 50]`.
    pub rho_range: Option<[f64; 2]>,
    /// Increasing `|z|` ladder for `a5`/`a6`/`growth`; default `[1, 2, 4, 8]`.
    pub radii: Option<Vec<f64>>,
    /// Forward horizon of the `star` check; default one period.
    pub t_horizon: Option<f64>,
    /// Seeds probed by `a4`; default: the family's designed blow-up seed
    /// when the system is the example family, else a radius-2 ring.
    pub a4_seeds: Option<Vec<[f64; 2]>>,
    /// Rotation count an escaping orbit must exceed; default 3.
    pub a4_threshold: Option<f64>,
    /// Spatial sample count; default 1500.
    pub n_space: Option<usize>,
    /// Temporal sample count; default 48.
    pub n_time: Option<usize>,
}

/// `[find-periodic]`: circle on which the degree harness runs.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FindPeriodicSection {
    /// Circle center; default the origin.
    pub center: Option<[f64; 2]>,
    pub radius: f64,
    /// Boundary sample count; default 96.
    pub n_boundary: Option<usize>,
}

/// `[sweep]`: exponent grid for the example-family dichotomy table.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepSection {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub rho_range: Option<[f64; 2]>,
    pub a4_threshold: Option<f64>,
    pub n_space: Option<usize>,
    pub n_time: Option<usize>,
}

/// `[d-delta]`: backward-reachability cylinder sampling.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DDeltaSection {
    pub delta: f64,
    /// Cylinder time samples; default 12.
    pub n_t: Option<usize>,
    /// Circle samples per time slice; default 24.
    pub n_boundary: Option<usize>,
}

/// `[profile]`: circles on which the generalized rotation is tabulated.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProfileSection {
    /// Circle radii; default `[0.5, 1, 2, 4]`.
    pub radii: Option<Vec<f64>>,
    /// Start points per circle; default 16.
    pub n_angles: Option<usize>,
}

/// The documented configuration schema, printed by `--print-schema`.
/// It is itself a runnable configuration for every subcommand.
pub const SCHEMA: &str = r##"# grot configuration schema (TOML). One file drives every subcommand:
#
#     grot integrate      config.toml    -> trajectory.csv, summary.json
#     grot verify         config.toml    -> verify.json
#     grot find-periodic  config.toml    -> report.json, portrait.svg
#     grot sweep          config.toml    -> sweep.csv
#     grot d-delta        config.toml    -> d_delta.json, cloud.csv, cloud.svg
#     grot profile        config.toml    -> profile.csv
#
# This schema is itself a runnable configuration. Unknown keys are rejected
# anywhere in the file. Artifacts are staged in memory and written atomically
# (temp file + rename), so a failed run leaves no partial files. Identical
# config + seed produces byte-identical outputs.
#
# Exit codes: 0 = success, 2 = configuration error, 3 = integration failure
# at runtime, 4 = inconclusive (boundary not admissible, no fixed point
# located). Diagnostics go to standard error.
#
# Environment:
#     GROT_OUT_DIR   overrides [run].out-dir
#     GROT_THREADS   caps the worker-thread count (default: logical CPUs)

# ------------------------------------------------------------------ system
# Exactly one [system.<name>] table selects the vector field.

[system.linear-clockwise]    # rigid clockwise rotation: H = rho
period = 6.283185307179586   # period T > 0; over 2*pi every orbit turns once

# [system.radial-power]      # H = rho^alpha: twist rate grows with radius
# alpha = 2.0                # radial exponent (>= 1)
# period = 3.141592653589793

# [system.duffing]           # x'' + x^3 = amp*cos(omega*t); period 2*pi/omega
# amp = 0.5
# omega = 1.0

# [system.example-family]    # H = rho^alpha + f(t, theta - theta*) g(rho - rho*)
# alpha = 2.0                # radial exponent (> 1)
# beta = 1.0                 # blow-up rate of rho*(t) = sigma0*t-f/(t-f - t)^beta
# sigma0 = 1.0               # optional radius scale (default 1.0)
# t-f = 1.0                  # optional designed blow-up time (default 1.0)
# period = 1.0               # optional field period >= t-f (default 1.0)
# epsilon = 0.25             # optional dip budget: sup|f| <= epsilon/2
# v-width = 2.0              # optional saturation ramp half-width
# d-cap = inf                # optional extra cap on the dip depth

# --------------------------------------------------------------------- run
[run]
out-dir = "grot-out"   # created if missing; GROT_OUT_DIR takes precedence
seed = 1729            # seed for the sampling-based checkers

# -------------------------------------------------------------- integrator
# All keys optional (library defaults shown). `t-end` affects `integrate`
# only; every other command integrates whole periods by construction.
[integrator]
rtol = 1e-10           # relative tolerance
atol = 1e-10           # absolute tolerance
h-min = 1e-14          # smallest step before underflow is reported
escape-radius = 1e3    # |z| beyond which a trajectory counts as blowing up
origin-radius = 1e-6   # |z| below which a trajectory counts as hitting 0
max-steps = 1000000
# t-end = 6.283185307179586   # horizon for `integrate` (default: one period)

# --------------------------------------------------------------- integrate
# One trajectory from z0. trajectory.csv columns: t,x,y,rho,theta_lift,rot
# (theta_lift is empty when the orbit reached the origin); summary.json
# carries the classification, final rotation, and step statistics.
[integrate]
z0 = [1.0, 0.0]        # initial state [x, y]
t0 = 0.0               # start time (optional, default 0)

# ------------------------------------------------------------------ verify
# Condition checkers. verify.json maps each selected name to a verdict
# (holds_at_resolution, witness, certificate). A false verdict still exits
# 0: the bundle is a report, not an assertion. `growth` reuses the exponent
# certified by `h2` (running h2 implicitly if unselected); when h2 fails,
# growth is reported false with the h2 witness.
[verify]
checks = ["star", "a4", "a5", "a6", "h1", "h2", "growth"]
rho-range = [0.5, 50.0]        # canonical-radius window for h1/h2
radii = [1.0, 2.0, 4.0, 8.0]   # increasing |z| ladder for a5/a6/growth
t-horizon = 6.283185307179586  # star horizon (default: one period)
a4-threshold = 3.0             # rotation count an escape must exceed
# a4-seeds = [[1.5, 0.0]]      # default: the family's designed blow-up
#                              # seed, else a radius-2 ring
n-space = 1500                 # spatial samples
n-time = 48                    # temporal samples

# ----------------------------------------------------------- find-periodic
# Degree harness + fixed-point search inside a circle (always one period).
# report.json carries the degree report, the fixed points, and their
# period-map residuals; portrait.svg draws boundary, image and fixed
# points. When the boundary is not admissible or no fixed point is found,
# both files are still written and the exit code is 4 — e.g. the
# linear-clockwise field with period exactly 2*pi is resonant (the period
# map is the identity) and its report says so.
[find-periodic]
center = [0.0, 0.0]    # circle center (optional, default origin)
radius = 1.0           # circle radius (required)
n-boundary = 96        # boundary samples (optional, default 96)

# ------------------------------------------------------------------- sweep
# Dichotomy table of the example family over an (alpha, beta) grid; the
# [system] table is ignored (the sweep always runs the family). sweep.csv
# columns: alpha,beta,h1_predicate,a4_predicate,empirical_h1,empirical_a4,
# rot_limit — the closed-form predicates beta*(alpha-2) >= 1 and
# beta*(alpha-1) >= 1, the sampled verdicts, and the designed solution's
# rotation limit ("inf" when it diverges). Rows are emitted in row-major
# (alpha outer, beta inner) order.
[sweep]
alphas = [1.5, 2.0]    # at least one value each
betas = [1.0]
# rho-range = [0.5, 50.0]
# a4-threshold = 3.0
# n-space = 1500
# n-time = 48

# ----------------------------------------------------------------- d-delta
# Backward reachability of the radius-delta cylinder: d_delta.json (the
# bounding radius), cloud.csv (x,y backward images at t = 0), cloud.svg.
[d-delta]
delta = 0.1
n-t = 12               # cylinder time samples (optional, default 12)
n-boundary = 24        # circle samples per time slice (optional, default 24)

# ----------------------------------------------------------------- profile
# Generalized one-period rotation on circles. profile.csv columns:
# radius,theta,grot with grot = "inf" on blow-up; theta is the clockwise
# angle of the start point.
[profile]
radii = [0.5, 1.0, 2.0]   # circle radii (default [0.5, 1, 2, 4])
n-angles = 8              # start points per circle (default 16)
"##;
