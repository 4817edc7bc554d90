//! Rotation numbers, topological degree, and periodic orbits for planar
//! time-periodic ODEs `ż = F(t, z)` that may blow up in finite time.
//!
//! The library is organized bottom-up:
//!
//! - [`geometry`] — clockwise polar charts `(θ, r)` and canonical polar
//!   charts `(θ, ρ)` with `ρ = |z|²/2`, plus angle unwrapping. The angle
//!   convention is **clockwise-positive** throughout (see the module docs;
//!   most plotting conventions are counterclockwise).
//! - [`fields`] — the planar vector-field interface, Hamiltonian-backed
//!   fields `F = J∇H`, and built-in reference systems.
//! - [`integrator`] — an adaptive Dormand–Prince 8(5,3) integrator with
//!   dense output, event location (origin proximity, escape), blow-up time
//!   extrapolation, and a rotation quadrature channel that rides the same
//!   Runge–Kutta stages as the state.
//! - [`example_family`] — an executable superquadratic Hamiltonian family
//!   `H = ρ^α + f(t, θ − θ*(t))·g(ρ − ρ*(t))` carrying a known solution
//!   that blows up in finite time, with closed forms and parameter
//!   dichotomy predicates.
//! - [`rotation`] — rotation numbers, the generalized rotation that is
//!   `+∞` on blow-up, backward-flow sampling of origin-visiting sets, and
//!   rotation profiles along curves.
//! - [`degree`] — winding numbers of displacement loops, the
//!   admissibility-plus-degree harness for the fixed-point theorem,
//!   level-set boundary extraction, and quadtree fixed-point localization.
//! - [`conditions`] — sampling-based checkers for the abstract conditions
//!   (star, A4–A6, H1, H2, superquadratic growth) with certificates.
//!
//! All verdict-producing routines are resolution-qualified: they certify
//! behavior on the sampled sets only, never analytically.

pub mod cheb;
pub mod conditions;
pub mod degree;
pub mod error;
pub mod example_family;
pub mod fields;
pub mod geometry;
pub mod integrator;
pub mod rotation;

mod dop853;

pub use error::{GrotError, Result};
pub use geometry::{CanonicalPolar, PlanarPoint, PolarLift};
