//! Extremals of left-invariant sub-Finsler metrics and quasimetrics on the
//! Engel group.
//!
//! The control region is an arbitrary planar convex body `U` with the origin
//! in its interior. The crate computes the polar curve of `U`, classifies an
//! initial covector into its family of extremals, builds the angle profile
//! `θ(t)` by singular quadrature and inversion, synthesises the trajectory in
//! first-kind exponential coordinates and checks it against the first
//! integrals of the Hamiltonian system.
//!
//! Module map:
//! - [`group`]: group law, Lie bracket and left-invariant frame.
//! - [`region`]: control regions, gauge/support functions, polar curve.
//! - [`hamiltonian`]: covectors, lifts, Casimirs, pendulum equation, controls.
//! - [`classifier`]: case analysis of a covector/region pair.
//! - [`solver`]: angle profiles, trajectory synthesis and validation.

pub mod classifier;
pub mod error;
pub mod group;
pub mod hamiltonian;
pub mod quadrature;
pub mod region;
pub mod roots;
pub mod solver;

pub use classifier::{
    classify, integral_convergence, turning_points, Convergence, ConvergenceProbe, ExtremalClass,
    Side, Subcase, Tag, TurningPoints, Uniqueness,
};
pub use error::{Error, Result};
pub use group::{AlgebraVector, Basis, GroupElement};
pub use hamiltonian::{
    adjoint_from_state, casimirs, control_from_theta, control_from_theta_at, lifts_from_state,
    pendulum_rhs_sq, AdjointState, CasimirData, Covector, HamiltonianLifts, SelectorPolicy,
};
pub use region::{square_polar_radius, ControlRegion, PolarCurve, PolarPoint, RegionSpec};
pub use solver::{
    constant_theta_segment, theta_profile, time_of_theta, trace, validate, ConstantSegment,
    FamilySchedule, ProfileSegment, Sample, ScheduleEntry, ThetaProfile, Tolerances, TraceOptions,
    Trajectory, ValidationReport,
};

/// `2π`.
pub const TAU: f64 = std::f64::consts::TAU;

/// Relative/absolute closeness used by tests and decision helpers.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
