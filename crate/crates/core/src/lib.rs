//! Ising minimization through the critical points of a quartic potential and the
//! adiabatic Hamiltonian flows built on it.
//!
//! The crate is organised bottom-up:
//!
//! * [`ising`]: instances, exact spin energies, the exhaustive oracle.
//! * [`potential`]: `U(x)`, derivatives, critical-point enumeration, Morse classes,
//!   alpha calibration and the two-spin closed forms.
//! * [`dynamics`]: gradient-flow CIM, DOPO, KPO and SB integrators plus an end-to-end solver.
//! * [`capture`]: Hill regions, transit/capture classification, the capture stopping rule
//!   and the two-spin saddle linearization.
//! * [`harness`]: random instances and solver-versus-oracle campaigns.
//! * [`io`]: problem files and CSV emission.

pub mod capture;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod io;
pub mod ising;
pub mod potential;

pub use capture::{
    capture_test, classify_neck_orbit, classify_trajectory, estimate_b5, estimate_b6, hill_contains,
    min_on_sphere, neck_linearize, periodic_orbit_ellipse, saddle_floor_threshold, CaptureContext,
    CaptureReport, Ellipse, HillQuery, NeckAnalysis, NeckCoords, NeckOrbit, Orientation, TransitKind,
    TransitVerdict,
};
pub use dynamics::{
    hamiltonian_sb, integrate_dopo, integrate_gradient_cim, integrate_kpo, integrate_sb, solve, Integrator,
    KpoParams, Schedule, ScheduleKind, SolveConfig, SolveOutcome, State, Trajectory, TrajectorySample,
};
pub use error::{Error, Result};
pub use harness::{
    random_instance, run_campaign, AlphaPolicy, BenchResult, CampaignConfig, Distribution, InstanceSpec, RunRecord,
    SolverKind,
};
pub use ising::{
    brute_force, brute_force_with_cap, energy, sign_vector, IsingProblem, OracleResult, SignVector, SpinConfig,
};
pub use potential::{
    calibrate_alpha, classify, cubic_roots, eval_u, find_critical_points, global_minima, grad_u, hess_u,
    r2_closed_form, Calibration,
    CriticalPoint, CubicSign, LandscapeSummary, PointClass, PotentialParams, R2ClosedForm, R2Regime,
    Tolerances,
};
