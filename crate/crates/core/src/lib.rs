//! Deterministic closed-loop simulation of tiltrotor transition-mode
//! attitude control.
//!
//! The crate models a small tiltrotor UAV through its hover → forward →
//! hover transition and stabilizes attitude with a cascade of a
//! super-twisting extended state observer ([`steso`]) and an adaptive
//! recursive sliding-mode controller ([`arsmc`]), with two fixed-gain
//! sliding-mode baselines for comparison. Rotor-level control allocation
//! with the tilt-dependent square mixer lives in [`allocation`], the 6-DOF
//! plant in [`rigid_body`], the fixed-step scenario runner in [`simkernel`],
//! and metrics/serialization in [`report`].
//!
//! Start with the runnable examples:
//!
//! * `hover_settling` — stabilize the documented initial attitude offset and
//!   print per-axis settling times for all three controllers.
//! * `transition_comparison` — full 24 s conversion/reconversion scenario,
//!   three controllers, phase-segmented comparison tables.
//! * `disturbance_rejection` — the windowed sinusoid disturbance test with
//!   observer-estimate traces written as CSV.
//! * `observer_demo` — the observer alone on a double integrator: constant
//!   and sinusoidal disturbance recovery.
//! * `allocation_sweep` — mixer determinant across the tilt range, rotor
//!   speed solutions, and the tilt schedule itself.
//! * `torque_free_spin` — plant-only integration conserving angular
//!   momentum, the numerical-hygiene baseline.
//!
//! Every run is bit-deterministic: same scenario, same trace.

pub mod allocation;
pub mod arsmc;
pub mod config;
pub mod error;
pub mod math;
pub mod report;
pub mod rigid_body;
pub mod selfcheck;
pub mod simkernel;
pub mod steso;

pub use error::{Result, SimError};
