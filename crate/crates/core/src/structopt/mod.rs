//! Harvesting-ratio optimization for a fixed sub-channel allocation.
//!
//! [`closed_form_theta`] gives the exact unconstrained optimum for one
//! effective gain; [`per_su_theta_optimize`] handles several gains per SU;
//! [`dual_subgradient_solve`] brings in the interference and rate constraints.
//! [`solve_structure`] strings them together the way the CLI and the
//! experiments use them.

mod closed_form;
mod dual;
mod lambert;
mod per_su;
mod pipeline;
pub mod search;

pub use closed_form::{
    closed_form_theta, concavity_certificate, constraint_convexity_probe, stationarity_residual, ClosedFormTheta,
};
pub use dual::{
    dual_subgradient_solve, dual_update, lagrangian_value, transmit_powers, ConstraintScales, DualConfig, DualState,
    SolveFlag, SolveMethod, SolveReport, StepSchedule,
};
pub use lambert::{lambert_w0, solve_x_ln_x};
pub use per_su::{per_su_theta_optimize, PerSuOptimum};
pub use pipeline::{closed_form_solve, min_rate_thetas, solve_structure};
