//! Simulation and verification of boundary feedback/feedforward tracking
//! control for the viscous Burgers equation
//!
//! ```text
//! u_t = ν u_xx - u u_x + a(x,t) u + u_d(x,t),   ν u_x(0,t) = f₀,  ν u_x(1,t) = f₁,
//! ```
//!
//! where the controls make the spatial mean `∫₀¹ u dx` track a reference
//! `r(t)`. The plant is split as `u = û + U` into a stabilization system
//! driven to zero by boundary feedback and a regulator system whose
//! feedforward fluxes keep `∫₀¹ U dx = r(t)`. All three systems are
//! integrated side by side so the split can be checked numerically.
//!
//! Modules, bottom-up:
//! * [`exprlang`]: expressions for `a`, `u_d`, `r`, `u₀` with symbolic `∂/∂t`;
//! * [`grid`]: mesh, stencils, quadrature and norms;
//! * [`control`]: the feedback and feedforward laws, decay rate and bound;
//! * [`dynamics`]: the shared IMEX step and the three steppers;
//! * [`sim`]: closed-loop runs, invariant checks, refinement studies.

pub mod control;
pub mod dynamics;
pub mod exprlang;
pub mod grid;
pub mod sim;
mod tridiag;

pub use control::{ControllerVariant, Fluxes, GainConfig};
pub use dynamics::{Dynamics, DynamicsError, PlantCoupling, SystemState};
pub use exprlang::{parse, Expr};
pub use grid::{Field, Grid};
pub use sim::{
    check_invariants, convergence_study, run_closed_loop, Check, ConvergenceReport, DtRule,
    InvariantReport, RunRecord, Sample, Scenario, ScenarioError, ScenarioMode, Snapshot,
    StudyError, Termination, Tolerances,
};
