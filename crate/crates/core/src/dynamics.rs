//! Lockstep time integration of the stabilization system `û`, the
//! regulator system `U` and the plant `u`.
//!
//! All three share the generic form `∂w/∂t = ν ∂²w/∂x² + (explicit terms)`
//! with Neumann boundary slopes, and all three are advanced by the same
//! IMEX step: Crank–Nicolson for diffusion, forward Euler for advection,
//! coupling and source terms. Because the stencils are linear and every
//! explicit term is sampled at the same old time level, the plant update
//! is the exact sum of the other two updates up to rounding.
//!
//! Advection is written as the derivative of a flux (`½u²`, `½U² + ûU`, ...)
//! through [`Grid::flux_derivative`], whose trapezoid telescopes to the
//! boundary values of the flux. The feedforward boundary terms cancel those
//! values exactly, so `∫U dx` changes by `dt r'(t + dt/2)` per step.
//!
//! Boundary data:
//! * stabilization feedback `f̂` enters the Crank–Nicolson average at both
//!   levels, the new-level value found by Newton iteration on the two
//!   boundary rows (lagging the cubic law is unstable at practical steps);
//! * regulator feedforward `F` is evaluated at the old time level, except
//!   `r'` which is sampled at the step midpoint;
//! * the plant receives `f̂ + F` as given data at both levels.
//!
//! The controllers act on `û` and `U`, never on `u`, so a mismatch
//! `u - (û + U)` evolves under the uncontrolled plant and grows when `a` is
//! destabilizing. A free-running plant therefore amplifies rounding; the
//! default [`PlantCoupling::Anchored`] advances the plant from `û + U`
//! each step, which checks the one-step identity without that drift.

use crate::control::{
    feedback_fluxes, feedback_law, feedforward_fluxes, ControllerVariant, FeedforwardInputs, Fluxes,
};
use crate::exprlang::{EvalError, Expr};
use crate::grid::{Field, Grid};
use crate::tridiag;
use std::fmt;

/// Any nodal magnitude above this aborts the run.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

const NEWTON_MAX_ITER: usize = 60;
const NEWTON_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Stabilization,
    Regulator,
    Plant,
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Stabilization => "stabilization",
            System::Regulator => "regulator",
            System::Plant => "plant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("{0} system produced a non-finite value")]
    NonFinite(System),
    #[error("{system} system exceeded blow-up threshold (|value| = {value:e})")]
    BlowUp { system: System, value: f64 },
    #[error("boundary Newton iteration did not converge in {0} iterations")]
    NewtonDiverged(usize),
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Solves the Crank–Nicolson system for one step of
/// `∂w/∂t = ν ∂²w/∂x² + rhs` with boundary slopes (`∂w/∂x`, i.e. fluxes
/// already divided by `ν`) given at the old and new time levels:
///
/// `(I - dt/2 ν L_new) w⁺ = w + dt/2 ν L_old w + dt rhs`.
pub fn imex_step(
    grid: &Grid,
    f: &[f64],
    explicit_rhs: &[f64],
    slope_old: (f64, f64),
    slope_new: (f64, f64),
    nu: f64,
    dt: f64,
) -> Result<Field, DynamicsError> {
    let sys = CnSystem::assemble(grid, f, explicit_rhs, slope_old, nu, dt);
    let mut rhs = sys.rhs.clone();
    let (b0, b1) = sys.boundary_load(slope_new);
    rhs[0] += b0;
    rhs[grid.len() - 1] += b1;
    sys.solve(rhs)
}

/// Like [`imex_step`], but the new-level boundary slopes are functions of
/// the new boundary values, `slope = law(w⁺_boundary)`, solved for by Newton
/// iteration on the two boundary rows. Each law returns
/// `(slope, d slope / d value)`.
///
/// With `slope_old = law(w_boundary)` this is a Crank–Nicolson average of
/// the boundary data, which is non-expansive in the trapezoid norm for any
/// nondecreasing odd law.
///
/// Returns the new field and the slopes at the new boundary values.
#[allow(clippy::too_many_arguments)]
pub fn imex_step_implicit_boundary(
    grid: &Grid,
    f: &[f64],
    explicit_rhs: &[f64],
    slope_old: (f64, f64),
    left_law: impl Fn(f64) -> (f64, f64),
    right_law: impl Fn(f64) -> (f64, f64),
    nu: f64,
    dt: f64,
) -> Result<(Field, (f64, f64)), DynamicsError> {
    let n = grid.len();
    let sys = CnSystem::assemble(grid, f, explicit_rhs, slope_old, nu, dt);
    // new-level load of slope g on the boundary rows: (-c g, +c g)
    let c = 2.0 * sys.theta / grid.dx();
    let mut w: Vec<f64> = f.to_vec();
    for _ in 0..NEWTON_MAX_ITER {
        let (g0, dg0) = left_law(w[0]);
        let (g1, dg1) = right_law(w[n - 1]);
        let mut residual = sys.apply(&w);
        for (r, b) in residual.iter_mut().zip(&sys.rhs) {
            *r = b - *r;
        }
        residual[0] -= c * g0;
        residual[n - 1] += c * g1;
        let mut diag = sys.diag.clone();
        diag[0] += c * dg0;
        diag[n - 1] -= c * dg1;
        tridiag::solve_in_place(&sys.lower, &diag, &sys.upper, &mut residual);
        let mut step = 0.0_f64;
        let mut scale = 1.0_f64;
        for (wi, di) in w.iter_mut().zip(&residual) {
            *wi += di;
            step = step.max(di.abs());
            scale = scale.max(wi.abs());
        }
        if !step.is_finite() {
            return Err(DynamicsError::NonFinite(System::Stabilization));
        }
        if step <= NEWTON_TOL * scale {
            let slopes = (left_law(w[0]).0, right_law(w[n - 1]).0);
            return Ok((Field(w), slopes));
        }
    }
    Err(DynamicsError::NewtonDiverged(NEWTON_MAX_ITER))
}

/// Tridiagonal operator `I - θ A` (with `A` the homogeneous Neumann
/// Laplacian and `θ = ν dt / 2`) plus the explicit part of the right side.
struct CnSystem {
    theta: f64,
    inv_h: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
}

impl CnSystem {
    fn assemble(
        grid: &Grid,
        f: &[f64],
        explicit_rhs: &[f64],
        slope_old: (f64, f64),
        nu: f64,
        dt: f64,
    ) -> CnSystem {
        let n = grid.len();
        let h = grid.dx();
        let theta = 0.5 * nu * dt;
        let s = theta / (h * h);
        let mut lower = vec![-s; n];
        let diag = vec![1.0 + 2.0 * s; n];
        let mut upper = vec![-s; n];
        upper[0] = -2.0 * s;
        lower[n - 1] = -2.0 * s;
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        let lap = grid.neumann_laplacian(f, slope_old.0, slope_old.1);
        let rhs = f
            .iter()
            .zip(lap.iter())
            .zip(explicit_rhs)
            .map(|((w, l), e)| w + theta * l + dt * e)
            .collect();
        CnSystem {
            theta,
            inv_h: 1.0 / h,
            lower,
            diag,
            upper,
            rhs,
        }
    }

    /// Right-side contribution of new-level slopes.
    fn boundary_load(&self, slope: (f64, f64)) -> (f64, f64) {
        let c = 2.0 * self.theta * self.inv_h;
        (-c * slope.0, c * slope.1)
    }

    fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * w[i];
                if i > 0 {
                    s += self.lower[i] * w[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * w[i + 1];
                }
                s
            })
            .collect()
    }

    fn solve(&self, mut rhs: Vec<f64>) -> Result<Field, DynamicsError> {
        tridiag::solve_in_place(&self.lower, &self.diag, &self.upper, &mut rhs);
        Ok(Field(rhs))
    }
}

/// State of the three coupled systems at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Stabilization state `û`.
    pub uhat: Field,
    /// Regulator state `U`.
    pub regulator: Field,
    /// Plant state `u`.
    pub plant: Field,
    /// Number of completed steps.
    pub step: usize,
    pub t: f64,
}

impl SystemState {
    /// `û(x,0) = u₀ - r(0)`, `U(x,0) = r(0)`, `u(x,0) = u₀`.
    pub fn initial(grid: &Grid, u0: &Field, r0: f64) -> SystemState {
        SystemState {
            uhat: Field(u0.iter().map(|v| v - r0).collect()),
            regulator: grid.constant(r0),
            plant: u0.clone(),
            step: 0,
            t: 0.0,
        }
    }

    /// `‖u - (û + U)‖∞`.
    pub fn superposition_residual(&self) -> f64 {
        self.plant
            .iter()
            .zip(self.uhat.iter().zip(self.regulator.iter()))
            .fold(0.0_f64, |m, (u, (a, b))| m.max((u - (a + b)).abs()))
    }
}

/// Coefficient `a(x,t)` and disturbance `u_d(x,t)` sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub a: Field,
    pub ud: Field,
}

/// Controller outputs used in one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepFluxes {
    /// `f̂` at the old time level.
    pub feedback_old: Fluxes,
    /// `f̂` at the new time level.
    pub feedback_new: Fluxes,
    pub feedforward: Fluxes,
}

impl StepFluxes {
    /// Plant fluxes `(f̂ + F)` at the old and new levels.
    pub fn plant(&self) -> (Fluxes, Fluxes) {
        (
            self.feedback_old + self.feedforward,
            self.feedback_new + self.feedforward,
        )
    }
}

/// How the plant state entering each step is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlantCoupling {
    /// Step the plant equation from `û + U` of the shared old level.
    #[default]
    Anchored,
    /// Step the plant equation from its own previous output.
    FreeRunning,
}

/// Everything needed to step the three systems: grid, variant, gains,
/// time step, coefficient, disturbance and `r'`.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub grid: Grid,
    pub variant: ControllerVariant,
    pub k: f64,
    pub nu: f64,
    pub dt: f64,
    pub coeff_a: Expr,
    pub dist: Expr,
    pub r_prime: Expr,
    pub coupling: PlantCoupling,
}

fn guard(system: System, f: &Field) -> Result<(), DynamicsError> {
    if !f.is_finite() {
        return Err(DynamicsError::NonFinite(system));
    }
    let m = f.max_abs();
    if m > BLOW_UP_THRESHOLD {
        return Err(DynamicsError::BlowUp { system, value: m });
    }
    Ok(())
}

impl Dynamics {
    pub fn forcing_at(&self, t: f64) -> Result<Forcing, DynamicsError> {
        Ok(Forcing {
            a: self.grid.try_sample(|x| self.coeff_a.eval(x, t))?,
            ud: self.grid.try_sample(|x| self.dist.eval(x, t))?,
        })
    }

    /// One step of `∂û/∂t = ν ∂²û/∂x² (- û ∂û/∂x under `theorem1`)`. Returns
    /// the new `û` and the feedback fluxes at the old and new levels.
    pub fn step_stabilization(
        &self,
        state: &SystemState,
    ) -> Result<(Field, Fluxes, Fluxes), DynamicsError> {
        let g = &self.grid;
        let uhat = &state.uhat;
        let rhs = match self.variant {
            ControllerVariant::Theorem1 => {
                let q = Field(uhat.iter().map(|v| 0.5 * v * v).collect());
                -1.0 * &g.flux_derivative(&q)
            }
            ControllerVariant::Theorem2 => g.zeros(),
        };
        let (variant, k, nu) = (self.variant, self.k, self.nu);
        let left = |v: f64| {
            let (p, dp) = feedback_law(variant, k, v);
            (p / nu, dp / nu)
        };
        let right = |v: f64| {
            let (p, dp) = feedback_law(variant, k, v);
            (-p / nu, -dp / nu)
        };
        let old = feedback_fluxes(variant, k, uhat.first(), uhat.last());
        let slope_old = (old.left / nu, old.right / nu);
        let (next, slopes) =
            imex_step_implicit_boundary(g, uhat, &rhs, slope_old, left, right, nu, self.dt)?;
        guard(System::Stabilization, &next)?;
        Ok((next, old, Fluxes::new(nu * slopes.0, nu * slopes.1)))
    }

    /// Feedforward fluxes at the old level, with `r'` at the step midpoint.
    pub fn feedforward(
        &self,
        state: &SystemState,
        forcing: &Forcing,
    ) -> Result<Fluxes, DynamicsError> {
        let g = &self.grid;
        let coupling: Vec<f64> = forcing
            .a
            .iter()
            .zip(state.uhat.iter().zip(state.regulator.iter()))
            .zip(forcing.ud.iter())
            .map(|((a, (uh, reg)), ud)| a * (uh + reg) + ud)
            .collect();
        let r_prime = self.r_prime.eval(0.0, state.t + 0.5 * self.dt)?;
        Ok(feedforward_fluxes(
            self.variant,
            &FeedforwardInputs {
                uhat0: state.uhat.first(),
                uhat1: state.uhat.last(),
                reg0: state.regulator.first(),
                reg1: state.regulator.last(),
                r_prime,
                coupling_integral: g.trapezoid(&coupling),
            },
        ))
    }

    /// One step of the regulator system with old-level feedforward fluxes.
    pub fn step_regulator(
        &self,
        state: &SystemState,
        forcing: &Forcing,
        feedforward: Fluxes,
    ) -> Result<Field, DynamicsError> {
        let g = &self.grid;
        let (uh, reg) = (&state.uhat, &state.regulator);
        let with_uhat_advection = self.variant == ControllerVariant::Theorem2;
        // advected flux ½U² + ûU (+ ½û²), matching the feedforward boundary terms
        let q = Field(
            uh.iter()
                .zip(reg.iter())
                .map(|(h, r)| {
                    let mut q = 0.5 * r * r + h * r;
                    if with_uhat_advection {
                        q += 0.5 * h * h;
                    }
                    q
                })
                .collect(),
        );
        let dq = g.flux_derivative(&q);
        let rhs: Vec<f64> = (0..g.len())
            .map(|i| -dq[i] + forcing.a[i] * (uh[i] + reg[i]) + forcing.ud[i])
            .collect();
        let slope = (feedforward.left / self.nu, feedforward.right / self.nu);
        let next = imex_step(g, reg, &rhs, slope, slope, self.nu, self.dt)?;
        guard(System::Regulator, &next)?;
        Ok(next)
    }

    /// One step of `∂u/∂t = ν ∂²u/∂x² - u ∂u/∂x + a u + u_d` with the summed
    /// controller fluxes.
    pub fn step_plant(
        &self,
        state: &SystemState,
        forcing: &Forcing,
        fluxes: &StepFluxes,
    ) -> Result<Field, DynamicsError> {
        let g = &self.grid;
        let anchored;
        let u = match self.coupling {
            PlantCoupling::Anchored => {
                anchored = &state.uhat + &state.regulator;
                &anchored
            }
            PlantCoupling::FreeRunning => &state.plant,
        };
        let q = Field(u.iter().map(|v| 0.5 * v * v).collect());
        let dq = g.flux_derivative(&q);
        let rhs: Vec<f64> = (0..g.len())
            .map(|i| -dq[i] + forcing.a[i] * u[i] + forcing.ud[i])
            .collect();
        let (old, new) = fluxes.plant();
        let next = imex_step(
            g,
            u,
            &rhs,
            (old.left / self.nu, old.right / self.nu),
            (new.left / self.nu, new.right / self.nu),
            self.nu,
            self.dt,
        )?;
        guard(System::Plant, &next)?;
        Ok(next)
    }

    /// Advances all three systems by one step from the shared old level.
    pub fn advance(&self, state: &mut SystemState) -> Result<StepFluxes, DynamicsError> {
        let forcing = self.forcing_at(state.t)?;
        let (uhat, feedback_old, feedback_new) = self.step_stabilization(state)?;
        let feedforward = self.feedforward(state, &forcing)?;
        let regulator = self.step_regulator(state, &forcing, feedforward)?;
        let fluxes = StepFluxes {
            feedback_old,
            feedback_new,
            feedforward,
        };
        let plant = self.step_plant(state, &forcing, &fluxes)?;
        state.uhat = uhat;
        state.regulator = regulator;
        state.plant = plant;
        state.step += 1;
        state.t = state.step as f64 * self.dt;
        Ok(fluxes)
    }
}
