//! Closed-loop runs, invariant monitors and grid-refinement studies.

use std::fmt;

use crate::control::{decay_rate, tracking_bound, ControlError, ControllerVariant};
use crate::dynamics::{Dynamics, DynamicsError, PlantCoupling, SystemState};
use crate::exprlang::{Expr, Var};
use crate::grid::{Field, Grid};

/// Numerical allowances used by [`check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed excess of `|e(t)|` over the exponential envelope.
    pub bound_slack: f64,
    /// Allowed `|∫U dx - r(t)|`.
    pub mean_u: f64,
    /// Allowed `‖u - (û + U)‖∞ / max(1, ‖u‖∞)`.
    pub superposition: f64,
    /// Allowed per-step increase of `‖û‖`.
    pub energy_step: f64,
    /// Allowed relative excess of `‖û(t)‖` over `‖û(0)‖ e^{-λt/2}`.
    pub energy_envelope: f64,
    /// Allowed `‖û - exact‖∞` when an exact stabilization state is given.
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bound_slack: 0.02,
            mean_u: 5e-3,
            superposition: 1e-8,
            energy_step: 1e-10,
            energy_envelope: 0.05,
            exact: 2e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScenarioMode {
    /// Feedback and feedforward control with the variant's gain threshold.
    #[default]
    ClosedLoop,
    /// Scheme check: `theorem2` split with feedback switched off (`k = 0`),
    /// so `û` solves the plain Neumann heat equation. The gain threshold is
    /// not applied and `exact_uhat` is required.
    Heat,
}

impl ScenarioMode {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioMode::ClosedLoop => "closed_loop",
            ScenarioMode::Heat => "heat",
        }
    }
}

/// Full problem statement for one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub nu: f64,
    pub k: f64,
    pub variant: ControllerVariant,
    pub mode: ScenarioMode,
    /// Coefficient `a(x,t)`.
    pub a: Expr,
    /// Disturbance `u_d(x,t)`.
    pub ud: Expr,
    /// Reference `r(t)`.
    pub r: Expr,
    /// Initial plant state `u₀(x)`.
    pub u0: Expr,
    /// Optional closed form of `û(x,t)` to compare against.
    pub exact_uhat: Option<Expr>,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_stride: usize,
    pub snapshot_times: Vec<f64>,
    pub tolerances: Tolerances,
    pub plant_coupling: PlantCoupling,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("key `k`: {0}")]
    Gain(#[from] ControlError),
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key,
        reason: reason.into(),
    }
}

impl Scenario {
    /// The zero scenario: every input zero, `theorem1` controllers.
    pub fn zero() -> Scenario {
        let zero = Expr::Const(0.0);
        Scenario {
            name: "zero".into(),
            nu: 5.0,
            k: 15.0,
            variant: ControllerVariant::Theorem1,
            mode: ScenarioMode::ClosedLoop,
            a: zero.clone(),
            ud: zero.clone(),
            r: zero.clone(),
            u0: zero,
            exact_uhat: None,
            n: 51,
            dt: 1e-3,
            t_end: 1.0,
            sample_stride: 10,
            snapshot_times: Vec::new(),
            tolerances: Tolerances::default(),
            plant_coupling: PlantCoupling::Anchored,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(invalid("nu", format!("must be positive (got {})", self.nu)));
        }
        match self.mode {
            ScenarioMode::ClosedLoop => self.variant.validate_gain(self.k)?,
            ScenarioMode::Heat => {
                if self.variant != ControllerVariant::Theorem2 {
                    return Err(invalid("variant", "heat mode requires theorem2"));
                }
                if self.k != 0.0 {
                    return Err(invalid("k", "heat mode requires k = 0"));
                }
                if self.exact_uhat.is_none() {
                    return Err(invalid(
                        "exact_uhat",
                        "heat mode requires an exact solution",
                    ));
                }
            }
        }
        if self.n < 3 {
            return Err(invalid("n", format!("must be at least 3 (got {})", self.n)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive (got {})", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid(
                "t_end",
                format!("must be positive (got {})", self.t_end),
            ));
        }
        let steps = self.t_end / self.dt;
        if steps.round() < 1.0 || (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(invalid(
                "t_end",
                format!(
                    "must be a whole multiple of dt = {} (got {})",
                    self.dt, self.t_end
                ),
            ));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride", "must be at least 1"));
        }
        if self.r.depends_on(Var::X) {
            return Err(invalid("r", "reference must depend on t only"));
        }
        if self.u0.depends_on(Var::T) {
            return Err(invalid("u0", "initial state must depend on x only"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Guaranteed rate `λ`, or `None` in heat mode.
    pub fn lambda(&self) -> Option<f64> {
        match self.mode {
            ScenarioMode::ClosedLoop => decay_rate(self.variant, self.nu, self.k).ok(),
            ScenarioMode::Heat => None,
        }
    }
}

/// One recorded time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// `∫ u dx`.
    pub u_a: f64,
    pub r: f64,
    /// `u_a - r`, from the plant field.
    pub e: f64,
    /// Envelope `‖u₀ - r(0)‖ e^{-λt/2}`; NaN when no rate applies.
    pub bound: f64,
    pub norm_uhat: f64,
    /// `∫ U dx - r(t)`.
    pub mean_u_residual: f64,
    /// `‖u - (û + U)‖∞`.
    pub superposition_residual: f64,
}

/// A worst-case value and when it happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worst {
    pub value: f64,
    pub t: f64,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: f64::NEG_INFINITY,
            t: 0.0,
        }
    }

    fn update(&mut self, value: f64, t: f64) {
        if value > self.value || self.value == f64::NEG_INFINITY {
            self.value = value;
            self.t = t;
        }
    }
}

/// Worst cases tracked at every step, not only at samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitors {
    /// `max(|e| - bound)`, unset without a rate.
    pub bound_excess: Option<Worst>,
    pub mean_u: Worst,
    /// Relative superposition residual.
    pub superposition: Worst,
    /// `max(‖û(t+dt)‖ - ‖û(t)‖)`.
    pub energy_increase: Worst,
    /// `max ‖û(t)‖ / (‖û(0)‖ e^{-λt/2})`, unset without a rate or for `û(0) = 0`.
    pub envelope_ratio: Option<Worst>,
    /// `max ‖û - exact‖∞`.
    pub exact_error: Option<Worst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub uhat: Field,
    pub regulator: Field,
    pub plant: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    BlowUp { t: f64, message: String },
    IntegrationFailure { t: f64, message: String },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::BlowUp { t, message } => write!(f, "blow-up at t={t}: {message}"),
            Termination::IntegrationFailure { t, message } => {
                write!(f, "integration failure at t={t}: {message}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: String,
    pub variant: ControllerVariant,
    pub mode: ScenarioMode,
    pub n: usize,
    pub dt: f64,
    pub lambda: Option<f64>,
    /// `‖u₀ - r(0)‖`.
    pub norm0: f64,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub monitors: Monitors,
    pub steps_completed: usize,
    pub status: Termination,
}

impl RunRecord {
    /// Diagnostic only: decay rate fitted to `‖û(t)‖` by least squares on a
    /// log scale over the first half of the run, reported as `-2 × slope` so
    /// it is comparable with `λ`.
    pub fn fitted_rate(&self) -> Option<f64> {
        let t_half = self.samples.last()?.t / 2.0;
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| s.t <= t_half && s.norm_uhat > 0.0)
            .map(|s| (s.t, s.norm_uhat.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        (sxx > 0.0).then(|| -2.0 * sxy / sxx)
    }

    /// Largest `|e(t)|` over samples with `t >= t_from`.
    pub fn max_abs_error_after(&self, t_from: f64) -> Option<f64> {
        self.samples
            .iter()
            .filter(|s| s.t >= t_from)
            .map(|s| s.e.abs())
            .reduce(f64::max)
    }
}

/// Runs the three systems in lockstep from `û = u₀ - r(0)`, `U = r(0)`,
/// `u = u₀` to `t_end`.
///
/// Failures during stepping end the run early; the record keeps everything
/// up to the failure and carries the failure time in its status.
pub fn run_closed_loop(scenario: &Scenario) -> Result<RunRecord, ScenarioError> {
    scenario.validate()?;
    let grid = Grid::new(scenario.n).map_err(|e| invalid("n", e.to_string()))?;
    let lambda = scenario.lambda();
    let dynamics = Dynamics {
        grid,
        variant: scenario.variant,
        k: scenario.k,
        nu: scenario.nu,
        dt: scenario.dt,
        coeff_a: scenario.a.clone(),
        dist: scenario.ud.clone(),
        r_prime: scenario.r.differentiate_t(),
        coupling: scenario.plant_coupling,
    };

    let mut record = RunRecord {
        scenario: scenario.name.clone(),
        variant: scenario.variant,
        mode: scenario.mode,
        n: scenario.n,
        dt: scenario.dt,
        lambda,
        norm0: 0.0,
        samples: Vec::new(),
        snapshots: Vec::new(),
        monitors: Monitors {
            bound_excess: lambda.map(|_| Worst::new()),
            mean_u: Worst::new(),
            superposition: Worst::new(),
            energy_increase: Worst::new(),
            envelope_ratio: None,
            exact_error: scenario.exact_uhat.as_ref().map(|_| Worst::new()),
        },
        steps_completed: 0,
        status: Termination::Completed,
    };

    let setup = || -> Result<(Field, f64), crate::exprlang::EvalError> {
        Ok((
            grid.try_sample(|x| scenario.u0.eval(x, 0.0))?,
            scenario.r.eval(0.0, 0.0)?,
        ))
    };
    let (u0, r0) = match setup() {
        Ok(v) => v,
        Err(e) => {
            record.status = Termination::IntegrationFailure {
                t: 0.0,
                message: e.to_string(),
            };
            return Ok(record);
        }
    };
    let mut state = SystemState::initial(&grid, &u0, r0);
    let norm0 = grid.l2_norm(&state.uhat);
    record.norm0 = norm0;
    if lambda.is_some() && norm0 > 0.0 {
        record.monitors.envelope_ratio = Some(Worst::new());
    }

    let steps = scenario.steps();
    let mut prev_norm = norm0;
    let monitor = |state: &SystemState, record: &mut RunRecord, prev_norm: f64| {
        let t = state.t;
        let r = scenario.r.eval(0.0, t)?;
        let u_a = grid.trapezoid(&state.plant);
        let e = u_a - r;
        let norm_uhat = grid.l2_norm(&state.uhat);
        let mean_u_residual = grid.trapezoid(&state.regulator) - r;
        let sup = state.superposition_residual();
        let bound = lambda.map_or(f64::NAN, |l| tracking_bound(t, norm0, l));
        let m = &mut record.monitors;
        m.mean_u.update(mean_u_residual.abs(), t);
        m.superposition
            .update(sup / state.plant.max_abs().max(1.0), t);
        if state.step > 0 {
            m.energy_increase.update(norm_uhat - prev_norm, t);
        }
        if let Some(w) = m.bound_excess.as_mut() {
            w.update(e.abs() - bound, t);
        }
        if let (Some(w), Some(l)) = (m.envelope_ratio.as_mut(), lambda) {
            w.update(norm_uhat / tracking_bound(t, norm0, l), t);
        }
        if let (Some(w), Some(exact)) = (m.exact_error.as_mut(), scenario.exact_uhat.as_ref()) {
            let ex = grid.try_sample(|x| exact.eval(x, t))?;
            w.update((&state.uhat - &ex).max_abs(), t);
        }
        let sample = Sample {
            t,
            u_a,
            r,
            e,
            bound,
            norm_uhat,
            mean_u_residual,
            superposition_residual: sup,
        };
        Ok::<_, crate::exprlang::EvalError>((sample, norm_uhat))
    };

    let mut pending_snaps: Vec<f64> = scenario.snapshot_times.clone();
    pending_snaps.sort_by(f64::total_cmp);
    let mut take_snapshots = |state: &SystemState, record: &mut RunRecord| {
        while let Some(&ts) = pending_snaps.first() {
            if ts > state.t + 0.5 * scenario.dt {
                break;
            }
            pending_snaps.remove(0);
            if (ts - state.t).abs() <= 0.5 * scenario.dt {
                record.snapshots.push(Snapshot {
                    t: state.t,
                    uhat: state.uhat.clone(),
                    regulator: state.regulator.clone(),
                    plant: state.plant.clone(),
                });
            }
        }
    };

    for step in 0..=steps {
        if step > 0 {
            if let Err(err) = dynamics.advance(&mut state) {
                let t = state.t + scenario.dt;
                record.status = match err {
                    DynamicsError::BlowUp { .. } => Termination::BlowUp {
                        t,
                        message: err.to_string(),
                    },
                    _ => Termination::IntegrationFailure {
                        t,
                        message: err.to_string(),
                    },
                };
                return Ok(record);
            }
            record.steps_completed = step;
        }
        match monitor(&state, &mut record, prev_norm) {
            Ok((sample, norm)) => {
                prev_norm = norm;
                if step % scenario.sample_stride == 0 || step == steps {
                    record.samples.push(sample);
                }
            }
            Err(e) => {
                record.status = Termination::IntegrationFailure {
                    t: state.t,
                    message: e.to_string(),
                };
                return Ok(record);
            }
        }
        take_snapshots(&state, &mut record);
    }
    Ok(record)
}

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value, compared against `tolerance`.
    pub worst: f64,
    pub worst_t: f64,
    pub tolerance: f64,
    /// Set when the check does not apply to this run.
    pub skipped: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub checks: Vec<Check>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        match self.skipped {
            Some(why) => write!(f, "{verdict} {:<16} skipped ({why})", self.name),
            None => write!(
                f,
                "{verdict} {:<16} worst={:.6e} at t={:.4} tol={:.3e}",
                self.name, self.worst, self.worst_t, self.tolerance
            ),
        }
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn check(name: &'static str, w: Option<Worst>, tol: f64, why: &'static str) -> Check {
    match w {
        Some(w) => Check {
            name,
            passed: w.value <= tol,
            worst: w.value,
            worst_t: w.t,
            tolerance: tol,
            skipped: None,
        },
        None => Check {
            name,
            passed: true,
            worst: 0.0,
            worst_t: 0.0,
            tolerance: tol,
            skipped: Some(why),
        },
    }
}

/// Evaluates every monitored invariant of a run against `tol`. Never fails;
/// an incomplete run fails the `completed` check.
pub fn check_invariants(record: &RunRecord, tol: &Tolerances) -> InvariantReport {
    let m = &record.monitors;
    let nonempty = |w: Worst| (w.value != f64::NEG_INFINITY).then_some(w);
    let completed = record.status.is_completed();
    let mut checks = vec![Check {
        name: "completed",
        passed: completed,
        worst: if completed { 0.0 } else { 1.0 },
        worst_t: match &record.status {
            Termination::Completed => 0.0,
            Termination::BlowUp { t, .. } | Termination::IntegrationFailure { t, .. } => *t,
        },
        tolerance: 0.0,
        skipped: None,
    }];
    checks.push(check(
        "tracking_bound",
        m.bound_excess.and_then(nonempty),
        tol.bound_slack,
        "no guaranteed rate",
    ));
    checks.push(check(
        "mean_u",
        nonempty(m.mean_u),
        tol.mean_u,
        "no samples",
    ));
    checks.push(check(
        "superposition",
        nonempty(m.superposition),
        tol.superposition,
        "no samples",
    ));
    checks.push(check(
        "energy_monotone",
        nonempty(m.energy_increase),
        tol.energy_step,
        "no steps",
    ));
    checks.push(check(
        "energy_envelope",
        m.envelope_ratio.and_then(nonempty).map(|w| Worst {
            value: w.value - 1.0,
            t: w.t,
        }),
        tol.energy_envelope,
        "no guaranteed rate or zero initial state",
    ));
    if let Some(w) = m.exact_error {
        checks.push(check("exact_uhat", nonempty(w), tol.exact, "no samples"));
    }
    InvariantReport { checks }
}

/// How the time step follows the grid spacing in a refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// Keep the scenario's `dt`.
    Fixed,
    /// `dt = c · dx`.
    Linear(f64),
    /// `dt = c · dx²`.
    Quadratic(f64),
}

impl Default for DtRule {
    fn default() -> Self {
        DtRule::Linear(0.2)
    }
}

impl DtRule {
    pub fn dt(self, base: f64, dx: f64) -> f64 {
        match self {
            DtRule::Fixed => base,
            DtRule::Linear(c) => c * dx,
            DtRule::Quadratic(c) => c * dx * dx,
        }
    }
}

impl std::str::FromStr for DtRule {
    type Err = String;
    /// `fixed`, `dx/<d>`, `dx*<c>`, `dx^2/<d>` or `dx^2*<c>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "fixed" {
            return Ok(DtRule::Fixed);
        }
        let (quadratic, rest) = if let Some(r) = s.strip_prefix("dx^2") {
            (true, r)
        } else if let Some(r) = s.strip_prefix("dx") {
            (false, r)
        } else {
            return Err(format!("unrecognised dt rule `{s}`"));
        };
        let c = if rest.is_empty() {
            1.0
        } else if let Some(d) = rest.strip_prefix('/') {
            1.0 / d
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("dt rule `{s}`: {e}"))?
        } else if let Some(m) = rest.strip_prefix('*') {
            m.trim()
                .parse::<f64>()
                .map_err(|e| format!("dt rule `{s}`: {e}"))?
        } else {
            return Err(format!("unrecognised dt rule `{s}`"));
        };
        if !(c.is_finite() && c > 0.0) {
            return Err(format!("dt rule `{s}` must give a positive step"));
        }
        Ok(if quadratic {
            DtRule::Quadratic(c)
        } else {
            DtRule::Linear(c)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub mean_u: f64,
    pub superposition: f64,
    pub exact_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<Level>,
}

fn orders(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

impl ConvergenceReport {
    /// Observed orders `log₂(res_coarse / res_fine)` of the mean-U residual.
    pub fn mean_u_orders(&self) -> Vec<f64> {
        orders(&self.levels.iter().map(|l| l.mean_u).collect::<Vec<_>>())
    }

    /// Observed orders of the error against the exact stabilization state.
    pub fn exact_orders(&self) -> Option<Vec<f64>> {
        let errs: Option<Vec<f64>> = self.levels.iter().map(|l| l.exact_error).collect();
        errs.map(|e| orders(&e))
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mu = self.mean_u_orders();
        let ex = self.exact_orders();
        writeln!(
            f,
            "{:>6} {:>10} {:>10} {:>13} {:>7} {:>13} {:>13} {:>7}",
            "n", "dx", "dt", "mean_u", "order", "superpos", "exact_err", "order"
        )?;
        for (i, l) in self.levels.iter().enumerate() {
            let fmt_order = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.3}"));
            let mu_o = i.checked_sub(1).map(|j| mu[j]);
            let ex_o = i.checked_sub(1).and_then(|j| ex.as_ref().map(|e| e[j]));
            writeln!(
                f,
                "{:>6} {:>10.3e} {:>10.3e} {:>13.6e} {:>7} {:>13.6e} {:>13} {:>7}",
                l.n,
                l.dx,
                l.dt,
                l.mean_u,
                fmt_order(mu_o),
                l.superposition,
                l.exact_error
                    .map_or("-".to_string(), |e| format!("{e:.6e}")),
                fmt_order(ex_o),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StudyError {
    #[error("convergence study needs at least 3 grids, got {0}")]
    TooFewGrids(usize),
    #[error("grid {fine} does not refine grid {coarse} by a factor of 2")]
    NotNested { coarse: usize, fine: usize },
    #[error("level n={n}: {reason}")]
    LevelFailed { n: usize, reason: String },
}

/// Runs the scenario on each grid of a 2× refinement sequence (levels run
/// concurrently) and reports residuals and observed orders.
pub fn convergence_study(
    scenario: &Scenario,
    grids: &[usize],
    rule: DtRule,
) -> Result<ConvergenceReport, StudyError> {
    if grids.len() < 3 {
        return Err(StudyError::TooFewGrids(grids.len()));
    }
    for w in grids.windows(2) {
        if w[0] < 3 || w[1] < 3 || (w[1] - 1) != 2 * (w[0] - 1) || w[1] <= w[0] {
            return Err(StudyError::NotNested {
                coarse: w[0],
                fine: w[1],
            });
        }
    }
    let level_scenarios: Vec<Scenario> = grids
        .iter()
        .map(|&n| {
            let mut s = scenario.clone();
            s.n = n;
            s.dt = rule.dt(scenario.dt, 1.0 / (n - 1) as f64);
            s.snapshot_times.clear();
            s.sample_stride = usize::MAX;
            s
        })
        .collect();
    let results: Vec<Result<RunRecord, ScenarioError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = level_scenarios
            .iter()
            .map(|s| scope.spawn(move || run_closed_loop(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("refinement level panicked"))
            .collect()
    });
    let mut levels = Vec::with_capacity(grids.len());
    for (s, res) in level_scenarios.iter().zip(results) {
        let rec = res.map_err(|e| StudyError::LevelFailed {
            n: s.n,
            reason: e.to_string(),
        })?;
        if !rec.status.is_completed() {
            return Err(StudyError::LevelFailed {
                n: s.n,
                reason: rec.status.to_string(),
            });
        }
        levels.push(Level {
            n: s.n,
            dx: 1.0 / (s.n - 1) as f64,
            dt: s.dt,
            mean_u: rec.monitors.mean_u.value,
            superposition: rec.monitors.superposition.value,
            exact_error: rec.monitors.exact_error.map(|w| w.value),
        });
    }
    Ok(ConvergenceReport { levels })
}
