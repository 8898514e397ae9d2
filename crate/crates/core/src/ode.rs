//! Adaptive explicit ODE integration with step-acceptance hooks.
//!
//! The workhorse is the Dormand–Prince 4(5) embedded pair with FSAL and a
//! PI step controller. A *guard* is consulted on every trial state before a
//! step is accepted (used by the 3D flows to stay inside the admissible
//! region); a *monitor* sees every accepted state and may stop the run
//! (used for residual-based convergence and divergence detection). A fixed
//! step classical RK4 is available for convergence-order studies.
//!
//! Integration is fully deterministic: identical inputs produce bitwise
//! identical trajectories.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Dormand–Prince 4(5) with the given absolute/relative error control.
    Rk45 { abs_tol: f64, rel_tol: f64 },
    /// Classical fixed-step Runge–Kutta of order 4.
    Rk4Fixed { step: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub method: Method,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45 {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
            },
            initial_step: 1e-2,
            min_step: 1e-13,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            Method::Rk45 { abs_tol, rel_tol } => {
                abs_tol.is_finite() && abs_tol > 0.0 && rel_tol.is_finite() && rel_tol > 0.0
            }
            Method::Rk4Fixed { step } => step > 0.0,
        };
        let steps_ok = self.initial_step.is_finite()
            && self.initial_step > 0.0
            && self.min_step > 0.0
            && self.max_steps > 0;
        if !ok || !steps_ok {
            return Err(Error::Config(
                "integrator tolerances and steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// What the monitor wants after seeing an accepted state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDecision {
    Continue,
    Stop,
}

/// Why an integration returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    ReachedEnd,
    StoppedByMonitor,
}

/// Accepted states of one integration, including the derivative at each
/// sample (the RHS evaluated at the accepted state).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    pub outcome: Outcome,
    pub steps_taken: usize,
}

const SAFETY: f64 = 0.9;
const GROWTH_MIN: f64 = 0.2;
const GROWTH_MAX: f64 = 5.0;
const PI_BETA: f64 = 0.04;
const PI_EXPO: f64 = 0.2 - 0.75 * PI_BETA;
const MAX_GUARD_HALVINGS: u32 = 40;

// Dormand–Prince 4(5) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th and 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dy/dt = field(t, y)` from `t = 0` to `t_end`.
///
/// * `field` writes the derivative into its output slice and returns `false`
///   when the state is un-evaluable (the trial step is then rejected);
/// * `guard` is consulted on every trial state; a rejected trial halves the
///   step, and `GuardRejectionAtMinStep` is raised after 40 halvings or when
///   the step floor is hit (the error carries the partial trajectory);
/// * `monitor` sees each accepted `(t, y, dy)` and may stop the run.
pub fn integrate<F, G, M>(
    mut field: F,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    mut guard: G,
    mut monitor: M,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
    G: FnMut(f64, &[f64]) -> bool,
    M: FnMut(f64, &[f64], &[f64]) -> StepDecision,
{
    cfg.validate()?;
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::Config("t_end must be positive".into()));
    }
    let n = y0.len();
    let mut trajectory = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        derivatives: Vec::new(),
        outcome: Outcome::ReachedEnd,
        steps_taken: 0,
    };

    let y = y0.to_vec();
    let t = 0.0;
    if !guard(t, &y) {
        return Err(Error::GuardRejectionAtMinStep {
            t,
            trajectory: Box::new(trajectory),
        });
    }
    let mut dy = vec![0.0; n];
    if !field(t, &y, &mut dy) {
        return Err(Error::GuardRejectionAtMinStep {
            t,
            trajectory: Box::new(trajectory),
        });
    }
    trajectory.times.push(t);
    trajectory.states.push(y.clone());
    trajectory.derivatives.push(dy.clone());
    if monitor(t, &y, &dy) == StepDecision::Stop {
        trajectory.outcome = Outcome::StoppedByMonitor;
        return Ok(trajectory);
    }

    match cfg.method {
        Method::Rk4Fixed { step } => integrate_rk4_fixed(
            &mut field,
            &mut guard,
            &mut monitor,
            t_end,
            step,
            cfg.max_steps,
            trajectory,
            y,
        ),
        Method::Rk45 { abs_tol, rel_tol } => integrate_rk45(
            &mut field,
            &mut guard,
            &mut monitor,
            t_end,
            cfg,
            abs_tol,
            rel_tol,
            trajectory,
            y,
            dy,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn integrate_rk4_fixed<F, G, M>(
    field: &mut F,
    guard: &mut G,
    monitor: &mut M,
    t_end: f64,
    step: f64,
    max_steps: usize,
    mut trajectory: Trajectory,
    mut y: Vec<f64>,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
    G: FnMut(f64, &[f64]) -> bool,
    M: FnMut(f64, &[f64], &[f64]) -> StepDecision,
{
    let n = y.len();
    let mut t = 0.0;
    let mut k = vec![vec![0.0; n]; 4];
    let mut scratch = vec![0.0; n];
    while t < t_end {
        if trajectory.steps_taken >= max_steps {
            return Err(Error::MaxStepsExceeded {
                t,
                trajectory: Box::new(trajectory),
            });
        }
        let h = step.min(t_end - t);
        let evals: [(f64, f64); 3] = [(0.5 * h, 0.5 * h), (0.5 * h, 0.5 * h), (h, h)];
        if !field(t, &y, &mut k[0]) {
            return Err(Error::GuardRejectionAtMinStep {
                t,
                trajectory: Box::new(trajectory),
            });
        }
        for (stage, &(dt, w)) in evals.iter().enumerate() {
            for i in 0..n {
                scratch[i] = y[i] + w * k[stage][i];
            }
            let (head, tail) = k.split_at_mut(stage + 1);
            let _ = head;
            if !field(t + dt, &scratch, &mut tail[0]) {
                return Err(Error::GuardRejectionAtMinStep {
                    t,
                    trajectory: Box::new(trajectory),
                });
            }
        }
        let mut y_new = y.clone();
        for i in 0..n {
            y_new[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        let t_new = t + h;
        if !guard(t_new, &y_new) {
            return Err(Error::GuardRejectionAtMinStep {
                t,
                trajectory: Box::new(trajectory),
            });
        }
        let mut dy_new = vec![0.0; n];
        if !field(t_new, &y_new, &mut dy_new) {
            return Err(Error::GuardRejectionAtMinStep {
                t: t_new,
                trajectory: Box::new(trajectory),
            });
        }
        y = y_new;
        t = t_new;
        trajectory.steps_taken += 1;
        trajectory.times.push(t);
        trajectory.states.push(y.clone());
        trajectory.derivatives.push(dy_new.clone());
        if monitor(t, &y, &dy_new) == StepDecision::Stop {
            trajectory.outcome = Outcome::StoppedByMonitor;
            return Ok(trajectory);
        }
    }
    Ok(trajectory)
}

#[allow(clippy::too_many_arguments)]
fn integrate_rk45<F, G, M>(
    field: &mut F,
    guard: &mut G,
    monitor: &mut M,
    t_end: f64,
    cfg: &IntegratorConfig,
    abs_tol: f64,
    rel_tol: f64,
    mut trajectory: Trajectory,
    mut y: Vec<f64>,
    mut k1: Vec<f64>,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
    G: FnMut(f64, &[f64]) -> bool,
    M: FnMut(f64, &[f64], &[f64]) -> StepDecision,
{
    let n = y.len();
    let mut t = 0.0;
    let mut h = cfg.initial_step.min(cfg.max_step).min(t_end);
    let mut err_prev: f64 = 1.0;
    let mut guard_halvings = 0u32;
    let mut k = vec![vec![0.0; n]; 7];
    let mut scratch = vec![0.0; n];

    while t < t_end {
        if trajectory.steps_taken >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded {
                t,
                trajectory: Box::new(trajectory),
            });
        }
        h = h.min(t_end - t).min(cfg.max_step);
        if h < cfg.min_step {
            return Err(Error::GuardRejectionAtMinStep {
                t,
                trajectory: Box::new(trajectory),
            });
        }

        k[0].copy_from_slice(&k1);
        let mut stage_failed = false;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                scratch[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            if !field(t + C[s] * h, &scratch, &mut tail[0]) {
                stage_failed = true;
                break;
            }
        }
        // After the loop `scratch` holds the 5th-order solution (stage 7
        // is evaluated at the b-weight combination, FSAL).
        if !stage_failed && !guard(t + h, &scratch) {
            stage_failed = true;
        }
        if stage_failed {
            guard_halvings += 1;
            if guard_halvings > MAX_GUARD_HALVINGS {
                return Err(Error::GuardRejectionAtMinStep {
                    t,
                    trajectory: Box::new(trajectory),
                });
            }
            h *= 0.5;
            continue;
        }

        // Embedded error estimate.
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = abs_tol + rel_tol * y[i].abs().max(scratch[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            // Accept.
            guard_halvings = 0;
            let t_new = t + h;
            y.copy_from_slice(&scratch);
            k1.copy_from_slice(&k[6]); // FSAL
            t = t_new;
            trajectory.steps_taken += 1;
            trajectory.times.push(t);
            trajectory.states.push(y.clone());
            trajectory.derivatives.push(k1.clone());
            if monitor(t, &y, &k1) == StepDecision::Stop {
                trajectory.outcome = Outcome::StoppedByMonitor;
                return Ok(trajectory);
            }
            let err_clamped = err.max(1e-10);
            let factor = SAFETY * err_clamped.powf(-PI_EXPO) * err_prev.powf(PI_BETA);
            err_prev = err_clamped;
            h *= factor.clamp(GROWTH_MIN, GROWTH_MAX);
        } else {
            let factor = (SAFETY * err.powf(-0.2)).clamp(GROWTH_MIN, 1.0);
            h *= factor;
        }
    }
    Ok(trajectory)
}

/// Convenience wrapper: no guard, no early stop.
pub fn integrate_plain<F>(
    field: F,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> bool,
{
    integrate(
        field,
        y0,
        t_end,
        cfg,
        |_, _| true,
        |_, _, _| StepDecision::Continue,
    )
}
