//! Integration of the 2D curvature flows in log coordinates: the
//! `alpha`-flow `du_i/dt = s_alpha r_i^alpha - K_i`, the modified flow with
//! a prescribed target curvature, and the generalised flow driven by an
//! area element. Includes the flow potential (a path-independent line
//! integral whose gradient is the flow field with flipped sign) and
//! residual-based convergence analysis.

use std::io::Write;

use crate::area::AreaElement;
use crate::complex::WeightedSurface;
use crate::error::{Error, Result};
use crate::ode::{self, IntegratorConfig, Method, StepDecision};
use crate::packing2d::{self, PackingMetric};

/// Divergence threshold on the log radii: beyond this the radii are
/// meaningless in double precision.
const DIVERGENCE_LOG_BOUND: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub alpha: f64,
    pub t_end: f64,
    /// Residual (sup-norm of the flow field) below which a run counts as
    /// converged.
    pub tolerance: f64,
    pub max_steps: usize,
    pub method: Method,
    pub initial_step: f64,
    /// Target curvature for the modified flow.
    pub prescribed: Option<Vec<f64>>,
    /// Area element for the generalised flow.
    pub area_element: Option<AreaElement>,
    /// Stop as soon as the residual drops below `tolerance` (default). When
    /// off, the run continues to `t_end`, which is what conservation and
    /// monotonicity studies want.
    pub stop_on_convergence: bool,
    /// Record the flow potential along the trace (extra quadrature work).
    pub record_potential: bool,
}

impl FlowConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            t_end: 100.0,
            tolerance: 1e-10,
            max_steps: 200_000,
            method: Method::Rk45 {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
            },
            initial_step: 1e-2,
            prescribed: None,
            area_element: None,
            stop_on_convergence: true,
            record_potential: true,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if !self.initial_step.is_finite() || self.initial_step <= 0.0 || self.max_steps == 0 {
            return Err(Error::Config("steps must be positive".into()));
        }
        if let Some(prescribed) = &self.prescribed {
            if prescribed.len() != n {
                return Err(Error::Config(format!(
                    "prescribed curvature has length {}, expected {}",
                    prescribed.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            method: self.method,
            initial_step: self.initial_step,
            max_steps: self.max_steps,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Final residual below the configured tolerance.
    Converged,
    /// Reached the time (or step) budget with the residual still above
    /// tolerance.
    MaxTime,
    /// The log radii left the representable region.
    Diverging,
    /// A 3D run could not complete a step inside the admissible region;
    /// the trace ends at the last valid state.
    LeftAdmissibleRegion,
}

/// Time-stamped record of one flow run.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    /// Metric snapshots `r(t)`.
    pub radii: Vec<Vec<f64>>,
    /// Sup-norm of the flow field at each sample.
    pub residuals: Vec<f64>,
    /// Conserved quantity: `sum_i u_i` for the 2D flows, `||r||_2^2` in 3D.
    pub conserved: Vec<f64>,
    /// Flow potential along the run (2D; NaN where no potential exists) or
    /// the scale-invariant functional (3D).
    pub potentials: Vec<f64>,
    pub verdict: Verdict,
    /// Least-squares slope of the log residual over the final half of the
    /// samples, per sample.
    pub rate: f64,
    /// Scale factor divided out of the initial metric (1 when none).
    pub normalization: f64,
    pub conserved_name: &'static str,
}

impl FlowTrace {
    pub fn final_radii(&self) -> &[f64] {
        self.radii.last().expect("trace is never empty")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("trace is never empty")
    }

    /// CSV export: `t, r_1..r_N, residual_inf, <conserved>, potential`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let n = self.radii.first().map(|r| r.len()).unwrap_or(0);
        write!(out, "t")?;
        for i in 1..=n {
            write!(out, ",r_{i}")?;
        }
        writeln!(out, ",residual_inf,{},potential", self.conserved_name)?;
        for s in 0..self.times.len() {
            write!(out, "{}", self.times[s])?;
            for value in &self.radii[s] {
                write!(out, ",{value}")?;
            }
            writeln!(
                out,
                ",{},{},{}",
                self.residuals[s], self.conserved[s], self.potentials[s]
            )?;
        }
        Ok(())
    }
}

/// Verdict and convergence rate from a residual history: `Converged` iff
/// the final residual is below `tol`; the rate is the least-squares slope
/// of the log residual over the final half of the samples (negative for
/// exponentially convergent runs).
pub fn check_convergence_residuals(residuals: &[f64], tol: f64) -> (Verdict, f64) {
    let verdict = match residuals.last() {
        Some(&last) if last < tol => Verdict::Converged,
        _ => Verdict::MaxTime,
    };
    let n = residuals.len();
    if n < 2 {
        return (verdict, 0.0);
    }
    let start = n / 2;
    let points: Vec<(f64, f64)> = residuals[start..]
        .iter()
        .enumerate()
        .map(|(idx, &r)| (idx as f64, r.max(1e-300).ln()))
        .collect();
    if points.len() < 2 {
        return (verdict, 0.0);
    }
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    let rate = if denom.abs() < 1e-300 {
        0.0
    } else {
        (m * sxy - sx * sy) / denom
    };
    (verdict, rate)
}

pub fn check_convergence(trace: &FlowTrace, tol: f64) -> (Verdict, f64) {
    check_convergence_residuals(&trace.residuals, tol)
}

/// The three 2D flow fields share everything but the drive term.
enum Drive<'a> {
    /// `s_alpha r^alpha`
    ConstantTarget,
    /// `R_bar r^alpha`
    Prescribed(&'a [f64]),
    /// `(2 pi chi / sum A) A`
    Area(AreaElement),
}

fn flow_field_2d(
    surface: &WeightedSurface,
    alpha: f64,
    drive: &Drive,
    u: &[f64],
    du: &mut [f64],
) -> Result<()> {
    let metric = PackingMetric::from_log(u);
    let k = packing2d::gauss_curvature(surface, &metric)?;
    match drive {
        Drive::ConstantTarget => {
            let s = packing2d::s_alpha(surface, &metric, alpha);
            for i in 0..u.len() {
                du[i] = s * metric.radius(i).powf(alpha) - k[i];
            }
        }
        Drive::Prescribed(target) => {
            for i in 0..u.len() {
                du[i] = target[i] * metric.radius(i).powf(alpha) - k[i];
            }
        }
        Drive::Area(selector) => {
            let a = selector.evaluate(surface, &metric)?;
            let total: f64 = a.iter().sum();
            let s = 2.0 * std::f64::consts::PI * surface.euler_characteristic() as f64 / total;
            for i in 0..u.len() {
                du[i] = s * a[i] - k[i];
            }
        }
    }
    Ok(())
}

/// Gradient of the flow potential (`-du/dt` as a function of `u`), used by
/// the potential quadrature. Only the plain and prescribed flows admit one.
fn potential_gradient(
    surface: &WeightedSurface,
    alpha: f64,
    prescribed: Option<&[f64]>,
    u: &[f64],
) -> Result<Vec<f64>> {
    let metric = PackingMetric::from_log(u);
    let k = packing2d::gauss_curvature(surface, &metric)?;
    let target: Vec<f64> = match prescribed {
        None => {
            let s = packing2d::s_alpha(surface, &metric, alpha);
            metric.radii().iter().map(|r| s * r.powf(alpha)).collect()
        }
        Some(rbar) => rbar
            .iter()
            .zip(metric.radii())
            .map(|(&t, &r)| t * r.powf(alpha))
            .collect(),
    };
    Ok(k.iter().zip(&target).map(|(&ki, &ti)| ki - ti).collect())
}

// 7-point Gauss--Legendre nodes and weights on [-1, 1].
const GL7_NODES: [f64; 7] = [
    -0.9491079123427585,
    -0.7415311855993945,
    -0.4058451513773972,
    0.0,
    0.4058451513773972,
    0.7415311855993945,
    0.9491079123427585,
];
const GL7_WEIGHTS: [f64; 7] = [
    0.1294849661688697,
    0.2797053914892766,
    0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892766,
    0.1294849661688697,
];

/// Integrates `sum_i g_i(u(t)) dot (to - from)_i` along the straight
/// segment from `from` to `to`, with panel halving until the value settles
/// below `tol`.
fn line_integral<G>(g: G, from: &[f64], to: &[f64], tol: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = from.len();
    let direction: Vec<f64> = to.iter().zip(from).map(|(&b, &a)| b - a).collect();
    if direction.iter().all(|&d| d == 0.0) {
        return Ok(0.0);
    }
    let mut point = vec![0.0; n];
    let mut eval = |t: f64| -> Result<f64> {
        for i in 0..n {
            point[i] = from[i] + t * direction[i];
        }
        let grad = g(&point)?;
        Ok(grad.iter().zip(&direction).map(|(&gi, &di)| gi * di).sum())
    };

    let mut previous = f64::NAN;
    for depth in 0..20u32 {
        let panels = 1usize << depth;
        let width = 1.0 / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * width;
            for (node, weight) in GL7_NODES.iter().zip(&GL7_WEIGHTS) {
                total += weight * eval(mid + 0.5 * width * node)? * 0.5 * width;
            }
        }
        if depth > 0 && (total - previous).abs() < tol {
            return Ok(total);
        }
        previous = total;
    }
    Err(Error::QuadratureFailure)
}

/// Flow potential `F(u)`: the line integral of `K - s_alpha r^alpha` from
/// `u_base` to `u` along the straight segment. Path independence (the
/// integrand is a closed form) makes the segment choice immaterial;
/// `F(u_base) = 0` and the gradient of `F` is the integrand.
pub fn ricci_potential(
    surface: &WeightedSurface,
    u: &[f64],
    u_base: &[f64],
    alpha: f64,
) -> Result<f64> {
    line_integral(
        |point| potential_gradient(surface, alpha, None, point),
        u_base,
        u,
        1e-10,
    )
}

/// Potential of the modified flow (`K - R_bar r^alpha` integrand).
pub fn modified_potential(
    surface: &WeightedSurface,
    u: &[f64],
    u_base: &[f64],
    alpha: f64,
    prescribed: &[f64],
) -> Result<f64> {
    line_integral(
        |point| potential_gradient(surface, alpha, Some(prescribed), point),
        u_base,
        u,
        1e-10,
    )
}

fn run_flow(
    surface: &WeightedSurface,
    r0: &PackingMetric,
    cfg: &FlowConfig,
    drive: Drive,
    normalize: bool,
) -> Result<FlowTrace> {
    cfg.validate(r0.len())?;
    let (start, normalization) = if normalize {
        r0.normalized_product_one()
    } else {
        (r0.clone(), 1.0)
    };
    let u0 = start.log_radii();

    let mut field_error: Option<Error> = None;
    let mut diverged = false;
    let tolerance = cfg.tolerance;
    let stop_on_convergence = cfg.stop_on_convergence;

    let result = ode::integrate(
        |_t, u, du| match flow_field_2d(surface, cfg.alpha, &drive, u, du) {
            Ok(()) => true,
            Err(e) => {
                field_error = Some(e);
                false
            }
        },
        &u0,
        cfg.t_end,
        &cfg.integrator(),
        |_t, _u| true,
        |_t, u, du| {
            let residual = du.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
            let log_bound = u.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            if log_bound > DIVERGENCE_LOG_BOUND {
                diverged = true;
                return StepDecision::Stop;
            }
            if stop_on_convergence && residual < tolerance {
                return StepDecision::Stop;
            }
            StepDecision::Continue
        },
    );

    let (trajectory, forced_verdict) = match result {
        Ok(t) => (t, None),
        Err(Error::MaxStepsExceeded { trajectory, .. }) => (*trajectory, Some(Verdict::MaxTime)),
        Err(Error::GuardRejectionAtMinStep { trajectory, .. }) => match field_error {
            // Radii spread past what doubles can represent: the triangle
            // margins vanish long before the log-radius bound trips. For a
            // circle packing the inequality holds strictly in exact
            // arithmetic, so this is the divergence signature.
            Some(Error::DegenerateTriangle { .. }) => (*trajectory, Some(Verdict::Diverging)),
            Some(cause) => return Err(cause),
            None => {
                return Err(Error::GuardRejectionAtMinStep {
                    t: *trajectory.times.last().unwrap_or(&0.0),
                    trajectory,
                })
            }
        },
        Err(other) => {
            if let Some(cause) = field_error {
                return Err(cause);
            }
            return Err(other);
        }
    };

    let samples = trajectory.times.len();
    let radii: Vec<Vec<f64>> = trajectory
        .states
        .iter()
        .map(|u| u.iter().map(|&x| x.exp()).collect())
        .collect();
    let residuals: Vec<f64> = trajectory
        .derivatives
        .iter()
        .map(|du| du.iter().fold(0.0f64, |m, &d| m.max(d.abs())))
        .collect();
    let conserved: Vec<f64> = trajectory.states.iter().map(|u| u.iter().sum()).collect();

    let (mut verdict, rate) = check_convergence_residuals(&residuals, cfg.tolerance);
    if diverged {
        verdict = Verdict::Diverging;
    } else if let Some(forced) = forced_verdict {
        verdict = forced;
    }

    // Potential along the run, accumulated over the sample chords; the
    // integrand is closed, so chord sums agree with the straight-segment
    // value from the start state. Skipped on diverging runs, whose late
    // states sit at the edge of what doubles represent.
    let prescribed_ref = cfg.prescribed.as_deref();
    let has_potential = matches!(drive, Drive::ConstantTarget | Drive::Prescribed(_))
        && verdict != Verdict::Diverging;
    let mut potentials = vec![f64::NAN; samples];
    if has_potential && cfg.record_potential {
        potentials[0] = 0.0;
        let g = |point: &[f64]| potential_gradient(surface, cfg.alpha, prescribed_ref, point);
        for s in 1..samples {
            let increment =
                line_integral(g, &trajectory.states[s - 1], &trajectory.states[s], 1e-12)?;
            potentials[s] = potentials[s - 1] + increment;
        }
    }

    Ok(FlowTrace {
        times: trajectory.times,
        radii,
        residuals,
        conserved,
        potentials,
        verdict,
        rate,
        normalization,
        conserved_name: "sum_u",
    })
}

/// Integrates `du_i/dt = s_alpha r_i^alpha - K_i`. The initial metric is
/// rescaled to the product-one hypersurface first (the flow preserves it);
/// the applied factor is recorded on the trace.
pub fn integrate_alpha_flow(
    surface: &WeightedSurface,
    r0: &PackingMetric,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    run_flow(surface, r0, cfg, Drive::ConstantTarget, true)
}

/// Integrates the modified flow `du_i/dt = R_bar_i r_i^alpha - K_i` toward
/// a prescribed curvature `R_bar` (required in the config). No rescaling is
/// applied: the target metric fixes the scale.
pub fn integrate_modified_flow(
    surface: &WeightedSurface,
    r0: &PackingMetric,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    let prescribed = cfg
        .prescribed
        .clone()
        .ok_or_else(|| Error::Config("modified flow needs a prescribed curvature".into()))?;
    let drive_holder = prescribed;
    run_flow(surface, r0, cfg, Drive::Prescribed(&drive_holder), false)
}

/// Integrates the generalised flow `du_i/dt = (2 pi chi / sum A) A_i - K_i`
/// for the configured area element.
pub fn integrate_a_flow(
    surface: &WeightedSurface,
    r0: &PackingMetric,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    let selector = cfg
        .area_element
        .ok_or_else(|| Error::Config("A-flow needs an area element selector".into()))?;
    // Fail fast if the selector cannot be evaluated at the start.
    selector.evaluate(surface, r0)?;
    run_flow(surface, r0, cfg, Drive::Area(selector), true)
}
