//! 3D curvature flows on sphere packing metrics: the scale-invariant
//! functional `Q_alpha = S / ||r||_{alpha+1}`, the flow
//! `dr_i/dt = s_alpha r_i^alpha - K_i` and its gradient-flow companion,
//! spectral stability analysis of constant-curvature metrics, and a
//! multistart estimate of the infimum of `Q_alpha`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::complex::TetComplex;
use crate::error::{Error, Result};
use crate::flow2d::{check_convergence_residuals, FlowConfig, FlowTrace, Verdict};
use crate::ode::{self, StepDecision};
use crate::packing3d::{self, sample_admissible_metric};
use crate::spectral;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const ALPHA_EXCLUSION_TOL: f64 = 1e-12;
const CONSTANT_CURVATURE_TOL: f64 = 1e-8;

fn check_alpha(alpha: f64) -> Result<()> {
    if (alpha + 1.0).abs() < ALPHA_EXCLUSION_TOL {
        return Err(Error::AlphaExcluded);
    }
    Ok(())
}

/// `sum_i r_i^{alpha+1}`.
pub fn norm_power_sum(r: &[f64], alpha: f64) -> f64 {
    r.iter().map(|ri| ri.powf(alpha + 1.0)).sum()
}

/// `||r||_{alpha+1} = (sum_i r_i^{alpha+1})^{1/(alpha+1)}` (needs
/// `alpha != -1`).
pub fn norm_alpha_plus_one(r: &[f64], alpha: f64) -> f64 {
    norm_power_sum(r, alpha).powf(1.0 / (alpha + 1.0))
}

/// Constant-curvature target `s_alpha = S / sum_i r_i^{alpha+1}`.
pub fn s_alpha_3d(complex: &TetComplex, r: &[f64], alpha: f64) -> Result<f64> {
    let s = packing3d::ehr_functional(complex, r)?;
    Ok(s / norm_power_sum(r, alpha))
}

/// Scale-invariant functional `Q_alpha(r) = S / ||r||_{alpha+1}`;
/// critical points are exactly the constant `alpha`-curvature metrics.
pub fn yamabe_functional(complex: &TetComplex, r: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = packing3d::ehr_functional(complex, r)?;
    Ok(s / norm_alpha_plus_one(r, alpha))
}

/// Values of the flow and functional machinery at one metric.
#[derive(Debug, Clone)]
pub struct YamabeState {
    pub alpha: f64,
    pub q_alpha: f64,
    pub s_alpha: f64,
    /// `(K - s_alpha r^alpha) / ||r||_{alpha+1}`.
    pub gradient: Vec<f64>,
    /// Flow field `Gamma = s_alpha r^alpha - K`.
    pub gamma: Vec<f64>,
    /// Jacobian of `Gamma` at this metric (full formula, not the
    /// constant-curvature reduction).
    pub d_gamma: DMatrix<f64>,
}

impl YamabeState {
    pub fn compute(complex: &TetComplex, r: &[f64], alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let k = packing3d::cr_curvature(complex, r)?;
        let ehr: f64 = k.iter().zip(r).map(|(&ki, &ri)| ki * ri).sum();
        let power_sum = norm_power_sum(r, alpha);
        let s_alpha = ehr / power_sum;
        let norm = power_sum.powf(1.0 / (alpha + 1.0));
        let q_alpha = ehr / norm;

        let r_alpha: Vec<f64> = r.iter().map(|ri| ri.powf(alpha)).collect();
        let gamma: Vec<f64> = r_alpha
            .iter()
            .zip(&k)
            .map(|(&ra, &ki)| s_alpha * ra - ki)
            .collect();
        let gradient: Vec<f64> = gamma.iter().map(|&g| -g / norm).collect();

        let lambda = packing3d::curvature_jacobian_r(complex, r)?;
        let n = r.len();
        let mut d_gamma = -lambda.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { r[i].powf(alpha - 1.0) } else { 0.0 };
                d_gamma[(i, j)] += alpha * s_alpha * (diag - r_alpha[i] * r_alpha[j] / power_sum);
                d_gamma[(i, j)] -= r_alpha[i] * (k[j] - s_alpha * r_alpha[j]) / power_sum;
            }
        }
        Ok(Self {
            alpha,
            q_alpha,
            s_alpha,
            gradient,
            gamma,
            d_gamma,
        })
    }
}

fn flow_field_3d(
    complex: &TetComplex,
    alpha: f64,
    normalize_by_norm: bool,
    r: &[f64],
    dr: &mut [f64],
) -> Result<()> {
    let k = packing3d::cr_curvature(complex, r)?;
    let ehr: f64 = k.iter().zip(r).map(|(&ki, &ri)| ki * ri).sum();
    let power_sum = norm_power_sum(r, alpha);
    let s = ehr / power_sum;
    let scale = if normalize_by_norm {
        1.0 / power_sum.powf(1.0 / (alpha + 1.0))
    } else {
        1.0
    };
    for i in 0..r.len() {
        dr[i] = scale * (s * r[i].powf(alpha) - k[i]);
    }
    Ok(())
}

fn run_flow_3d(
    complex: &TetComplex,
    r0: &[f64],
    cfg: &FlowConfig,
    gradient_flow: bool,
) -> Result<FlowTrace> {
    if gradient_flow {
        check_alpha(cfg.alpha)?;
    }
    let report = packing3d::admissible_metric_check(complex, r0)?;
    if !report.admissible {
        return Err(Error::InadmissibleMetric {
            offending: report.offending,
        });
    }
    let normalization = r0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let start: Vec<f64> = r0.iter().map(|x| x / normalization).collect();

    let integrator = ode::IntegratorConfig {
        method: cfg.method,
        initial_step: cfg.initial_step,
        max_steps: cfg.max_steps,
        ..Default::default()
    };
    if !cfg.t_end.is_finite()
        || cfg.t_end <= 0.0
        || !cfg.tolerance.is_finite()
        || cfg.tolerance <= 0.0
    {
        return Err(Error::Config("t_end and tolerance must be positive".into()));
    }

    let tolerance = cfg.tolerance;
    let stop_on_convergence = cfg.stop_on_convergence;
    let result = ode::integrate(
        |_t, r, dr| flow_field_3d(complex, cfg.alpha, gradient_flow, r, dr).is_ok(),
        &start,
        cfg.t_end,
        &integrator,
        |_t, r| packing3d::is_admissible(complex, r),
        |_t, _r, dr| {
            let residual = dr.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
            if stop_on_convergence && residual < tolerance {
                StepDecision::Stop
            } else {
                StepDecision::Continue
            }
        },
    );

    let (trajectory, forced_verdict) = match result {
        Ok(t) => (t, None),
        Err(Error::MaxStepsExceeded { trajectory, .. }) => (*trajectory, Some(Verdict::MaxTime)),
        Err(Error::GuardRejectionAtMinStep { trajectory, .. }) => {
            (*trajectory, Some(Verdict::LeftAdmissibleRegion))
        }
        Err(other) => return Err(other),
    };

    let residuals: Vec<f64> = trajectory
        .derivatives
        .iter()
        .map(|dr| dr.iter().fold(0.0f64, |m, &d| m.max(d.abs())))
        .collect();
    let conserved: Vec<f64> = trajectory
        .states
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum())
        .collect();
    let alpha_ok = (cfg.alpha + 1.0).abs() >= ALPHA_EXCLUSION_TOL;
    let potentials: Vec<f64> = trajectory
        .states
        .iter()
        .map(|r| {
            if alpha_ok && cfg.record_potential {
                yamabe_functional(complex, r, cfg.alpha).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            }
        })
        .collect();

    let (mut verdict, rate) = check_convergence_residuals(&residuals, cfg.tolerance);
    if let Some(forced) = forced_verdict {
        verdict = forced;
    }

    Ok(FlowTrace {
        times: trajectory.times,
        radii: trajectory.states,
        residuals,
        conserved,
        potentials,
        verdict,
        rate,
        normalization,
        conserved_name: "norm2_sq",
    })
}

/// Integrates `dr_i/dt = s_alpha r_i^alpha - K_i` from an admissible start,
/// rescaled to the unit sphere first (`||r||_2^2` is conserved; drift is
/// monitored, not enforced). A step that cannot complete inside the
/// admissible region ends the run with the `LeftAdmissibleRegion` verdict
/// and the last valid state on the trace.
pub fn integrate_alpha_flow_3d(
    complex: &TetComplex,
    r0: &[f64],
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    run_flow_3d(complex, r0, cfg, false)
}

/// Integrates the negative gradient flow of the functional,
/// `dr/dt = (s_alpha r^alpha - K) / ||r||_{alpha+1}`; same fixed points as
/// the plain flow, with `Q_alpha` non-increasing along runs.
pub fn integrate_gradient_flow_3d(
    complex: &TetComplex,
    r0: &[f64],
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    run_flow_3d(complex, r0, cfg, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    /// `lambda_1(-Delta_alpha) > alpha s_alpha` at the metric: the linearised
    /// flow is negative semi-definite with kernel along `r*`, so the metric
    /// is an isolated, asymptotically stable fixed point on the sphere.
    Stable,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub alpha: f64,
    pub lambda_1: f64,
    pub s_alpha: f64,
    pub alpha_s_alpha: f64,
    pub verdict: StabilityVerdict,
    /// `-DGamma` at the metric (constant-curvature reduction).
    pub neg_d_gamma: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// `||(-DGamma) r*||_inf`, which vanishes for the exact kernel.
    pub kernel_residual: f64,
    pub curvature_deviation: f64,
}

/// Spectral stability of a constant `alpha`-curvature metric: compares the
/// first positive eigenvalue of `-Delta_alpha` (via the symmetric conjugate
/// of the curvature Jacobian, kernel deflated) against `alpha s_alpha`, and
/// assembles the linearisation `-DGamma` with its spectrum.
pub fn stability_analysis(
    complex: &TetComplex,
    r_star: &[f64],
    alpha: f64,
) -> Result<StabilityReport> {
    let r_alpha_curv = packing3d::alpha_curvature_3d(complex, r_star, alpha)?;
    let s_alpha = s_alpha_3d(complex, r_star, alpha)?;
    let deviation = r_alpha_curv
        .iter()
        .fold(0.0f64, |m, &ra| m.max((ra - s_alpha).abs()));
    if deviation > CONSTANT_CURVATURE_TOL {
        return Err(Error::NotConstantCurvature { deviation });
    }

    let lambda = packing3d::curvature_jacobian_r(complex, r_star)?;
    let lambda_tilde = spectral::lambda_tilde_3d(&lambda.matrix, r_star, alpha)?;
    let lambda_1 = spectral::first_positive_eigenvalue(&lambda_tilde)?;
    let alpha_s = alpha * s_alpha;

    // -DGamma at a constant-curvature metric: the curvature term drops out.
    let n = r_star.len();
    let power_sum = norm_power_sum(r_star, alpha);
    let r_alpha: Vec<f64> = r_star.iter().map(|ri| ri.powf(alpha)).collect();
    let mut neg_d_gamma = lambda.matrix.clone();
    for i in 0..n {
        for j in 0..n {
            let diag = if i == j {
                r_star[i].powf(alpha - 1.0)
            } else {
                0.0
            };
            neg_d_gamma[(i, j)] -= alpha_s * (diag - r_alpha[i] * r_alpha[j] / power_sum);
        }
    }
    let (eigenvalues, _) = spectral::jacobi_eigen(&neg_d_gamma);
    let kernel_residual = (&neg_d_gamma * DVector::from_column_slice(r_star))
        .abs()
        .max();

    let verdict = if lambda_1 > alpha_s {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Inconclusive
    };
    Ok(StabilityReport {
        alpha,
        lambda_1,
        s_alpha,
        alpha_s_alpha: alpha_s,
        verdict,
        neg_d_gamma,
        eigenvalues,
        kernel_residual,
        curvature_deviation: deviation,
    })
}

#[derive(Debug, Clone)]
pub struct YamabeEstimate {
    /// Minimum of the final functional values over the runs: an upper bound
    /// for the infimum of `Q_alpha` over the admissible region.
    pub value: f64,
    /// Metric realising the minimum.
    pub best: Vec<f64>,
    /// The starts actually used, in order (the first is the uniform metric;
    /// the rest are seeded samples).
    pub starts: Vec<Vec<f64>>,
    /// Runs that ended against the admissible-region boundary. Their last
    /// valid state is still admissible, so its value participates in the
    /// minimum (the infimum is often approached toward the boundary).
    pub boundary_stopped: usize,
}

/// Multistart upper bound on the infimum of the functional: gradient-flow
/// runs from the uniform metric plus `starts - 1` seeded random admissible
/// metrics on the unit sphere, taking the smallest final value. With a
/// fixed seed the start sequence is a prefix of any longer one, so the
/// estimate is non-increasing in the start count. Requires `alpha > -1`.
pub fn yamabe_invariant_estimate(
    complex: &TetComplex,
    starts: usize,
    seed: u64,
    cfg: &FlowConfig,
) -> Result<YamabeEstimate> {
    if cfg.alpha <= -1.0 {
        return Err(Error::AlphaExcluded);
    }
    if starts == 0 {
        return Err(Error::Config("need at least one start".into()));
    }
    let n = complex.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start_metrics: Vec<Vec<f64>> = Vec::with_capacity(starts);
    let uniform = vec![1.0 / (n as f64).sqrt(); n];
    start_metrics.push(uniform);
    for _ in 1..starts {
        let r = sample_admissible_metric(complex, &mut rng);
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        start_metrics.push(r.iter().map(|x| x / norm).collect());
    }

    #[cfg(feature = "parallel")]
    let runs: Vec<Result<FlowTrace>> = start_metrics
        .par_iter()
        .map(|r0| integrate_gradient_flow_3d(complex, r0, cfg))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<FlowTrace>> = start_metrics
        .iter()
        .map(|r0| integrate_gradient_flow_3d(complex, r0, cfg))
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut boundary_stopped = 0usize;
    for run in runs {
        let trace = run?;
        if trace.verdict == Verdict::LeftAdmissibleRegion {
            boundary_stopped += 1;
        }
        let final_r = trace.final_radii().to_vec();
        let q = yamabe_functional(complex, &final_r, cfg.alpha)?;
        if best.as_ref().map(|(b, _)| q < *b).unwrap_or(true) {
            best = Some((q, final_r));
        }
    }
    let (value, best) = best.expect("at least one start");
    Ok(YamabeEstimate {
        value,
        best,
        starts: start_metrics,
        boundary_stopped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshes;
    use rand::Rng;

    fn sphere3() -> TetComplex {
        meshes::boundary_4_simplex().build_tet_complex().unwrap()
    }

    fn uniform_unit(n: usize) -> Vec<f64> {
        vec![1.0 / (n as f64).sqrt(); n]
    }

    fn tangential_perturbation(r_star: &[f64], rng: &mut impl Rng, size: f64) -> Vec<f64> {
        let n = r_star.len();
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot: f64 = v.iter().zip(r_star).map(|(a, b)| a * b).sum();
        let norm_sq: f64 = r_star.iter().map(|x| x * x).sum();
        for i in 0..n {
            v[i] -= dot * r_star[i] / norm_sq;
        }
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut out: Vec<f64> = r_star
            .iter()
            .zip(&v)
            .map(|(&r, &vi)| r + size * vi / vnorm)
            .collect();
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.iter_mut().for_each(|x| *x /= norm);
        out
    }

    #[test]
    fn yamabe_functional_examples() {
        let c = sphere3();
        let q1 = yamabe_functional(&c, &[1.0; 5], 1.0).unwrap();
        assert!((q1 - 23.168410631715737).abs() < 1e-9);
        let scaled: Vec<f64> = vec![3.0; 5];
        assert!((yamabe_functional(&c, &scaled, 1.0).unwrap() - q1).abs() < 1e-10);

        let s = packing3d::ehr_functional(&c, &[1.0; 5]).unwrap();
        let q0 = yamabe_functional(&c, &[1.0; 5], 0.0).unwrap();
        assert!((q0 - s / 5.0).abs() < 1e-12);

        assert!(matches!(
            yamabe_functional(&c, &[1.0; 5], -1.0),
            Err(Error::AlphaExcluded)
        ));
    }

    #[test]
    fn s_alpha_examples() {
        let c = sphere3();
        let k = packing3d::cr_curvature(&c, &[1.0; 5]).unwrap();
        for alpha in [-1.0, 0.0, 1.0, 2.5] {
            let s = s_alpha_3d(&c, &[1.0; 5], alpha).unwrap();
            assert!((s - k[0]).abs() < 1e-12, "S / 5 equals the curvature");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let r = sample_admissible_metric(&c, &mut rng);
        for alpha in [0.0, 1.0, 2.0] {
            let s = s_alpha_3d(&c, &r, alpha).unwrap();
            let scaled: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
            let s2 = s_alpha_3d(&c, &scaled, alpha).unwrap();
            assert!((s2 - s * 2.0f64.powf(-alpha)).abs() < 1e-9 * s.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_identity_via_finite_differences() {
        let c = sphere3();
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for alpha in [0.0, 1.0, 2.0] {
            let r = sample_admissible_metric(&c, &mut rng);
            let fd = spectral::fd_jacobian(
                |point| yamabe_functional(&c, point, alpha).map(|q| vec![q]),
                &r,
                1e-6,
            )
            .unwrap();
            let state = YamabeState::compute(&c, &r, alpha).unwrap();
            for i in 0..5 {
                assert!(
                    (fd[(0, i)] - state.gradient[i]).abs() < 1e-5,
                    "alpha {alpha} component {i}"
                );
            }
        }
    }

    #[test]
    fn uniform_metric_is_a_fixed_point() {
        let c = sphere3();
        let mut cfg = FlowConfig::new(1.0);
        cfg.t_end = 10.0;
        cfg.stop_on_convergence = false;
        cfg.record_potential = false;
        let trace = integrate_alpha_flow_3d(&c, &uniform_unit(5), &cfg).unwrap();
        for &res in &trace.residuals {
            assert!(res <= 1e-12, "residual {res}");
        }
        assert!((trace.normalization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_is_conserved() {
        let c = sphere3();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let r0 = tangential_perturbation(&uniform_unit(5), &mut rng, 0.05);
        let mut cfg = FlowConfig::new(0.0);
        cfg.t_end = 100.0;
        cfg.stop_on_convergence = false;
        cfg.record_potential = false;
        let trace = integrate_alpha_flow_3d(&c, &r0, &cfg).unwrap();
        for &c2 in &trace.conserved {
            assert!((c2 - trace.conserved[0]).abs() <= 1e-8);
        }
    }

    #[test]
    fn perturbed_starts_return_to_the_symmetric_point() {
        let c = sphere3();
        let r_star = uniform_unit(5);
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        for _ in 0..3 {
            let r0 = tangential_perturbation(&r_star, &mut rng, 0.01);
            let mut cfg = FlowConfig::new(0.0);
            cfg.t_end = 200.0;
            cfg.tolerance = 1e-8;
            cfg.record_potential = false;
            let trace = integrate_alpha_flow_3d(&c, &r0, &cfg).unwrap();
            assert_eq!(trace.verdict, Verdict::Converged);
            for (a, b) in trace.final_radii().iter().zip(&r_star) {
                assert!((a - b).abs() < 1e-6);
            }
            // Convergence of the trace realises a constant-curvature metric.
            let ra = packing3d::alpha_curvature_3d(&c, trace.final_radii(), 0.0).unwrap();
            let s = s_alpha_3d(&c, trace.final_radii(), 0.0).unwrap();
            for &x in &ra {
                assert!((x - s).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gradient_flow_field_is_parallel_and_q_monotone() {
        let c = sphere3();
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let alpha = 1.0;
        let r = sample_admissible_metric(&c, &mut rng);
        let state = YamabeState::compute(&c, &r, alpha).unwrap();
        let norm = norm_alpha_plus_one(&r, alpha);
        for (g, gamma) in state.gradient.iter().zip(&state.gamma) {
            assert!((g + gamma / norm).abs() < 1e-12, "gradient = -Gamma/norm");
        }

        let r0 = tangential_perturbation(&uniform_unit(5), &mut rng, 0.02);
        let mut cfg = FlowConfig::new(alpha);
        cfg.t_end = 200.0;
        let trace = integrate_gradient_flow_3d(&c, &r0, &cfg).unwrap();
        for w in trace.potentials.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-10,
                "Q must not increase: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn gamma_zero_iff_constant_curvature() {
        let c = sphere3();
        let alpha = 1.0;
        let state = YamabeState::compute(&c, &uniform_unit(5), alpha).unwrap();
        let gamma_max = state.gamma.iter().fold(0.0f64, |m, &g| m.max(g.abs()));
        assert!(gamma_max < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(76);
        let r = tangential_perturbation(&uniform_unit(5), &mut rng, 0.05);
        let state = YamabeState::compute(&c, &r, alpha).unwrap();
        let gamma_max = state.gamma.iter().fold(0.0f64, |m, &g| m.max(g.abs()));
        let ra = packing3d::alpha_curvature_3d(&c, &r, alpha).unwrap();
        let s = s_alpha_3d(&c, &r, alpha).unwrap();
        let dev = ra.iter().fold(0.0f64, |m, &x| m.max((x - s).abs()));
        assert!(gamma_max > 1e-6 && dev > 1e-7, "both detect non-constancy");
    }

    #[test]
    fn stability_at_the_symmetric_metric() {
        let c = sphere3();
        let r_star = uniform_unit(5);
        let report = stability_analysis(&c, &r_star, 0.0).unwrap();
        assert_eq!(report.verdict, StabilityVerdict::Stable);
        assert!(report.lambda_1 > 0.0);
        assert_eq!(report.alpha_s_alpha, 0.0);
        assert!(report.kernel_residual <= 1e-6);
        assert!(report.eigenvalues[0].abs() <= 1e-6, "kernel along r*");

        for alpha in [-0.5, -2.0] {
            let report = stability_analysis(&c, &r_star, alpha).unwrap();
            assert_eq!(report.verdict, StabilityVerdict::Stable, "alpha s* < 0");
        }
    }

    #[test]
    fn stability_becomes_inconclusive_for_large_alpha() {
        let c = sphere3();
        let r_star = uniform_unit(5);
        let mut found = None;
        for alpha in [2.0, 5.0, 10.0, 25.0, 60.0] {
            let report = stability_analysis(&c, &r_star, alpha).unwrap();
            if report.verdict == StabilityVerdict::Inconclusive {
                assert!(report.lambda_1 <= report.alpha_s_alpha);
                found = Some(alpha);
                break;
            }
        }
        assert!(found.is_some(), "alpha s* eventually beats lambda_1");
    }

    #[test]
    fn stability_rejects_non_constant_metrics() {
        let c = sphere3();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let r = sample_admissible_metric(&c, &mut rng);
        assert!(matches!(
            stability_analysis(&c, &r, 0.0),
            Err(Error::NotConstantCurvature { .. })
        ));
    }

    #[test]
    fn runs_that_hit_the_boundary_report_the_last_valid_state() {
        // Gradient-flow runs from generic starts on this complex decrease
        // the functional toward the boundary of the admissible region and
        // stop there with the trace intact.
        let c = sphere3();
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let mut seen_boundary = false;
        for _ in 0..6 {
            let r = sample_admissible_metric(&c, &mut rng);
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            let r0: Vec<f64> = r.iter().map(|x| x / norm).collect();
            let mut cfg = FlowConfig::new(1.0);
            cfg.t_end = 200.0;
            cfg.record_potential = false;
            let trace = integrate_gradient_flow_3d(&c, &r0, &cfg).unwrap();
            if trace.verdict == Verdict::LeftAdmissibleRegion {
                seen_boundary = true;
                assert!(packing3d::is_admissible(&c, trace.final_radii()));
                assert!(trace.times.len() > 1);
                let q_start = yamabe_functional(&c, &r0, 1.0).unwrap();
                let q_end = yamabe_functional(&c, trace.final_radii(), 1.0).unwrap();
                assert!(q_end <= q_start + 1e-10);
            }
        }
        assert!(seen_boundary, "expected at least one boundary-stopped run");
    }

    #[test]
    fn yamabe_estimate_on_the_symmetric_sphere() {
        let c = sphere3();
        let mut cfg = FlowConfig::new(1.0);
        cfg.t_end = 200.0;
        cfg.tolerance = 1e-8;
        cfg.record_potential = false;
        let single = yamabe_invariant_estimate(&c, 1, 7, &cfg).unwrap();
        assert!((single.value - 23.168410631715737).abs() < 1e-6);
        assert_eq!(single.boundary_stopped, 0);

        let triple = yamabe_invariant_estimate(&c, 3, 7, &cfg).unwrap();
        assert!(triple.value <= single.value + 1e-12, "monotone in starts");
        for start in &triple.starts {
            let q0 = yamabe_functional(&c, start, 1.0).unwrap();
            assert!(triple.value <= q0 + 1e-9, "min contract");
        }

        let again = yamabe_invariant_estimate(&c, 3, 7, &cfg).unwrap();
        assert_eq!(
            again.value.to_bits(),
            triple.value.to_bits(),
            "deterministic"
        );

        assert!(matches!(
            yamabe_invariant_estimate(&c, 2, 7, &FlowConfig::new(-1.0)),
            Err(Error::AlphaExcluded)
        ));
    }
}
