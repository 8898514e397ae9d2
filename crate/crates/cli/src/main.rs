//! `curvflow`: curvatures, curvature flows, existence checkers and
//! stability reports for circle / sphere packing metrics on triangulated
//! manifolds.
//!
//! Exit codes: 0 success / pass / converged / stable; 1 a checker failed or
//! the stability verdict is inconclusive; 2 parse or configuration error;
//! 3 inadmissible 3D metric; 4 flow hit the time budget; 5 flow diverged or
//! left the admissible region; 6 vertex count above the enumeration cap;
//! 7 metric is not of constant alpha-curvature.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curvflow::area::AreaElement;
use curvflow::error::Error;
use curvflow::flow2d::{
    integrate_a_flow, integrate_alpha_flow, integrate_modified_flow, FlowConfig, FlowTrace, Verdict,
};
use curvflow::flow3d::{
    integrate_alpha_flow_3d, integrate_gradient_flow_3d, stability_analysis, StabilityVerdict,
};
use curvflow::meshdoc::MeshDocument;
use curvflow::packing2d::{CurvatureState, PackingMetric};
use curvflow::packing3d;
use curvflow::thurston::{self, CheckOptions, SubsetVerdict};

mod exit {
    pub const OK: u8 = 0;
    pub const FAIL: u8 = 1;
    pub const PARSE_OR_CONFIG: u8 = 2;
    pub const INADMISSIBLE: u8 = 3;
    pub const MAX_TIME: u8 = 4;
    pub const DIVERGED: u8 = 5;
    pub const TOO_MANY_VERTICES: u8 = 6;
    pub const NOT_CONSTANT_CURVATURE: u8 = 7;
}

#[derive(Parser)]
#[command(name = "curvflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker pool size for parallel sections (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Per-vertex curvatures and scalar invariants of a mesh.
    Curvature(CurvatureArgs),
    /// Integrate a curvature flow and export the trace as CSV.
    Flow(FlowArgs),
    /// Subset existence checkers (JSON report).
    Check(CheckArgs),
    /// Spectral stability of a constant alpha-curvature metric (JSON).
    Stability(StabilityArgs),
}

#[derive(Args)]
struct CurvatureArgs {
    mesh: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
}

#[derive(Args)]
struct FlowArgs {
    mesh: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 100.0)]
    t_end: f64,
    /// Residual below which the run counts as converged.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Area element for the generalised 2D flow: power:<alpha>|third|dual.
    #[arg(long)]
    area: Option<String>,
    /// JSON array with a prescribed target curvature (2D modified flow).
    #[arg(long)]
    prescribed: Option<PathBuf>,
    /// Use the gradient flow of the functional (3D only).
    #[arg(long)]
    gradient: bool,
    /// Trace CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    mesh: PathBuf,
    /// thurston | weighted | membership
    #[arg(long)]
    mode: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    /// JSON array with the reference metric for weighted (default: all ones).
    #[arg(long)]
    rstar: Option<PathBuf>,
    /// JSON array with the candidate curvature for membership.
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long, default_value_t = 22)]
    cap: usize,
    /// Stop at the first failing subset.
    #[arg(long)]
    short_circuit: bool,
    /// JSON report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    mesh: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// JSON array with the candidate constant-curvature metric.
    #[arg(long)]
    rstar: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: could not size the worker pool: {e}");
            return ExitCode::from(exit::PARSE_OR_CONFIG);
        }
    }
    let code = match cli.command {
        Command::Curvature(args) => cmd_curvature(args),
        Command::Flow(args) => cmd_flow(args),
        Command::Check(args) => cmd_check(args),
        Command::Stability(args) => cmd_stability(args),
    };
    ExitCode::from(code)
}

fn load_mesh(path: &PathBuf) -> Result<MeshDocument, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        exit::PARSE_OR_CONFIG
    })?;
    MeshDocument::from_json(&text).map_err(|e| {
        eprintln!("error: {e}");
        exit::PARSE_OR_CONFIG
    })
}

fn load_vector(path: &PathBuf, expected_len: usize, what: &str) -> Result<Vec<f64>, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        exit::PARSE_OR_CONFIG
    })?;
    let values: Vec<f64> = serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: {what} must be a JSON array of numbers: {e}");
        exit::PARSE_OR_CONFIG
    })?;
    if values.len() != expected_len {
        eprintln!(
            "error: {what} has {} entries, expected {expected_len}",
            values.len()
        );
        return Err(exit::PARSE_OR_CONFIG);
    }
    Ok(values)
}

fn cmd_curvature(args: CurvatureArgs) -> u8 {
    let doc = match load_mesh(&args.mesh) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    let radii = match doc.initial_radii() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::PARSE_OR_CONFIG;
        }
    };
    match doc.dim {
        2 => {
            let surface = match doc.build_surface() {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::PARSE_OR_CONFIG;
                }
            };
            let metric = match PackingMetric::new(radii) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::PARSE_OR_CONFIG;
                }
            };
            let state = match CurvatureState::compute(&surface, &metric, args.alpha) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::PARSE_OR_CONFIG;
                }
            };
            let chi = surface.euler_characteristic();
            println!(
                "dim 2: {} vertices, {} edges, {} faces, chi = {chi}",
                surface.vertex_count(),
                surface.edges().len(),
                surface.faces().len()
            );
            println!("alpha = {}", args.alpha);
            println!("vertex\tr\tK\tR_alpha");
            for v in 0..surface.vertex_count() {
                println!(
                    "{v}\t{}\t{}\t{}",
                    metric.radius(v),
                    state.k[v],
                    state.r_alpha[v]
                );
            }
            println!("s_alpha = {}", state.s_alpha);
            let total: f64 = state.k.iter().sum();
            let target = 2.0 * std::f64::consts::PI * chi as f64;
            let diff = (total - target).abs();
            let status = if diff <= 1e-9 { "OK" } else { "VIOLATED" };
            println!(
                "sum K = {total}, 2 pi chi = {target}, gauss-bonnet {status} (|diff| = {diff:e})"
            );
            exit::OK
        }
        _ => {
            let complex = match doc.build_tet_complex() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::PARSE_OR_CONFIG;
                }
            };
            let report = match packing3d::admissible_metric_check(&complex, &radii) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::PARSE_OR_CONFIG;
                }
            };
            if !report.admissible {
                eprintln!(
                    "error: inadmissible sphere packing metric (Q <= 0 on tetrahedra {:?})",
                    report.offending
                );
                return exit::INADMISSIBLE;
            }
            let k = packing3d::cr_curvature(&complex, &radii).expect("admissible");
            let r_alpha =
                packing3d::alpha_curvature_3d(&complex, &radii, args.alpha).expect("admissible");
            let ehr = packing3d::ehr_functional(&complex, &radii).expect("admissible");
            let s_alpha =
                curvflow::flow3d::s_alpha_3d(&complex, &radii, args.alpha).expect("admissible");
            println!(
                "dim 3: {} vertices, {} edges, {} triangles, {} tets (admissible metric)",
                complex.vertex_count(),
                complex.edges().len(),
                complex.triangles().len(),
                complex.tets().len()
            );
            println!("alpha = {}", args.alpha);
            println!("vertex\tr\tK\tR_alpha");
            for v in 0..complex.vertex_count() {
                println!("{v}\t{}\t{}\t{}", radii[v], k[v], r_alpha[v]);
            }
            println!("s_alpha = {s_alpha}");
            println!("S = {ehr}");
            exit::OK
        }
    }
}

fn flow_exit(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Converged => exit::OK,
        Verdict::MaxTime => exit::MAX_TIME,
        Verdict::Diverging | Verdict::LeftAdmissibleRegion => exit::DIVERGED,
    }
}

fn report_trace(trace: &FlowTrace, out: Option<&PathBuf>) -> u8 {
    if let Some(path) = out {
        let mut buffer = Vec::new();
        if trace.write_csv(&mut buffer).is_ok() {
            if let Err(e) = fs::write(path, buffer) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return exit::PARSE_OR_CONFIG;
            }
        }
    }
    if (trace.normalization - 1.0).abs() > 0.0 {
        println!("initial metric rescaled by 1/{}", trace.normalization);
    }
    println!(
        "verdict: {:?} (t = {}, residual = {:e}, rate = {})",
        trace.verdict,
        trace.times.last().unwrap(),
        trace.final_residual(),
        trace.rate
    );
    flow_exit(trace.verdict)
}

fn cmd_flow(args: FlowArgs) -> u8 {
    let doc = match load_mesh(&args.mesh) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    let radii = match doc.initial_radii() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::PARSE_OR_CONFIG;
        }
    };
    let mut cfg = FlowConfig::new(args.alpha);
    cfg.t_end = args.t_end;
    cfg.tolerance = args.tol;

    if doc.dim == 2 {
        if args.gradient {
            eprintln!("error: --gradient applies to 3D meshes only");
            return exit::PARSE_OR_CONFIG;
        }
        if args.area.is_some() && args.prescribed.is_some() {
            eprintln!("error: --area and --prescribed are mutually exclusive");
            return exit::PARSE_OR_CONFIG;
        }
        let surface = match doc.build_surface() {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return exit::PARSE_OR_CONFIG;
            }
        };
        let metric = match PackingMetric::new(radii) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                return exit::PARSE_OR_CONFIG;
            }
        };
        let result = if let Some(selector) = &args.area {
            match selector.parse::<AreaElement>() {
                Ok(area) => {
                    cfg.area_element = Some(area);
                    integrate_a_flow(&surface, &metric, &cfg)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::PARSE_OR_CONFIG;
                }
            }
        } else if let Some(path) = &args.prescribed {
            match load_vector(path, surface.vertex_count(), "prescribed curvature") {
                Ok(target) => {
                    cfg.prescribed = Some(target);
                    integrate_modified_flow(&surface, &metric, &cfg)
                }
                Err(code) => return code,
            }
        } else {
            integrate_alpha_flow(&surface, &metric, &cfg)
        };
        match result {
            Ok(trace) => report_trace(&trace, args.out.as_ref()),
            Err(e) => {
                eprintln!("error: {e}");
                exit::PARSE_OR_CONFIG
            }
        }
    } else {
        if args.area.is_some() || args.prescribed.is_some() {
            eprintln!("error: --area and --prescribed apply to 2D meshes only");
            return exit::PARSE_OR_CONFIG;
        }
        let complex = match doc.build_tet_complex() {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return exit::PARSE_OR_CONFIG;
            }
        };
        let result = if args.gradient {
            integrate_gradient_flow_3d(&complex, &radii, &cfg)
        } else {
            integrate_alpha_flow_3d(&complex, &radii, &cfg)
        };
        match result {
            Ok(trace) => report_trace(&trace, args.out.as_ref()),
            Err(e) => {
                eprintln!("error: {e}");
                exit::PARSE_OR_CONFIG
            }
        }
    }
}

fn write_check_report(
    out: Option<&PathBuf>,
    mode: &str,
    verdicts: &[SubsetVerdict],
    subset_count: u64,
    all_pass: bool,
    extra: serde_json::Value,
) -> u8 {
    let marginal = verdicts.iter().filter(|v| v.marginal).count();
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    let report = serde_json::json!({
        "mode": mode,
        "subset_count": subset_count,
        "all_pass": all_pass,
        "summary": {
            "failed": failed,
            "marginal": marginal,
            "extra": extra,
        },
        "records": verdicts,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return exit::PARSE_OR_CONFIG;
            }
        }
        None => println!("{text}"),
    }
    if all_pass {
        exit::OK
    } else {
        exit::FAIL
    }
}

fn check_exit(e: Error) -> u8 {
    match e {
        Error::TooManyVertices { .. } => {
            eprintln!("error: {e}");
            exit::TOO_MANY_VERTICES
        }
        other => {
            eprintln!("error: {other}");
            exit::PARSE_OR_CONFIG
        }
    }
}

fn cmd_check(args: CheckArgs) -> u8 {
    let doc = match load_mesh(&args.mesh) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    if doc.dim != 2 {
        eprintln!("error: subset checkers apply to 2D meshes");
        return exit::PARSE_OR_CONFIG;
    }
    let surface = match doc.build_surface() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::PARSE_OR_CONFIG;
        }
    };
    let opts = CheckOptions {
        cap: args.cap,
        short_circuit: args.short_circuit,
    };
    match args.mode.as_str() {
        "thurston" => match thurston::thurston_condition(&surface, &opts) {
            Ok(report) => write_check_report(
                args.out.as_ref(),
                "thurston",
                &report.verdicts,
                report.subset_count,
                report.all_pass,
                serde_json::Value::Null,
            ),
            Err(e) => check_exit(e),
        },
        "weighted" => {
            let radii = match &args.rstar {
                Some(path) => match load_vector(path, surface.vertex_count(), "rstar") {
                    Ok(r) => r,
                    Err(code) => return code,
                },
                None => vec![1.0; surface.vertex_count()],
            };
            let metric = match PackingMetric::new(radii) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit::PARSE_OR_CONFIG;
                }
            };
            match thurston::metric_weighted_condition(&surface, &metric, args.alpha, &opts) {
                Ok(report) => write_check_report(
                    args.out.as_ref(),
                    "weighted",
                    &report.verdicts,
                    report.subset_count,
                    report.all_pass,
                    serde_json::json!({ "alpha": args.alpha }),
                ),
                Err(e) => check_exit(e),
            }
        }
        "membership" => {
            let path = match &args.x {
                Some(path) => path,
                None => {
                    eprintln!("error: --mode membership needs --x <file>");
                    return exit::PARSE_OR_CONFIG;
                }
            };
            let x = match load_vector(path, surface.vertex_count(), "candidate curvature") {
                Ok(x) => x,
                Err(code) => return code,
            };
            match thurston::admissible_curvature_membership(&surface, &x, &opts) {
                Ok(report) => write_check_report(
                    args.out.as_ref(),
                    "membership",
                    &report.failing,
                    (1u64 << surface.vertex_count()) - 2,
                    report.member,
                    serde_json::json!({
                        "gauss_bonnet_ok": report.gauss_bonnet_ok,
                        "curvature_sum": report.curvature_sum,
                        "expected_sum": report.expected_sum,
                    }),
                ),
                Err(e) => check_exit(e),
            }
        }
        other => {
            eprintln!("error: unknown mode {other:?}, expected thurston|weighted|membership");
            exit::PARSE_OR_CONFIG
        }
    }
}

fn cmd_stability(args: StabilityArgs) -> u8 {
    let doc = match load_mesh(&args.mesh) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    if doc.dim != 3 {
        eprintln!("error: stability analysis applies to 3D meshes");
        return exit::PARSE_OR_CONFIG;
    }
    let complex = match doc.build_tet_complex() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::PARSE_OR_CONFIG;
        }
    };
    let r_star = match load_vector(&args.rstar, complex.vertex_count(), "rstar") {
        Ok(r) => r,
        Err(code) => return code,
    };
    match stability_analysis(&complex, &r_star, args.alpha) {
        Ok(report) => {
            let verdict = match report.verdict {
                StabilityVerdict::Stable => "Stable",
                StabilityVerdict::Inconclusive => "Inconclusive",
            };
            let json = serde_json::json!({
                "alpha": report.alpha,
                "lambda_1": report.lambda_1,
                "s_alpha": report.s_alpha,
                "alpha_s_alpha": report.alpha_s_alpha,
                "verdict": verdict,
                "eigenvalues": report.eigenvalues,
                "kernel_residual": report.kernel_residual,
                "curvature_deviation": report.curvature_deviation,
            });
            let text = serde_json::to_string_pretty(&json).expect("report serializes");
            match &args.out {
                Some(path) => {
                    if let Err(e) = fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return exit::PARSE_OR_CONFIG;
                    }
                }
                None => println!("{text}"),
            }
            match report.verdict {
                StabilityVerdict::Stable => exit::OK,
                StabilityVerdict::Inconclusive => exit::FAIL,
            }
        }
        Err(Error::NotConstantCurvature { deviation }) => {
            eprintln!("error: metric is not of constant alpha-curvature (deviation {deviation:e})");
            exit::NOT_CONSTANT_CURVATURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::PARSE_OR_CONFIG
        }
    }
}
