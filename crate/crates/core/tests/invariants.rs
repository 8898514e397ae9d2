//! Cross-module invariants that tie the flows, checkers and documents
//! together.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curvflow::flow2d::{integrate_alpha_flow, FlowConfig, Verdict};
use curvflow::flow3d::integrate_alpha_flow_3d;
use curvflow::meshes;
use curvflow::packing2d::{self, random_metric, PackingMetric};
use curvflow::packing3d;
use curvflow::thurston::{metric_weighted_condition, CheckOptions};

/// A constant-curvature metric found by the flow satisfies the subset
/// condition at that metric; so does the known symmetric metric in the
/// positive `alpha * chi` regime.
#[test]
fn flow_found_metrics_satisfy_the_subset_condition() {
    let tetra = meshes::tetrahedron_sphere().build_surface().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1);

    let alpha = -1.0;
    let r0 = random_metric(4, &mut rng, 0.5, 2.0);
    let mut cfg = FlowConfig::new(alpha);
    cfg.t_end = 500.0;
    cfg.record_potential = false;
    let trace = integrate_alpha_flow(&tetra, &r0, &cfg).unwrap();
    assert_eq!(trace.verdict, Verdict::Converged);
    let r_star = PackingMetric::new(trace.final_radii().to_vec()).unwrap();
    let report =
        metric_weighted_condition(&tetra, &r_star, alpha, &CheckOptions::default()).unwrap();
    assert!(report.all_pass);

    let unit = PackingMetric::uniform(4, 1.0);
    let report = metric_weighted_condition(&tetra, &unit, 2.0, &CheckOptions::default()).unwrap();
    assert!(
        report.all_pass,
        "alpha chi > 0 at the symmetric constant metric"
    );
}

#[test]
fn trace_csv_3d_uses_norm_column() {
    let complex = meshes::boundary_4_simplex().build_tet_complex().unwrap();
    let mut cfg = FlowConfig::new(0.0);
    cfg.t_end = 1.0;
    cfg.stop_on_convergence = false;
    let trace = integrate_alpha_flow_3d(&complex, &[1.0; 5], &cfg).unwrap();
    let mut buffer = Vec::new();
    trace.write_csv(&mut buffer).unwrap();
    let text = String::from_utf8(buffer).unwrap();
    assert!(text.starts_with("t,r_1,r_2,r_3,r_4,r_5,residual_inf,norm2_sq,potential"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Discrete Gauss curvature depends only on the radii ratios.
    #[test]
    fn curvature_is_scale_invariant(
        logs in prop::collection::vec(-1.5f64..1.5, 7),
        scale in 0.1f64..10.0,
    ) {
        let torus = meshes::torus_7().build_surface().unwrap();
        let metric = PackingMetric::from_log(&logs);
        let k = packing2d::gauss_curvature(&torus, &metric).unwrap();
        let ks = packing2d::gauss_curvature(&torus, &metric.scaled(scale)).unwrap();
        for (a, b) in k.iter().zip(&ks) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    /// The realizability value scales like c^-2 and never changes sign.
    #[test]
    fn q_scaling(radii in prop::collection::vec(0.05f64..20.0, 4), scale in 0.1f64..10.0) {
        let r: [f64; 4] = [radii[0], radii[1], radii[2], radii[3]];
        let q = packing3d::nondegeneracy_q(r).unwrap();
        let qs = packing3d::nondegeneracy_q(r.map(|x| scale * x)).unwrap();
        prop_assert!((qs - q / (scale * scale)).abs() < 1e-9 * q.abs().max(1.0));
    }

    /// Mesh documents survive a JSON round trip bit for bit.
    #[test]
    fn mesh_document_round_trip(radii in prop::collection::vec(0.01f64..100.0, 7)) {
        let mut doc = meshes::torus_7();
        doc.radii = Some(radii);
        let back = curvflow::meshdoc::MeshDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(doc, back);
    }
}
