//! Sphere packing geometry on tetrahedral complexes: realizability of
//! conformal tetrahedra, solid angles, the solid-angle-deficit curvature,
//! the total-curvature functional `S = sum K_i r_i`, and its Hessian (the
//! curvature Jacobian) by finite differences.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

use crate::complex::TetComplex;
use crate::error::{Error, Result};
use crate::par;

/// Realizability value of a conformal tetrahedron on four radii:
/// `Q = (sum 1/r_i)^2 - 2 sum 1/r_i^2`. The tetrahedron with edge lengths
/// `r_i + r_j` is Euclidean iff `Q > 0`. Homogeneous of degree -2, so the
/// sign is scale invariant.
pub fn nondegeneracy_q(radii: [f64; 4]) -> Result<f64> {
    for (index, &value) in radii.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonpositiveRadius { index, value });
        }
    }
    let sum_inv: f64 = radii.iter().map(|r| 1.0 / r).sum();
    let sum_inv_sq: f64 = radii.iter().map(|r| 1.0 / (r * r)).sum();
    Ok(sum_inv * sum_inv - 2.0 * sum_inv_sq)
}

/// A sphere packing metric validated against a complex: positive radii and
/// `Q > 0` on every tetrahedron.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePackingMetric {
    radii: Vec<f64>,
}

impl SpherePackingMetric {
    pub fn new(complex: &TetComplex, radii: Vec<f64>) -> Result<Self> {
        let report = admissible_metric_check(complex, &radii)?;
        if !report.admissible {
            return Err(Error::InadmissibleMetric {
                offending: report.offending,
            });
        }
        Ok(Self { radii })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// Ids of the tetrahedra with `Q <= 0`.
    pub offending: Vec<usize>,
}

/// Checks `Q > 0` on every tetrahedron and lists the violators.
pub fn admissible_metric_check(complex: &TetComplex, r: &[f64]) -> Result<AdmissibilityReport> {
    assert_eq!(r.len(), complex.vertex_count(), "one radius per vertex");
    for (index, &value) in r.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonpositiveRadius { index, value });
        }
    }
    let mut offending = Vec::new();
    for (t, &[i, j, k, l]) in complex.tets().iter().enumerate() {
        let q = nondegeneracy_q([r[i], r[j], r[k], r[l]])?;
        if q <= 0.0 {
            offending.push(t);
        }
    }
    Ok(AdmissibilityReport {
        admissible: offending.is_empty(),
        offending,
    })
}

/// Fast admissibility predicate (no violator list, no allocation).
pub fn is_admissible(complex: &TetComplex, r: &[f64]) -> bool {
    if r.iter().any(|&x| !x.is_finite() || x <= 0.0) {
        return false;
    }
    complex.tets().iter().all(|&[i, j, k, l]| {
        nondegeneracy_q([r[i], r[j], r[k], r[l]])
            .map(|q| q > 0.0)
            .unwrap_or(false)
    })
}

/// Edge index within a tetrahedron for the canonical length order
/// `(l_01, l_02, l_03, l_12, l_13, l_23)`.
#[inline]
fn pair_index(p: usize, q: usize) -> usize {
    match if p < q { (p, q) } else { (q, p) } {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => unreachable!("vertex pair out of range"),
    }
}

/// Cayley–Menger determinant of the six squared lengths; `288 V^2`.
fn cayley_menger(lengths: &[f64; 6]) -> f64 {
    let d: Vec<f64> = lengths.iter().map(|l| l * l).collect();
    let mut m = nalgebra::Matrix5::<f64>::zeros();
    for idx in 1..5 {
        m[(0, idx)] = 1.0;
        m[(idx, 0)] = 1.0;
    }
    for p in 0..4 {
        for q in 0..4 {
            if p != q {
                m[(p + 1, q + 1)] = d[pair_index(p, q)];
            }
        }
    }
    m.determinant()
}

/// Inner angle at the corner between sides `e1`, `e2` with opposite side
/// `opp`, via the law of cosines.
fn vertex_face_angle(e1: f64, e2: f64, opp: f64, lengths: &[f64; 6]) -> Result<f64> {
    let cos = (e1 * e1 + e2 * e2 - opp * opp) / (2.0 * e1 * e2);
    if cos.abs() > 1.0 + 1e-9 {
        return Err(Error::DegenerateTetGeometry { lengths: *lengths });
    }
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// The three face angles at vertex `v` of a tetrahedron with the canonical
/// length order, one per pair of the other vertices (ascending).
fn face_angles_at(lengths: &[f64; 6], v: usize) -> Result<[f64; 3]> {
    let others: Vec<usize> = (0..4).filter(|&w| w != v).collect();
    let mut angles = [0.0; 3];
    let mut idx = 0;
    for a in 0..3 {
        for b in (a + 1)..3 {
            let (p, q) = (others[a], others[b]);
            angles[idx] = vertex_face_angle(
                lengths[pair_index(v, p)],
                lengths[pair_index(v, q)],
                lengths[pair_index(p, q)],
                lengths,
            )?;
            idx += 1;
        }
    }
    Ok(angles)
}

fn check_realizable(lengths: &[f64; 6]) -> Result<()> {
    let scale: f64 = lengths.iter().map(|l| l * l).sum::<f64>() / 6.0;
    let cm = cayley_menger(lengths);
    if cm.is_nan() || cm <= 1e-10 * scale.powi(3) {
        return Err(Error::DegenerateTetGeometry { lengths: *lengths });
    }
    Ok(())
}

/// Solid angles at the four vertices of the Euclidean tetrahedron with
/// lengths `(l_01, l_02, l_03, l_12, l_13, l_23)`, by L'Huilier's
/// spherical-excess formula on the three face angles at each vertex.
pub fn solid_angles(lengths: &[f64; 6]) -> Result<[f64; 4]> {
    check_realizable(lengths)?;
    let mut out = [0.0; 4];
    for (v, slot) in out.iter_mut().enumerate() {
        let [a, b, c] = face_angles_at(lengths, v)?;
        let s = 0.5 * (a + b + c);
        let product =
            (s / 2.0).tan() * ((s - a) / 2.0).tan() * ((s - b) / 2.0).tan() * ((s - c) / 2.0).tan();
        *slot = 4.0 * product.max(0.0).sqrt().atan();
    }
    Ok(out)
}

/// Solid angles by the dihedral-angle route: the spherical triangle cut out
/// at a vertex has the dihedral angles as its corner angles, so
/// `Omega = beta_1 + beta_2 + beta_3 - pi` with each `beta` from the
/// spherical law of cosines. Used as the independent cross-check for
/// [`solid_angles`].
pub fn solid_angles_dihedral(lengths: &[f64; 6]) -> Result<[f64; 4]> {
    check_realizable(lengths)?;
    let mut out = [0.0; 4];
    for (v, slot) in out.iter_mut().enumerate() {
        let [a, b, c] = face_angles_at(lengths, v)?;
        // Sides of the spherical triangle are (a, b, c); its angle opposite
        // side `a` is the dihedral angle along the edge not involved in `a`.
        let dihedral = |opp: f64, s1: f64, s2: f64| -> Result<f64> {
            let cos = (opp.cos() - s1.cos() * s2.cos()) / (s1.sin() * s2.sin());
            if cos.abs() > 1.0 + 1e-9 {
                return Err(Error::DegenerateTetGeometry { lengths: *lengths });
            }
            Ok(cos.clamp(-1.0, 1.0).acos())
        };
        *slot = dihedral(a, b, c)? + dihedral(b, a, c)? + dihedral(c, a, b)? - PI;
    }
    Ok(out)
}

fn tet_lengths(tet: [usize; 4], r: &[f64]) -> [f64; 6] {
    let [i, j, k, l] = tet;
    [
        r[i] + r[j],
        r[i] + r[k],
        r[i] + r[l],
        r[j] + r[k],
        r[j] + r[l],
        r[k] + r[l],
    ]
}

fn solid_angles_by_tet(complex: &TetComplex, r: &[f64]) -> Result<Vec<[f64; 4]>> {
    par::try_map_indexed(complex.tets().len(), |t| {
        solid_angles(&tet_lengths(complex.tets()[t], r))
    })
}

/// Scalar curvature `K_i = 4 pi - sum of solid angles at i` over the
/// incident tetrahedra. Requires an admissible metric.
pub fn cr_curvature(complex: &TetComplex, r: &[f64]) -> Result<Vec<f64>> {
    let report = admissible_metric_check(complex, r)?;
    if !report.admissible {
        return Err(Error::InadmissibleMetric {
            offending: report.offending,
        });
    }
    let angles = solid_angles_by_tet(complex, r)?;
    let mut k = vec![4.0 * PI; complex.vertex_count()];
    for (t, &tet) in complex.tets().iter().enumerate() {
        for (c, &v) in tet.iter().enumerate() {
            k[v] -= angles[t][c];
        }
    }
    Ok(k)
}

/// 3D `alpha`-curvature `R_{alpha,i} = K_i / r_i^alpha`.
pub fn alpha_curvature_3d(complex: &TetComplex, r: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let k = cr_curvature(complex, r)?;
    Ok(k.iter()
        .zip(r)
        .map(|(&ki, &ri)| ki / ri.powf(alpha))
        .collect())
}

/// Total-curvature functional `S = sum_i K_i r_i`; its gradient in `r` is
/// the curvature vector itself.
pub fn ehr_functional(complex: &TetComplex, r: &[f64]) -> Result<f64> {
    let k = cr_curvature(complex, r)?;
    Ok(k.iter().zip(r).map(|(&ki, &ri)| ki * ri).sum())
}

/// Curvature Jacobian with its pre-symmetrization asymmetry.
#[derive(Debug, Clone)]
pub struct CurvatureJacobian {
    /// Symmetrised `dK/dr` (the Hessian of `S`).
    pub matrix: DMatrix<f64>,
    /// Largest entrywise asymmetry before symmetrisation.
    pub asymmetry: f64,
}

const FD_STEP: f64 = 1e-6;

/// Jacobian `Lambda = dK/dr` by central finite differences (step
/// `1e-6 * max(1, r_j)`), symmetrised. Positive semi-definite with kernel
/// along `r`. Fails with `FdNearBoundary` when a probe point would leave
/// the admissible region.
pub fn curvature_jacobian_r(complex: &TetComplex, r: &[f64]) -> Result<CurvatureJacobian> {
    let report = admissible_metric_check(complex, r)?;
    if !report.admissible {
        return Err(Error::InadmissibleMetric {
            offending: report.offending,
        });
    }
    let n = r.len();
    let columns = par::try_map_indexed(n, |j| {
        let h = FD_STEP * r[j].abs().max(1.0);
        let mut plus = r.to_vec();
        plus[j] += h;
        let mut minus = r.to_vec();
        minus[j] -= h;
        if !is_admissible(complex, &plus) || !is_admissible(complex, &minus) {
            return Err(Error::FdNearBoundary { vertex: j });
        }
        let kp = cr_curvature(complex, &plus)?;
        let km = cr_curvature(complex, &minus)?;
        Ok(kp
            .iter()
            .zip(&km)
            .map(|(&p, &m)| (p - m) / (2.0 * h))
            .collect::<Vec<f64>>())
    })?;
    let mut raw = DMatrix::zeros(n, n);
    for (j, col) in columns.iter().enumerate() {
        for (i, &value) in col.iter().enumerate() {
            raw[(i, j)] = value;
        }
    }
    let mut asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asymmetry = asymmetry.max((raw[(i, j)] - raw[(j, i)]).abs());
        }
    }
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(CurvatureJacobian { matrix, asymmetry })
}

/// Random admissible metric by rejection sampling: log-uniform radii in
/// `[0.5, 2]`, resampled until every tetrahedron realizes.
pub fn sample_admissible_metric(complex: &TetComplex, rng: &mut impl Rng) -> Vec<f64> {
    let n = complex.vertex_count();
    let (lo, hi) = (0.5f64.ln(), 2.0f64.ln());
    loop {
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi).exp()).collect();
        if is_admissible(complex, &r) {
            return r;
        }
    }
}
