//! Metric geometry of circle packings on a weighted surface: edge lengths,
//! inner angles, discrete Gauss curvature, its `alpha`-normalised variant,
//! and the analytic Jacobian of the curvature map in log coordinates.

use nalgebra::DMatrix;
use rand::Rng;

use crate::complex::WeightedSurface;
use crate::error::{Error, Result};
use crate::par;

/// A circle packing metric: one positive radius per vertex. Log coordinates
/// `u_i = ln r_i` are the natural variables for the 2D flows.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingMetric {
    radii: Vec<f64>,
}

impl PackingMetric {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        for (index, &value) in radii.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonpositiveRadius { index, value });
            }
        }
        Ok(Self { radii })
    }

    pub fn uniform(n: usize, r: f64) -> Self {
        Self::new(vec![r; n]).expect("positive radius")
    }

    pub fn from_log(u: &[f64]) -> Self {
        Self {
            radii: u.iter().map(|&x| x.exp()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius(&self, v: usize) -> f64 {
        self.radii[v]
    }

    pub fn log_radii(&self) -> Vec<f64> {
        self.radii.iter().map(|r| r.ln()).collect()
    }

    /// Rescales so that the product of the radii is 1; returns the new metric
    /// and the factor `c` that was divided out (`r = c * r_normalized`).
    pub fn normalized_product_one(&self) -> (Self, f64) {
        let n = self.radii.len() as f64;
        let mean_log = self.radii.iter().map(|r| r.ln()).sum::<f64>() / n;
        let c = mean_log.exp();
        let radii = self.radii.iter().map(|r| r / c).collect();
        (Self { radii }, c)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            radii: self.radii.iter().map(|r| c * r).collect(),
        }
    }
}

/// Log-uniform random metric with radii in `[lo, hi]`.
pub fn random_metric(n: usize, rng: &mut impl Rng, lo: f64, hi: f64) -> PackingMetric {
    let (a, b) = (lo.ln(), hi.ln());
    let radii = (0..n).map(|_| rng.random_range(a..b).exp()).collect();
    PackingMetric { radii }
}

/// Length attached to an edge `{i, j}`:
/// `l_ij = sqrt(r_i^2 + r_j^2 + 2 r_i r_j cos(phi_ij))`.
#[inline]
pub fn edge_length(ri: f64, rj: f64, phi: f64) -> f64 {
    (ri * ri + rj * rj + 2.0 * ri * rj * phi.cos()).sqrt()
}

/// Per-edge lengths, indexed like `surface.edges()`.
pub fn edge_lengths(surface: &WeightedSurface, metric: &PackingMetric) -> Vec<f64> {
    surface
        .edges()
        .iter()
        .enumerate()
        .map(|(id, &(i, j))| edge_length(metric.radius(i), metric.radius(j), surface.weight(id)))
        .collect()
}

/// Side lengths of face `f` ordered opposite its vertices: for face
/// `[i, j, k]` this returns `[l_jk, l_ik, l_ij]`.
pub fn face_side_lengths(surface: &WeightedSurface, lengths: &[f64], f: usize) -> [f64; 3] {
    let [i, j, k] = surface.faces()[f];
    [
        lengths[surface.edge_id(j, k).expect("face edge")],
        lengths[surface.edge_id(i, k).expect("face edge")],
        lengths[surface.edge_id(i, j).expect("face edge")],
    ]
}

const COS_OVERSHOOT: f64 = 1e-9;

/// Inner angles of a Euclidean triangle with side lengths `(a, b, c)`,
/// returned opposite to each side. The cosine is clamped to `[-1, 1]` to
/// absorb rounding; a triangle-inequality violation (up to a margin of
/// `1e-12` relative to the longest side) is a `DegenerateTriangle`.
pub fn inner_angles(a: f64, b: f64, c: f64) -> Result<[f64; 3]> {
    let longest = a.max(b).max(c);
    let tol = 1e-12 * longest;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || a >= b + c - tol || b >= a + c - tol || c >= a + b - tol
    {
        return Err(Error::DegenerateTriangle { a, b, c });
    }
    let angle = |opp: f64, s1: f64, s2: f64| -> Result<f64> {
        let cos = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
        if cos.abs() > 1.0 + COS_OVERSHOOT {
            return Err(Error::DegenerateTriangle { a, b, c });
        }
        Ok(cos.clamp(-1.0, 1.0).acos())
    };
    Ok([angle(a, b, c)?, angle(b, a, c)?, angle(c, a, b)?])
}

/// Corner angles for every face, aligned with the face vertex order.
pub fn corner_angles(surface: &WeightedSurface, metric: &PackingMetric) -> Result<Vec<[f64; 3]>> {
    let lengths = edge_lengths(surface, metric);
    corner_angles_from_lengths(surface, &lengths)
}

fn corner_angles_from_lengths(surface: &WeightedSurface, lengths: &[f64]) -> Result<Vec<[f64; 3]>> {
    par::try_map_indexed(surface.faces().len(), |f| {
        let [a, b, c] = face_side_lengths(surface, lengths, f);
        inner_angles(a, b, c)
    })
}

fn curvature_from_angles(surface: &WeightedSurface, angles: &[[f64; 3]]) -> Vec<f64> {
    let mut k = vec![2.0 * std::f64::consts::PI; surface.vertex_count()];
    for (f, &face) in surface.faces().iter().enumerate() {
        for (c, &v) in face.iter().enumerate() {
            k[v] -= angles[f][c];
        }
    }
    k
}

/// Discrete Gauss curvature `K_i = 2 pi - sum of inner angles at i`.
pub fn gauss_curvature(surface: &WeightedSurface, metric: &PackingMetric) -> Result<Vec<f64>> {
    Ok(curvature_from_angles(
        surface,
        &corner_angles(surface, metric)?,
    ))
}

/// Sequential reference path for [`gauss_curvature`]; same result bit for
/// bit, used by the benches to compare against the parallel path.
pub fn gauss_curvature_seq(surface: &WeightedSurface, metric: &PackingMetric) -> Result<Vec<f64>> {
    let lengths = edge_lengths(surface, metric);
    let mut angles = Vec::with_capacity(surface.faces().len());
    for f in 0..surface.faces().len() {
        let [a, b, c] = face_side_lengths(surface, &lengths, f);
        angles.push(inner_angles(a, b, c)?);
    }
    Ok(curvature_from_angles(surface, &angles))
}

/// `alpha`-curvature `R_{alpha,i} = K_i / r_i^alpha`.
pub fn alpha_curvature(
    surface: &WeightedSurface,
    metric: &PackingMetric,
    alpha: f64,
) -> Result<Vec<f64>> {
    let k = gauss_curvature(surface, metric)?;
    Ok(k.iter()
        .zip(metric.radii())
        .map(|(&ki, &ri)| ki / ri.powf(alpha))
        .collect())
}

/// `sum_i r_i^alpha`.
pub fn norm_alpha(metric: &PackingMetric, alpha: f64) -> f64 {
    metric.radii().iter().map(|r| r.powf(alpha)).sum()
}

/// Constant-curvature target `s_alpha = 2 pi chi(M) / sum_i r_i^alpha`.
pub fn s_alpha(surface: &WeightedSurface, metric: &PackingMetric, alpha: f64) -> f64 {
    2.0 * std::f64::consts::PI * surface.euler_characteristic() as f64 / norm_alpha(metric, alpha)
}

/// `d l_pq / d u_p` for the edge `{p, q}` with weight `phi` and length `l`.
#[inline]
fn dlength_dlog(rp: f64, rq: f64, phi: f64, l: f64) -> f64 {
    rp * (rp + rq * phi.cos()) / l
}

type FaceBlock = ([usize; 3], [[f64; 3]; 3]);

fn face_jacobian_block(
    surface: &WeightedSurface,
    metric: &PackingMetric,
    lengths: &[f64],
    angles: &[[f64; 3]],
    f: usize,
) -> FaceBlock {
    let face = surface.faces()[f];
    let [i, j, k] = face;
    // Sides opposite each vertex and the derivatives of each side length
    // with respect to the log radii of its two endpoints.
    let sides = face_side_lengths(surface, lengths, f);
    let pairs = [(j, k), (i, k), (i, j)];
    let mut dl = [[0.0f64; 3]; 3]; // dl[s][c]: d side_s / d u of face corner c
    for (s, &(p, q)) in pairs.iter().enumerate() {
        let phi = surface.weight_between(p, q);
        let l = sides[s];
        for (c, &v) in face.iter().enumerate() {
            if v == p {
                dl[s][c] = dlength_dlog(metric.radius(p), metric.radius(q), phi, l);
            } else if v == q {
                dl[s][c] = dlength_dlog(metric.radius(q), metric.radius(p), phi, l);
            }
        }
    }
    // d theta_x / d side_s from the law of cosines: with angle A opposite
    // side a,  dA/da = a / (b c sin A),  dA/db = -a cos C / (b c sin A).
    let th = angles[f];
    let mut dtheta_dside = [[0.0f64; 3]; 3]; // [angle corner][side index]
    for x in 0..3 {
        let (y, z) = ((x + 1) % 3, (x + 2) % 3);
        let denom = sides[y] * sides[z] * th[x].sin();
        dtheta_dside[x][x] = sides[x] / denom;
        dtheta_dside[x][y] = -sides[x] * th[z].cos() / denom;
        dtheta_dside[x][z] = -sides[x] * th[y].cos() / denom;
    }
    // Chain rule: d theta_x / d u_c = sum_s d theta_x/d side_s * d side_s/d u_c.
    let mut block = [[0.0f64; 3]; 3];
    for x in 0..3 {
        for c in 0..3 {
            let mut acc = 0.0;
            for s in 0..3 {
                acc += dtheta_dside[x][s] * dl[s][c];
            }
            block[x][c] = acc;
        }
    }
    ([i, j, k], block)
}

fn assemble_jacobian(surface: &WeightedSurface, blocks: &[FaceBlock]) -> DMatrix<f64> {
    let n = surface.vertex_count();
    let mut l = DMatrix::zeros(n, n);
    for (face, block) in blocks {
        for x in 0..3 {
            for c in 0..3 {
                // K_v = 2 pi - sum theta_v, hence the sign flip.
                l[(face[x], face[c])] -= block[x][c];
            }
        }
    }
    // Analytically symmetric; average away the last bits of rounding noise.
    let lt = l.transpose();
    (l + lt) * 0.5
}

/// Analytic Jacobian `L = dK/du` of the curvature map in log coordinates,
/// assembled by the chain rule through the law of cosines and symmetrised.
/// `L` is positive semi-definite with kernel `(1, ..., 1)` and the sign
/// pattern: positive diagonal, nonpositive on edges, zero elsewhere.
pub fn curvature_jacobian_u(
    surface: &WeightedSurface,
    metric: &PackingMetric,
) -> Result<DMatrix<f64>> {
    let lengths = edge_lengths(surface, metric);
    let angles = corner_angles_from_lengths(surface, &lengths)?;
    let blocks = par::map_indexed(surface.faces().len(), |f| {
        face_jacobian_block(surface, metric, &lengths, &angles, f)
    });
    Ok(assemble_jacobian(surface, &blocks))
}

/// Sequential reference path for [`curvature_jacobian_u`].
pub fn curvature_jacobian_u_seq(
    surface: &WeightedSurface,
    metric: &PackingMetric,
) -> Result<DMatrix<f64>> {
    let lengths = edge_lengths(surface, metric);
    let angles = corner_angles_from_lengths(surface, &lengths)?;
    let mut blocks = Vec::with_capacity(surface.faces().len());
    for f in 0..surface.faces().len() {
        blocks.push(face_jacobian_block(surface, metric, &lengths, &angles, f));
    }
    Ok(assemble_jacobian(surface, &blocks))
}

/// Everything the curvature map produces at one metric: lengths, corner
/// angles, `K`, `R_alpha` and the scalar invariants.
#[derive(Debug, Clone)]
pub struct CurvatureState {
    pub alpha: f64,
    pub lengths: Vec<f64>,
    pub corner_angles: Vec<[f64; 3]>,
    pub k: Vec<f64>,
    pub r_alpha: Vec<f64>,
    pub s_alpha: f64,
    pub k_av: f64,
}

impl CurvatureState {
    pub fn compute(surface: &WeightedSurface, metric: &PackingMetric, alpha: f64) -> Result<Self> {
        let lengths = edge_lengths(surface, metric);
        let corner_angles = corner_angles_from_lengths(surface, &lengths)?;
        let k = curvature_from_angles(surface, &corner_angles);
        let r_alpha: Vec<f64> = k
            .iter()
            .zip(metric.radii())
            .map(|(&ki, &ri)| ki / ri.powf(alpha))
            .collect();
        let chi = surface.euler_characteristic() as f64;
        Ok(Self {
            alpha,
            lengths,
            corner_angles,
            k,
            r_alpha,
            s_alpha: 2.0 * std::f64::consts::PI * chi / norm_alpha(metric, alpha),
            k_av: 2.0 * std::f64::consts::PI * chi / surface.vertex_count() as f64,
        })
    }
}
