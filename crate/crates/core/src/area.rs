//! Per-vertex area elements for the generalised curvature flow. Concrete
//! selectors: powers of the radius, a third of the incident triangle areas,
//! and the dual cell cut out by the radical lines of the packing circles.
//! The latter two partition the total surface area.

use std::str::FromStr;

use crate::complex::WeightedSurface;
use crate::error::{Error, Result};
use crate::packing2d::{self, PackingMetric};
use crate::par;

/// Selector for the per-vertex area element `A_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AreaElement {
    /// `A_i = r_i^alpha`; reproduces the plain `alpha`-flow.
    PowerRadius(f64),
    /// `A_i = sum of Area(t) / 3` over incident triangles `t`.
    ThirdArea,
    /// `A_i = Area(D_i)` where `D_i` is the dual cell of `i` bounded by the
    /// radical lines of the packing circles.
    DualCell,
}

impl AreaElement {
    pub fn evaluate(&self, surface: &WeightedSurface, metric: &PackingMetric) -> Result<Vec<f64>> {
        let a = match self {
            AreaElement::PowerRadius(alpha) => {
                metric.radii().iter().map(|r| r.powf(*alpha)).collect()
            }
            AreaElement::ThirdArea => area_third(surface, metric)?,
            AreaElement::DualCell => area_dual_cell(surface, metric)?,
        };
        for (vertex, &ai) in a.iter().enumerate() {
            if !ai.is_finite() || ai <= 0.0 {
                return Err(Error::AreaElementFailure { vertex });
            }
        }
        Ok(a)
    }
}

impl FromStr for AreaElement {
    type Err = Error;

    /// Accepts `third`, `dual`, or `power:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "third" => Ok(AreaElement::ThirdArea),
            "dual" => Ok(AreaElement::DualCell),
            other => {
                if let Some(alpha) = other.strip_prefix("power:") {
                    let alpha: f64 = alpha
                        .parse()
                        .map_err(|_| Error::Config(format!("bad area selector {other:?}")))?;
                    Ok(AreaElement::PowerRadius(alpha))
                } else {
                    Err(Error::Config(format!(
                        "unknown area selector {other:?}, expected power:<alpha>|third|dual"
                    )))
                }
            }
        }
    }
}

fn heron(a: f64, b: f64, c: f64) -> f64 {
    let s = 0.5 * (a + b + c);
    (s * (s - a) * (s - b) * (s - c)).max(0.0).sqrt()
}

/// Areas of all faces.
pub fn face_areas(surface: &WeightedSurface, metric: &PackingMetric) -> Vec<f64> {
    let lengths = packing2d::edge_lengths(surface, metric);
    par::map_indexed(surface.faces().len(), |f| {
        let [a, b, c] = packing2d::face_side_lengths(surface, &lengths, f);
        heron(a, b, c)
    })
}

/// Total area of the surface under the given metric.
pub fn total_area(surface: &WeightedSurface, metric: &PackingMetric) -> f64 {
    face_areas(surface, metric).iter().sum()
}

/// `A_i = sum over incident faces of Area / 3`.
pub fn area_third(surface: &WeightedSurface, metric: &PackingMetric) -> Result<Vec<f64>> {
    let areas = face_areas(surface, metric);
    let mut a = vec![0.0; metric.len()];
    for (f, face) in surface.faces().iter().enumerate() {
        for &v in face {
            a[v] += areas[f] / 3.0;
        }
    }
    Ok(a)
}

fn shoelace(points: &[[f64; 2]]) -> f64 {
    let mut twice = 0.0;
    for (idx, p) in points.iter().enumerate() {
        let q = points[(idx + 1) % points.len()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * twice.abs()
}

/// Corner cells of one face: embeds the triangle in the plane, finds the
/// radical center `O` of the three packing circles and the radical-line feet
/// on the two edges at each corner, and returns the three quadrilateral
/// areas in face vertex order. At weight 0 the feet are the tangency points.
fn face_corner_cells(
    surface: &WeightedSurface,
    metric: &PackingMetric,
    f: usize,
) -> Result<[f64; 3]> {
    let [i, j, k] = surface.faces()[f];
    let (ri, rj, rk) = (metric.radius(i), metric.radius(j), metric.radius(k));
    let lij = packing2d::edge_length(ri, rj, surface.weight_between(i, j));
    let lik = packing2d::edge_length(ri, rk, surface.weight_between(i, k));
    let ljk = packing2d::edge_length(rj, rk, surface.weight_between(j, k));

    let pi = [0.0, 0.0];
    let pj = [lij, 0.0];
    let xk = (lij * lij + lik * lik - ljk * ljk) / (2.0 * lij);
    let yk = (lik * lik - xk * xk).max(0.0).sqrt();
    let pk = [xk, yk];

    // Radical center: equal power with respect to all three circles.
    let ox = (lij * lij + ri * ri - rj * rj) / (2.0 * lij);
    let oy = (lik * lik + ri * ri - rk * rk - 2.0 * xk * ox) / (2.0 * yk);
    let o = [ox, oy];

    // Feet of the radical lines on the edges; each lies strictly inside
    // its edge for weights in [0, pi/2].
    let foot = |p: [f64; 2], q: [f64; 2], l: f64, rp: f64, rq: f64| -> [f64; 2] {
        let s = (l * l + rp * rp - rq * rq) / (2.0 * l);
        [p[0] + s / l * (q[0] - p[0]), p[1] + s / l * (q[1] - p[1])]
    };
    let fij = foot(pi, pj, lij, ri, rj);
    let fik = foot(pi, pk, lik, ri, rk);
    let fjk = foot(pj, pk, ljk, rj, rk);

    // O must lie inside the triangle for the cells to partition it.
    let cross = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let total = cross(pi, pj, pk);
    let tol = -1e-12 * total;
    if cross(pi, pj, o) < tol || cross(pj, pk, o) < tol || cross(pk, pi, o) < tol {
        return Err(Error::DualPointOutside { face: f });
    }

    Ok([
        shoelace(&[pi, fij, o, fik]),
        shoelace(&[pj, fjk, o, fij]),
        shoelace(&[pk, fik, o, fjk]),
    ])
}

/// `A_i = Area(D_i)`: per face, the three radical-line corner cells
/// partition the triangle; each vertex collects its corner cell over all
/// incident faces.
pub fn area_dual_cell(surface: &WeightedSurface, metric: &PackingMetric) -> Result<Vec<f64>> {
    let cells = par::try_map_indexed(surface.faces().len(), |f| {
        face_corner_cells(surface, metric, f)
    })?;
    let mut a = vec![0.0; metric.len()];
    for (f, face) in surface.faces().iter().enumerate() {
        for (c, &v) in face.iter().enumerate() {
            a[v] += cells[f][c];
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshes;
    use crate::packing2d::random_metric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tetra() -> WeightedSurface {
        meshes::tetrahedron_sphere().build_surface().unwrap()
    }

    #[test]
    fn third_area_on_unit_tetrahedron() {
        let s = tetra();
        let m = PackingMetric::uniform(4, 1.0);
        let a = area_third(&s, &m).unwrap();
        let sqrt3 = 3.0f64.sqrt();
        for ai in &a {
            assert!((ai - sqrt3).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 4.0 * sqrt3).abs() < 1e-12);

        // Doubling the radii at weight 0 scales every area by 4.
        let a2 = area_third(&s, &m.scaled(2.0)).unwrap();
        for (x, y) in a.iter().zip(&a2) {
            assert!((4.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_cells_on_unit_tetrahedron() {
        let s = tetra();
        let m = PackingMetric::uniform(4, 1.0);
        let a = area_dual_cell(&s, &m).unwrap();
        let sqrt3 = 3.0f64.sqrt();
        for ai in &a {
            assert!((ai - sqrt3).abs() < 1e-12, "centroid cells by symmetry");
        }
    }

    #[test]
    fn dual_cells_match_hand_computed_isosceles_face() {
        // One face with radii (1, 1, 2) and weight 0: lengths (2, 3, 3).
        // Embedding gives O = (1, 1/sqrt(2)) and corner cells
        // (sqrt(2)/2, sqrt(2)/2, sqrt(2)).
        let s = tetra();
        let m = PackingMetric::new(vec![1.0, 1.0, 2.0, 1.0]).unwrap();
        let cells = face_corner_cells(&s, &m, 0).unwrap();
        let sqrt2 = 2.0f64.sqrt();
        assert!((cells[0] - sqrt2 / 2.0).abs() < 1e-12);
        assert!((cells[1] - sqrt2 / 2.0).abs() < 1e-12);
        assert!((cells[2] - sqrt2).abs() < 1e-12);
    }

    #[test]
    fn partitions_hold_on_random_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for doc in [
            meshes::tetrahedron_sphere(),
            meshes::octahedron(),
            meshes::torus_7(),
        ] {
            let s = doc.build_surface().unwrap();
            for _ in 0..50 {
                let m = random_metric(s.vertex_count(), &mut rng, 0.5, 2.0);
                let total = total_area(&s, &m);
                let third = area_third(&s, &m).unwrap();
                assert!((third.iter().sum::<f64>() - total).abs() < 1e-9);
                let dual = area_dual_cell(&s, &m).unwrap();
                assert!((dual.iter().sum::<f64>() - total).abs() < 1e-9);
                for ai in dual {
                    assert!(ai > 0.0);
                }
            }
        }
    }

    #[test]
    fn dual_point_stays_inside_across_the_weight_range() {
        // The radical center is the center of the circle orthogonal to the
        // three packing circles; for weights in [0, pi/2] it stays inside
        // the triangle even at extreme radii ratios. The error guard is for
        // inputs outside that regime.
        let faces = meshes::tetrahedron_sphere().faces.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for phi in [0.0, 0.7, std::f64::consts::FRAC_PI_2] {
            let s = WeightedSurface::with_uniform_weight(4, faces.clone(), phi).unwrap();
            for _ in 0..200 {
                let m = random_metric(4, &mut rng, 0.02, 50.0);
                let total = total_area(&s, &m);
                let dual = area_dual_cell(&s, &m).unwrap();
                assert!((dual.iter().sum::<f64>() - total).abs() < 1e-9 * total.max(1.0));
            }
        }
    }

    #[test]
    fn selector_parsing() {
        assert_eq!(
            "third".parse::<AreaElement>().unwrap(),
            AreaElement::ThirdArea
        );
        assert_eq!(
            "dual".parse::<AreaElement>().unwrap(),
            AreaElement::DualCell
        );
        assert_eq!(
            "power:2".parse::<AreaElement>().unwrap(),
            AreaElement::PowerRadius(2.0)
        );
        assert!("voronoi".parse::<AreaElement>().is_err());
        assert!("power:x".parse::<AreaElement>().is_err());
    }

    #[test]
    fn power_selector_is_positive_everywhere() {
        let s = tetra();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let m = random_metric(4, &mut rng, 0.1, 10.0);
        for alpha in [-2.0, 0.0, 3.5] {
            let a = AreaElement::PowerRadius(alpha).evaluate(&s, &m).unwrap();
            assert!(a.iter().all(|&x| x > 0.0));
        }
    }
}
