//! Bundled mesh generators: the small closed complexes used throughout the
//! tests, benches and the CLI examples. All surfaces default to weight 0 on
//! every edge (tangent circles).

use crate::meshdoc::MeshDocument;

/// Boundary of the 3-simplex: the 4-vertex triangulation of the sphere.
pub fn tetrahedron_sphere() -> MeshDocument {
    MeshDocument::surface(4, vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
}

/// The octahedron: 6 vertices, 8 faces, every vertex of degree 4.
pub fn octahedron() -> MeshDocument {
    MeshDocument::surface(
        6,
        vec![
            [0, 1, 2],
            [0, 2, 3],
            [0, 3, 4],
            [0, 4, 1],
            [5, 2, 1],
            [5, 3, 2],
            [5, 4, 3],
            [5, 1, 4],
        ],
    )
}

/// The 7-vertex (Csaszar/Moebius) torus: the vertex-minimal triangulation of
/// the torus. Every pair of vertices is an edge and every vertex has degree 6,
/// so with unit radii and zero weights the surface is flat.
pub fn torus_7() -> MeshDocument {
    let mut faces = Vec::with_capacity(14);
    for i in 0..7usize {
        faces.push([i, (i + 1) % 7, (i + 3) % 7]);
        faces.push([i, (i + 2) % 7, (i + 3) % 7]);
    }
    MeshDocument::surface(7, faces)
}

/// A `p x q` grid triangulation of the flat torus (each square split into two
/// triangles). Requires `p, q >= 3` so the complex stays simplicial. Every
/// vertex has degree 6.
pub fn triangulated_torus(p: usize, q: usize) -> MeshDocument {
    assert!(p >= 3 && q >= 3, "grid torus needs p, q >= 3");
    let v = |i: usize, j: usize| (i % p) * q + (j % q);
    let mut faces = Vec::with_capacity(2 * p * q);
    for i in 0..p {
        for j in 0..q {
            let a = v(i, j);
            let b = v(i + 1, j);
            let c = v(i, j + 1);
            let d = v(i + 1, j + 1);
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    MeshDocument::surface(p * q, faces)
}

/// Boundary of the 4-simplex: the 5-vertex triangulation of the 3-sphere
/// (all five 4-element subsets of the vertices as tetrahedra).
pub fn boundary_4_simplex() -> MeshDocument {
    MeshDocument::tetrahedral(
        5,
        vec![
            [0, 1, 2, 3],
            [0, 1, 2, 4],
            [0, 1, 3, 4],
            [0, 2, 3, 4],
            [1, 2, 3, 4],
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_build_valid_complexes() {
        assert_eq!(
            tetrahedron_sphere()
                .build_surface()
                .unwrap()
                .euler_characteristic(),
            2
        );
        assert_eq!(
            octahedron().build_surface().unwrap().euler_characteristic(),
            2
        );
        assert_eq!(torus_7().build_surface().unwrap().euler_characteristic(), 0);
        assert_eq!(
            boundary_4_simplex()
                .build_tet_complex()
                .unwrap()
                .euler_characteristic(),
            0
        );
    }

    #[test]
    fn grid_torus_is_flat_and_closed() {
        for (p, q) in [(3, 3), (4, 5), (6, 3)] {
            let s = triangulated_torus(p, q).build_surface().unwrap();
            assert_eq!(s.euler_characteristic(), 0);
            assert_eq!(s.faces().len(), 2 * p * q);
            for v in 0..s.vertex_count() {
                assert_eq!(s.degree(v), 6);
            }
        }
    }
}
