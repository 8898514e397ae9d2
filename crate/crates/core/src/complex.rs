//! Combinatorial structures for closed triangulated surfaces and
//! 3-manifolds, plus the vertex-subset operations (links and induced
//! subcomplexes) used by the existence checkers.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Canonical (sorted) key for an undirected edge.
#[inline]
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut s = f;
    s.sort_unstable();
    s
}

fn sorted4(t: [usize; 4]) -> [usize; 4] {
    let mut s = t;
    s.sort_unstable();
    s
}

/// A closed triangulated surface with a weight `phi` in `[0, pi/2]` on every
/// edge. Immutable after construction; all derived adjacency is precomputed.
#[derive(Debug, Clone)]
pub struct WeightedSurface {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    edge_ids: HashMap<(usize, usize), usize>,
    weights: Vec<f64>,
    vertex_faces: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    max_degree: usize,
}

impl WeightedSurface {
    /// Builds a surface from a face list and per-edge weights, verifying
    /// that the complex is simplicial and closed (every edge in exactly two
    /// faces) and that every weight lies in `[0, pi/2]`.
    ///
    /// The weight list must cover every derived edge exactly once; keys are
    /// unordered vertex pairs.
    pub fn new(
        vertex_count: usize,
        faces: Vec<[usize; 3]>,
        weights: &[((usize, usize), f64)],
    ) -> Result<Self> {
        let mut surface = Self::build_combinatorics(vertex_count, faces)?;

        let mut seen = vec![false; surface.edges.len()];
        for &((a, b), value) in weights {
            let key = edge_key(a, b);
            let id = match surface.edge_ids.get(&key) {
                Some(&id) if !seen[id] => id,
                _ => return Err(Error::UnknownWeight { i: key.0, j: key.1 }),
            };
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&value) {
                return Err(Error::BadWeight {
                    i: key.0,
                    j: key.1,
                    value,
                });
            }
            seen[id] = true;
            surface.weights[id] = value;
        }
        if let Some(id) = seen.iter().position(|&s| !s) {
            let (i, j) = surface.edges[id];
            return Err(Error::MissingWeight { i, j });
        }
        Ok(surface)
    }

    /// Builds a surface with the same weight on every edge.
    pub fn with_uniform_weight(
        vertex_count: usize,
        faces: Vec<[usize; 3]>,
        phi: f64,
    ) -> Result<Self> {
        let mut surface = Self::build_combinatorics(vertex_count, faces)?;
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&phi) {
            let (i, j) = surface.edges[0];
            return Err(Error::BadWeight { i, j, value: phi });
        }
        surface.weights.iter_mut().for_each(|w| *w = phi);
        Ok(surface)
    }

    fn build_combinatorics(vertex_count: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyInput("face"));
        }
        let mut face_set = HashMap::new();
        for &face in &faces {
            for &v in &face {
                if v >= vertex_count {
                    return Err(Error::VertexOutOfRange {
                        index: v,
                        count: vertex_count,
                    });
                }
            }
            let s = sorted3(face);
            if s[0] == s[1] || s[1] == s[2] {
                return Err(Error::DegenerateFace { face });
            }
            if face_set.insert(s, ()).is_some() {
                return Err(Error::DuplicateFace { face });
            }
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_face_count = Vec::new();
        for &[a, b, c] in &faces {
            for (p, q) in [(a, b), (b, c), (a, c)] {
                let key = edge_key(p, q);
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_face_count.push(0usize);
                    edges.len() - 1
                });
                edge_face_count[id] += 1;
            }
        }
        for (id, &count) in edge_face_count.iter().enumerate() {
            if count != 2 {
                let (i, j) = edges[id];
                return Err(Error::NonManifold { i, j, count });
            }
        }

        let mut vertex_faces = vec![Vec::new(); vertex_count];
        for (f, &face) in faces.iter().enumerate() {
            for &v in &face {
                vertex_faces[v].push(f);
            }
        }
        let mut degrees = vec![0usize; vertex_count];
        for &(a, b) in &edges {
            degrees[a] += 1;
            degrees[b] += 1;
        }
        let max_degree = degrees.iter().copied().max().unwrap_or(0);

        let weights = vec![0.0; edges.len()];
        Ok(Self {
            vertex_count,
            faces,
            edges,
            edge_ids,
            weights,
            vertex_faces,
            degrees,
            max_degree,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge id of the unordered pair `{a, b}`, if it is an edge.
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_ids.get(&edge_key(a, b)).copied()
    }

    /// Weight of edge `id`.
    pub fn weight(&self, id: usize) -> f64 {
        self.weights[id]
    }

    /// Weight of the edge `{a, b}`; panics if the pair is not an edge.
    pub fn weight_between(&self, a: usize, b: usize) -> f64 {
        self.weights[self.edge_id(a, b).expect("not an edge")]
    }

    /// Ids of the faces incident to vertex `v`.
    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `|V| - |E| + |F|`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }
}

/// A closed triangulated 3-manifold (combinatorially: every triangle lies in
/// exactly two tetrahedra, and the Euler characteristic vanishes).
#[derive(Debug, Clone)]
pub struct TetComplex {
    vertex_count: usize,
    tets: Vec<[usize; 4]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    vertex_tets: Vec<Vec<usize>>,
}

impl TetComplex {
    pub fn new(vertex_count: usize, tets: Vec<[usize; 4]>) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::EmptyInput("tetrahedron"));
        }
        let mut tet_set = HashMap::new();
        for &tet in &tets {
            for &v in &tet {
                if v >= vertex_count {
                    return Err(Error::VertexOutOfRange {
                        index: v,
                        count: vertex_count,
                    });
                }
            }
            let s = sorted4(tet);
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DegenerateTet { tet });
            }
            if tet_set.insert(s, ()).is_some() {
                return Err(Error::DuplicateTet { tet });
            }
        }

        let mut tri_count: HashMap<[usize; 3], usize> = HashMap::new();
        let mut edge_set: HashMap<(usize, usize), ()> = HashMap::new();
        for &[a, b, c, d] in &tets {
            for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
                *tri_count.entry(sorted3(tri)).or_insert(0) += 1;
            }
            for (p, q) in [(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)] {
                edge_set.entry(edge_key(p, q)).or_insert(());
            }
        }
        for (&tri, &count) in &tri_count {
            if count != 2 {
                return Err(Error::NonManifoldTriangle { tri, count });
            }
        }
        let mut triangles: Vec<[usize; 3]> = tri_count.into_keys().collect();
        triangles.sort_unstable();
        let mut edges: Vec<(usize, usize)> = edge_set.into_keys().collect();
        edges.sort_unstable();

        let mut vertex_tets = vec![Vec::new(); vertex_count];
        for (t, &tet) in tets.iter().enumerate() {
            for &v in &tet {
                vertex_tets[v].push(t);
            }
        }

        let complex = Self {
            vertex_count,
            tets,
            triangles,
            edges,
            vertex_tets,
        };
        let chi = complex.euler_characteristic();
        if chi != 0 {
            return Err(Error::NotClosed { chi });
        }
        Ok(complex)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertex_tets(&self, v: usize) -> &[usize] {
        &self.vertex_tets[v]
    }

    /// `|V| - |E| + |F| - |T|`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.triangles.len() as i64
            - self.tets.len() as i64
    }
}

/// A subset of vertices, stored as a bitmask (at most 64 vertices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VertexSubset {
    bits: u64,
    n: usize,
}

impl VertexSubset {
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        if n > 64 {
            return Err(Error::SubsetTooLarge(n));
        }
        let mut bits = 0u64;
        for &v in indices {
            if v >= n {
                return Err(Error::VertexOutOfRange { index: v, count: n });
            }
            bits |= 1 << v;
        }
        Ok(Self { bits, n })
    }

    /// Subset from a raw bitmask; bits at positions `>= n` are discarded.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        let mask = if n >= 64 { !0 } else { (1u64 << n) - 1 };
        Self {
            bits: bits & mask,
            n,
        }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn contains(&self, v: usize) -> bool {
        v < 64 && self.bits & (1 << v) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.n
    }

    pub fn is_proper_nonempty(&self) -> bool {
        !self.is_empty() && !self.is_full()
    }

    pub fn complement(&self) -> Self {
        Self::from_bits(self.n, !self.bits)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&v| self.contains(v))
    }
}

/// A link pair `(e, v)` of a vertex subset `I`: an edge `e` with both
/// endpoints outside `I` and a vertex `v` in `I` such that `e` and `v`
/// span a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkPair {
    pub edge: (usize, usize),
    pub vertex: usize,
}

/// All link pairs of `I`. Exactly the faces with one vertex in `I`
/// contribute, each with its opposite edge.
pub fn link_pairs(surface: &WeightedSurface, subset: &VertexSubset) -> Result<Vec<LinkPair>> {
    if !subset.is_proper_nonempty() {
        return Err(Error::EmptyOrFullSubset);
    }
    let mut pairs = Vec::new();
    for &[a, b, c] in surface.faces() {
        let inside: Vec<usize> = [a, b, c]
            .into_iter()
            .filter(|&v| subset.contains(v))
            .collect();
        if inside.len() == 1 {
            let v = inside[0];
            let outside: Vec<usize> = [a, b, c].into_iter().filter(|&w| w != v).collect();
            pairs.push(LinkPair {
                edge: edge_key(outside[0], outside[1]),
                vertex: v,
            });
        }
    }
    Ok(pairs)
}

/// Subcomplex induced by a vertex subset: all simplices whose vertices lie
/// entirely in the subset.
#[derive(Debug, Clone)]
pub struct SubComplex {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub faces: Vec<[usize; 3]>,
}

impl SubComplex {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }
}

/// The induced subcomplex `F_I` of a nonempty vertex subset, with its Euler
/// characteristic.
pub fn induced_subcomplex(
    surface: &WeightedSurface,
    subset: &VertexSubset,
) -> Result<(SubComplex, i64)> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let vertices: Vec<usize> = subset.iter().collect();
    let edges: Vec<(usize, usize)> = surface
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| subset.contains(a) && subset.contains(b))
        .collect();
    let faces: Vec<[usize; 3]> = surface
        .faces()
        .iter()
        .copied()
        .filter(|f| f.iter().all(|&v| subset.contains(v)))
        .collect();
    let sub = SubComplex {
        vertices,
        edges,
        faces,
    };
    let chi = sub.euler_characteristic();
    Ok((sub, chi))
}
