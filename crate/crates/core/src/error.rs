//! Crate-wide error type.

use thiserror::Error;

use crate::ode::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // -- combinatorial construction --
    #[error("empty {0} list")]
    EmptyInput(&'static str),
    #[error("vertex index {index} out of range for vertex count {count}")]
    VertexOutOfRange { index: usize, count: usize },
    #[error("face has a repeated vertex: {face:?}")]
    DegenerateFace { face: [usize; 3] },
    #[error("duplicate face {face:?}")]
    DuplicateFace { face: [usize; 3] },
    #[error("edge {{{i},{j}}} lies in {count} faces, expected exactly 2")]
    NonManifold { i: usize, j: usize, count: usize },
    #[error("tetrahedron has a repeated vertex: {tet:?}")]
    DegenerateTet { tet: [usize; 4] },
    #[error("duplicate tetrahedron {tet:?}")]
    DuplicateTet { tet: [usize; 4] },
    #[error("triangle {tri:?} lies in {count} tetrahedra, expected exactly 2")]
    NonManifoldTriangle { tri: [usize; 3], count: usize },
    #[error("closed 3-complex must have Euler characteristic 0, got {chi}")]
    NotClosed { chi: i64 },
    #[error("weight {value} on edge {{{i},{j}}} is outside [0, pi/2]")]
    BadWeight { i: usize, j: usize, value: f64 },
    #[error("no weight supplied for edge {{{i},{j}}}")]
    MissingWeight { i: usize, j: usize },
    #[error("weight key {{{i},{j}}} is not an edge or appears twice")]
    UnknownWeight { i: usize, j: usize },
    #[error("vertex subset must be nonempty and proper")]
    EmptyOrFullSubset,
    #[error("vertex subset must be nonempty")]
    EmptySubset,
    #[error("subset operations support at most 64 vertices, got {0}")]
    SubsetTooLarge(usize),

    // -- metric geometry --
    #[error("radius at vertex {index} must be positive, got {value}")]
    NonpositiveRadius { index: usize, value: f64 },
    #[error("triangle inequality fails for lengths ({a}, {b}, {c})")]
    DegenerateTriangle { a: f64, b: f64, c: f64 },
    #[error("edge lengths {lengths:?} do not realize a Euclidean tetrahedron")]
    DegenerateTetGeometry { lengths: [f64; 6] },
    #[error("inadmissible sphere packing metric: Q <= 0 on tetrahedra {offending:?}")]
    InadmissibleMetric { offending: Vec<usize> },
    #[error("finite-difference step at vertex {vertex} leaves the admissible region")]
    FdNearBoundary { vertex: usize },
    #[error("dual point of face {face} falls outside its triangle")]
    DualPointOutside { face: usize },
    #[error("area element produced a nonpositive value at vertex {vertex}")]
    AreaElementFailure { vertex: usize },

    // -- spectral --
    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),
    #[error("operator is not positive semi-definite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },
    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),

    // -- flows --
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error("line-integral quadrature did not converge")]
    QuadratureFailure,
    #[error("alpha = -1 is excluded here (norm exponent alpha + 1 vanishes)")]
    AlphaExcluded,
    #[error("metric does not have constant alpha-curvature: deviation {deviation:e}")]
    NotConstantCurvature { deviation: f64 },

    // -- subset checkers --
    #[error("vertex count {n} exceeds the enumeration cap {cap}")]
    TooManyVertices { n: usize, cap: usize },

    // -- ODE engine --
    #[error("guard rejected every trial step at the minimum step size near t = {t}")]
    GuardRejectionAtMinStep { t: f64, trajectory: Box<Trajectory> },
    #[error("step budget exhausted at t = {t}")]
    MaxStepsExceeded { t: f64, trajectory: Box<Trajectory> },

    // -- mesh documents --
    #[error("mesh document error: {0}")]
    Document(String),
}
