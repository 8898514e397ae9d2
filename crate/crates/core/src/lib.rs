//! Discrete curvatures and curvature flows on triangulated surfaces and
//! 3-manifolds carrying circle / sphere packing metrics.
//!
//! A *circle packing metric* assigns a positive radius to every vertex of a
//! weighted triangulated surface; edge lengths follow from the radii and the
//! prescribed intersection angles. A *sphere packing metric* does the same on
//! a triangulated 3-manifold with `l_ij = r_i + r_j`. This crate computes the
//! associated discrete curvatures (angle deficits, their `alpha`-normalised
//! variants, Cooper–Rivin solid-angle deficits), integrates the curvature
//! flows that drive a metric toward constant curvature, and verifies the
//! combinatorial existence conditions (Thurston-type subset inequalities)
//! and spectral stability criteria that govern those flows.
//!
//! The crate is organised around the pipeline:
//!
//! * [`complex`] — combinatorial surfaces and tetrahedral complexes,
//! * [`packing2d`] / [`packing3d`] — metric geometry and curvature maps,
//! * [`spectral`] — discrete Laplacians, eigenvalues, finite differences,
//! * [`flow2d`] / [`flow3d`] — flow integration built on [`ode`],
//! * [`thurston`] — exhaustive subset checkers,
//! * [`area`] — pluggable area elements for the generalised flow,
//! * [`meshdoc`] / [`meshes`] — mesh document I/O and bundled test meshes.
//!
//! With the default `parallel` feature, per-face and per-tetrahedron loops,
//! subset enumeration, finite-difference columns and multistart flow runs
//! are distributed with rayon; results are bit-identical to the sequential
//! fallback because all reductions run in a fixed order.

pub mod area;
pub mod complex;
pub mod error;
pub mod flow2d;
pub mod flow3d;
pub mod meshdoc;
pub mod meshes;
pub mod ode;
pub mod packing2d;
pub mod packing3d;
pub mod spectral;
pub mod thurston;

mod par;

pub use error::{Error, Result};
