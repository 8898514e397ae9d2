//! Mesh document format: a small JSON schema describing a triangulated
//! surface (with edge weights) or a tetrahedral complex, with an optional
//! initial metric.
//!
//! Schema (version 1):
//!
//! ```json
//! {
//!   "schema": 1,
//!   "dim": 2,
//!   "vertex_count": 4,
//!   "faces": [[0,1,2], [0,1,3], [0,2,3], [1,2,3]],
//!   "weights": {"0-1": 0.0, "0-2": 0.0},
//!   "radii": [1.0, 1.0, 1.0, 1.0]
//! }
//! ```
//!
//! * vertex indices are 0-based;
//! * `faces` is required for `dim == 2`, `tets` for `dim == 3`;
//! * `weights` (2D only) is keyed `"i-j"` with `i < j` and must cover every
//!   derived edge exactly once when present; omitted weights default to 0;
//! * `radii`, when present, must list one positive radius per vertex.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::complex::{TetComplex, WeightedSurface};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDocument {
    pub schema: u32,
    pub dim: u8,
    pub vertex_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub faces: Option<Vec<[usize; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tets: Option<Vec<[usize; 4]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weights: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub radii: Option<Vec<f64>>,
}

fn parse_edge_key(key: &str) -> Result<(usize, usize)> {
    let mut parts = key.splitn(2, '-');
    let parse = |s: Option<&str>| -> Result<usize> {
        s.and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Document(format!("bad edge key {key:?}, expected \"i-j\"")))
    };
    let i = parse(parts.next())?;
    let j = parse(parts.next())?;
    if i >= j {
        return Err(Error::Document(format!(
            "edge key {key:?} must be \"i-j\" with i < j"
        )));
    }
    Ok((i, j))
}

impl MeshDocument {
    pub fn surface(vertex_count: usize, faces: Vec<[usize; 3]>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            dim: 2,
            vertex_count,
            faces: Some(faces),
            tets: None,
            weights: None,
            radii: None,
        }
    }

    pub fn tetrahedral(vertex_count: usize, tets: Vec<[usize; 4]>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            dim: 3,
            vertex_count,
            faces: None,
            tets: None.or(Some(tets)),
            weights: None,
            radii: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MeshDocument =
            serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh document serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Document(format!(
                "unsupported schema version {}",
                self.schema
            )));
        }
        match self.dim {
            2 => {
                if self.faces.is_none() {
                    return Err(Error::Document("dim 2 requires \"faces\"".into()));
                }
                if self.tets.is_some() {
                    return Err(Error::Document("dim 2 must not contain \"tets\"".into()));
                }
            }
            3 => {
                if self.tets.is_none() {
                    return Err(Error::Document("dim 3 requires \"tets\"".into()));
                }
                if self.faces.is_some() || self.weights.is_some() {
                    return Err(Error::Document(
                        "dim 3 must not contain \"faces\" or \"weights\"".into(),
                    ));
                }
            }
            d => return Err(Error::Document(format!("dim must be 2 or 3, got {d}"))),
        }
        if let Some(radii) = &self.radii {
            if radii.len() != self.vertex_count {
                return Err(Error::Document(format!(
                    "radii length {} != vertex count {}",
                    radii.len(),
                    self.vertex_count
                )));
            }
        }
        Ok(())
    }

    /// Builds the weighted surface described by a 2D document. Missing
    /// weights default to 0 on every edge.
    pub fn build_surface(&self) -> Result<WeightedSurface> {
        self.validate()?;
        if self.dim != 2 {
            return Err(Error::Document("expected a 2D mesh document".into()));
        }
        let faces = self.faces.clone().unwrap();
        match &self.weights {
            None => WeightedSurface::with_uniform_weight(self.vertex_count, faces, 0.0),
            Some(map) => {
                let mut weights = Vec::with_capacity(map.len());
                for (key, &value) in map {
                    weights.push((parse_edge_key(key)?, value));
                }
                WeightedSurface::new(self.vertex_count, faces, &weights)
            }
        }
    }

    /// Builds the tetrahedral complex described by a 3D document.
    pub fn build_tet_complex(&self) -> Result<TetComplex> {
        self.validate()?;
        if self.dim != 3 {
            return Err(Error::Document("expected a 3D mesh document".into()));
        }
        TetComplex::new(self.vertex_count, self.tets.clone().unwrap())
    }

    /// Initial radii: the `radii` field if present (validated positive),
    /// otherwise all ones.
    pub fn initial_radii(&self) -> Result<Vec<f64>> {
        match &self.radii {
            None => Ok(vec![1.0; self.vertex_count]),
            Some(radii) => {
                for (index, &value) in radii.iter().enumerate() {
                    if !value.is_finite() || value <= 0.0 {
                        return Err(Error::NonpositiveRadius { index, value });
                    }
                }
                Ok(radii.clone())
            }
        }
    }
}
