//! Scalar observables recorded during a run.

use crate::junction::Path;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeKind {
    /// Φ on one edge.
    EdgeFlux { edge: usize },
    /// Supercurrent density along one edge (electric current, sign of q included).
    EdgeCurrent { edge: usize },
    /// δρ on one vertex.
    VertexCharge { vertex: usize },
    /// Josephson phase across a path.
    JunctionPhase { path: Path },
    /// Mean current density over edges, in the J = J_c sin φ convention.
    JunctionCurrent { edges: Vec<usize> },
    /// Trapped flux in units of the flux quantum.
    Fluxoid { faces: Vec<(usize, f64)>, path: Path, sign: f64 },
    /// Staggered discrete energy.
    Energy,
    /// Σ ΔV·δρ.
    TotalCharge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    #[serde(flatten)]
    pub kind: ProbeKind,
}

impl Probe {
    pub fn new(label: &str, kind: ProbeKind) -> Self {
        Self { label: label.into(), kind }
    }
}
