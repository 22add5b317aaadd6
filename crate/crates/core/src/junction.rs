//! Josephson junctions: the lumped current-phase model and closed-form references.

use crate::error::{Error, Result};
use crate::fields::{FieldState, Scales};
use crate::mesh::Mesh;

/// Oriented edge path; the sign is +1 when the path runs tail to head.
pub type Path = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub enum JunctionModel {
    /// J = J_c sin φ replaces the London current on the path edges.
    Imposed { jc: f64 },
    /// The junction is a painted weak superconductor; nothing is imposed.
    AbInitio { region: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionSpec {
    pub label: String,
    /// Transversal lines crossing the junction, each carrying its own phase.
    pub paths: Vec<Path>,
    pub model: JunctionModel,
    pub half_width: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl JunctionSpec {
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Junction(format!("junction '{}' has no paths", self.label)));
        }
        for p in &self.paths {
            check_path(mesh, p)?;
        }
        match self.model {
            JunctionModel::Imposed { jc } if !(jc > 0.0) => {
                Err(Error::Junction(format!("junction '{}' needs J_c > 0, got {jc}", self.label)))
            }
            _ => Ok(()),
        }
    }

    /// Critical current from the interface densities and half-width.
    pub fn thin_limit_jc(&self) -> f64 {
        thin_limit_jc(self.rho1, self.rho2, self.half_width)
    }
}

/// Checks that consecutive edges of the path join head to tail.
pub fn check_path(mesh: &Mesh, path: &Path) -> Result<()> {
    if path.is_empty() {
        return Err(Error::Junction("empty path".into()));
    }
    let ends = |&(e, s): &(usize, f64)| -> Result<(usize, usize)> {
        if e >= mesh.n_edges() || (s != 1.0 && s != -1.0) {
            return Err(Error::Junction(format!("bad path entry ({e}, {s})")));
        }
        let [t, h] = mesh.edge_verts[e];
        Ok(if s > 0.0 { (t, h) } else { (h, t) })
    };
    let mut prev = ends(&path[0])?.1;
    for entry in &path[1..] {
        let (a, b) = ends(entry)?;
        if a != prev {
            return Err(Error::Junction(format!("path is disconnected at edge {}", entry.0)));
        }
        prev = b;
    }
    Ok(())
}

/// Total length of a path.
pub fn path_length(mesh: &Mesh, path: &Path) -> f64 {
    path.iter().map(|&(e, _)| mesh.edge_len[e]).sum()
}

/// Gauge-invariant phase difference φ = −s·ΣΦ along a path.
pub fn phase_across(mesh: &Mesh, state: &FieldState, path: &Path, scales: &Scales) -> Result<f64> {
    check_path(mesh, path)?;
    Ok(phase_unchecked(&state.phi, path, scales))
}

pub(crate) fn phase_unchecked(phi: &[f64], path: &Path, scales: &Scales) -> f64 {
    -scales.charge_sign * path.iter().map(|&(e, s)| s * phi[e]).sum::<f64>()
}

pub fn imposed_current(phi: f64, jc: f64) -> f64 {
    jc * phi.sin()
}

/// Critical current of a thin barrier, √(ρ₁ρ₂)/(2a) in internal units.
pub fn thin_limit_jc(rho1: f64, rho2: f64, a: f64) -> f64 {
    (rho1 * rho2).sqrt() / (2.0 * a)
}

/// Critical current of a rectangular barrier with decay constant κ.
pub fn analytic_jc_kappa(rho1: f64, rho2: f64, a: f64, kappa: f64) -> f64 {
    kappa * (rho1 * rho2).sqrt() / (2.0 * kappa * a).sinh()
}

/// Quadratic condensate density inside a barrier carrying current density `j`.
pub fn rho_profile(z: f64, rho1: f64, rho2: f64, a: f64, j: f64) -> Result<f64> {
    let lhs = 4.0 * a * a * j * j;
    let rhs = rho1 * rho2;
    if lhs > rhs {
        return Err(Error::Supercritical { lhs, rhs });
    }
    let root = (rhs - lhs).sqrt();
    let c2 = (rho1 + rho2 - 2.0 * root) / (4.0 * a * a);
    let c1 = (rho2 - rho1) / (2.0 * a);
    let c0 = (rho1 + rho2 + 2.0 * root) / 4.0;
    Ok(c2 * z * z + c1 * z + c0)
}

/// Small-amplitude angular frequency of a lumped junction whose path has length `path_len`.
///
/// Summing Φ̈ = −J_c sin φ·Δℓ over the path gives φ̈ = −J_c ℓ sin φ.
pub fn plasma_frequency_estimate(jc: f64, path_len: f64) -> f64 {
    (jc * path_len).sqrt()
}
