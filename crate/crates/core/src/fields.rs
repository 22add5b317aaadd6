//! Unit system, material layout, dynamical state and driven sources.
//!
//! Internal units: lengths in λ_ref, time in λ_ref/c, condensate density in
//! the reference bulk density, flux in ħ/|q|. One flux quantum is therefore 2π.

use crate::error::{Error, Result};
use crate::mesh::{BoxRegion, Mesh};
use serde::{Deserialize, Serialize};

pub const FLUX_QUANTUM: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    /// ħ/(m c λ_ref) for the Cooper-pair mass m.
    pub eta: f64,
    /// Sign of the carrier charge, -1 for electron pairs.
    pub charge_sign: f64,
    /// Reference penetration depth in metres. Metadata only.
    pub lambda_ref: f64,
}

impl Default for Scales {
    fn default() -> Self {
        Self { eta: 0.0, charge_sign: -1.0, lambda_ref: 100e-9 }
    }
}

impl Scales {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!("eta must be a finite non-negative number, got {}", self.eta)));
        }
        if self.charge_sign != 1.0 && self.charge_sign != -1.0 {
            return Err(Error::Config(format!("charge_sign must be +1 or -1, got {}", self.charge_sign)));
        }
        Ok(())
    }

    /// η for a Cooper pair at a given penetration depth (metres).
    pub fn physical_eta(lambda_ref: f64) -> f64 {
        const HBAR: f64 = 1.054_571_817e-34;
        const M_PAIR: f64 = 2.0 * 9.109_383_7015e-31;
        const C: f64 = 299_792_458.0;
        HBAR / (M_PAIR * C * lambda_ref)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    /// (λ_ref/λ_L)² for this material; zero for vacuum.
    pub r0: f64,
}

impl Region {
    pub fn vacuum() -> Self {
        Self { name: "vacuum".into(), r0: 0.0 }
    }

    /// Superconductor with penetration depth `lambda` in units of λ_ref.
    pub fn superconductor(name: &str, lambda: f64) -> Self {
        Self { name: name.into(), r0: 1.0 / (lambda * lambda) }
    }

    pub fn is_superconductor(&self) -> bool {
        self.r0 > 0.0
    }
}

/// Per-vertex material assignment. Region 0 is the initial fill.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub regions: Vec<Region>,
    pub vertex_region: Vec<usize>,
}

impl RegionMap {
    /// Every vertex starts in `fill`.
    pub fn new(mesh: &Mesh, fill: Region) -> Self {
        Self { regions: vec![fill], vertex_region: vec![0; mesh.n_vertices()] }
    }

    /// Registers a material and returns its id.
    pub fn add_region(&mut self, region: Region) -> Result<usize> {
        if !(region.r0 >= 0.0) || !region.r0.is_finite() {
            return Err(Error::InvalidRegion(format!("region '{}' has r0 = {}", region.name, region.r0)));
        }
        self.regions.push(region);
        Ok(self.regions.len() - 1)
    }

    pub fn region_id(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.name == name)
    }

    pub fn r0_vertex(&self) -> Vec<f64> {
        self.vertex_region.iter().map(|&r| self.regions[r].r0).collect()
    }

    pub fn sc_mask(&self) -> Vec<bool> {
        self.vertex_region.iter().map(|&r| self.regions[r].is_superconductor()).collect()
    }

    /// Endpoint average of r0 on every edge.
    pub fn r0_edge(&self, mesh: &Mesh) -> Vec<f64> {
        let rv = self.r0_vertex();
        mesh.edge_verts.iter().map(|&[a, b]| 0.5 * (rv[a] + rv[b])).collect()
    }

    /// Edges with both endpoints in a superconductor; only these carry condensate current.
    pub fn condensate_edges(&self, mesh: &Mesh) -> Vec<bool> {
        let sc = self.sc_mask();
        mesh.edge_verts.iter().map(|&[a, b]| sc[a] && sc[b]).collect()
    }

    pub fn count(&self, id: usize) -> usize {
        self.vertex_region.iter().filter(|&&r| r == id).count()
    }
}

/// Assigns `region` to every vertex inside the closed box and returns how many were painted.
///
/// Later paints overwrite earlier ones. An empty box paints nothing and is not an error.
pub fn paint_region(mesh: &Mesh, map: &mut RegionMap, region: usize, b: &BoxRegion) -> Result<usize> {
    if region >= map.regions.len() {
        return Err(Error::InvalidRegion(format!("unknown region id {region}")));
    }
    if b.is_empty() {
        return Ok(0);
    }
    let ext = mesh.grid.extent();
    for a in 0..3 {
        let tol = 1e-9 * mesh.grid.spacing[a];
        if b.lo[a] < -tol || b.hi[a] > ext[a] + tol {
            return Err(Error::InvalidRegion(format!(
                "box [{}, {}] on axis {a} leaves the domain [0, {}]",
                b.lo[a], b.hi[a], ext[a]
            )));
        }
    }
    let verts = mesh.vertices_in_box(b);
    for &v in &verts {
        map.vertex_region[v] = region;
    }
    Ok(verts.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub phi: Vec<f64>,
    pub phi_prev: Vec<f64>,
    pub drho: Vec<f64>,
    pub drho_prev: Vec<f64>,
    pub g_prev: Vec<f64>,
    pub p_prev: Vec<f64>,
    pub tau: f64,
    pub step: usize,
    /// Vertices where δρ evolves (superconductor); δρ stays 0 elsewhere.
    pub dynamic_charge: Vec<bool>,
}

pub fn init_state(mesh: &Mesh, regions: &RegionMap) -> FieldState {
    let ne = mesh.n_edges();
    let nv = mesh.n_vertices();
    FieldState {
        phi: vec![0.0; ne],
        phi_prev: vec![0.0; ne],
        drho: vec![0.0; nv],
        drho_prev: vec![0.0; nv],
        g_prev: vec![0.0; ne],
        p_prev: vec![0.0; ne],
        tau: 0.0,
        step: 0,
        dynamic_charge: regions.sc_mask(),
    }
}

impl FieldState {
    /// Josephson phase of a single edge.
    pub fn edge_phase(&self, e: usize, scales: &Scales) -> f64 {
        -scales.charge_sign * self.phi[e]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// f(τ) = rate·τ.
    LinearRamp { rate: f64 },
    /// Linear ramp frozen at τ = t_hold.
    RampHold { rate: f64, t_hold: f64 },
    /// f(τ) = sin(ωτ).
    Sinusoid { omega: f64 },
    /// Charge Q(τ) = 1 − cos(ωτ); as a current, the rate ω·sin(ωτ).
    Dipole { omega: f64 },
}

impl Profile {
    /// Value used as an instantaneous current or charge rate.
    pub fn rate(&self, tau: f64) -> f64 {
        match *self {
            Profile::LinearRamp { rate } => rate * tau,
            Profile::RampHold { rate, t_hold } => rate * tau.min(t_hold),
            Profile::Sinusoid { omega } => (omega * tau).sin(),
            Profile::Dipole { omega } => omega * (omega * tau).sin(),
        }
    }

    /// Time integral of `rate` from 0 to τ.
    pub fn integral(&self, tau: f64) -> f64 {
        match *self {
            Profile::LinearRamp { rate } => 0.5 * rate * tau * tau,
            Profile::RampHold { rate, t_hold } => {
                if tau <= t_hold {
                    0.5 * rate * tau * tau
                } else {
                    0.5 * rate * t_hold * t_hold + rate * t_hold * (tau - t_hold)
                }
            }
            Profile::Sinusoid { omega } => {
                if omega == 0.0 {
                    0.0
                } else {
                    (1.0 - (omega * tau).cos()) / omega
                }
            }
            Profile::Dipole { omega } => 1.0 - (omega * tau).cos(),
        }
    }
}

/// A current of `amplitude·profile(τ)` along every listed edge, each with an orientation sign.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDrive {
    pub edges: Vec<(usize, f64)>,
    pub amplitude: f64,
    pub profile: Profile,
}

/// Rate of external charge deposited on one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeDrive {
    pub vertex: usize,
    pub amplitude: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceSpec {
    pub edge_drives: Vec<EdgeDrive>,
    pub charge_drives: Vec<ChargeDrive>,
}

impl SourceSpec {
    pub fn is_empty(&self) -> bool {
        self.edge_drives.is_empty() && self.charge_drives.is_empty()
    }

    /// Straight line of edges from `start` along `axis` carrying the current of a
    /// charge pair ±Q₀(1 − cos ωτ) sitting on its two end vertices.
    pub fn add_dipole(
        &mut self,
        mesh: &Mesh,
        start: [usize; 3],
        axis: usize,
        n_edges: usize,
        q0: f64,
        omega: f64,
    ) -> Result<()> {
        if n_edges == 0 || start[axis] + n_edges > mesh.grid.cells[axis] {
            return Err(Error::Scenario("dipole line leaves the mesh".into()));
        }
        let mut edges = Vec::with_capacity(n_edges);
        let mut p = start;
        for _ in 0..n_edges {
            edges.push((mesh.edge_id(axis, p), 1.0));
            p[axis] += 1;
        }
        let profile = Profile::Dipole { omega };
        // positive current flows tail to head, so the far end charges up
        self.charge_drives.push(ChargeDrive { vertex: mesh.vertex_id(start), amplitude: -q0, profile });
        self.charge_drives.push(ChargeDrive { vertex: mesh.vertex_id(p), amplitude: q0, profile });
        self.edge_drives.push(EdgeDrive { edges, amplitude: q0, profile });
        Ok(())
    }

    /// Net external charge delivered to the vertices up to τ.
    pub fn injected_charge(&self, tau: f64) -> f64 {
        self.charge_drives.iter().map(|d| d.amplitude * d.profile.integral(tau)).sum()
    }
}

/// Instantaneous source current per edge and external charge rate per vertex.
pub fn eval_sources(mesh: &Mesh, sources: &SourceSpec, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let mut current = vec![0.0; mesh.n_edges()];
    let mut charge_rate = vec![0.0; mesh.n_vertices()];
    eval_sources_into(sources, tau, &mut current, &mut charge_rate);
    (current, charge_rate)
}

pub fn eval_sources_into(sources: &SourceSpec, tau: f64, current: &mut [f64], charge_rate: &mut [f64]) {
    current.iter_mut().for_each(|x| *x = 0.0);
    charge_rate.iter_mut().for_each(|x| *x = 0.0);
    for d in &sources.edge_drives {
        let i = d.amplitude * d.profile.rate(tau);
        for &(e, sign) in &d.edges {
            current[e] += sign * i;
        }
    }
    for d in &sources.charge_drives {
        charge_rate[d.vertex] += d.amplitude * d.profile.rate(tau);
    }
}
