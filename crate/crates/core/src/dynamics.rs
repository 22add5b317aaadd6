//! Explicit time stepping of the flux wave equation and condensate continuity.
//!
//! Per edge the flux obeys
//!
//! ```text
//! Φ̈ = −CC(Φ)/ε − (r̄0 + δρ̄)Φ + s(η/2)·∂τG − s(η/2)·∂τP + (Δℓ/ΔA†)·I_src
//! ```
//!
//! with ε = ΔA†/Δℓ, G the edge gradient of |A′|² and P the quantum-pressure
//! gradient of the full density r0 + δρ. The time derivatives of G and P are
//! backward differences against the previous step. The density follows
//!
//! ```text
//! ΔV·δρ̇ = sη·Σ_star ε(r̄0 + δρ̄)Φ − sη·(Σ_star I_src + Q̇_src)
//! ```
//!
//! where the star sum only runs over edges with both ends in a superconductor.

use crate::dec_ops::fill_indexed;
use crate::dec_ops::{abs_sq_into, accumulate_divergence, curl_curl_into, quantum_pressure};
use crate::error::{Error, Result};
use crate::fields::{eval_sources_into, FieldState, RegionMap, Scales, SourceSpec, FLUX_QUANTUM};
use crate::junction::{phase_unchecked, JunctionModel, JunctionSpec, Path};
use crate::mesh::Mesh;
use crate::probe::{Probe, ProbeKind};

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    /// Record probes every this many steps (0 disables the time series).
    pub every: usize,
    /// Keep a full field snapshot every this many steps (0 disables snapshots).
    pub snapshot_every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { every: 1, snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub scales: Scales,
    pub junctions: Vec<JunctionSpec>,
    pub sources: SourceSpec,
    pub probes: Vec<Probe>,
    pub output: OutputSpec,
}

impl SimConfig {
    pub fn new(dt: f64, n_steps: usize, scales: Scales) -> Self {
        Self {
            dt,
            n_steps,
            scales,
            junctions: Vec::new(),
            sources: SourceSpec::default(),
            probes: Vec::new(),
            output: OutputSpec::default(),
        }
    }
}

/// Largest stable step, 0.9/√(Σ 1/h²) over axes along which fields vary.
pub fn cfl_max_dt(mesh: &Mesh) -> f64 {
    let inv = mesh.invariant_axes();
    let s: f64 = (0..3).filter(|&a| !inv[a]).map(|a| mesh.grid.spacing[a].powi(-2)).sum();
    if s == 0.0 {
        // nothing propagates; the London term alone is stable for dt < 2/√r0
        let h = mesh.grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
        return 0.9 * h;
    }
    0.9 / s.sqrt()
}

/// Step bound for the explicit density and pressure updates, 0.1·h²/η.
///
/// The constant comes from step-size scans on a weak-link chain, where the
/// instability sets in near 0.15·h²/η. Zero η gives no bound.
pub fn eta_max_dt(mesh: &Mesh, eta: f64) -> f64 {
    if eta == 0.0 {
        return f64::INFINITY;
    }
    let inv = mesh.invariant_axes();
    let h = (0..3).filter(|&a| !inv[a]).map(|a| mesh.grid.spacing[a]).fold(f64::INFINITY, f64::min);
    let h = if h.is_finite() { h } else { mesh.grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min) };
    0.1 * h * h / eta
}

#[derive(Debug, Clone)]
struct ImposedPath {
    path: Path,
    jc: f64,
}

/// Time integrator bound to one mesh and material layout.
pub struct Solver<'a> {
    pub mesh: &'a Mesh,
    pub regions: &'a RegionMap,
    pub config: SimConfig,
    pub state: FieldState,
    r0_vertex: Vec<f64>,
    r0_edge: Vec<f64>,
    sc: Vec<bool>,
    condensate: Vec<bool>,
    free: Vec<bool>,
    imposed: Vec<ImposedPath>,
    on_junction: Vec<bool>,
    // scratch
    cc: Vec<f64>,
    g: Vec<f64>,
    p: Vec<f64>,
    a2: Vec<f64>,
    i_src: Vec<f64>,
    q_src: Vec<f64>,
    jterm: Vec<f64>,
    div: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(mesh: &'a Mesh, regions: &'a RegionMap, config: SimConfig) -> Result<Self> {
        config.scales.validate()?;
        let dt_max = cfl_max_dt(mesh);
        if !(config.dt > 0.0) || config.dt > dt_max {
            return Err(Error::Cfl { dt: config.dt, dt_max });
        }
        // the density terms only act where there is condensate
        let eta_max = eta_max_dt(mesh, config.scales.eta);
        if config.dt > eta_max && regions.sc_mask().iter().any(|&s| s) {
            return Err(Error::EtaStep { dt: config.dt, dt_max: eta_max });
        }
        if regions.vertex_region.len() != mesh.n_vertices() {
            return Err(Error::InvalidRegion("region map does not match the mesh".into()));
        }
        let mut imposed = Vec::new();
        let mut on_junction = vec![false; mesh.n_edges()];
        for j in &config.junctions {
            j.validate(mesh)?;
            match j.model {
                JunctionModel::Imposed { jc } => {
                    for p in &j.paths {
                        for &(e, _) in p {
                            if on_junction[e] {
                                return Err(Error::Junction(format!("edge {e} belongs to two junction paths")));
                            }
                            on_junction[e] = true;
                        }
                        imposed.push(ImposedPath { path: p.clone(), jc });
                    }
                }
                JunctionModel::AbInitio { region } => {
                    if region >= regions.regions.len() || regions.count(region) == 0 {
                        return Err(Error::Junction(format!("weak region {region} is not painted")));
                    }
                }
            }
        }
        let state = crate::fields::init_state(mesh, regions);
        let ne = mesh.n_edges();
        let nv = mesh.n_vertices();
        let free: Vec<bool> = mesh.clamped.iter().map(|&c| !c).collect();
        let mut solver = Self {
            mesh,
            regions,
            r0_vertex: regions.r0_vertex(),
            r0_edge: regions.r0_edge(mesh),
            sc: regions.sc_mask(),
            condensate: regions.condensate_edges(mesh),
            free,
            imposed,
            on_junction,
            config,
            state,
            cc: vec![0.0; ne],
            g: vec![0.0; ne],
            p: vec![0.0; ne],
            a2: vec![0.0; nv],
            i_src: vec![0.0; ne],
            q_src: vec![0.0; nv],
            jterm: vec![0.0; ne],
            div: vec![0.0; nv],
        };
        solver.refresh_caches()?;
        Ok(solver)
    }

    /// Replaces the state and makes the nonlinear caches consistent with Φ_prev and δρ_prev.
    pub fn set_state(&mut self, state: FieldState) -> Result<()> {
        self.state = state;
        self.refresh_caches()
    }

    fn refresh_caches(&mut self) -> Result<()> {
        if self.config.scales.eta != 0.0 {
            let prev = self.state.phi_prev.clone();
            self.state.g_prev = self.grad_abs_sq_masked(&prev);
            let drho_prev = self.state.drho_prev.clone();
            self.state.p_prev = self.pressure(&drho_prev)?;
        }
        Ok(())
    }

    pub fn free_edges(&self) -> &[bool] {
        &self.free
    }

    pub fn r0_edge(&self) -> &[f64] {
        &self.r0_edge
    }

    fn eta_active(&self) -> bool {
        self.config.scales.eta != 0.0
    }

    fn grad_abs_sq_masked(&mut self, phi: &[f64]) -> Vec<f64> {
        abs_sq_into(self.mesh, phi, &mut self.a2);
        self.mesh
            .edge_verts
            .iter()
            .enumerate()
            .map(|(e, &[t, h])| if self.condensate[e] { self.a2[h] - self.a2[t] } else { 0.0 })
            .collect()
    }

    fn pressure(&self, drho: &[f64]) -> Result<Vec<f64>> {
        let rho: Vec<f64> = self.r0_vertex.iter().zip(drho).map(|(r, d)| r + d).collect();
        quantum_pressure(self.mesh, &rho, &self.sc)
    }

    /// Per-edge London-or-junction term: (r̄0 + δρ̄)Φ, or the imposed Josephson term.
    fn constitutive(&self, phi: &[f64], drho: &[f64], out: &mut [f64]) {
        let mesh = self.mesh;
        fill_indexed(out, |e| {
            let [t, h] = mesh.edge_verts[e];
            (self.r0_edge[e] + 0.5 * (drho[t] + drho[h])) * phi[e]
        });
        let s = self.config.scales.charge_sign;
        for ip in &self.imposed {
            let ph = phase_unchecked(phi, &ip.path, &self.config.scales);
            let jsin = ip.jc * ph.sin();
            for &(e, sigma) in &ip.path {
                out[e] = -s * sigma * jsin * mesh.edge_len[e];
            }
        }
    }

    /// Φ̈ for the current state at time τ.
    pub fn accel(&mut self, tau: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.mesh.n_edges()];
        self.accel_into(tau, &mut out)?;
        Ok(out)
    }

    fn accel_into(&mut self, tau: f64, out: &mut [f64]) -> Result<()> {
        let mesh = self.mesh;
        let dt = self.config.dt;
        let s = self.config.scales.charge_sign;
        let half_eta = 0.5 * self.config.scales.eta;
        curl_curl_into(mesh, &self.state.phi, &mut self.cc);
        let mut jterm = std::mem::take(&mut self.jterm);
        self.constitutive(&self.state.phi, &self.state.drho, &mut jterm);
        eval_sources_into(&self.config.sources, tau, &mut self.i_src, &mut self.q_src);
        if self.eta_active() {
            let phi = self.state.phi.clone();
            self.g = self.grad_abs_sq_masked(&phi);
            self.p = self.pressure(&self.state.drho.clone())?;
        }
        let eta_on = self.eta_active();
        let st = &self.state;
        let (cc, g, p, i_src, free) = (&self.cc, &self.g, &self.p, &self.i_src, &self.free);
        fill_indexed(out, |e| {
            if !free[e] {
                return 0.0;
            }
            let mut a = -cc[e] / mesh.edge_weight[e] - jterm[e] + i_src[e] * mesh.edge_len[e] / mesh.dual_area[e];
            if eta_on {
                a += s * half_eta * ((g[e] - st.g_prev[e]) - (p[e] - st.p_prev[e])) / dt;
            }
            a
        });
        self.jterm = jterm;
        if let Some(e) = out.iter().position(|x| !x.is_finite()) {
            return Err(Error::Divergence { edge: e, step: self.state.step });
        }
        Ok(())
    }

    /// Advances one step.
    ///
    /// A state at step 0 whose Φ_prev equals Φ starts from rest with a Taylor step;
    /// any other state is advanced by leapfrog.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.config.dt;
        let tau = self.state.tau;
        let mut acc = vec![0.0; self.mesh.n_edges()];
        self.accel_into(tau, &mut acc)?;
        let first = self.state.step == 0 && self.state.phi_prev == self.state.phi;
        let mut new_phi = vec![0.0; self.mesh.n_edges()];
        fill_indexed(&mut new_phi, |e| {
            if !self.free[e] {
                0.0
            } else if first {
                self.state.phi[e] + 0.5 * dt * dt * acc[e]
            } else {
                2.0 * self.state.phi[e] - self.state.phi_prev[e] + dt * dt * acc[e]
            }
        });
        if let Some(e) = new_phi.iter().position(|x| !x.is_finite()) {
            return Err(Error::Divergence { edge: e, step: self.state.step + 1 });
        }

        let eta = self.config.scales.eta;
        let mut new_drho = self.state.drho.clone();
        if eta != 0.0 {
            let s = self.config.scales.charge_sign;
            let mut jterm = std::mem::take(&mut self.jterm);
            self.constitutive(&new_phi, &self.state.drho, &mut jterm);
            accumulate_divergence(self.mesh, &jterm, Some(&self.condensate), &mut self.div);
            self.jterm = jterm;
            eval_sources_into(&self.config.sources, tau + dt, &mut self.i_src, &mut self.q_src);
            let mut src_div = vec![0.0; self.mesh.n_vertices()];
            for (e, &[t, h]) in self.mesh.edge_verts.iter().enumerate() {
                let i = self.i_src[e];
                if i != 0.0 {
                    src_div[t] += i;
                    src_div[h] -= i;
                }
            }
            for v in 0..self.mesh.n_vertices() {
                if !self.state.dynamic_charge[v] {
                    new_drho[v] = 0.0;
                    continue;
                }
                let rate = s * eta * (self.div[v] - src_div[v] - self.q_src[v]) / self.mesh.dual_vol[v];
                new_drho[v] += dt * rate;
                if !new_drho[v].is_finite() {
                    return Err(Error::ChargeDivergence { vertex: v, step: self.state.step + 1 });
                }
            }
            // caches hold G(Φⁿ) and P(ρⁿ) for the next backward difference
            self.state.g_prev = std::mem::take(&mut self.g);
            self.state.p_prev = std::mem::take(&mut self.p);
            self.g = vec![0.0; self.mesh.n_edges()];
            self.p = vec![0.0; self.mesh.n_edges()];
        }

        let st = &mut self.state;
        st.phi_prev = std::mem::replace(&mut st.phi, new_phi);
        st.drho_prev = std::mem::replace(&mut st.drho, new_drho);
        st.step += 1;
        st.tau = st.step as f64 * dt;
        Ok(())
    }

    /// Swaps Φ and Φ_prev so that further steps run backwards in time.
    pub fn reverse(&mut self) -> Result<()> {
        let st = &mut self.state;
        std::mem::swap(&mut st.phi, &mut st.phi_prev);
        std::mem::swap(&mut st.drho, &mut st.drho_prev);
        if st.step == 0 {
            st.step = 1;
        }
        self.refresh_caches()
    }

    /// Σ ΔV·δρ.
    pub fn total_charge(&self) -> f64 {
        total_charge(self.mesh, &self.state)
    }

    /// Staggered energy between the current and previous flux.
    ///
    /// ½Σ ε[((Φⁿ−Φⁿ⁻¹)/dt)² + r̄0 ΦⁿΦⁿ⁻¹] + ½Σ μ·circ(Φⁿ)·circ(Φⁿ⁻¹), summed over free edges
    /// and all faces. For η = 0 and no sources or junctions leapfrog conserves it exactly.
    pub fn energy(&self) -> f64 {
        energy(self.mesh, &self.r0_edge, &self.free, &self.state, self.config.dt)
    }

    /// Electric supercurrent density along an edge, −(r̄0 + δρ̄)Φ/Δℓ or the imposed junction current.
    pub fn edge_current(&self, e: usize) -> f64 {
        let [t, h] = self.mesh.edge_verts[e];
        if self.on_junction[e] {
            let s = self.config.scales.charge_sign;
            for ip in &self.imposed {
                if let Some(&(_, sigma)) = ip.path.iter().find(|&&(x, _)| x == e) {
                    let ph = phase_unchecked(&self.state.phi, &ip.path, &self.config.scales);
                    return s * sigma * ip.jc * ph.sin();
                }
            }
        }
        -(self.r0_edge[e] + 0.5 * (self.state.drho[t] + self.state.drho[h])) * self.state.phi[e] / self.mesh.edge_len[e]
    }

    pub fn probe(&self, p: &Probe) -> Result<f64> {
        let st = &self.state;
        let scales = &self.config.scales;
        let mesh = self.mesh;
        let check_edge = |e: usize| {
            if e < mesh.n_edges() {
                Ok(())
            } else {
                Err(Error::Probe(format!("{}: edge {e} out of range", p.label)))
            }
        };
        Ok(match &p.kind {
            ProbeKind::EdgeFlux { edge } => {
                check_edge(*edge)?;
                st.phi[*edge]
            }
            ProbeKind::EdgeCurrent { edge } => {
                check_edge(*edge)?;
                self.edge_current(*edge)
            }
            ProbeKind::VertexCharge { vertex } => {
                *st.drho.get(*vertex).ok_or_else(|| Error::Probe(format!("{}: vertex out of range", p.label)))?
            }
            ProbeKind::JunctionPhase { path } => crate::junction::phase_across(mesh, st, path, scales)?,
            ProbeKind::JunctionCurrent { edges } => {
                if edges.is_empty() {
                    return Err(Error::Probe(format!("{}: no edges", p.label)));
                }
                let mut sum = 0.0;
                for &e in edges {
                    check_edge(e)?;
                    sum += scales.charge_sign * self.edge_current(e);
                }
                sum / edges.len() as f64
            }
            ProbeKind::Fluxoid { faces, path, sign } => fluxoid(mesh, &st.phi, faces, path, *sign)?,
            ProbeKind::Energy => self.energy(),
            ProbeKind::TotalCharge => self.total_charge(),
        })
    }
}

pub fn total_charge(mesh: &Mesh, state: &FieldState) -> f64 {
    state.drho.iter().zip(&mesh.dual_vol).map(|(d, v)| d * v).sum()
}

pub fn energy(mesh: &Mesh, r0_edge: &[f64], free: &[bool], st: &FieldState, dt: f64) -> f64 {
    let mut e_edge = 0.0;
    for e in 0..mesh.n_edges() {
        if !free[e] {
            continue;
        }
        let v = (st.phi[e] - st.phi_prev[e]) / dt;
        e_edge += mesh.edge_weight[e] * (v * v + r0_edge[e] * st.phi[e] * st.phi_prev[e]);
    }
    let c_now = crate::dec_ops::face_circulation(mesh, &st.phi);
    let c_prev = crate::dec_ops::face_circulation(mesh, &st.phi_prev);
    let e_face: f64 = (0..mesh.n_faces()).map(|f| mesh.face_weight[f] * c_now[f] * c_prev[f]).sum();
    0.5 * (e_edge + e_face)
}

/// Trapped flux quanta: sign·(Σ σ·circ(f) + Φ_j) / 2π.
///
/// Φ_j = Σ σ·Φ(e) over the junction path, taken on its principal branch (−π, π].
/// Orient the path against the boundary of the face set: Stokes then leaves the
/// winding of the junction phase plus the condensate circulation around the loop.
pub fn fluxoid(mesh: &Mesh, phi: &[f64], faces: &[(usize, f64)], path: &Path, sign: f64) -> Result<f64> {
    if faces.is_empty() {
        return Err(Error::Probe("fluxoid needs a spanning face set".into()));
    }
    let mut total = 0.0;
    for &(f, s) in faces {
        if f >= mesh.n_faces() {
            return Err(Error::Probe(format!("face {f} out of range")));
        }
        let fe = &mesh.face_edges[f];
        let c: f64 = fe.iter().zip(crate::mesh::FACE_SIGNS).map(|(&e, w)| w * phi[e]).sum();
        total += s * c;
    }
    if !path.is_empty() {
        crate::junction::check_path(mesh, path)?;
        total += wrap_phase(path.iter().map(|&(e, s)| s * phi[e]).sum::<f64>());
    }
    Ok(sign * total / FLUX_QUANTUM)
}

/// Maps an angle onto (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x - FLUX_QUANTUM * (x / FLUX_QUANTUM).round();
    if y <= -std::f64::consts::PI {
        y + FLUX_QUANTUM
    } else {
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub tau: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub tau: f64,
    pub phi: Vec<f64>,
    pub drho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub labels: Vec<String>,
    pub rows: Vec<SeriesRow>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: FieldState,
    pub charge_initial: f64,
    pub charge_final: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
}

impl RunOutput {
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn taus(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.tau).collect()
    }
}

/// Runs from the solver's current state for `config.n_steps` steps.
pub fn run_solver(solver: &mut Solver) -> Result<RunOutput> {
    let labels: Vec<String> = solver.config.probes.iter().map(|p| p.label.clone()).collect();
    let out_cfg = solver.config.output.clone();
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let record = |s: &Solver, rows: &mut Vec<SeriesRow>, snaps: &mut Vec<Snapshot>| -> Result<()> {
        let n = s.state.step;
        if out_cfg.every > 0 && n % out_cfg.every == 0 {
            let values = s.config.probes.iter().map(|p| s.probe(p)).collect::<Result<Vec<_>>>()?;
            rows.push(SeriesRow { step: n, tau: s.state.tau, values });
        }
        if out_cfg.snapshot_every > 0 && n % out_cfg.snapshot_every == 0 {
            snaps.push(Snapshot { step: n, tau: s.state.tau, phi: s.state.phi.clone(), drho: s.state.drho.clone() });
        }
        Ok(())
    };
    let charge_initial = solver.total_charge();
    let energy_initial = solver.energy();
    let start = solver.state.step;
    record(solver, &mut rows, &mut snapshots)?;
    if solver.config.n_steps == 0 && snapshots.is_empty() {
        snapshots.push(Snapshot {
            step: start,
            tau: solver.state.tau,
            phi: solver.state.phi.clone(),
            drho: solver.state.drho.clone(),
        });
    }
    for _ in 0..solver.config.n_steps {
        solver.step()?;
        record(solver, &mut rows, &mut snapshots)?;
    }
    Ok(RunOutput {
        labels,
        rows,
        snapshots,
        final_state: solver.state.clone(),
        charge_initial,
        charge_final: solver.total_charge(),
        energy_initial,
        energy_final: solver.energy(),
    })
}

/// Builds a solver from zero initial data and runs it.
pub fn run(mesh: &Mesh, regions: &RegionMap, config: SimConfig) -> Result<RunOutput> {
    let mut solver = Solver::new(mesh, regions, config)?;
    run_solver(&mut solver)
}
