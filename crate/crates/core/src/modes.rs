//! Linear eigenmodes: curl-curl plus the London mass term.
//!
//! The generalised problem `K Φ = E·D Φ` with `K = Cᵀ μ C + D r̄0` and `D = diag(ε)`
//! is solved in the symmetric form `D^{-1/2} K D^{-1/2}`. Edges held at zero are
//! eliminated, and along an invariant axis only the first layer of edges is kept.

use crate::error::{Error, Result};
use crate::fields::{paint_region, Region, RegionMap};
use crate::linalg::{dense_eigen, shift_invert_lanczos, CsrMatrix, RitzPair};
use crate::mesh::{build_grid, BoxRegion, GridSpec, Mesh, FACE_SIGNS};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct LinearOperator {
    /// Edge id of each unknown.
    pub dofs: Vec<usize>,
    /// Symmetrised operator acting on `D^{1/2}Φ`.
    pub matrix: CsrMatrix,
    /// Curl-curl part alone, in the same scaling.
    pub curl_part: CsrMatrix,
    /// ε of each unknown.
    pub weight: Vec<f64>,
    pub n_edges: usize,
}

impl LinearOperator {
    /// Edge field Φ from a vector of the symmetric problem.
    pub fn to_edge_field(&self, y: &[f64]) -> Vec<f64> {
        let mut phi = vec![0.0; self.n_edges];
        for (k, &e) in self.dofs.iter().enumerate() {
            phi[e] = y[k] / self.weight[k].sqrt();
        }
        phi
    }
}

pub fn assemble_linear_operator(mesh: &Mesh, regions: &RegionMap) -> LinearOperator {
    let inv = mesh.invariant_axes();
    let mut dofs: Vec<usize> = (0..mesh.n_edges())
        .filter(|&e| {
            if mesh.clamped[e] {
                return false;
            }
            let (_, p) = mesh.edge_coords(e);
            (0..3).all(|a| !inv[a] || p[a] == 0)
        })
        .collect();
    // ordering by tail vertex keeps the band narrow
    dofs.sort_by_key(|&e| (mesh.edge_verts[e][0], mesh.edge_coords(e).0));
    let mut index = vec![usize::MAX; mesh.n_edges()];
    for (k, &e) in dofs.iter().enumerate() {
        index[e] = k;
    }
    let weight: Vec<f64> = dofs.iter().map(|&e| mesh.edge_weight[e]).collect();
    let r0 = regions.r0_edge(mesh);
    let scale = |i: usize, j: usize| 1.0 / (weight[i] * weight[j]).sqrt();

    let mut curl = Vec::new();
    for f in 0..mesh.n_faces() {
        let mu = mesh.face_weight[f];
        if mu == 0.0 {
            continue;
        }
        let fe = mesh.face_edges[f];
        for a in 0..4 {
            let i = index[fe[a]];
            if i == usize::MAX {
                continue;
            }
            for b in 0..4 {
                let j = index[fe[b]];
                if j == usize::MAX {
                    continue;
                }
                curl.push((i, j, mu * FACE_SIGNS[a] * FACE_SIGNS[b] * scale(i, j)));
            }
        }
    }
    let mut full = curl.clone();
    for (k, &e) in dofs.iter().enumerate() {
        full.push((k, k, r0[e]));
    }
    let n = dofs.len();
    LinearOperator {
        dofs,
        matrix: CsrMatrix::from_triplets(n, full),
        curl_part: CsrMatrix::from_triplets(n, curl),
        weight,
        n_edges: mesh.n_edges(),
    }
}

#[derive(Debug, Clone)]
pub struct ModeResult {
    /// ω² in internal units.
    pub eigenvalue: f64,
    /// Unit-norm eigenvector of the symmetric problem, mapped back to Φ.
    pub vector: Vec<f64>,
    /// Share of the eigenvalue carried by the curl-curl part.
    pub curl_fraction: f64,
    pub residual: f64,
}

impl ModeResult {
    /// L√E/π, the mode number of a cavity of side L.
    pub fn normalized(&self, length: f64) -> f64 {
        length * self.eigenvalue.max(0.0).sqrt() / PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Eigenvalues at or below this are treated as null space.
    pub cutoff: f64,
    /// Minimum curl-energy share of a physical mode.
    pub min_curl_fraction: f64,
    /// Shift δ for the factorisation of (A + δ).
    pub shift: f64,
    /// Unknown count up to which the dense solver is used.
    pub dense_limit: usize,
    /// Relative residual required for convergence.
    pub tol: f64,
    pub max_krylov: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cutoff: 1e-8,
            min_curl_fraction: 0.5,
            shift: 1e-3,
            dense_limit: 600,
            tol: 1e-8,
            max_krylov: 1500,
            seed: 0x5eed,
        }
    }
}

fn curl_fraction(op: &LinearOperator, p: &RitzPair) -> f64 {
    let mut cy = vec![0.0; p.vector.len()];
    op.curl_part.matvec(&p.vector, &mut cy);
    let c: f64 = cy.iter().zip(&p.vector).map(|(a, b)| a * b).sum();
    if p.value.abs() < 1e-300 {
        0.0
    } else {
        c / p.value
    }
}

/// The `k` lowest physical modes, ascending.
pub fn solve_modes(op: &LinearOperator, k: usize, opts: &SolveOptions) -> Result<Vec<ModeResult>> {
    if k == 0 {
        return Err(Error::Config("mode count must be at least 1".into()));
    }
    let n = op.matrix.n;
    let norm = op.matrix.max_abs().max(1e-300);
    let accept = |p: &RitzPair| p.value > opts.cutoff && curl_fraction(op, p) >= opts.min_curl_fraction;
    let finish = |pairs: Vec<RitzPair>| -> Vec<ModeResult> {
        pairs
            .into_iter()
            .filter(|p| accept(p))
            .take(k)
            .map(|p| ModeResult {
                eigenvalue: p.value,
                curl_fraction: curl_fraction(op, &p),
                residual: p.residual,
                vector: op.to_edge_field(&p.vector),
            })
            .collect()
    };
    if n <= opts.dense_limit {
        let mut pairs = dense_eigen(&op.matrix);
        let mut ax = vec![0.0; n];
        for p in &mut pairs {
            op.matrix.matvec(&p.vector, &mut ax);
            p.residual = ax.iter().zip(&p.vector).map(|(a, x)| (a - p.value * x).powi(2)).sum::<f64>().sqrt();
        }
        let out = finish(pairs);
        if out.len() < k {
            return Err(Error::NoConvergence { iterations: 0, residual: f64::NAN });
        }
        return Ok(out);
    }
    let mut m = (4 * k + 40).min(n);
    let mut worst = f64::INFINITY;
    loop {
        let pairs = shift_invert_lanczos(&op.matrix, opts.shift, m, opts.seed)?;
        let physical: Vec<&RitzPair> = pairs.iter().filter(|p| accept(p)).take(k).collect();
        if physical.len() == k {
            worst = physical.iter().map(|p| p.residual).fold(0.0, f64::max);
            if worst <= opts.tol * norm {
                return Ok(finish(pairs));
            }
        }
        if m >= n || m >= opts.max_krylov {
            return Err(Error::NoConvergence { iterations: m, residual: worst });
        }
        m = (m * 3 / 2).min(n).min(opts.max_krylov);
    }
}

/// Flux threading every face for a mode.
pub fn mode_face_flux(mesh: &Mesh, mode: &ModeResult) -> Vec<f64> {
    crate::dec_ops::face_circulation(mesh, &mode.vector)
}

/// Square 2D cavity of side `1/λ̃` (λ̃ = 0: side 1 with hard walls), `cells` across.
#[derive(Debug, Clone, PartialEq)]
pub struct CavitySpec {
    pub lambda_tilde: f64,
    pub cells: usize,
    /// Wall thickness in penetration depths (rounded up to whole cells, at least two).
    pub wall_depths: f64,
}

impl CavitySpec {
    pub fn new(lambda_tilde: f64, cells: usize) -> Self {
        Self { lambda_tilde, cells, wall_depths: 6.0 }
    }

    pub fn side(&self) -> f64 {
        if self.lambda_tilde > 0.0 {
            1.0 / self.lambda_tilde
        } else {
            1.0
        }
    }

    pub fn spacing(&self) -> f64 {
        self.side() / self.cells as f64
    }

    /// Wall thickness in cells; zero for the hard-wall cavity.
    pub fn wall_cells(&self) -> usize {
        if self.lambda_tilde > 0.0 {
            ((self.wall_depths / self.spacing()).ceil() as usize).max(2)
        } else {
            0
        }
    }

    /// Mesh in the x–z plane (y invariant) and its material map.
    pub fn build(&self) -> Result<(Mesh, RegionMap)> {
        let l = self.side();
        let h = self.spacing();
        let wall = self.wall_cells();
        let n = self.cells + 2 * wall;
        let mesh = build_grid(GridSpec::new([n, 1, n], [h; 3]))?;
        let mut regions = if wall > 0 {
            RegionMap::new(&mesh, Region::superconductor("wall", 1.0))
        } else {
            RegionMap::new(&mesh, Region::vacuum())
        };
        if wall > 0 {
            let vac = regions.add_region(Region::vacuum())?;
            let lo = wall as f64 * h;
            let hi = lo + l;
            paint_region(&mesh, &mut regions, vac, &BoxRegion::new([lo, 0.0, lo], [hi, h, hi]))?;
        }
        Ok((mesh, regions))
    }

    /// Lowest `k` normalised mode numbers L√E/π.
    pub fn mode_numbers(&self, k: usize) -> Result<Vec<f64>> {
        let (mesh, regions) = self.build()?;
        let op = assemble_linear_operator(&mesh, &regions);
        let l = self.side();
        let first = (PI / l).powi(2);
        let opts = SolveOptions { shift: 0.5 * first, cutoff: 1e-6 * first, ..SolveOptions::default() };
        Ok(solve_modes(&op, k, &opts)?.iter().map(|m| m.normalized(l)).collect())
    }
}
