//! Uniform brick meshes with an implicit staggered dual.
//!
//! Every element class is enumerated lexicographically: vertices by `(i, j, k)`
//! with `k` fastest, edges and faces axis-major (all x-oriented entries first)
//! and then by the grid coordinates of their lowest corner.
//!
//! Dual cells of boundary vertices are truncated at the domain boundary, so a
//! boundary vertex owns half (face), a quarter (edge) or an eighth (corner) of
//! a full brick. An axis with exactly one cell is treated as translationally
//! invariant: faces spanning it carry no curl energy and edges along it are
//! held at zero. This is how 2D and 1D problems are posed on the same mesh.

use crate::error::{Error, Result};

/// Cell counts and spacings along x, y, z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub cells: [usize; 3],
    pub spacing: [f64; 3],
}

impl GridSpec {
    pub fn new(cells: [usize; 3], spacing: [f64; 3]) -> Self {
        Self { cells, spacing }
    }

    pub fn uniform(cells: [usize; 3], h: f64) -> Self {
        Self { cells, spacing: [h; 3] }
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if self.cells[a] == 0 {
                return Err(Error::InvalidGrid(format!("zero cell count on axis {a}")));
            }
            if !(self.spacing[a] > 0.0) || !self.spacing[a].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "spacing {} on axis {a} is not a positive length",
                    self.spacing[a]
                )));
            }
        }
        Ok(())
    }

    pub fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.cells[a] as f64 * self.spacing[a])
    }
}

/// Axis-aligned closed box in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl BoxRegion {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.hi[a] < self.lo[a])
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub grid: GridSpec,
    nv: [usize; 3],
    edge_dims: [[usize; 3]; 3],
    face_dims: [[usize; 3]; 3],
    edge_offset: [usize; 4],
    face_offset: [usize; 4],
    invariant: [bool; 3],
    /// Tail and head vertex of each edge.
    pub edge_verts: Vec<[usize; 2]>,
    /// Oriented boundary of each face: edges with signs `[+, +, -, -]`.
    pub face_edges: Vec<[usize; 4]>,
    pub edge_len: Vec<f64>,
    pub dual_area: Vec<f64>,
    pub dual_vol: Vec<f64>,
    pub face_area: Vec<f64>,
    pub dual_edge_len: Vec<f64>,
    /// ΔA(e†)/Δℓ(e), the edge mass in the discrete inner product.
    pub edge_weight: Vec<f64>,
    /// Δℓ(f†)/ΔA(f), zero for faces spanning an invariant axis.
    pub face_weight: Vec<f64>,
    /// Edges held at zero: on the boundary of an active axis or along an invariant axis.
    pub clamped: Vec<bool>,
    edge_face_ptr: Vec<usize>,
    edge_face_list: Vec<(usize, f64)>,
}

pub const FACE_SIGNS: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

fn lin(d: [usize; 3], p: [usize; 3]) -> usize {
    (p[0] * d[1] + p[1]) * d[2] + p[2]
}

fn unlin(d: [usize; 3], mut id: usize) -> [usize; 3] {
    let k = id % d[2];
    id /= d[2];
    let j = id % d[1];
    [id / d[1], j, k]
}

pub fn build_grid(spec: GridSpec) -> Result<Mesh> {
    spec.validate()?;
    let n = spec.cells;
    let h = spec.spacing;
    let nv = [n[0] + 1, n[1] + 1, n[2] + 1];
    let mut edge_dims = [[0; 3]; 3];
    let mut face_dims = [[0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            edge_dims[a][b] = if a == b { n[b] } else { nv[b] };
            face_dims[a][b] = if a == b { nv[b] } else { n[b] };
        }
    }
    let mut edge_offset = [0; 4];
    let mut face_offset = [0; 4];
    for a in 0..3 {
        edge_offset[a + 1] = edge_offset[a] + edge_dims[a].iter().product::<usize>();
        face_offset[a + 1] = face_offset[a] + face_dims[a].iter().product::<usize>();
    }
    let invariant = [0, 1, 2].map(|a| n[a] == 1 && n.iter().filter(|&&c| c > 1).count() > 0);

    let dual_len = |a: usize, i: usize| if i == 0 || i == n[a] { 0.5 * h[a] } else { h[a] };

    let n_vert = nv.iter().product::<usize>();
    let n_edge = edge_offset[3];
    let n_face = face_offset[3];

    let mut dual_vol = Vec::with_capacity(n_vert);
    for v in 0..n_vert {
        let p = unlin(nv, v);
        dual_vol.push(dual_len(0, p[0]) * dual_len(1, p[1]) * dual_len(2, p[2]));
    }

    let mut edge_verts = Vec::with_capacity(n_edge);
    let mut edge_len = Vec::with_capacity(n_edge);
    let mut dual_area = Vec::with_capacity(n_edge);
    let mut clamped = Vec::with_capacity(n_edge);
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for local in 0..edge_dims[a].iter().product::<usize>() {
            let p = unlin(edge_dims[a], local);
            let mut q = p;
            q[a] += 1;
            edge_verts.push([lin(nv, p), lin(nv, q)]);
            edge_len.push(h[a]);
            dual_area.push(dual_len(b, p[b]) * dual_len(c, p[c]));
            let on_boundary = [b, c].iter().any(|&o| !invariant[o] && (p[o] == 0 || p[o] == n[o]));
            clamped.push(invariant[a] || on_boundary);
        }
    }

    let mut face_edges = Vec::with_capacity(n_face);
    let mut face_area = Vec::with_capacity(n_face);
    let mut dual_edge_len = Vec::with_capacity(n_face);
    let mut face_weight = Vec::with_capacity(n_face);
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for local in 0..face_dims[a].iter().product::<usize>() {
            let p = unlin(face_dims[a], local);
            let mut pb = p;
            pb[b] += 1;
            let mut pc = p;
            pc[c] += 1;
            let e_b = edge_offset[b] + lin(edge_dims[b], p);
            let e_c_shift = edge_offset[c] + lin(edge_dims[c], pb);
            let e_b_shift = edge_offset[b] + lin(edge_dims[b], pc);
            let e_c = edge_offset[c] + lin(edge_dims[c], p);
            face_edges.push([e_b, e_c_shift, e_b_shift, e_c]);
            let area = h[b] * h[c];
            let dl = dual_len(a, p[a]);
            face_area.push(area);
            dual_edge_len.push(dl);
            let spans_invariant = invariant[b] || invariant[c];
            face_weight.push(if spans_invariant { 0.0 } else { dl / area });
        }
    }

    let edge_weight = (0..n_edge).map(|e| dual_area[e] / edge_len[e]).collect();

    let mut edge_face_ptr = vec![0usize; n_edge + 1];
    for fe in &face_edges {
        for &e in fe {
            edge_face_ptr[e + 1] += 1;
        }
    }
    for e in 0..n_edge {
        edge_face_ptr[e + 1] += edge_face_ptr[e];
    }
    let mut fill = edge_face_ptr.clone();
    let mut edge_face_list = vec![(0usize, 0.0); edge_face_ptr[n_edge]];
    for (f, fe) in face_edges.iter().enumerate() {
        for (slot, &e) in fe.iter().enumerate() {
            edge_face_list[fill[e]] = (f, FACE_SIGNS[slot]);
            fill[e] += 1;
        }
    }

    Ok(Mesh {
        grid: spec,
        nv,
        edge_dims,
        face_dims,
        edge_offset,
        face_offset,
        invariant,
        edge_verts,
        face_edges,
        edge_len,
        dual_area,
        dual_vol,
        face_area,
        dual_edge_len,
        edge_weight,
        face_weight,
        clamped,
        edge_face_ptr,
        edge_face_list,
    })
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.dual_vol.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edge_len.len()
    }
    pub fn n_faces(&self) -> usize {
        self.face_area.len()
    }
    pub fn n_cells(&self) -> usize {
        self.grid.cells.iter().product()
    }

    /// Axes with a single cell in an otherwise higher-dimensional grid.
    pub fn invariant_axes(&self) -> [bool; 3] {
        self.invariant
    }

    /// Number of axes along which fields may vary.
    pub fn active_dims(&self) -> usize {
        self.invariant.iter().filter(|&&inv| !inv).count()
    }

    pub fn vertex_id(&self, p: [usize; 3]) -> usize {
        lin(self.nv, p)
    }

    pub fn vertex_coords(&self, v: usize) -> [usize; 3] {
        unlin(self.nv, v)
    }

    pub fn vertex_pos(&self, v: usize) -> [f64; 3] {
        let p = self.vertex_coords(v);
        [0, 1, 2].map(|a| p[a] as f64 * self.grid.spacing[a])
    }

    pub fn vertex_dims(&self) -> [usize; 3] {
        self.nv
    }

    pub fn edge_id(&self, axis: usize, p: [usize; 3]) -> usize {
        self.edge_offset[axis] + lin(self.edge_dims[axis], p)
    }

    pub fn edge_dims(&self, axis: usize) -> [usize; 3] {
        self.edge_dims[axis]
    }

    /// Axis and lowest-corner coordinates of an edge.
    pub fn edge_coords(&self, e: usize) -> (usize, [usize; 3]) {
        let a = (0..3).find(|&a| e < self.edge_offset[a + 1]).expect("edge id out of range");
        (a, unlin(self.edge_dims[a], e - self.edge_offset[a]))
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 3] {
        let (a, p) = self.edge_coords(e);
        let h = self.grid.spacing;
        let mut x = [0, 1, 2].map(|b| p[b] as f64 * h[b]);
        x[a] += 0.5 * h[a];
        x
    }

    pub fn face_id(&self, normal: usize, p: [usize; 3]) -> usize {
        self.face_offset[normal] + lin(self.face_dims[normal], p)
    }

    pub fn face_dims(&self, normal: usize) -> [usize; 3] {
        self.face_dims[normal]
    }

    pub fn face_coords(&self, f: usize) -> (usize, [usize; 3]) {
        let a = (0..3).find(|&a| f < self.face_offset[a + 1]).expect("face id out of range");
        (a, unlin(self.face_dims[a], f - self.face_offset[a]))
    }

    /// Faces of a cell, each with the sign that makes its normal point outward.
    pub fn cell_faces(&self, p: [usize; 3]) -> [(usize, f64); 6] {
        let mut out = [(0, 0.0); 6];
        for a in 0..3 {
            let mut q = p;
            out[2 * a] = (self.face_id(a, q), -1.0);
            q[a] += 1;
            out[2 * a + 1] = (self.face_id(a, q), 1.0);
        }
        out
    }

    /// Signed divergence weights at `v`: `+ΔA†/Δℓ` for edges leaving `v`, `-` for edges arriving.
    pub fn vertex_star(&self, v: usize) -> Vec<(usize, f64)> {
        let p = self.vertex_coords(v);
        let mut out = Vec::with_capacity(6);
        for a in 0..3 {
            if p[a] < self.grid.cells[a] {
                let e = self.edge_id(a, p);
                out.push((e, self.edge_weight[e]));
            }
            if p[a] > 0 {
                let mut q = p;
                q[a] -= 1;
                let e = self.edge_id(a, q);
                out.push((e, -self.edge_weight[e]));
            }
        }
        out
    }

    /// Edges incident to `v` with +1 if `v` is the tail, -1 if the head.
    pub fn incident_edges(&self, v: usize) -> Vec<(usize, f64)> {
        self.vertex_star(v).into_iter().map(|(e, w)| (e, w.signum())).collect()
    }

    /// Faces containing edge `e` and the orientation sign of `e` in each.
    pub fn edge_faces(&self, e: usize) -> &[(usize, f64)] {
        &self.edge_face_list[self.edge_face_ptr[e]..self.edge_face_ptr[e + 1]]
    }

    /// Weighted curl-curl neighbourhood of `e`: `Σ coeff·Φ` is the dual-face integral of ∇×∇×F.
    pub fn curl_curl_stencil(&self, e: usize) -> Vec<(usize, f64)> {
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for &(f, s) in self.edge_faces(e) {
            let w = self.face_weight[f];
            if w == 0.0 {
                continue;
            }
            for (slot, &e1) in self.face_edges[f].iter().enumerate() {
                let c = s * w * FACE_SIGNS[slot];
                match acc.iter_mut().find(|(x, _)| *x == e1) {
                    Some(entry) => entry.1 += c,
                    None => acc.push((e1, c)),
                }
            }
        }
        acc.sort_by_key(|&(x, _)| x);
        acc
    }

    /// Support-volume overlap fraction ΔV(v†)∩Vs(e) / ΔV(v†) for `v ∈ e`.
    ///
    /// The support volume of a primal edge is the bipyramid over its dual face,
    /// of volume Δℓ·ΔA†/3; the dual plane through the edge midpoint splits it evenly.
    pub fn support_fraction(&self, v: usize, e: usize) -> f64 {
        debug_assert!(self.edge_verts[e].contains(&v));
        self.edge_len[e] * self.dual_area[e] / 6.0 / self.dual_vol[v]
    }

    pub fn domain_volume(&self) -> f64 {
        self.grid.extent().iter().product()
    }

    /// Vertices inside a closed box (with a small tolerance for round-off in coordinates).
    pub fn vertices_in_box(&self, b: &BoxRegion) -> Vec<usize> {
        if b.is_empty() {
            return Vec::new();
        }
        let h = self.grid.spacing;
        let mut range = [(0usize, 0usize); 3];
        for a in 0..3 {
            let tol = 1e-9 * h[a];
            let lo = ((b.lo[a] - tol) / h[a]).ceil().max(0.0);
            let hi = ((b.hi[a] + tol) / h[a]).floor().min(self.grid.cells[a] as f64);
            if hi < lo {
                return Vec::new();
            }
            range[a] = (lo as usize, hi as usize);
        }
        let mut out = Vec::new();
        for i in range[0].0..=range[0].1 {
            for j in range[1].0..=range[1].1 {
                for k in range[2].0..=range[2].1 {
                    out.push(self.vertex_id([i, j, k]));
                }
            }
        }
        out
    }

    /// Edges whose both endpoints lie in the closed box, optionally restricted to one axis.
    pub fn edges_in_box(&self, b: &BoxRegion, axis: Option<usize>) -> Vec<usize> {
        let inside: std::collections::HashSet<usize> = self.vertices_in_box(b).into_iter().collect();
        (0..self.n_edges())
            .filter(|&e| {
                let [t, hd] = self.edge_verts[e];
                inside.contains(&t) && inside.contains(&hd) && axis.is_none_or(|a| self.edge_coords(e).0 == a)
            })
            .collect()
    }
}
